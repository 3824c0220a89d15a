import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvc.errors import CodecError
from bvc.frames import (
    VideoSequence,
    crop_to_original,
    from_uint8,
    pad_to_multiple,
    read_png_sequence,
    read_raw_yuv,
    rgb_to_yuv420,
    round_half_away,
    to_uint8,
    write_png_sequence,
    write_raw_yuv,
    yuv420_to_rgb,
)


def planes(y, u, v, h=16, w=16):
    return (
        np.full((h, w), y),
        np.full((h // 2, w // 2), u),
        np.full((h // 2, w // 2), v),
    )


def forward_bt601(rgb):
    """Independent forward matrix used as the oracle for inversion tests."""
    r, g, b = rgb
    yp = 0.299 * r + 0.587 * g + 0.114 * b
    pb = (b - yp) / 1.772
    pr = (r - yp) / 1.402
    return (16 + 219 * yp) / 255.0, (128 + 224 * pb) / 255.0, (128 + 224 * pr) / 255.0


class TestColorConversion:
    def test_limited_range_white(self):
        y, u, v = planes(235 / 255, 128 / 255, 128 / 255)
        rgb = yuv420_to_rgb(y, u, v, 16, 16)
        assert np.all(np.abs(rgb - 1.0) <= 1 / 255)

    def test_limited_range_black(self):
        y, u, v = planes(16 / 255, 128 / 255, 128 / 255)
        rgb = yuv420_to_rgb(y, u, v, 16, 16)
        assert np.all(np.abs(rgb) <= 1 / 255)

    def test_pure_red_from_inverted_forward_matrix(self):
        # Oracle: push pure red through the forward matrix, then invert.
        yo, uo, vo = forward_bt601((1.0, 0.0, 0.0))
        y, u, v = planes(yo, uo, vo)
        rgb = yuv420_to_rgb(y, u, v, 16, 16)
        assert np.all(np.abs(rgb[:, :, 0] - 1.0) <= 2 / 255)
        assert np.all(np.abs(rgb[:, :, 1]) <= 2 / 255)
        assert np.all(np.abs(rgb[:, :, 2]) <= 2 / 255)

    def test_spec_red_sample_values(self):
        y, u, v = planes(81 / 255, 90 / 255, 240 / 255)
        rgb = yuv420_to_rgb(y, u, v, 16, 16)
        assert np.all(np.abs(rgb - np.array([1.0, 0.0, 0.0])) <= 2 / 255)

    def test_gray_round_trip(self):
        img = np.full((16, 16, 3), 0.5)
        y, u, v = rgb_to_yuv420(img)
        assert np.ptp(y) == 0 and np.ptp(u) == 0 and np.ptp(v) == 0
        back = yuv420_to_rgb(y, u, v, 16, 16)
        assert np.all(np.abs(back - img) <= 2 / 255)

    def test_pure_red_v_plane_near_legal_max(self):
        img = np.zeros((16, 16, 3))
        img[:, :, 0] = 1.0
        _, _, v = rgb_to_yuv420(img)
        assert np.all(np.abs(v - 240 / 255) < 1e-9)

    def test_round_trip_on_legal_planes(self):
        # Legal planes built from in-gamut, chroma-smooth content: clipping
        # (out-of-gamut YUV) and chroma aliasing (2x2-scale chroma detail)
        # both make arbitrary legal planes unrecoverable by construction.
        rng = np.random.default_rng(7)
        ys, xs = np.mgrid[0:48, 0:48].astype(np.float64)
        smooth = np.full((48, 48, 3), 0.5)
        for _ in range(6):
            wx, wy = rng.uniform(-0.03, 0.03, 2)
            ph = rng.uniform(0, 2 * np.pi, 3)
            for c in range(3):
                smooth[:, :, c] += 0.05 * np.sin(wx * xs + wy * ys + ph[c])
        y1, u1, v1 = rgb_to_yuv420(smooth)
        rgb = yuv420_to_rgb(y1, u1, v1, 48, 48)
        y2, u2, v2 = rgb_to_yuv420(rgb)
        assert np.max(np.abs(y1 - y2)) <= 2 / 255
        assert np.max(np.abs(u1 - u2)) <= 3 / 255
        assert np.max(np.abs(v1 - v2)) <= 3 / 255

    def test_outputs_clamped(self):
        rng = np.random.default_rng(3)
        y = rng.uniform(0, 1, (16, 16))
        u = rng.uniform(0, 1, (8, 8))
        v = rng.uniform(0, 1, (8, 8))
        rgb = yuv420_to_rgb(y, u, v, 16, 16)
        assert rgb.min() >= 0.0 and rgb.max() <= 1.0

    def test_odd_dimensions_error(self):
        with pytest.raises(ValueError):
            yuv420_to_rgb(np.zeros((15, 16)), np.zeros((8, 8)), np.zeros((8, 8)), 16, 15)
        with pytest.raises(ValueError):
            rgb_to_yuv420(np.zeros((15, 16, 3)))

    def test_plane_size_mismatch_error(self):
        with pytest.raises(ValueError):
            yuv420_to_rgb(np.zeros((16, 16)), np.zeros((4, 4)), np.zeros((8, 8)), 16, 16)


class TestPadding:
    def test_hd_pads_to_1088(self):
        img = np.zeros((1080, 1920, 1))
        p = pad_to_multiple(img, 64)
        assert p.image.shape == (1088, 1920, 1)
        assert (p.orig_height, p.orig_width) == (1080, 1920)

    def test_aligned_image_unchanged(self):
        img = np.random.default_rng(0).uniform(size=(256, 256, 3))
        p = pad_to_multiple(img, 64)
        assert p.image.shape == (256, 256, 3)
        assert np.array_equal(p.image, img)

    def test_240x416_pads_to_256x448(self):
        img = np.zeros((240, 416, 3))
        p = pad_to_multiple(img, 64)
        assert p.image.shape[:2] == (256, 448)
        ratio = (256 * 448) / (240 * 416)
        assert abs(ratio - 1.1487) < 1e-3  # ~15% more pixels

    def test_replicate_edge(self):
        img = np.arange(12, dtype=np.float64).reshape(3, 4, 1) / 12
        p = pad_to_multiple(img, 4)
        assert np.array_equal(p.image[3, :4, 0], img[2, :, 0])

    def test_crop_inverts_pad(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(100, 100, 3))
        p = pad_to_multiple(img, 64)
        assert np.array_equal(crop_to_original(p), img)

    @settings(max_examples=40, deadline=None)
    @given(
        h=st.integers(1, 80),
        w=st.integers(1, 80),
        c=st.sampled_from([1, 3]),
        mult=st.sampled_from([1, 2, 8, 16, 64]),
    )
    def test_pad_crop_identity_property(self, h, w, c, mult):
        rng = np.random.default_rng(h * 1000 + w)
        img = rng.uniform(size=(h, w, c))
        p = pad_to_multiple(img, mult)
        assert p.image.shape[0] % mult == 0 and p.image.shape[1] % mult == 0
        assert p.image.shape[0] - h < mult and p.image.shape[1] - w < mult
        assert np.array_equal(crop_to_original(p), img)


class TestRawYuvIO:
    def test_single_frame_size_arithmetic(self, tmp_path):
        path = tmp_path / "one.yuv"
        path.write_bytes(bytes(16 * 16 * 3 // 2))
        seq = read_raw_yuv(path, 16, 16)
        assert len(seq.frames) == 1

    def test_empty_file_empty_sequence(self, tmp_path):
        path = tmp_path / "empty.yuv"
        path.write_bytes(b"")
        seq = read_raw_yuv(path, 16, 16)
        assert len(seq.frames) == 0

    def test_truncated_file_errors(self, tmp_path):
        path = tmp_path / "bad.yuv"
        path.write_bytes(bytes(16 * 16 * 3 // 2 - 1))
        with pytest.raises(CodecError):
            read_raw_yuv(path, 16, 16)

    def test_write_then_read_constants(self, tmp_path):
        f0 = np.full((16, 16, 3), 0.25)
        f1 = np.full((16, 16, 3), 0.75)
        seq = VideoSequence(frames=[f0, f1])
        path = tmp_path / "two.yuv"
        write_raw_yuv(seq, path)
        back = read_raw_yuv(path, 16, 16)
        assert len(back.frames) == 2
        assert np.max(np.abs(back.frames[0] - f0)) <= 2 / 255
        assert np.max(np.abs(back.frames[1] - f1)) <= 2 / 255


class TestPngIO:
    def test_round_trip_exact_at_8bit(self, tmp_path):
        rng = np.random.default_rng(9)
        frames = [from_uint8(rng.integers(0, 256, size=(24, 32, 3)).astype(np.uint8)) for _ in range(3)]
        write_png_sequence(VideoSequence(frames=frames), tmp_path)
        back = read_png_sequence(tmp_path)
        assert len(back.frames) == 3
        for a, b in zip(frames, back.frames):
            assert np.array_equal(a, b)


class TestRounding:
    def test_half_away_from_zero(self):
        vals = np.array([0.5, -0.5, 1.5, -1.5, 0.49, -0.49])
        assert np.array_equal(round_half_away(vals), [1, -1, 2, -2, 0, 0])

    def test_to_uint8_half_away(self):
        x = np.array([[[0.5 / 255 + 0.5 / 255 / 255]]])  # just above half step
        assert to_uint8(x)[0, 0, 0] == 1
