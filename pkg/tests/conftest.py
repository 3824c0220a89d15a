"""Shared synthetic-video fixtures.

All fixtures are analytic sums of sinusoids, so frames can be rendered at
arbitrary (fractional) positions and motion is exactly linear by
construction. Session-scoped caching keeps the suite fast.
"""

import numpy as np
import pytest

from bvc.frames import VideoSequence


def sinusoid_mixture(seed, k, wlo, whi, slope=0.7):
    """Random band-limited texture: k sinusoids with log-uniform radial
    frequencies, uniform directions, and amplitude ~ 1/omega^slope."""
    r = np.random.default_rng(seed)
    wmag = np.exp(r.uniform(np.log(wlo), np.log(whi), k))
    ang = r.uniform(0, 2 * np.pi, k)
    fr = np.stack([wmag * np.cos(ang), wmag * np.sin(ang)], axis=1)
    ph = r.uniform(0, 2 * np.pi, (k, 3))
    amp = wmag ** (-slope)
    amp /= amp.sum()

    def field(xs, ys):
        img = np.zeros(xs.shape + (3,))
        for i in range(k):
            for c in range(3):
                img[:, :, c] += amp[i] * np.sin(fr[i, 0] * xs + fr[i, 1] * ys + ph[i, c])
        return img

    return field


def translating_video(h, w, n, velocity=(1.5, 0.5), seed=0, k=48, wlo=0.06, whi=0.5, amp=0.42):
    """Single textured layer under constant-velocity global translation."""
    f = sinusoid_mixture(seed, k, wlo, whi)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    frames = []
    for t in range(n):
        img = f(xs - velocity[0] * t, ys - velocity[1] * t)
        frames.append(np.clip(0.5 + amp * np.clip(img * 2.5, -1.2, 1.2), 0.0, 1.0))
    return VideoSequence(frames=frames)


def occlusion_video(
    h=128,
    w=128,
    n=13,
    vo=(1.5, 0.5),
    vb=(-1.5, 0.0),
    obj0=(40.0, 32.0),
    obj_size=(64, 64),
    seed=0,
):
    """Textured square translating over an independently translating
    background: constant-velocity motion everywhere, with genuine occlusion
    and disocclusion at the object boundary."""
    bg = sinusoid_mixture(seed, 32, 0.06, 0.5)
    fg = sinusoid_mixture(seed + 100, 32, 0.06, 0.5)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    frames = []
    for t in range(n):
        back = 0.55 + 0.30 * np.clip(bg(xs - vb[0] * t, ys - vb[1] * t) * 2.5, -1.2, 1.2)
        ox = obj0[0] + vo[0] * t
        oy = obj0[1] + vo[1] * t
        front = 0.45 + 0.30 * np.clip(fg(xs - vo[0] * t, ys - vo[1] * t) * 2.5, -1.2, 1.2)
        inside = (xs >= ox) & (xs < ox + obj_size[0]) & (ys >= oy) & (ys < oy + obj_size[1])
        frames.append(np.clip(np.where(inside[:, :, None], front, back), 0.0, 1.0))
    return VideoSequence(frames=frames)


def random_frames(h, w, n, seed=0):
    """Unstructured random frames (worst-case content for drift tests)."""
    r = np.random.default_rng(seed)
    base = r.uniform(0.1, 0.9, size=(h, w, 3))
    frames = []
    for t in range(n):
        jitter = r.normal(0.0, 0.05, size=(h, w, 3))
        frames.append(np.clip(base + jitter, 0.0, 1.0))
    return VideoSequence(frames=frames)


@pytest.fixture(scope="session")
def motion_clip():
    """13-frame 128x128 linear-motion clip with occlusion (the structural
    rate-distortion fixture)."""
    return occlusion_video()


@pytest.fixture(scope="session")
def translation_clip():
    """13-frame 128x128 globally translating clip."""
    return translating_video(128, 128, 13)


@pytest.fixture(scope="session")
def small_translation_clip():
    """Small, fast clip for round-trip style tests."""
    return translating_video(64, 64, 7, velocity=(1.0, 0.5), seed=3)
