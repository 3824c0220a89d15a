"""B-frame video codec: interpolate two decoded references into one and feed
it to a P-frame coding pipeline, with real entropy-coded bitstreams, GoP
scheduling, and rate-distortion evaluation tooling."""

from .bdrate import RdCurve, RdPoint, bd_rate
from .coders import CoderConfig, FlowCoder, ImageCoder, ResidualCoder
from .container import BitstreamContainer
from .entropy import (
    GaussianModel,
    LatentStream,
    StaticModel,
    bits_per_pixel,
    gaussian_bits,
    quantize,
    range_decode,
    range_encode,
    stream_bits,
)
from .flow import (
    FlowConfig,
    bidirectional_warp,
    consistency_mask,
    estimate_flow,
    interpolate_flow,
    interpolate_references,
    warp,
)
from .frames import (
    PaddedImage,
    VideoSequence,
    crop_to_original,
    pad_to_multiple,
    read_raw_yuv,
    rgb_to_yuv420,
    write_png_sequence,
    yuv420_to_rgb,
)
from .gop import (
    CodingStep,
    GopSchedule,
    build_schedule,
    hierarchical_order,
    sequential_order,
    validate_schedule,
)
from .harness import ScheduleParams, run_dataset
from .metrics import ms_ssim, psnr
from .pipeline import (
    RateReport,
    decode_video,
    encode_b,
    encode_i,
    encode_p,
    encode_video,
    rd_objective,
)
from .scale_space import BlurStack, ScaleSpaceFlow, build_blur_stack, scale_space_warp

__version__ = "0.1.0"
