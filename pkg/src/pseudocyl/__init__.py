"""Width-parameterized spherical rasters and the machinery to study them.

The package covers the geometry of per-row-width panoramic grids, the
tiled storage form with sphere-aware padding, convolution over it (exact
and fast routes), rectilinear viewport extraction, viewport-based quality
metrics with Bjontegaard comparison, a deterministic toy codec plus
external codec adapter, the per-tile rate proxy, and greedy/exhaustive
search over width configurations.
"""

from .geometry import (
    craster_latitude,
    erp_latitude,
    erp_longitude,
    pseudocyl_longitude,
    sinusoidal_width,
    wrap_longitude,
)
from .representation import (
    PseudocylConfig,
    TiledImage,
    erp_config,
    erp_to_tiled,
    pad_tile,
    resize_image_width,
    resize_row,
    sinusoidal_config,
    tiled_to_erp,
)
from .pconv import (
    ConvKernel,
    neighbor_approx,
    neighbor_exact,
    op_count_report,
    pconv_fast,
    pconv_reference,
    standard_conv,
)
from .viewport import (
    ViewportSpec,
    canonical_viewports,
    embed_viewport,
    extract_viewport,
    sample_sphere,
)
from .metrics import RdCurve, bd_metrics, mse, psnr, ssim, vmse, vpsnr, vssim, vssim_loss
from .codec import (
    BuiltinCodec,
    CachingCodec,
    CodecError,
    ExternalCodec,
    builtin_encode,
    external_encode,
    make_codec,
    rd_curve,
    reconstruct_config,
    tile_rate,
)
from .optimizer import (
    SearchSpace,
    exhaustive_optimize,
    greedy_optimize,
    score_config,
)
from .entropy_tools import (
    MogParams,
    QuantizerParams,
    code_length,
    mog_pmf,
    quant_centers,
    quantize,
)

__version__ = "0.1.0"
