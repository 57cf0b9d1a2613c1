"""hiersr: error-bounded SR-octrees and seam-minimizing hierarchical
super resolution for 2D/3D scalar fields.

Workflow: normalize a field, build an SR-octree under a max-norm error
bound (coarse where the field is smooth, fine where it is not), reduce
the tree to one uniform low-resolution grid, and reconstruct the full
grid by repeatedly 2x-upscaling the whole domain while overwriting
voxels the tree stores at the current level or finer.  Upscalers are
pluggable per level: nearest, bilinear/trilinear, or an external learned
model reached over the HSR1 wire protocol.
"""

from .errors import HierSRError
from .volume import (
    Region,
    ValueRange,
    Volume,
    create_volume,
    denormalize,
    gen_synthetic,
    normalize,
    read_region,
    write_region,
)
from .resample import (
    Downscaler,
    UpscalerHierarchy,
    apply_hierarchy,
    downscale2x,
    downscale_by,
    upscale2x_linear,
    upscale2x_nearest,
)
from .octree import (
    BuildConfig,
    SRNode,
    SROctree,
    build_sr_octree,
    join_adjacent,
    level_histogram,
    level_map,
    node_error,
    reduction_factor,
    validate_tree,
)
from .hier import (
    blockwise_upscale,
    combine_single_voxel_siblings,
    hierarchical_downscale,
    hierarchical_upscale,
    stale_overwrites,
)
from .metrics import MetricReport, evaluate, linf, mre, psnr, seam_metric, ssim
from .backend import ModelHandle, connect, infer2x
from .formats import read_tree, read_volume, write_tree, write_volume

__version__ = "0.1.0"

__all__ = [
    "BuildConfig",
    "Downscaler",
    "HierSRError",
    "MetricReport",
    "ModelHandle",
    "Region",
    "SRNode",
    "SROctree",
    "UpscalerHierarchy",
    "ValueRange",
    "Volume",
    "apply_hierarchy",
    "blockwise_upscale",
    "build_sr_octree",
    "combine_single_voxel_siblings",
    "connect",
    "create_volume",
    "denormalize",
    "downscale2x",
    "downscale_by",
    "evaluate",
    "gen_synthetic",
    "hierarchical_downscale",
    "hierarchical_upscale",
    "infer2x",
    "join_adjacent",
    "level_histogram",
    "level_map",
    "linf",
    "mre",
    "node_error",
    "normalize",
    "psnr",
    "read_region",
    "read_tree",
    "read_volume",
    "reduction_factor",
    "seam_metric",
    "ssim",
    "stale_overwrites",
    "upscale2x_linear",
    "upscale2x_nearest",
    "validate_tree",
    "write_region",
    "write_tree",
    "write_volume",
]
