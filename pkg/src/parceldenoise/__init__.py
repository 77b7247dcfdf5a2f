"""Land-cover label denoising via parcel segmentation and majority voting.

The pipeline has two stages: delineate land parcels (from scored masks,
connected components, or clustering baselines), then reassign each
parcel's pixel labels to the parcel's dominant class.  Rasters travel
in a small binary container, mask sets and reports travel as JSON, and
a synthetic scene generator provides ground truth for benchmarks.
"""

from .clustering import (
    DbscanConfig,
    FeatureMatrix,
    KMeansConfig,
    KMeansResult,
    assignments_to_segment_map,
    build_features,
    dbscan,
    kmeans,
    kmeans_pp_init,
)
from .errors import (
    ConfigError,
    CorruptionError,
    EmptyInputError,
    FormatError,
    GridTypeError,
    InsufficientPointsError,
    MappingError,
    ParcelDenoiseError,
    ShapeError,
)
from .grids import (
    LABEL_NODATA,
    ClassEntry,
    ClassMap,
    ImageRaster,
    LabelRaster,
    SegmentMap,
    export_color_image,
    read_grid,
    write_grid,
)
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    confusion,
    format_metrics_table,
    metrics_report,
    micro_accuracy,
    per_class_metrics,
)
from .relabel import (
    DenoisePolicy,
    DenoiseReport,
    SegmentVote,
    StrayStats,
    denoise,
    segment_mode,
    stray_pixel_stats,
)
from .segments import (
    MaskSet,
    ScoredMask,
    connected_components,
    decode_rle,
    encode_rle,
    mask_set_from_segments,
    masks_to_segment_map,
)
from .synthgen import SceneSpec, SyntheticScene, generate, scene_class_map

__version__ = "0.1.0"

__all__ = [
    "LABEL_NODATA",
    "ClassEntry",
    "ClassMap",
    "ClassMetrics",
    "ConfigError",
    "ConfusionMatrix",
    "CorruptionError",
    "DbscanConfig",
    "DenoisePolicy",
    "DenoiseReport",
    "EmptyInputError",
    "FeatureMatrix",
    "FormatError",
    "GridTypeError",
    "ImageRaster",
    "InsufficientPointsError",
    "KMeansConfig",
    "KMeansResult",
    "LabelRaster",
    "MappingError",
    "MaskSet",
    "ParcelDenoiseError",
    "SceneSpec",
    "ScoredMask",
    "SegmentMap",
    "SegmentVote",
    "ShapeError",
    "StrayStats",
    "SyntheticScene",
    "assignments_to_segment_map",
    "build_features",
    "confusion",
    "connected_components",
    "dbscan",
    "decode_rle",
    "denoise",
    "encode_rle",
    "export_color_image",
    "format_metrics_table",
    "generate",
    "kmeans",
    "kmeans_pp_init",
    "mask_set_from_segments",
    "masks_to_segment_map",
    "metrics_report",
    "micro_accuracy",
    "per_class_metrics",
    "read_grid",
    "scene_class_map",
    "segment_mode",
    "stray_pixel_stats",
    "write_grid",
]
