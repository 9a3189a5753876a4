"""Deterministic fluorescence-microscopy segmentation with spiking-agent
contour refinement, plus a metrics-and-noise evaluation harness."""

from .agent import (
    AgentConfig,
    StimulationFields,
    agent_speed,
    field_E,
    field_S,
    refine_contour,
    run_agent,
    run_agents,
    stimulate,
)
from .contour import (
    N_BINS,
    RadialContour,
    centroid,
    contour_to_mask,
    radial_contour,
)
from .errors import (
    CalibrationError,
    DatasetFormatError,
    DegenerateHistogram,
    EmptyDataset,
    EmptyForeground,
    EmptyLabelMap,
    EmptyMarkers,
    EmptyRegion,
    InvalidParameter,
    InvalidPolicy,
    IoError,
    NeuronalgError,
    ShapeError,
    UnknownLabel,
)
from .evalharness import (
    Confusion,
    DatasetEntry,
    MetricsReport,
    accuracy,
    all_metrics,
    confusion,
    f1,
    iou,
    load_dataset,
    noise_sweep,
    sensitivity,
    specificity,
)
from .image import (
    ChannelPolicy,
    ScaleFactor,
    add_noise_to_psnr,
    equalize,
    extract_intensity,
    gaussian_smooth,
    histogram256,
    load_image,
    psnr,
    save_gray,
    save_labels,
    save_mask,
)
from .pipeline import (
    PipelineConfig,
    SegmentationResult,
    segment,
    segment_batch,
)
from .splitmerge import (
    ClusterStats,
    SplitPlan,
    cluster_stats,
    compact_labels,
    distance_split,
    merge_small,
    plan_splits,
    split_cluster,
    split_merge_pass,
)
from .threshold import binarize, otsu_level
from .watershed import (
    extract_markers,
    gradient_magnitude,
    label_components,
    meyer_flood,
)

__version__ = "0.1.0"
