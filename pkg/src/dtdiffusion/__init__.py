"""Dynamic texture descriptors from random-walk activity on directed video networks."""

__version__ = "0.1.0"

from .video import Video, load_video, rotate90, save_raw
from .network import (
    DegreeField,
    OffsetTable,
    ThresholdSchedule,
    edge_weight,
    in_degree_field,
    neighborhood_offsets,
    out_edges,
)
from .diffusion import (
    ActivityField,
    WalkConfig,
    WalkStats,
    estimate_activity,
    exact_expected_activity,
    step_distribution,
)
from .descriptor import (
    FeatureVector,
    activity_histograms,
    extract_descriptor,
    feature_dimension,
    joint_distribution,
)
from .evaluation import EvalReport, LabeledDataset, holdout_trials, kfold_cv, nn1_classify
from .synthetic import MotionSpec, gen_corpus, gen_motion_video

__all__ = [
    "ActivityField", "DegreeField", "EvalReport", "FeatureVector", "LabeledDataset",
    "MotionSpec", "OffsetTable", "ThresholdSchedule", "Video", "WalkConfig", "WalkStats",
    "activity_histograms", "edge_weight", "estimate_activity", "exact_expected_activity",
    "extract_descriptor", "feature_dimension", "gen_corpus", "gen_motion_video",
    "holdout_trials", "in_degree_field", "joint_distribution", "kfold_cv", "load_video",
    "neighborhood_offsets", "nn1_classify", "out_edges", "rotate90", "save_raw",
    "step_distribution",
]
