"""Sitting posture classification and sedentary monitoring."""

from ._sitpose import (
    POSTURES,
    DegenerateError,
    Ensemble,
    Error,
    InvalidArgument,
    Model,
    ModelFormatError,
    Monitor,
    MonitorConfig,
    ParseError,
    TrainingError,
    angle_between,
    cross_validate,
    depth_from_phase,
    generate_csv,
    load_features,
    metrics,
    parse_report,
    phase_from_samples,
    sample_received,
    soft_vote,
    stratified_folds,
    synth_features,
)

__all__ = [
    "POSTURES",
    "DegenerateError",
    "Ensemble",
    "Error",
    "InvalidArgument",
    "Model",
    "ModelFormatError",
    "Monitor",
    "MonitorConfig",
    "ParseError",
    "TrainingError",
    "angle_between",
    "cross_validate",
    "depth_from_phase",
    "generate_csv",
    "load_features",
    "metrics",
    "parse_report",
    "phase_from_samples",
    "sample_received",
    "soft_vote",
    "stratified_folds",
    "synth_features",
]
