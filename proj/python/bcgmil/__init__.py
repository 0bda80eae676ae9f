"""Heartbeat detection in multi-channel ballistocardiogram recordings."""

from ._core import (
    ConfigError,
    DataError,
    Detection,
    Error,
    Evaluation,
    NumericalError,
    Recording,
    RunConfig,
    SubjectProfile,
    TrainedModel,
    detect,
    evaluate,
    format_report,
    generate,
    make_profile,
    model_from_text,
    model_to_text,
    read_model,
    read_recording,
    train,
    write_model,
    write_recording,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Detection",
    "Error",
    "Evaluation",
    "NumericalError",
    "Recording",
    "RunConfig",
    "SubjectProfile",
    "TrainedModel",
    "detect",
    "evaluate",
    "format_report",
    "generate",
    "make_profile",
    "model_from_text",
    "model_to_text",
    "read_model",
    "read_recording",
    "train",
    "write_model",
    "write_recording",
]
