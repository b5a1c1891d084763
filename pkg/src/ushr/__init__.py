"""Ultrasound M-mode heart-rate extraction in float and q1.15 fixed point."""

from .core import (
    AcquisitionConfig,
    DerivedSizes,
    DiffAxis,
    NumericMode,
    PipelineConfig,
    bin_to_bpm,
    validate_config,
)
from .estimators import EnvelopeDetector, HeartRateEstimator
from .pipeline import Frame, HrEstimate, HrPipeline, extract
from .resources import EnergyModel, eval_energy, resource_model

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "DerivedSizes",
    "DiffAxis",
    "EnergyModel",
    "EnvelopeDetector",
    "Frame",
    "HeartRateEstimator",
    "HrEstimate",
    "HrPipeline",
    "NumericMode",
    "PipelineConfig",
    "bin_to_bpm",
    "eval_energy",
    "extract",
    "resource_model",
    "validate_config",
]
