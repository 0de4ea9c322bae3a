from .calibration import BoundaryTable, CalibrationSet, StateCalibration, StateHistogram
from .decoding import DecodeConfig, DetectionEvent, Token
from .evaluation import OperatingPoint, PositiveReference, ReferenceSet, SweepResult
from .features import AudioBuffer, FeatureConfig, FeatureFrame
from .graph import Arc, JumpConfig, KeywordGraph, Lexicon
from .network import (
    DenseLayer,
    EmbeddingNet,
    MacReport,
    MemoryLayer,
    ModelBundle,
    SoftmaxHead,
    TailNet,
)
from .synthetic import SynthSpec
from .training import AlignedSample, TrainConfig

__all__ = [
    "AlignedSample",
    "Arc",
    "AudioBuffer",
    "BoundaryTable",
    "CalibrationSet",
    "DecodeConfig",
    "DenseLayer",
    "DetectionEvent",
    "EmbeddingNet",
    "FeatureConfig",
    "FeatureFrame",
    "JumpConfig",
    "KeywordGraph",
    "Lexicon",
    "MacReport",
    "MemoryLayer",
    "ModelBundle",
    "OperatingPoint",
    "PositiveReference",
    "ReferenceSet",
    "SoftmaxHead",
    "StateCalibration",
    "StateHistogram",
    "SweepResult",
    "SynthSpec",
    "TailNet",
    "Token",
    "TrainConfig",
]
