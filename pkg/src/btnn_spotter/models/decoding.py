"""Decoder hypothesis and detection data models."""

from dataclasses import dataclass, fields
from typing import Any, Dict, Optional

from ..errors import ConfigurationError


@dataclass(frozen=True)
class Token:
    """A live hypothesis sitting on one graph node."""

    node: int
    log_score: float
    start_frame: int
    frames_consumed: int

    @property
    def average_score(self) -> float:
        return self.log_score / self.frames_consumed


@dataclass(frozen=True)
class DecodeConfig:
    """Token-passing and detection settings."""

    beam: Optional[int] = 32  # None keeps every token
    threshold: float = -1.0
    min_frames: int = 20
    refractory_frames: int = 50
    token_floor: Optional[float] = -5.0

    def validate(self) -> None:
        if self.beam is not None and self.beam < 1:
            raise ConfigurationError(f"beam must be >= 1, got {self.beam}")
        if self.min_frames < 1:
            raise ConfigurationError(f"min_frames must be >= 1, got {self.min_frames}")
        if self.refractory_frames < 0:
            raise ConfigurationError("refractory_frames must be >= 0")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DecodeConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown decode settings: {sorted(unknown)}")
        config = cls(**data)
        config.validate()
        return config


@dataclass(frozen=True)
class DetectionEvent:
    """A keyword detection; end_frame is exclusive."""

    keyword: str
    start_frame: int
    end_frame: int
    confidence: float

    @property
    def num_frames(self) -> int:
        return self.end_frame - self.start_frame

    def overlaps(self, start: int, end: int) -> bool:
        """True if the event shares at least one frame with [start, end)."""
        return self.start_frame < end and start < self.end_frame

    def to_line(self) -> str:
        return f"{self.keyword}\t{self.start_frame}\t{self.end_frame}\t{self.confidence:.6f}"
