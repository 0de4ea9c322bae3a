"""Audio and filterbank feature data models."""

from dataclasses import dataclass, fields
from typing import Any, Dict

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Signed 16-bit PCM samples plus their sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = 16000

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ConfigurationError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.int16).reshape(-1))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class FeatureConfig:
    """Log-mel filterbank front-end settings."""

    sample_rate_hz: int = 16000
    num_bins: int = 40
    frame_length_ms: float = 25.0
    frame_hop_ms: float = 10.0
    fft_size: int = 512
    mel_low_hz: float = 20.0
    mel_high_hz: float = 8000.0
    log_floor: float = 1e-10
    running_mean: bool = False

    @property
    def frame_samples(self) -> int:
        return int(round(self.sample_rate_hz * self.frame_length_ms / 1000.0))

    @property
    def hop_samples(self) -> int:
        return int(round(self.sample_rate_hz * self.frame_hop_ms / 1000.0))

    @property
    def floor_value(self) -> np.float32:
        """Smallest value a log-mel energy can take."""
        return np.float32(np.log(self.log_floor))

    def validate(self) -> None:
        """Check the configuration invariants."""
        if self.sample_rate_hz <= 0:
            raise ConfigurationError("sample_rate_hz must be positive")
        if self.num_bins < 1:
            raise ConfigurationError(f"num_bins must be at least 1, got {self.num_bins}")
        if self.frame_length_ms <= 0 or self.frame_hop_ms <= 0:
            raise ConfigurationError("frame length and hop must be positive")
        if self.frame_hop_ms > self.frame_length_ms:
            raise ConfigurationError("frame_hop_ms must not exceed frame_length_ms")
        if self.fft_size < self.frame_samples or self.fft_size & (self.fft_size - 1):
            raise ConfigurationError(
                f"fft_size must be a power of two >= {self.frame_samples}, got {self.fft_size}"
            )
        if not 0 <= self.mel_low_hz < self.mel_high_hz <= self.sample_rate_hz / 2:
            raise ConfigurationError(
                f"need 0 <= mel_low_hz < mel_high_hz <= {self.sample_rate_hz / 2}, "
                f"got {self.mel_low_hz}, {self.mel_high_hz}"
            )
        if self.log_floor <= 0:
            raise ConfigurationError("log_floor must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FeatureConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown feature settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class FeatureFrame:
    """One log-mel vector for one hop of audio."""

    values: np.ndarray
    index: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float32).reshape(-1))

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureFrame):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"FeatureFrame(index={self.index}, dim={self.dim})"
