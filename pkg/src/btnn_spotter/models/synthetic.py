"""Synthetic dataset specification."""

from dataclasses import dataclass, fields
from typing import Any, Dict, Tuple

from ..errors import ConfigurationError


@dataclass(frozen=True)
class SynthSpec:
    """Gaussian-per-state synthetic corpus description."""

    num_states: int = 8
    feature_dim: int = 20
    frames_per_state: int = 10
    num_utterances: int = 500
    keyword_state_seqs: Tuple[Tuple[int, ...], ...] = ((0, 1, 2, 3), (4, 5, 6, 7))
    noise_std: float = 0.3
    rng_seed: int = 0
    dev_utterances: int = 100
    test_utterances: int = 200
    positive_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(
            self, "keyword_state_seqs", tuple(tuple(int(s) for s in seq) for seq in self.keyword_state_seqs)
        )

    def validate(self) -> None:
        for name in ("num_states", "feature_dim", "frames_per_state", "num_utterances"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.dev_utterances < 0 or self.test_utterances < 0:
            raise ConfigurationError("split sizes must be >= 0")
        if self.noise_std < 0:
            raise ConfigurationError("noise_std must be >= 0")
        if not self.keyword_state_seqs:
            raise ConfigurationError("need at least one keyword state sequence")
        for seq in self.keyword_state_seqs:
            if not seq or any(not 0 <= s < self.num_states for s in seq):
                raise ConfigurationError(f"invalid keyword state sequence {seq}")
        if not 0.0 <= self.positive_fraction <= 1.0:
            raise ConfigurationError("positive_fraction must be in [0, 1]")

    @property
    def keyword_names(self) -> Tuple[str, ...]:
        return tuple(f"kw{index}" for index in range(len(self.keyword_state_seqs)))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthSpec":
        data = dict(data)
        if "seed" in data:
            data["rng_seed"] = data.pop("seed")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown synth settings: {sorted(unknown)}")
        return cls(**data)
