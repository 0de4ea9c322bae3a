"""Training data models."""

from dataclasses import dataclass, fields
from typing import Any, Dict, Union

import numpy as np

from ..errors import ConfigurationError
from .features import FeatureFrame

OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True, eq=False)
class AlignedSample:
    """One frame with its aligned state; frames of an utterance share utterance_id."""

    frame: FeatureFrame
    state: int
    num_states: int
    utterance_id: str = ""

    def __post_init__(self):
        if not 0 <= self.state < self.num_states:
            raise ConfigurationError(
                f"aligned state {self.state} outside 0..{self.num_states - 1}"
            )

    @property
    def labels(self) -> np.ndarray:
        """One-hot label vector over all states."""
        labels = np.zeros(self.num_states, dtype=np.int8)
        labels[self.state] = 1
        return labels

    def label_for(self, state: int) -> int:
        return int(self.state == state)


ScaleSpec = Union[float, Dict[int, float]]


@dataclass(frozen=True)
class TrainConfig:
    """Per-state scaled MSE training settings."""

    scale_pos: ScaleSpec = 4.0
    neg_pos_ratio: ScaleSpec = 1.0
    learning_rate: float = 0.01
    epochs: int = 40
    batch_size: int = 128
    optimizer: str = "adam"
    joint: bool = False
    rng_seed: int = 0

    def scale_for(self, state: int) -> float:
        return _per_state(self.scale_pos, state, 4.0)

    def ratio_for(self, state: int) -> float:
        return _per_state(self.neg_pos_ratio, state, 1.0)

    def validate(self, num_states: int) -> None:
        for state in range(num_states):
            if self.scale_for(state) <= 0:
                raise ConfigurationError(f"scale_pos for state {state} must be > 0")
            if self.ratio_for(state) <= 0:
                raise ConfigurationError(f"neg_pos_ratio for state {state} must be > 0")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"optimizer must be one of {OPTIMIZERS}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        data = dict(data)
        if "seed" in data:
            data["rng_seed"] = data.pop("seed")
        for key in ("scale_pos", "neg_pos_ratio"):
            if isinstance(data.get(key), dict):
                data[key] = {int(k): float(v) for k, v in data[key].items()}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown training settings: {sorted(unknown)}")
        return cls(**data)


def _per_state(spec: ScaleSpec, state: int, default: float) -> float:
    if isinstance(spec, dict):
        return float(spec.get(state, spec.get(-1, default)))
    return float(spec)
