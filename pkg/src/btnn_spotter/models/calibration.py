"""Calibration tables mapping raw tail outputs to probabilities."""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..errors import ConfigurationError, UnknownStateError

FUSION_MODES = ("complement", "literal")


@dataclass(frozen=True, eq=False)
class BoundaryTable:
    """
    Piecewise-linear empirical distribution over the raw-score axis.

    boundaries: b_0 < ... < b_N, probs: P_0 = 0 <= ... <= P_N = 1,
    counts: C_1 ... C_N (samples per segment).
    """

    boundaries: np.ndarray
    probs: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        boundaries = np.array(self.boundaries, dtype=np.float64)
        probs = np.array(self.probs, dtype=np.float64)
        counts = np.array(self.counts, dtype=np.int64)
        if boundaries.ndim != 1 or boundaries.shape[0] < 2:
            raise ConfigurationError("boundary table needs at least two boundaries")
        if probs.shape != boundaries.shape:
            raise ConfigurationError(
                f"{probs.shape[0]} probabilities for {boundaries.shape[0]} boundaries"
            )
        if counts.shape[0] != boundaries.shape[0] - 1:
            raise ConfigurationError("need one count per segment")
        if np.any(np.diff(boundaries) <= 0):
            raise ConfigurationError("boundaries must be strictly increasing")
        if probs[0] != 0.0 or probs[-1] != 1.0 or np.any(np.diff(probs) < 0):
            raise ConfigurationError("probs must rise from 0 to 1 without decreasing")
        for array in (boundaries, probs, counts):
            array.setflags(write=False)
        object.__setattr__(self, "boundaries", boundaries)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "counts", counts)

    @property
    def num_segments(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def same_as(self, other: "BoundaryTable") -> bool:
        return (
            np.array_equal(self.boundaries, other.boundaries)
            and np.array_equal(self.probs, other.probs)
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(frozen=True, eq=False)
class StateCalibration:
    """Positive and negative tables for one state plus its fusion scales."""

    pos_table: BoundaryTable
    neg_table: BoundaryTable
    scale_pos: float = 4.0
    scale_neg: float = 1.0

    def __post_init__(self):
        validate_scales(self.scale_pos, self.scale_neg)

    @property
    def scales(self) -> Tuple[float, float]:
        return (self.scale_pos, self.scale_neg)

    def with_scales(self, scale_pos: float, scale_neg: float) -> "StateCalibration":
        return StateCalibration(self.pos_table, self.neg_table, scale_pos, scale_neg)


@dataclass(frozen=True, eq=False)
class CalibrationSet:
    """Calibration for every state of a model."""

    per_state: Dict[int, StateCalibration]
    num_states: int
    fusion: str = "complement"

    def __post_init__(self):
        missing = [s for s in range(self.num_states) if s not in self.per_state]
        if missing:
            raise ConfigurationError(f"calibration missing for state {missing[0]}")
        if self.fusion not in FUSION_MODES:
            raise ConfigurationError(f"unknown fusion mode {self.fusion!r}")
        object.__setattr__(self, "per_state", dict(sorted(self.per_state.items())))

    def __getitem__(self, state_id: int) -> StateCalibration:
        try:
            return self.per_state[state_id]
        except KeyError:
            raise UnknownStateError(f"no calibration for state {state_id}", state_id) from None

    def with_state(self, state_id: int, calibration: StateCalibration) -> "CalibrationSet":
        per_state = dict(self.per_state)
        per_state[state_id] = calibration
        return CalibrationSet(per_state, self.num_states, self.fusion)


def validate_scales(scale_pos: float, scale_neg: float) -> None:
    if scale_pos < 0 or scale_neg < 0:
        raise ConfigurationError(f"scales must be non-negative, got ({scale_pos}, {scale_neg})")
    if scale_pos + scale_neg <= 0:
        raise ConfigurationError("at least one of scale_pos, scale_neg must be positive")


@dataclass
class StateHistogram:
    """Raw-score histograms of one state's positive and negative frames."""

    state_id: int
    edges: np.ndarray
    positive: np.ndarray
    negative: np.ndarray
