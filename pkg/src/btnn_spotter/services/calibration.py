"""
Calibration of raw tail outputs.

Each state gets two empirical distributions over the raw-score axis, one from
frames aligned to the state and one from all other frames. A raw score is
mapped to a positive probability (mass of positives at or below it) and a
negative probability (mass of negatives at or above it); the two are fused
with a scaled geometric mean into the state's confidence.
"""

import logging
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, DegenerateRangeError, EmptyClassError
from ..models.calibration import (
    BoundaryTable,
    CalibrationSet,
    StateCalibration,
    StateHistogram,
    validate_scales,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

WIDEN = 1e-6
LIKELIHOOD_CLAMP = 1e-6
POSITIVE_WEIGHT = 0.99
NEGATIVE_WEIGHT = 0.01


def estimate_table(
    scores: Sequence[float],
    num_segments: int,
    bounds: Optional[Tuple[float, float]] = None,
) -> BoundaryTable:
    """
    Equal-width segmentation of [min, max] (or `bounds`) with cumulative
    probabilities: P_0 = 0 and P_n - P_{n-1} = C_n / C_total.

    Raises:
        EmptyClassError: no scores
        DegenerateRangeError: every score is identical and no bounds were given
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size == 0:
        raise EmptyClassError("cannot estimate a boundary table from no scores")
    if num_segments < 1:
        raise ConfigurationError(f"num_segments must be >= 1, got {num_segments}")

    low, high = bounds if bounds is not None else (float(scores.min()), float(scores.max()))
    if not high > low:
        raise DegenerateRangeError(f"all {scores.size} scores equal {low}")

    boundaries = np.linspace(low, high, num_segments + 1)
    counts, _ = np.histogram(np.clip(scores, low, high), bins=boundaries)
    probs = np.concatenate([[0.0], np.cumsum(counts) / scores.size])
    probs[-1] = 1.0
    return BoundaryTable(boundaries, probs, counts)


def estimate_table_widened(scores: Sequence[float], num_segments: int) -> BoundaryTable:
    """estimate_table, widening a zero-width range by +/-1e-6."""
    try:
        return estimate_table(scores, num_segments)
    except DegenerateRangeError:
        value = float(np.asarray(scores, dtype=np.float64).reshape(-1)[0])
        logger.debug(f"Widening degenerate score range at {value}")
        return estimate_table(scores, num_segments, bounds=(value - WIDEN, value + WIDEN))


def probs_by_recursion(counts: Sequence[int]) -> np.ndarray:
    """Top-down form: P_N = 1, P_{n-1} = P_n - C_n / C_total."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    probs = np.empty(counts.size + 1)
    probs[-1] = 1.0
    for n in range(counts.size, 0, -1):
        probs[n - 1] = probs[n] - counts[n - 1] / total
    return probs


def _as_output(values: np.ndarray, like) -> Union[float, np.ndarray]:
    return float(values) if np.ndim(like) == 0 else values


def positive_prob(x: ArrayLike, table: BoundaryTable) -> Union[float, np.ndarray]:
    """0 at or below b_0, 1 at or above b_N, linear in P between boundaries."""
    return _as_output(np.interp(x, table.boundaries, table.probs, left=0.0, right=1.0), x)


def negative_prob(x: ArrayLike, table: BoundaryTable) -> Union[float, np.ndarray]:
    """Share of the table's mass at or above x: 1 at or below b_0, 0 at or above b_N."""
    return _as_output(1.0 - np.interp(x, table.boundaries, table.probs, left=0.0, right=1.0), x)


def fuse(
    p_pos: ArrayLike,
    q_neg: ArrayLike,
    scales: Tuple[float, float],
    fusion: str = "complement",
) -> Union[float, np.ndarray]:
    """
    Scaled geometric mean of the positive evidence and the negative term.

    The negative term is 1 - q_neg by default; fusion="literal" uses q_neg
    itself.
    """
    scale_pos, scale_neg = scales
    validate_scales(scale_pos, scale_neg)
    if fusion not in ("complement", "literal"):
        raise ConfigurationError(f"unknown fusion mode {fusion!r}")

    p = np.asarray(p_pos, dtype=np.float64)
    negative_term = np.asarray(q_neg, dtype=np.float64)
    if fusion == "complement":
        negative_term = 1.0 - negative_term

    if scale_pos == 0:
        fused = negative_term
    elif scale_neg == 0:
        fused = p
    else:
        with np.errstate(divide="ignore"):
            fused = np.exp(
                (scale_pos * np.log(p) + scale_neg * np.log(negative_term))
                / (scale_pos + scale_neg)
            )
    fused = np.asarray(fused, dtype=np.float64)
    if np.ndim(p_pos) == 0 and np.ndim(q_neg) == 0:
        return float(fused)
    return fused


def state_confidence(
    raw: ArrayLike,
    calibration: StateCalibration,
    fusion: str = "complement",
    scales: Optional[Tuple[float, float]] = None,
) -> Union[float, np.ndarray]:
    return fuse(
        positive_prob(raw, calibration.pos_table),
        negative_prob(raw, calibration.neg_table),
        scales or calibration.scales,
        fusion,
    )


def calibrate_frame(raw: Mapping[int, float], calib: CalibrationSet) -> dict:
    """
    Confidence for every state in `raw`. States are calibrated independently,
    so confidences need not sum to one.

    Raises:
        UnknownStateError: a state in `raw` has no calibration
    """
    return {
        state_id: state_confidence(score, calib[state_id], calib.fusion)
        for state_id, score in raw.items()
    }


def scale_log_likelihood(
    scores: Sequence[float],
    labels: Sequence[int],
    calibration: StateCalibration,
    scales: Tuple[float, float],
    fusion: str = "complement",
) -> float:
    """Weighted Bernoulli log-likelihood of the alignment labels under `scales`."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int8)
    confidence = np.clip(
        state_confidence(scores, calibration, fusion, scales),
        LIKELIHOOD_CLAMP,
        1.0 - LIKELIHOOD_CLAMP,
    )
    positive = labels == 1
    return float(
        POSITIVE_WEIGHT * np.log(confidence[positive]).sum()
        + NEGATIVE_WEIGHT * np.log(1.0 - confidence[~positive]).sum()
    )


def adapt_scales(
    scores: Sequence[float],
    labels: Sequence[int],
    grid: Iterable[Tuple[float, float]],
    calibration: StateCalibration,
    fusion: str = "complement",
) -> Tuple[float, float]:
    """
    Grid pair with the highest weighted log-likelihood; ties go to the
    lexicographically smallest pair.

    Raises:
        EmptyClassError: no positive or no negative frame
        ConfigurationError: empty grid
    """
    labels = np.asarray(labels, dtype=np.int8)
    if not np.any(labels == 1):
        raise EmptyClassError("no positive frames for scale adaptation")
    if not np.any(labels == 0):
        raise EmptyClassError("no negative frames for scale adaptation")
    candidates = sorted({(float(sp), float(sn)) for sp, sn in grid})
    if not candidates:
        raise ConfigurationError("scale grid is empty")

    best_pair, best_ll = None, -np.inf
    for pair in candidates:
        ll = scale_log_likelihood(scores, labels, calibration, pair, fusion)
        if best_pair is None or ll > best_ll:
            best_pair, best_ll = pair, ll
    return best_pair


def scale_grid(values: Sequence[float]) -> List[Tuple[float, float]]:
    """Every (S_p, S_n) pair over `values`, minus the all-zero pair."""
    values = sorted({float(v) for v in values})
    if any(v < 0 for v in values):
        raise ConfigurationError("scale grid values must be non-negative")
    return [(sp, sn) for sp in values for sn in values if sp + sn > 0]


def parse_grid(text: str) -> List[Tuple[float, float]]:
    """'0.5,1,2' -> scale_grid([0.5, 1, 2])."""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigurationError(f"invalid scale grid {text!r}: {e}") from e
    if not values:
        raise ConfigurationError("scale grid is empty")
    return scale_grid(values)


def _split_state(raw: np.ndarray, states: np.ndarray, state: int) -> Tuple[np.ndarray, np.ndarray]:
    column = raw[:, state]
    return column[states == state], column[states != state]


def estimate_calibration(
    raw: np.ndarray,
    states: np.ndarray,
    num_states: int,
    num_segments: int = 100,
    scales: Tuple[float, float] = (4.0, 1.0),
    fusion: str = "complement",
) -> CalibrationSet:
    """
    Build tables for every state from a (frames, num_states) raw score matrix
    and each frame's aligned state.

    Raises:
        EmptyClassError: a state has no positive or no negative frame
    """
    raw = np.asarray(raw, dtype=np.float64)
    states = np.asarray(states, dtype=np.int64)
    per_state = {}
    for state in range(num_states):
        positives, negatives = _split_state(raw, states, state)
        if positives.size == 0:
            raise EmptyClassError(f"no positive frames for state {state}", state)
        if negatives.size == 0:
            raise EmptyClassError(f"no negative frames for state {state}", state)
        per_state[state] = StateCalibration(
            estimate_table_widened(positives, num_segments),
            estimate_table_widened(negatives, num_segments),
            *scales,
        )
        logger.debug(
            f"State {state}: {positives.size} positive, {negatives.size} negative frames, "
            f"positive median {np.median(positives):.4f}"
        )
    logger.info(f"Estimated calibration for {num_states} states with {num_segments} segments")
    return CalibrationSet(per_state, num_states, fusion)


def adapt_calibration(
    raw: np.ndarray,
    states: np.ndarray,
    calib: CalibrationSet,
    grid: Sequence[Tuple[float, float]],
) -> CalibrationSet:
    """Per-state adapt_scales; states missing a class keep their current scales."""
    raw = np.asarray(raw, dtype=np.float64)
    states = np.asarray(states, dtype=np.int64)
    adapted = calib
    for state in range(calib.num_states):
        column = raw[:, state]
        labels = (states == state).astype(np.int8)
        try:
            pair = adapt_scales(column, labels, grid, calib[state], calib.fusion)
        except EmptyClassError as e:
            logger.warning(f"State {state}: keeping scales {calib[state].scales} ({e})")
            continue
        adapted = adapted.with_state(state, calib[state].with_scales(*pair))
        logger.info(f"State {state}: scales {calib[state].scales} -> {pair}")
    return adapted


def state_histograms(raw: np.ndarray, states: np.ndarray, bins: int = 20) -> List[StateHistogram]:
    """Raw-score histograms over [0, 1] of each state's positive and negative frames."""
    raw = np.asarray(raw, dtype=np.float64)
    states = np.asarray(states, dtype=np.int64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    histograms = []
    for state in range(raw.shape[1]):
        positives, negatives = _split_state(raw, states, state)
        histograms.append(
            StateHistogram(
                state,
                edges,
                np.histogram(positives, bins=edges)[0],
                np.histogram(negatives, bins=edges)[0],
            )
        )
    return histograms


def confidence_overlap(confidences: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """
    (states, states) count of frames where both states reach `threshold`.
    The diagonal counts frames where the single state does.
    """
    above = (np.asarray(confidences, dtype=np.float64) >= threshold).astype(np.int64)
    return above.T @ above
