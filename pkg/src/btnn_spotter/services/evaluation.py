"""Wakeup rate, false alarms per 24 hours and threshold sweeps."""

import logging
from typing import Mapping, Optional, Sequence

from ..errors import EvaluationError
from ..models.decoding import DetectionEvent
from ..models.evaluation import OperatingPoint, ReferenceSet, SweepResult
from ..utils.templates import render_template

logger = logging.getLogger(__name__)

Results = Mapping[str, Sequence[DetectionEvent]]

OUTPUT_FORMATS = ("table", "tsv")


def _events_at(events: Sequence[DetectionEvent], threshold: Optional[float]):
    if threshold is None:
        return list(events)
    return [event for event in events if event.confidence >= threshold]


def _require(results: Results, utterance_ids: Sequence[str]) -> None:
    missing = [utt for utt in utterance_ids if utt not in results]
    if missing:
        raise EvaluationError(
            f"{len(missing)} reference utterances missing from results, e.g. {missing[0]!r}"
        )


def wakeup_rate(results: Results, refs: ReferenceSet, threshold: Optional[float] = None) -> float:
    """
    Fraction of positive utterances with an event for the right keyword. When
    the reference gives a span the event must share at least one frame with it.

    Raises:
        EvaluationError: no positives, or a positive utterance has no results entry
    """
    if not refs.positives:
        raise EvaluationError("no positive references to compute a wakeup rate")
    _require(results, [ref.utterance_id for ref in refs.positives])

    woken = 0
    for ref in refs.positives:
        for event in _events_at(results[ref.utterance_id], threshold):
            if event.keyword != ref.keyword:
                continue
            if ref.span is None or event.overlaps(*ref.span):
                woken += 1
                break
    return woken / len(refs.positives)


def false_alarm_rate(event_count: int, negative_hours: float) -> float:
    """Events per 24 hours of keyword-free audio."""
    if negative_hours <= 0:
        raise EvaluationError(f"negative audio duration must be > 0 hours, got {negative_hours}")
    return event_count * 24.0 / negative_hours


def count_false_alarms(
    results: Results, refs: ReferenceSet, threshold: Optional[float] = None
) -> int:
    _require(results, refs.negative_ids)
    return sum(len(_events_at(results[utt], threshold)) for utt in refs.negative_ids)


def operating_point(results: Results, refs: ReferenceSet, threshold: float) -> OperatingPoint:
    return OperatingPoint(
        threshold,
        wakeup_rate(results, refs, threshold),
        false_alarm_rate(count_false_alarms(results, refs, threshold), refs.total_negative_hours),
    )


def sweep(
    thresholds: Sequence[float], results: Results, refs: ReferenceSet, fa_target: float = 1.0
) -> SweepResult:
    """
    One operating point per threshold by re-thresholding the cached events.
    The best point has the highest wakeup rate among those with at most
    fa_target false alarms per 24 hours, the lowest threshold on ties.

    Raises:
        EvaluationError: thresholds empty or not ascending
    """
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise EvaluationError("no thresholds to sweep")
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise EvaluationError("thresholds must be sorted ascending")

    points = [operating_point(results, refs, threshold) for threshold in thresholds]
    best = None
    for point in points:
        if point.false_alarms_per_24h > fa_target:
            continue
        if best is None or point.wakeup_rate > best.wakeup_rate:
            best = point

    if best is None:
        logger.warning(f"No threshold reaches {fa_target} false alarms per 24h")
    else:
        logger.info(
            f"Best operating point: threshold {best.threshold:.4f}, wakeup "
            f"{best.wakeup_rate:.4f}, {best.false_alarms_per_24h:.4f} FA/24h"
        )
    return SweepResult(points, fa_target, best)


def render_sweep(result: SweepResult, output_format: str = "table") -> str:
    """Fixed-column table for people or tab-separated rows for scripts."""
    if output_format not in OUTPUT_FORMATS:
        raise EvaluationError(f"unknown output format {output_format!r}")
    template = "operating_points.txt.j2" if output_format == "table" else "operating_points.tsv.j2"
    return render_template(
        template, points=result.points, best=result.best, fa_target=result.fa_target
    )
