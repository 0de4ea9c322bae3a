"""Reference and operating-point data models for scoring detections."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple


@dataclass(frozen=True)
class PositiveReference:
    """A keyword utterance; span is [start, end) in frames when known."""

    utterance_id: str
    keyword: str
    span: Optional[Tuple[int, int]] = None


@dataclass
class ReferenceSet:
    """Positive utterances plus keyword-free audio with its duration."""

    positives: List[PositiveReference] = field(default_factory=list)
    negative_hours: Dict[str, float] = field(default_factory=dict)

    @property
    def total_negative_hours(self) -> float:
        return float(sum(self.negative_hours.values()))

    @property
    def negative_ids(self) -> List[str]:
        return list(self.negative_hours)


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    wakeup_rate: float
    false_alarms_per_24h: float


@dataclass
class SweepResult:
    """Every operating point plus the best one under the false-alarm target."""

    points: List[OperatingPoint]
    fa_target: float
    best: Optional[OperatingPoint] = None
