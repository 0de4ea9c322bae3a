"""
Line-oriented text formats.

    lexicon      word state_id state_id ...
    alignment    utt_id frame_index state_id
    manifest     utt_id features_path [alignment_path]   (paths relative to the manifest)
    references   utt_id POS keyword [start end] | utt_id NEG hours
    results      utt_id keyword start_frame end_frame confidence | utt_id NONE

Blank lines and lines starting with '#' are ignored everywhere.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from ..errors import FormatError
from ..models.calibration import StateHistogram
from ..models.decoding import DetectionEvent
from ..models.evaluation import PositiveReference, ReferenceSet
from ..models.graph import Lexicon

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _lines(path: PathLike) -> Iterator[Tuple[int, List[str]]]:
    with open(path, "r") as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield number, line.split()


def _int(value: str, path: PathLike, number: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise FormatError(f"{path}:{number}: expected an integer, got {value!r}") from None


def _float(value: str, path: PathLike, number: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise FormatError(f"{path}:{number}: expected a number, got {value!r}") from None


# -- lexicon ------------------------------------------------------------------------


def read_lexicon(path: PathLike, num_states: Optional[int] = None) -> Lexicon:
    """num_states defaults to one past the largest state id used."""
    entries: Dict[str, Tuple[int, ...]] = {}
    for number, fields in _lines(path):
        if len(fields) < 2:
            raise FormatError(f"{path}:{number}: lexicon entry needs a word and states")
        word = fields[0]
        if word in entries:
            raise FormatError(f"{path}:{number}: duplicate lexicon entry {word!r}")
        entries[word] = tuple(_int(v, path, number) for v in fields[1:])
    if not entries:
        raise FormatError(f"{path}: lexicon is empty")
    if num_states is None:
        num_states = max(max(states) for states in entries.values()) + 1
    return Lexicon(entries, num_states)


def write_lexicon(lexicon: Lexicon, path: PathLike) -> None:
    with open(path, "w") as f:
        for word, states in lexicon.entries.items():
            f.write(f"{word} {' '.join(map(str, states))}\n")


# -- alignments ---------------------------------------------------------------------


def read_alignment(path: PathLike, utterance_id: Optional[str] = None) -> np.ndarray:
    """
    State id per frame. Frames must be listed 0, 1, 2, ... without gaps; with
    utterance_id only that utterance's lines are kept.
    """
    states: List[int] = []
    for number, fields in _lines(path):
        if len(fields) != 3:
            raise FormatError(f"{path}:{number}: expected 'utt_id frame_index state_id'")
        if utterance_id is not None and fields[0] != utterance_id:
            continue
        index = _int(fields[1], path, number)
        if index != len(states):
            raise FormatError(f"{path}:{number}: expected frame {len(states)}, got {index}")
        states.append(_int(fields[2], path, number))
    return np.array(states, dtype=np.int64)


def write_alignment(utterance_id: str, states: Sequence[int], path: PathLike) -> None:
    with open(path, "w") as f:
        for index, state in enumerate(states):
            f.write(f"{utterance_id} {index} {int(state)}\n")


# -- dataset manifests --------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    features_path: Path
    alignment_path: Optional[Path] = None


def read_manifest(path: PathLike) -> List[ManifestEntry]:
    """Entries with paths resolved against the manifest's directory."""
    base = Path(path).parent
    entries: List[ManifestEntry] = []
    seen = set()
    for number, fields in _lines(path):
        if len(fields) not in (2, 3):
            raise FormatError(f"{path}:{number}: expected 'utt_id features_path [alignment_path]'")
        if fields[0] in seen:
            raise FormatError(f"{path}:{number}: duplicate utterance {fields[0]!r}")
        seen.add(fields[0])
        alignment = base / fields[2] if len(fields) == 3 else None
        entries.append(ManifestEntry(fields[0], base / fields[1], alignment))
    return entries


def write_manifest(entries: Sequence[ManifestEntry], path: PathLike) -> None:
    """Paths are written relative to the manifest's directory where possible."""
    base = Path(path).parent.resolve()

    def relative(p: Path) -> str:
        try:
            return str(Path(p).resolve().relative_to(base))
        except ValueError:
            return str(p)

    with open(path, "w") as f:
        for entry in entries:
            line = f"{entry.utterance_id} {relative(entry.features_path)}"
            if entry.alignment_path is not None:
                line += f" {relative(entry.alignment_path)}"
            f.write(line + "\n")


# -- references ---------------------------------------------------------------------


def read_references(path: PathLike) -> ReferenceSet:
    refs = ReferenceSet()
    seen = set()
    for number, fields in _lines(path):
        if len(fields) < 2:
            raise FormatError(f"{path}:{number}: expected 'utt_id POS ...' or 'utt_id NEG hours'")
        utt, kind = fields[0], fields[1].upper()
        if utt in seen:
            raise FormatError(f"{path}:{number}: duplicate utterance {utt!r}")
        seen.add(utt)
        if kind == "POS":
            if len(fields) == 3:
                refs.positives.append(PositiveReference(utt, fields[2]))
            elif len(fields) == 5:
                start, end = _int(fields[3], path, number), _int(fields[4], path, number)
                if end <= start:
                    raise FormatError(f"{path}:{number}: span end must exceed start")
                refs.positives.append(PositiveReference(utt, fields[2], (start, end)))
            else:
                raise FormatError(f"{path}:{number}: expected 'utt_id POS keyword [start end]'")
        elif kind == "NEG":
            if len(fields) != 3:
                raise FormatError(f"{path}:{number}: expected 'utt_id NEG hours'")
            hours = _float(fields[2], path, number)
            if hours < 0:
                raise FormatError(f"{path}:{number}: negative duration {hours}")
            refs.negative_hours[utt] = hours
        else:
            raise FormatError(f"{path}:{number}: unknown reference kind {fields[1]!r}")
    return refs


def write_references(refs: ReferenceSet, path: PathLike) -> None:
    with open(path, "w") as f:
        for ref in refs.positives:
            span = f" {ref.span[0]} {ref.span[1]}" if ref.span is not None else ""
            f.write(f"{ref.utterance_id} POS {ref.keyword}{span}\n")
        for utt, hours in refs.negative_hours.items():
            f.write(f"{utt} NEG {hours!r}\n")


# -- results ------------------------------------------------------------------------


def read_results(path: PathLike) -> Dict[str, List[DetectionEvent]]:
    results: Dict[str, List[DetectionEvent]] = {}
    for number, fields in _lines(path):
        utt = fields[0]
        if len(fields) == 2 and fields[1] == "NONE":
            results.setdefault(utt, [])
            continue
        if len(fields) != 5:
            raise FormatError(
                f"{path}:{number}: expected 'utt_id keyword start end confidence' or 'utt_id NONE'"
            )
        results.setdefault(utt, []).append(
            DetectionEvent(
                fields[1],
                _int(fields[2], path, number),
                _int(fields[3], path, number),
                _float(fields[4], path, number),
            )
        )
    return results


def format_result_lines(utterance_id: str, events: Sequence[DetectionEvent]) -> List[str]:
    if not events:
        return [f"{utterance_id} NONE"]
    return [f"{utterance_id} {event.to_line()}" for event in events]


def write_results(results: Mapping[str, Sequence[DetectionEvent]], stream: TextIO) -> None:
    for utt, events in results.items():
        for line in format_result_lines(utt, events):
            stream.write(line + "\n")


# -- debugging dumps ----------------------------------------------------------------


def write_frame_scores(rows, stream: TextIO, utterance_id: str = "-") -> None:
    """One line per (frame, active state): utt frame state raw confidence."""
    for row in rows:
        for state, raw in row.raw.items():
            stream.write(
                f"{utterance_id}\t{row.frame_index}\t{state}\t{raw:.6f}\t{row.confidence[state]:.6f}\n"
            )


def write_distributions(
    histograms: Sequence[StateHistogram], overlap: np.ndarray, path: PathLike
) -> None:
    """Per-state score histograms followed by the state-overlap matrix, as TSV."""
    with open(path, "w") as f:
        f.write("# histogram\tstate\tbin_low\tbin_high\tpositive\tnegative\n")
        for hist in histograms:
            for i in range(len(hist.positive)):
                f.write(
                    f"histogram\t{hist.state_id}\t{hist.edges[i]:.4f}\t{hist.edges[i + 1]:.4f}"
                    f"\t{int(hist.positive[i])}\t{int(hist.negative[i])}\n"
                )
        f.write("# overlap\tstate_a\tstate_b\tframes\n")
        for a in range(overlap.shape[0]):
            for b in range(overlap.shape[1]):
                f.write(f"overlap\t{a}\t{b}\t{int(overlap[a, b])}\n")
