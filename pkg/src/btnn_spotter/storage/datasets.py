"""Loading manifest-listed utterances with their alignments."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..errors import FormatError
from ..models.features import FeatureFrame
from ..models.training import AlignedSample
from .feature_files import read_dim, read_matrix
from .text_files import ManifestEntry, read_alignment, read_manifest

logger = logging.getLogger(__name__)


@dataclass
class Utterance:
    utterance_id: str
    frames: np.ndarray  # (frames, dim) float32
    states: Optional[np.ndarray] = None


def manifest_dim(path: Union[str, Path]) -> int:
    entries = read_manifest(path)
    if not entries:
        raise FormatError(f"{path}: manifest lists no utterances")
    return read_dim(entries[0].features_path)


def load_utterance(entry: ManifestEntry, dim: int, require_alignment: bool = False) -> Utterance:
    frames = read_matrix(entry.features_path, dim)
    if entry.alignment_path is None:
        if require_alignment:
            raise FormatError(f"utterance {entry.utterance_id!r} has no alignment")
        return Utterance(entry.utterance_id, frames)
    states = read_alignment(entry.alignment_path, entry.utterance_id)
    if states.shape[0] != frames.shape[0]:
        raise FormatError(
            f"utterance {entry.utterance_id!r}: {frames.shape[0]} frames but "
            f"{states.shape[0]} aligned states"
        )
    return Utterance(entry.utterance_id, frames, states)


def load_utterances(
    path: Union[str, Path], dim: int, require_alignment: bool = False
) -> List[Utterance]:
    utterances = [load_utterance(e, dim, require_alignment) for e in read_manifest(path)]
    logger.info(
        f"Loaded {len(utterances)} utterances "
        f"({sum(u.frames.shape[0] for u in utterances)} frames) from {path}"
    )
    return utterances


def aligned_samples(utterances: List[Utterance], num_states: int) -> List[AlignedSample]:
    """Flatten aligned utterances into per-frame samples."""
    samples = []
    for utt in utterances:
        if utt.states is None:
            raise FormatError(f"utterance {utt.utterance_id!r} has no alignment")
        for index, (row, state) in enumerate(zip(utt.frames, utt.states)):
            samples.append(AlignedSample(FeatureFrame(row, index), int(state), num_states, utt.utterance_id))
    return samples
