"""
Deterministic synthetic corpus: one Gaussian per state, keyword utterances
built from keyword state sequences and keyword-free utterances that never
visit two states of a keyword in that keyword's order.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from ..errors import ConfigurationError
from ..models.evaluation import PositiveReference, ReferenceSet
from ..models.graph import Lexicon
from ..models.synthetic import SynthSpec
from ..storage.feature_files import write_matrix
from ..storage.text_files import (
    ManifestEntry,
    write_alignment,
    write_lexicon,
    write_manifest,
    write_references,
)

logger = logging.getLogger(__name__)

FRAME_HOP_MS = 10.0
SPLITS = ("train", "dev", "test")


@dataclass
class SynthUtterance:
    utterance_id: str
    states: np.ndarray
    frames: np.ndarray
    keyword: Optional[str] = None
    span: Optional[Tuple[int, int]] = None

    @property
    def hours(self) -> float:
        return self.frames.shape[0] * FRAME_HOP_MS / 3_600_000.0


@dataclass
class SynthDataset:
    """Paths of everything generate_synthetic_dataset wrote."""

    root: Path
    lexicon_path: Path
    manifests: Dict[str, Path] = field(default_factory=dict)
    references: Dict[str, Path] = field(default_factory=dict)
    means: Optional[np.ndarray] = None


def state_means(spec: SynthSpec) -> np.ndarray:
    rng = np.random.default_rng([spec.rng_seed, 0])
    return rng.normal(0.0, 1.0, size=(spec.num_states, spec.feature_dim))


def _keyword_positions(spec: SynthSpec) -> List[Dict[int, int]]:
    return [{state: pos for pos, state in enumerate(seq)} for seq in spec.keyword_state_seqs]


def negative_state_sequence(spec: SynthSpec, rng: np.random.Generator) -> List[int]:
    """
    Random segment states in which every keyword's states, if they appear at
    all, appear in strictly reversed keyword order, with no state repeated.
    """
    positions = _keyword_positions(spec)
    length = max(len(seq) for seq in spec.keyword_state_seqs)
    lowest_seen = [None] * len(positions)
    sequence: List[int] = []
    for _ in range(length):
        candidates = []
        for state in range(spec.num_states):
            if state in sequence:
                continue
            if all(
                state not in pos or seen is None or pos[state] < seen
                for pos, seen in zip(positions, lowest_seen)
            ):
                candidates.append(state)
        if not candidates:
            break
        state = int(rng.choice(candidates))
        sequence.append(state)
        for k, pos in enumerate(positions):
            if state in pos:
                lowest_seen[k] = pos[state]
    if not sequence:
        raise ConfigurationError("no state sequence can avoid every keyword")
    return sequence


def _frames_for(states: np.ndarray, means: np.ndarray, noise_std: float, rng) -> np.ndarray:
    frames = means[states]
    if noise_std > 0:
        frames = frames + noise_std * rng.standard_normal(frames.shape)
    return frames.astype(np.float32)


def synthesize_split(
    spec: SynthSpec, split: str, count: int, means: np.ndarray
) -> List[SynthUtterance]:
    """`count` utterances, round(count x positive_fraction) of them keyword utterances."""
    rng = np.random.default_rng([spec.rng_seed, 1 + SPLITS.index(split)])
    fps = spec.frames_per_state
    names = spec.keyword_names
    num_positive = int(round(count * spec.positive_fraction))
    is_positive = np.zeros(count, dtype=bool)
    is_positive[:num_positive] = True
    rng.shuffle(is_positive)

    utterances = []
    positive_index = 0
    for index in range(count):
        utt_id = f"{split}-{index:05d}"
        if is_positive[index]:
            k = positive_index % len(names)
            positive_index += 1
            keyword_states = spec.keyword_state_seqs[k]
            others = [s for s in range(spec.num_states) if s not in keyword_states]
            lead = int(rng.integers(fps // 2, fps + 1)) if others else 0
            trail = int(rng.integers(fps // 2, fps + 1)) if others else 0
            segments = []
            if lead:
                segments.append(np.full(lead, rng.choice(others)))
            segments.extend(np.full(fps, state) for state in keyword_states)
            if trail:
                segments.append(np.full(trail, rng.choice(others)))
            states = np.concatenate(segments).astype(np.int64)
            span = (lead, lead + fps * len(keyword_states))
            utterances.append(
                SynthUtterance(utt_id, states, _frames_for(states, means, spec.noise_std, rng), names[k], span)
            )
        else:
            sequence = negative_state_sequence(spec, rng)
            states = np.repeat(np.array(sequence, dtype=np.int64), fps)
            utterances.append(
                SynthUtterance(utt_id, states, _frames_for(states, means, spec.noise_std, rng))
            )
    return utterances


def synthetic_lexicon(spec: SynthSpec) -> Lexicon:
    return Lexicon(dict(zip(spec.keyword_names, spec.keyword_state_seqs)), spec.num_states)


def generate_synthetic_dataset(spec: SynthSpec, out_dir: Union[str, Path]) -> SynthDataset:
    """
    Write train/dev/test splits under out_dir:

        lexicon.txt, synth.yaml
        <split>/manifest.txt, <split>/refs.txt
        <split>/feats/<utt>.btfe, <split>/ali/<utt>.ali

    Output is byte-identical for a given spec.
    """
    spec.validate()
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    means = state_means(spec)

    dataset = SynthDataset(root, root / "lexicon.txt", means=means)
    write_lexicon(synthetic_lexicon(spec), dataset.lexicon_path)
    with open(root / "synth.yaml", "w") as f:
        yaml.safe_dump(
            {
                "num_states": spec.num_states,
                "feature_dim": spec.feature_dim,
                "frames_per_state": spec.frames_per_state,
                "keyword_state_seqs": [list(seq) for seq in spec.keyword_state_seqs],
                "noise_std": spec.noise_std,
                "seed": spec.rng_seed,
            },
            f,
            sort_keys=False,
            default_flow_style=None,
        )

    counts = {"train": spec.num_utterances, "dev": spec.dev_utterances, "test": spec.test_utterances}
    for split in SPLITS:
        if counts[split] == 0:
            continue
        split_dir = root / split
        (split_dir / "feats").mkdir(parents=True, exist_ok=True)
        (split_dir / "ali").mkdir(parents=True, exist_ok=True)

        entries = []
        refs = ReferenceSet()
        for utt in synthesize_split(spec, split, counts[split], means):
            features_path = split_dir / "feats" / f"{utt.utterance_id}.btfe"
            alignment_path = split_dir / "ali" / f"{utt.utterance_id}.ali"
            write_matrix(features_path, utt.frames)
            write_alignment(utt.utterance_id, utt.states, alignment_path)
            entries.append(ManifestEntry(utt.utterance_id, features_path, alignment_path))
            if utt.keyword is not None:
                refs.positives.append(PositiveReference(utt.utterance_id, utt.keyword, utt.span))
            else:
                refs.negative_hours[utt.utterance_id] = utt.hours

        dataset.manifests[split] = split_dir / "manifest.txt"
        dataset.references[split] = split_dir / "refs.txt"
        write_manifest(entries, dataset.manifests[split])
        write_references(refs, dataset.references[split])
        logger.info(
            f"Wrote {split} split: {len(refs.positives)} keyword and "
            f"{len(refs.negative_hours)} keyword-free utterances"
        )
    return dataset
