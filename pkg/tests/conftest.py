"""Shared fixtures for btnn-spotter tests."""

import numpy as np
import pytest

from btnn_spotter.models.calibration import BoundaryTable, CalibrationSet, StateCalibration
from btnn_spotter.models.decoding import DecodeConfig
from btnn_spotter.models.features import FeatureConfig, FeatureFrame
from btnn_spotter.models.graph import JumpConfig
from btnn_spotter.models.synthetic import SynthSpec
from btnn_spotter.models.training import AlignedSample
from btnn_spotter.services.graph import build_graph
from btnn_spotter.services.nnet import build_bundle

SMALL_EMBEDDING = [
    {"type": "dense", "dim": 8, "activation": "relu"},
    {"type": "memory", "taps": 3},
    {"type": "dense", "dim": 8, "activation": "relu"},
]


@pytest.fixture
def small_feature_config():
    """Six-bin feature config for hand-sized networks."""
    return FeatureConfig(num_bins=6)


@pytest.fixture
def small_bundle(small_feature_config):
    """Four-state bundle with a memory layer in the embedding."""
    return build_bundle(4, small_feature_config, SMALL_EMBEDDING, [5, 3], seed=7)


@pytest.fixture
def make_bundle(small_feature_config):
    """Factory for seeded random bundles over six-bin features."""

    def _make(num_states=4, tail_dims=(5, 3), seed=0):
        return build_bundle(
            num_states, small_feature_config, SMALL_EMBEDDING, list(tail_dims), seed=seed
        )

    return _make


@pytest.fixture
def ten_state_bundle(small_feature_config):
    """Ten states, single-hidden-layer tails."""
    return build_bundle(10, small_feature_config, SMALL_EMBEDDING, [4], seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_frames(rng):
    """Twelve six-dim frames."""
    return [FeatureFrame(rng.normal(size=6), index) for index in range(12)]


@pytest.fixture
def aligned_dataset(rng):
    """Three utterances over 4 states, every state present, frames near a per-state mean."""
    means = rng.normal(scale=2.0, size=(4, 6))
    samples = []
    for utt in range(3):
        states = np.repeat(np.arange(4), 5)
        for index, state in enumerate(states):
            values = means[state] + 0.1 * rng.normal(size=6)
            samples.append(AlignedSample(FeatureFrame(values, index), int(state), 4, f"utt{utt}"))
    return samples


def uniform_table(low=0.0, high=1.0, segments=4):
    """Table whose probabilities rise linearly across [low, high]."""
    counts = np.full(segments, 10)
    probs = np.concatenate([[0.0], np.cumsum(counts) / counts.sum()])
    probs[-1] = 1.0
    return BoundaryTable(np.linspace(low, high, segments + 1), probs, counts)


@pytest.fixture
def make_calibration():
    """Factory for uniform-table calibration sets of any size."""

    def _make(num_states=4, scales=(4.0, 1.0)):
        per_state = {
            state: StateCalibration(uniform_table(), uniform_table(), *scales)
            for state in range(num_states)
        }
        return CalibrationSet(per_state, num_states)

    return _make


@pytest.fixture
def uniform_calibration(make_calibration):
    """Four states; positive evidence rises with the score, negative mass falls."""
    return make_calibration(4)


@pytest.fixture
def chain_graph():
    """Graph for states [0, 1, 2] with one-state jumps."""
    return build_graph([0, 1, 2], JumpConfig(max_skip=1, punishment=4.0), keyword="abc")


@pytest.fixture
def open_decode_config():
    """No beam, no floor, short keywords allowed."""
    return DecodeConfig(beam=None, threshold=-100.0, min_frames=1, refractory_frames=0, token_floor=None)


@pytest.fixture
def tiny_synth_spec():
    return SynthSpec(
        num_states=8,
        feature_dim=5,
        frames_per_state=4,
        num_utterances=20,
        dev_utterances=6,
        test_utterances=8,
        keyword_state_seqs=((0, 1, 2, 3), (4, 5, 6, 7)),
        noise_std=0.3,
        rng_seed=11,
    )
