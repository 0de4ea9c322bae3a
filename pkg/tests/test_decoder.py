"""Tests for token passing, detection and streaming decode sessions."""

import numpy as np
import pytest

from btnn_spotter.errors import ConfigurationError, ContractViolationError, UnknownStateError
from btnn_spotter.models.calibration import CalibrationSet
from btnn_spotter.models.decoding import DecodeConfig, Token
from btnn_spotter.models.graph import JumpConfig
from btnn_spotter.services.decoder import (
    DecodeSession,
    active_states,
    decode_scores,
    decode_stream,
    detect,
    log_confidence,
    step,
)
from btnn_spotter.services.graph import build_graph
from btnn_spotter.storage.text_files import format_result_lines


def run_steps(graph, confidence_frames, config):
    """Final-node token after each frame, or None."""
    tokens, finals = [], []
    for t, confidences in enumerate(confidence_frames):
        tokens = step(tokens, confidences, graph, config, t)
        final = [tok for tok in tokens if tok.node == graph.final_node]
        finals.append(final[0] if final else None)
    return finals


def best_final_scores(graph, confidence_frames):
    """Exhaustive best path score into the final node at every frame."""
    final = graph.final_node
    best = [None] * len(confidence_frames)

    def extend(node, t, score):
        for arc in graph.outgoing(node):
            if arc.dst == final:
                total = score + arc.weight
                if best[t] is None or total > best[t]:
                    best[t] = total
        if t + 1 == len(confidence_frames):
            return
        for arc in graph.outgoing(node):
            if arc.dst != final:
                gain = log_confidence(confidence_frames[t + 1][arc.state]) + arc.weight
                extend(arc.dst, t + 1, score + gain)

    for start in range(len(confidence_frames)):
        extend(graph.entry_node, start, log_confidence(confidence_frames[start][graph.entry_state]))
    return best


def random_confidences(rng, frames, num_states):
    return [dict(enumerate(rng.uniform(0.01, 1.0, num_states))) for _ in range(frames)]


class TestActiveStates:
    """Tests for the set of tails a graph needs next."""

    def test_idle_graph_listens_for_its_first_state(self, chain_graph):
        assert active_states([], chain_graph) == {0}

    def test_token_on_first_node(self, chain_graph):
        assert active_states([Token(1, 0.0, 0, 1)], chain_graph) == {0, 1, 2}

    def test_tokens_everywhere(self, chain_graph):
        tokens = [Token(node, 0.0, 0, 1) for node in (1, 2, 3)]
        assert active_states(tokens, chain_graph) == {0, 1, 2}

    def test_token_outside_graph(self, chain_graph):
        with pytest.raises(ContractViolationError):
            active_states([Token(9, 0.0, 0, 1)], chain_graph)


class TestStep:
    """Tests for one frame of token passing."""

    def test_two_state_chain_reaches_final(self, open_decode_config):
        graph = build_graph([0, 1], JumpConfig(max_skip=0))

        finals = run_steps(graph, [{0: 1.0, 1: 0.5}, {0: 0.5, 1: 1.0}], open_decode_config)

        assert finals[0] is None
        assert finals[1] == Token(graph.final_node, 0.0, 0, 2)

    def test_perfect_acoustics_only_pay_jumps(self, chain_graph, open_decode_config):
        ones = {0: 1.0, 1: 1.0, 2: 1.0}
        tokens = step([Token(1, 0.0, 0, 1)], ones, chain_graph, open_decode_config, 1)

        scores = {t.node: t.log_score for t in tokens}

        assert scores[1] == 0.0
        assert scores[2] == 0.0
        assert scores[3] == -4.0

    @pytest.mark.parametrize("num_frames", range(1, 9))
    @pytest.mark.parametrize("max_skip", [0, 1, 2])
    @pytest.mark.parametrize("length", [1, 2, 3])
    def test_matches_exhaustive_search(self, rng, open_decode_config, length, max_skip, num_frames):
        graph = build_graph(list(range(length)), JumpConfig(max_skip=max_skip, punishment=1.5))
        frames = random_confidences(rng, num_frames, length)

        finals = run_steps(graph, frames, open_decode_config)
        expected = best_final_scores(graph, frames)

        for token, score in zip(finals, expected):
            if score is None:
                assert token is None
            else:
                assert token.log_score == pytest.approx(score, rel=0, abs=1e-9)

    def test_repeated_states_match_exhaustive_search(self, rng, open_decode_config):
        for states, max_skip in (([2, 0], 0), ([1, 1, 0, 2], 2), ([0, 0, 0], 1)):
            graph = build_graph(states, JumpConfig(max_skip=max_skip, punishment=1.0))
            frames = random_confidences(rng, 7, 3)

            finals = run_steps(graph, frames, open_decode_config)
            expected = best_final_scores(graph, frames)

            for token, score in zip(finals, expected):
                if score is None:
                    assert token is None
                else:
                    assert token.log_score == pytest.approx(score, rel=0, abs=1e-9)

    def test_heavier_punishment_never_helps(self, rng, open_decode_config):
        for _ in range(50):
            states = [int(s) for s in rng.integers(0, 4, size=rng.integers(2, 5))]
            max_skip = int(rng.integers(1, 3))
            frames = random_confidences(rng, 8, 4)
            runs = [
                run_steps(
                    build_graph(states, JumpConfig(max_skip=max_skip, punishment=punishment)),
                    frames,
                    open_decode_config,
                )
                for punishment in (0.0, 1.0, 2.0, 4.0, 8.0)
            ]

            for lighter, heavier in zip(runs, runs[1:]):
                for a, b in zip(lighter, heavier):
                    if b is not None:
                        assert a is not None
                        assert b.log_score <= a.log_score + 1e-12

    def test_beam_of_one(self, rng, chain_graph):
        config = DecodeConfig(beam=1, threshold=-100.0, min_frames=1, token_floor=None)
        tokens = []
        for t, confidences in enumerate(random_confidences(rng, 10, 3)):
            tokens = step(tokens, confidences, chain_graph, config, t)
            assert len([tok for tok in tokens if tok.node != chain_graph.final_node]) <= 1

    def test_beam_of_one_only_follows_real_paths(self, rng):
        graph = build_graph([0, 1, 2], JumpConfig(max_skip=1, punishment=1.0))
        config = DecodeConfig(beam=1, threshold=-100.0, min_frames=1, token_floor=None)
        frames = random_confidences(rng, 8, 3)

        for token, score in zip(run_steps(graph, frames, config), best_final_scores(graph, frames)):
            if token is not None:
                assert token.log_score <= score + 1e-9

    @pytest.mark.parametrize("length", [1, 2, 3])
    def test_beam_as_wide_as_the_chain_is_exact(self, rng, length):
        graph = build_graph(list(range(length)), JumpConfig(max_skip=1, punishment=1.0))
        config = DecodeConfig(beam=length, threshold=-100.0, min_frames=1, token_floor=None)
        frames = random_confidences(rng, 8, length)

        finals = run_steps(graph, frames, config)
        expected = best_final_scores(graph, frames)

        for token, score in zip(finals, expected):
            if score is None:
                assert token is None
            else:
                assert token.log_score == pytest.approx(score, rel=0, abs=1e-9)

    def test_token_floor_prunes_weak_tokens(self, chain_graph):
        config = DecodeConfig(beam=None, token_floor=-2.0)
        tokens = step([], {0: 0.01}, chain_graph, config, 0)
        assert tokens == []

    def test_missing_confidence(self, chain_graph, open_decode_config):
        with pytest.raises(ContractViolationError, match="state 1"):
            step([Token(1, 0.0, 0, 1)], {0: 1.0, 2: 1.0}, chain_graph, open_decode_config, 3)


class TestDetect:
    """Tests for the detection rule."""

    @pytest.fixture
    def config(self):
        return DecodeConfig(threshold=-0.5, min_frames=4)

    def test_no_final_token(self, chain_graph, config):
        assert detect([Token(2, 0.0, 0, 8)], 7, config, chain_graph) is None

    def test_threshold_is_inclusive(self, chain_graph, config):
        event = detect([Token(4, -2.0, 3, 4)], 6, config, chain_graph)

        assert event.start_frame == 3
        assert event.end_frame == 7
        assert event.confidence == -0.5

    def test_too_short(self, chain_graph, config):
        assert detect([Token(4, 0.0, 5, 3)], 7, config, chain_graph) is None

    def test_best_of_two(self, chain_graph, config):
        tokens = [Token(4, -1.6, 0, 4), Token(4, -0.8, 2, 4)]
        assert detect(tokens, 5, config, chain_graph).start_frame == 2

    def test_refractory(self, chain_graph, config):
        assert detect([Token(4, 0.0, 0, 4)], 5, config, chain_graph, refractory_until=6) is None


class TestDecodeScores:
    """Tests for decoding precomputed confidences."""

    def test_refractory_spacing(self):
        graph = build_graph([0, 1], JumpConfig(max_skip=0))
        config = DecodeConfig(beam=None, threshold=-1.0, min_frames=2, refractory_frames=5)

        events = decode_scores([{0: 1.0, 1: 1.0}] * 15, [graph], config)

        assert [e.end_frame for e in events] == [2, 8, 14]

    def test_planted_keyword_is_found_once(self):
        graph = build_graph([0, 1, 2], JumpConfig(max_skip=0), keyword="abc")
        frames = []
        for t in range(32):
            confidences = {s: 1e-3 for s in range(4)}
            if 10 <= t < 22:
                confidences[(t - 10) // 4] = 1.0
            frames.append(confidences)
        config = DecodeConfig(beam=None, threshold=-1.0, min_frames=12, refractory_frames=50)

        events = decode_scores(frames, [graph], config)

        assert len(events) == 1
        assert (events[0].keyword, events[0].start_frame, events[0].end_frame) == ("abc", 10, 22)
        assert events[0].confidence == 0.0

    def test_empty_stream(self, chain_graph, open_decode_config):
        assert decode_scores([], [chain_graph], open_decode_config) == []


class TestDecodeSession:
    """Tests for streaming sessions over a model."""

    @pytest.fixture
    def graphs(self):
        return [
            build_graph([0, 1], JumpConfig(max_skip=0), keyword="ab"),
            build_graph([2, 3], JumpConfig(max_skip=0), keyword="cd"),
        ]

    @pytest.fixture
    def stream(self, rng):
        return rng.normal(size=(60, 6)).astype(np.float32)

    def test_lazy_and_full_find_the_same_events(
        self, small_bundle, uniform_calibration, graphs, stream, open_decode_config
    ):
        lazy_events, lazy_report = decode_stream(
            stream, small_bundle, uniform_calibration, graphs, open_decode_config, lazy=True
        )
        full_events, full_report = decode_stream(
            stream, small_bundle, uniform_calibration, graphs, open_decode_config, lazy=False
        )

        assert lazy_events == full_events
        assert lazy_report.tail_macs_lazy < full_report.tail_macs_lazy
        assert full_report.tail_macs_lazy == full_report.tail_macs_full

    def test_lazy_and_full_agree_on_random_setups(self, make_bundle, make_calibration):
        rng = np.random.default_rng(99)
        calib = make_calibration(5)
        for seed in range(100):
            bundle = make_bundle(num_states=5, tail_dims=(4,), seed=seed)
            graphs = [
                build_graph(
                    [int(s) for s in rng.choice(5, size=rng.integers(2, 5), replace=False)],
                    JumpConfig(max_skip=int(rng.integers(0, 3)), punishment=float(rng.uniform(0, 4))),
                    keyword=f"kw{k}",
                )
                for k in range(2)
            ]
            config = DecodeConfig(
                beam=(None, 1, 3)[seed % 3],
                threshold=-3.0,
                min_frames=2,
                refractory_frames=int(rng.integers(0, 10)),
                token_floor=(None, -4.0)[seed % 2],
            )
            stream = rng.normal(size=(30, 6)).astype(np.float32)
            sessions = [
                DecodeSession(bundle, calib, graphs, config, lazy=lazy, record_tokens=True)
                for lazy in (True, False)
            ]
            for session in sessions:
                session.push(stream)

            lazy_session, full_session = sessions
            assert lazy_session.finish()[0] == full_session.finish()[0]
            assert lazy_session.token_history == full_session.token_history

    def test_chunked_streams_match_one_shot(
        self, small_bundle, uniform_calibration, graphs, open_decode_config
    ):
        rng = np.random.default_rng(7)
        for _ in range(20):
            stream = rng.normal(size=(int(rng.integers(1, 80)), 6)).astype(np.float32)
            expected, expected_report = decode_stream(
                stream, small_bundle, uniform_calibration, graphs, open_decode_config
            )

            session = DecodeSession(small_bundle, uniform_calibration, graphs, open_decode_config)
            chunk = int(rng.integers(1, 10))
            for offset in range(0, len(stream), chunk):
                session.push(stream[offset : offset + chunk])
            events, report = session.finish()

            assert format_result_lines("utt", events) == format_result_lines("utt", expected)
            assert report == expected_report

    @pytest.mark.parametrize("chunk", [1, 7, 60])
    def test_chunking_does_not_change_events(
        self, small_bundle, uniform_calibration, graphs, stream, open_decode_config, chunk
    ):
        expected, _ = decode_stream(stream, small_bundle, uniform_calibration, graphs, open_decode_config)

        session = DecodeSession(small_bundle, uniform_calibration, graphs, open_decode_config)
        for offset in range(0, len(stream), chunk):
            session.push(stream[offset : offset + chunk])
        events, report = session.finish()

        assert events == expected
        assert report.frames == 60

    def test_idle_session_scores_only_entry_states(
        self, small_bundle, uniform_calibration, graphs
    ):
        config = DecodeConfig(token_floor=0.5)
        session = DecodeSession(
            small_bundle, uniform_calibration, graphs, config, record_scores=True, record_tokens=True
        )

        session.push(np.zeros((3, 6), dtype=np.float32))

        assert [sorted(row.raw) for row in session.frame_scores] == [[0, 2]] * 3
        assert len(session.token_history) == 3

    def test_empty_stream(self, small_bundle, uniform_calibration, graphs, open_decode_config):
        events, report = decode_stream(
            np.zeros((0, 6)), small_bundle, uniform_calibration, graphs, open_decode_config
        )

        assert events == []
        assert report.tail_macs_lazy == 0

    def test_calibration_state_count_mismatch(self, small_bundle, uniform_calibration, graphs):
        calib = CalibrationSet(dict(list(uniform_calibration.per_state.items())[:3]), 3)

        with pytest.raises(ConfigurationError, match="4 states but calibration has 3"):
            DecodeSession(small_bundle, calib, graphs, DecodeConfig())

    def test_graph_state_outside_model(self, small_bundle, uniform_calibration):
        with pytest.raises(UnknownStateError):
            DecodeSession(small_bundle, uniform_calibration, [build_graph([1, 6])], DecodeConfig())

    def test_softmax_scorer_needs_a_head(self, small_bundle, uniform_calibration, graphs):
        with pytest.raises(ConfigurationError, match="softmax head"):
            DecodeSession(small_bundle, uniform_calibration, graphs, DecodeConfig(), scorer="softmax")

    def test_no_graphs(self, small_bundle, uniform_calibration):
        with pytest.raises(ConfigurationError):
            DecodeSession(small_bundle, uniform_calibration, [], DecodeConfig())
