"""
Streaming token-passing keyword decoder.

Each frame the decoder asks every keyword graph which states its live tokens
can consume next, evaluates only those tails, calibrates their outputs and
passes tokens along the graph in the log domain. A fresh hypothesis enters
node 1 every frame, so keywords are found at any offset.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, ContractViolationError, UnknownStateError
from ..models.calibration import CalibrationSet
from ..models.decoding import DecodeConfig, DetectionEvent, Token
from ..models.features import FeatureFrame
from ..models.graph import KeywordGraph
from ..models.network import MacReport, ModelBundle
from .calibration import calibrate_frame
from .nnet import EmbeddingStream, softmax_forward, tail_forward_sparse

logger = logging.getLogger(__name__)

MIN_CONFIDENCE = 1e-6
SCORERS = ("btnn", "softmax")


def log_confidence(confidence: float) -> float:
    return math.log(max(confidence, MIN_CONFIDENCE))


def _token_rank(token: Token) -> Tuple[float, int]:
    return (-token.log_score, token.start_frame)


def _check_nodes(tokens: Iterable[Token], graph: KeywordGraph) -> None:
    for token in tokens:
        if not 1 <= token.node <= graph.final_node:
            raise ContractViolationError(
                f"token on node {token.node} outside graph {graph.keyword!r}"
            )


def active_states(tokens: Iterable[Token], graph: KeywordGraph) -> Set[int]:
    """States any live token can consume next, plus the entry state for new hypotheses."""
    tokens = list(tokens)
    _check_nodes(tokens, graph)
    active = {graph.entry_state}
    for token in tokens:
        for arc in graph.outgoing(token.node):
            if arc.state is not None:
                active.add(arc.state)
    return active


def step(
    tokens: Sequence[Token],
    frame_confidences: Mapping[int, float],
    graph: KeywordGraph,
    config: DecodeConfig,
    frame_index: int = 0,
) -> List[Token]:
    """
    Advance every token by one frame.

    Per node the best-scoring candidate survives (ties go to the earlier
    start). Tokens below config.token_floor are dropped, then the best
    config.beam tokens are kept. Arcs into the final node are followed within
    the same frame; the returned list ends with the final-node token if one
    was produced.

    Raises:
        ContractViolationError: a consumed state has no confidence
    """
    _check_nodes(tokens, graph)
    final = graph.final_node

    def consume(state: int) -> float:
        try:
            return log_confidence(frame_confidences[state])
        except KeyError:
            raise ContractViolationError(
                f"no confidence for state {state} needed by {graph.keyword!r} "
                f"at frame {frame_index}"
            ) from None

    best: Dict[int, Token] = {}

    def offer(candidate: Token) -> None:
        current = best.get(candidate.node)
        if current is None or _token_rank(candidate) < _token_rank(current):
            best[candidate.node] = candidate

    offer(Token(graph.entry_node, consume(graph.entry_state), frame_index, 1))
    for token in tokens:
        if token.node == final:
            continue
        for arc in graph.outgoing(token.node):
            if arc.dst == final:
                continue
            offer(
                Token(
                    arc.dst,
                    token.log_score + consume(arc.state) + arc.weight,
                    token.start_frame,
                    token.frames_consumed + 1,
                )
            )

    survivors = list(best.values())
    if config.token_floor is not None:
        survivors = [t for t in survivors if t.average_score >= config.token_floor]
    survivors.sort(key=lambda t: (-t.log_score, t.node, t.start_frame))
    if config.beam is not None:
        survivors = survivors[: config.beam]
    survivors.sort(key=lambda t: t.node)

    final_token: Optional[Token] = None
    for token in survivors:
        for arc in graph.outgoing(token.node):
            if arc.dst != final:
                continue
            candidate = Token(
                final, token.log_score + arc.weight, token.start_frame, token.frames_consumed
            )
            if final_token is None or _token_rank(candidate) < _token_rank(final_token):
                final_token = candidate

    if final_token is not None:
        survivors.append(final_token)
    return survivors


def detect(
    tokens: Sequence[Token],
    frame_index: int,
    config: DecodeConfig,
    graph: KeywordGraph,
    refractory_until: int = 0,
) -> Optional[DetectionEvent]:
    """
    Event for the best final-node token that is long enough and whose average
    log score reaches the threshold. Nothing fires before refractory_until.
    """
    if frame_index < refractory_until:
        return None
    qualifying = [
        token
        for token in tokens
        if token.node == graph.final_node
        and token.frames_consumed >= config.min_frames
        and token.average_score >= config.threshold
    ]
    if not qualifying:
        return None
    winner = max(qualifying, key=lambda t: (t.average_score, -t.start_frame))
    return DetectionEvent(graph.keyword, winner.start_frame, frame_index + 1, winner.average_score)


class KeywordTracker:
    """Token set and refractory state of one graph within one stream."""

    def __init__(self, graph: KeywordGraph, config: DecodeConfig):
        self.graph = graph
        self.config = config
        self.tokens: List[Token] = []
        self.refractory_until = 0

    def required_states(self) -> Set[int]:
        return active_states(self.tokens, self.graph)

    def advance(
        self, confidences: Mapping[int, float], frame_index: int
    ) -> Optional[DetectionEvent]:
        self.tokens = step(self.tokens, confidences, self.graph, self.config, frame_index)
        event = detect(self.tokens, frame_index, self.config, self.graph, self.refractory_until)
        if event is not None:
            self.refractory_until = frame_index + 1 + self.config.refractory_frames
            logger.debug(
                f"Detected {event.keyword!r} frames {event.start_frame}-{event.end_frame} "
                f"confidence {event.confidence:.4f}"
            )
        return event


def decode_scores(
    confidence_frames: Iterable[Mapping[int, float]],
    graphs: Sequence[KeywordGraph],
    config: DecodeConfig,
) -> List[DetectionEvent]:
    """Decode precomputed per-frame confidences; no network involved."""
    config.validate()
    trackers = [KeywordTracker(graph, config) for graph in graphs]
    events = []
    for frame_index, confidences in enumerate(confidence_frames):
        for tracker in trackers:
            event = tracker.advance(confidences, frame_index)
            if event is not None:
                events.append(event)
    return events


class BtnnScorer:
    """Sparse tail evaluation followed by calibration."""

    def __init__(self, bundle: ModelBundle, calib: CalibrationSet, lazy: bool = True):
        self.bundle = bundle
        self.calib = calib
        self.lazy = lazy

    def score(
        self, embedding: np.ndarray, active: Set[int], report: MacReport
    ) -> Tuple[Dict[int, float], Dict[int, float]]:
        states = active if self.lazy else self.bundle.state_ids
        raw = tail_forward_sparse(embedding, self.bundle, states, report)
        return raw, calibrate_frame(raw, self.calib)


class SoftmaxScorer:
    """Posteriors of the softmax head used directly as confidences."""

    def __init__(self, bundle: ModelBundle):
        if bundle.softmax_head is None:
            raise ConfigurationError("model has no softmax head; train with --softmax-baseline")
        self.bundle = bundle

    def score(
        self, embedding: np.ndarray, active: Set[int], report: MacReport
    ) -> Tuple[Dict[int, float], Dict[int, float]]:
        posteriors = softmax_forward(embedding, self.bundle.softmax_head)
        report.tail_macs_lazy += self.bundle.softmax_head.macs
        report.tail_macs_full += self.bundle.softmax_head.macs
        scores = {state: float(posteriors[state]) for state in self.bundle.state_ids}
        return scores, dict(scores)


@dataclass
class FrameScores:
    """Raw and calibrated scores of the states active in one frame."""

    frame_index: int
    raw: Dict[int, float]
    confidence: Dict[int, float]


def check_compatible(
    bundle: ModelBundle, calib: Optional[CalibrationSet], graphs: Sequence[KeywordGraph]
) -> None:
    """
    Raises:
        ConfigurationError: model and calibration disagree on the state count
        UnknownStateError: a graph uses a state the model does not have
    """
    if calib is not None and calib.num_states != bundle.num_states:
        raise ConfigurationError(
            f"model has {bundle.num_states} states but calibration has {calib.num_states}"
        )
    for graph in graphs:
        for state in graph.states:
            if not 0 <= state < bundle.num_states:
                raise UnknownStateError(
                    f"graph {graph.keyword!r} uses state {state}; model has "
                    f"{bundle.num_states} states",
                    state,
                )


class DecodeSession:
    """
    One audio stream decoded against any number of keyword graphs.

    Frames may be pushed in chunks of any size; the events are the same as
    decoding the whole stream at once. The bundle, calibration and graphs are
    only read, so sessions can share them.
    """

    def __init__(
        self,
        bundle: ModelBundle,
        calib: Optional[CalibrationSet],
        graphs: Sequence[KeywordGraph],
        config: DecodeConfig,
        scorer: str = "btnn",
        lazy: bool = True,
        record_scores: bool = False,
        record_tokens: bool = False,
    ):
        config.validate()
        if not graphs:
            raise ConfigurationError("at least one keyword graph is required")
        if scorer not in SCORERS:
            raise ConfigurationError(f"unknown scorer {scorer!r}; choose from {SCORERS}")
        if scorer == "btnn" and calib is None:
            raise ConfigurationError("the btnn scorer needs a calibration set")
        check_compatible(bundle, calib, graphs)

        self.bundle = bundle
        self.config = config
        self._scorer = BtnnScorer(bundle, calib, lazy) if scorer == "btnn" else SoftmaxScorer(bundle)
        self._stream = EmbeddingStream(bundle.embedding)
        self._trackers = [KeywordTracker(graph, config) for graph in graphs]
        self.frame_index = 0
        self.events: List[DetectionEvent] = []
        self.report = MacReport()
        self.record_scores = record_scores
        self.frame_scores: List[FrameScores] = []
        self.record_tokens = record_tokens
        self.token_history: List[Tuple[Tuple[Token, ...], ...]] = []

    def push_frame(self, values: np.ndarray) -> List[DetectionEvent]:
        """Decode one frame, returning the events it produced."""
        embedding = self._stream.step(values)
        self.report.embedding_macs += self.bundle.embedding.macs_per_frame
        self.report.frames += 1

        active: Set[int] = set()
        for tracker in self._trackers:
            active |= tracker.required_states()
        raw, confidences = self._scorer.score(embedding, active, self.report)
        if self.record_scores:
            self.frame_scores.append(
                FrameScores(
                    self.frame_index,
                    {s: raw[s] for s in sorted(active)},
                    {s: confidences[s] for s in sorted(active)},
                )
            )

        produced = []
        for tracker in self._trackers:
            event = tracker.advance(confidences, self.frame_index)
            if event is not None:
                produced.append(event)
        if self.record_tokens:
            self.token_history.append(tuple(tuple(t.tokens) for t in self._trackers))

        self.events.extend(produced)
        self.frame_index += 1
        return produced

    def push(
        self, frames: Union[np.ndarray, Iterable[Union[FeatureFrame, np.ndarray]]]
    ) -> List[DetectionEvent]:
        """Decode a chunk: a (frames, dim) array or an iterable of frames."""
        produced = []
        for frame in frames:
            values = frame.values if isinstance(frame, FeatureFrame) else frame
            produced.extend(self.push_frame(values))
        return produced

    def finish(self) -> Tuple[List[DetectionEvent], MacReport]:
        logger.info(f"Decoded {self.frame_index} frames, {len(self.events)} events. {self.report.summary()}")
        return list(self.events), self.report


def decode_stream(
    frames: Union[np.ndarray, Iterable[Union[FeatureFrame, np.ndarray]]],
    bundle: ModelBundle,
    calib: Optional[CalibrationSet],
    graphs: Sequence[KeywordGraph],
    config: DecodeConfig,
    scorer: str = "btnn",
    lazy: bool = True,
) -> Tuple[List[DetectionEvent], MacReport]:
    """Decode a whole stream in one session."""
    session = DecodeSession(bundle, calib, graphs, config, scorer=scorer, lazy=lazy)
    session.push(frames)
    return session.finish()
