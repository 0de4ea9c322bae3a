"""
Forward inference for the shared embedding network and the per-state tail bank.

Everything runs frame by frame in float32 so that a frame's outputs never depend
on how many other frames were processed alongside it. That keeps sparse and
exhaustive tail evaluation, and chunked and one-shot streaming, bit-identical.
"""

import logging
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set

import numpy as np

from ..errors import ConfigurationError, ShapeError, UnknownStateError
from ..models.features import FeatureConfig, FeatureFrame
from ..models.network import (
    DenseLayer,
    EmbeddingNet,
    Layer,
    MacReport,
    MemoryLayer,
    ModelBundle,
    SoftmaxHead,
    TailNet,
)

logger = logging.getLogger(__name__)

_TINY = np.finfo(np.float32).tiny
_ONE_MINUS = np.nextafter(np.float32(1.0), np.float32(0.0))


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function that keeps the input dtype."""
    z = np.asarray(z)
    out = np.empty_like(z)
    positive = z >= 0
    with np.errstate(over="ignore"):
        out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
        exp_z = np.exp(z[~positive])
        out[~positive] = exp_z / (1.0 + exp_z)
    return out


def activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, z.dtype.type(0))
    if activation == "sigmoid":
        return sigmoid(z)
    return z


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != layer.in_dim:
        raise ShapeError(f"{layer.describe()} got input of dim {x.shape[-1]}")
    return activate(layer.weights @ x + layer.bias, layer.activation)


class EmbeddingStream:
    """
    Session-local embedding state.

    Holds the history each memory layer needs; the network itself is shared
    and never mutated.
    """

    def __init__(self, net: EmbeddingNet):
        self.net = net
        self._history: Dict[int, List[np.ndarray]] = {
            position: [np.zeros(layer.dim, dtype=np.float32) for _ in range(layer.taps - 1)]
            for position, layer in enumerate(net.layers)
            if isinstance(layer, MemoryLayer)
        }

    def step(self, values: np.ndarray) -> np.ndarray:
        """Embed one frame given everything pushed before it."""
        h = np.asarray(values, dtype=np.float32)
        if h.shape != (self.net.input_dim,):
            raise ShapeError(
                f"layer 0 ({self.net.layers[0].describe()}) expects frame dim "
                f"{self.net.input_dim}, got {h.shape[-1] if h.ndim else 0}"
            )
        for position, layer in enumerate(self.net.layers):
            if isinstance(layer, MemoryLayer):
                h = self._memory_step(position, layer, h)
            else:
                h = dense_forward(layer, h)
        return h

    def _memory_step(self, position: int, layer: MemoryLayer, x: np.ndarray) -> np.ndarray:
        history = self._history[position]
        y = layer.coefficients[0] * x
        for tap in range(1, layer.taps):
            y = y + layer.coefficients[tap] * history[-tap]
        if layer.taps > 1:
            history.append(x)
            del history[0]
        return y


def embed_forward(frames: Iterable[FeatureFrame], net: EmbeddingNet) -> List[np.ndarray]:
    """One embedding per frame; frame t only sees frames <= t."""
    stream = EmbeddingStream(net)
    return [stream.step(frame.values) for frame in frames]


def embed_matrix(matrix: np.ndarray, net: EmbeddingNet) -> np.ndarray:
    """embed_forward over a (frames, dim) array, returning (frames, output_dim)."""
    stream = EmbeddingStream(net)
    out = np.zeros((matrix.shape[0], net.output_dim), dtype=np.float32)
    for t in range(matrix.shape[0]):
        out[t] = stream.step(matrix[t])
    return out


def tail_forward(embedding: np.ndarray, tail: TailNet) -> float:
    """Raw score o_s in the open interval (0, 1)."""
    h = np.asarray(embedding, dtype=np.float32)
    if h.shape != (tail.input_dim,):
        raise ShapeError(
            f"tail {tail.state_id} expects embedding dim {tail.input_dim}, got {h.shape}"
        )
    for layer in tail.layers:
        h = dense_forward(layer, h)
    return float(np.clip(h[0], _TINY, _ONE_MINUS))


def tail_forward_sparse(
    embedding: np.ndarray,
    bundle: ModelBundle,
    active: Iterable[int],
    report: Optional[MacReport] = None,
) -> Dict[int, float]:
    """
    Evaluate only the tails in `active`.

    Each score is exactly what tail_forward gives for that tail. When a report
    is passed, one frame of lazy and full tail MACs is added to it.
    """
    active = sorted(set(active))
    for state_id in active:
        if state_id not in bundle.tails:
            raise UnknownStateError(f"no tail for state {state_id}", state_id)
    scores = {state_id: tail_forward(embedding, bundle.tails[state_id]) for state_id in active}
    if report is not None:
        report.tail_macs_lazy += sum(bundle.tails[s].macs for s in active)
        report.tail_macs_full += bundle.full_tail_macs
    return scores


def softmax_forward(embedding: np.ndarray, head: SoftmaxHead) -> np.ndarray:
    """State posteriors from the comparison head, summing to one."""
    logits = dense_forward(head.layer, np.asarray(embedding, dtype=np.float32))
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def count_macs(bundle: ModelBundle, active_history: Sequence[Set[int]]) -> MacReport:
    """
    MACs for len(active_history) frames with the given per-frame active sets.

    Raises:
        UnknownStateError: an active set names a state the bundle has no tail for
    """
    per_tail = bundle.tail_macs
    lazy = 0
    for active in active_history:
        for state in active:
            if state not in per_tail:
                raise UnknownStateError(f"no tail for state {state}", state)
            lazy += per_tail[state]
    frames = len(active_history)
    return MacReport(
        embedding_macs=bundle.embedding.macs_per_frame * frames,
        tail_macs_full=bundle.full_tail_macs * frames,
        tail_macs_lazy=lazy,
        frames=frames,
    )


def _init_dense(
    rng: np.random.Generator, in_dim: int, out_dim: int, activation: str
) -> DenseLayer:
    scale = np.sqrt(2.0 / in_dim) if activation == "relu" else np.sqrt(1.0 / in_dim)
    weights = rng.normal(0.0, scale, size=(out_dim, in_dim))
    return DenseLayer(weights, np.zeros(out_dim), activation)


def build_embedding(
    input_dim: int, spec: Sequence[Mapping[str, Any]], rng: np.random.Generator
) -> EmbeddingNet:
    """
    Build an embedding network from a layer list such as
    [{"type": "dense", "dim": 64, "activation": "relu"}, {"type": "memory", "taps": 4}].
    """
    layers: List[Layer] = []
    dim = input_dim
    for entry in spec:
        kind = entry.get("type", "dense")
        if kind == "dense":
            out_dim = int(entry["dim"])
            layers.append(_init_dense(rng, dim, out_dim, entry.get("activation", "relu")))
            dim = out_dim
        elif kind == "memory":
            taps = int(entry.get("taps", 4))
            decay = 0.5 ** np.arange(taps)[:, None]
            coefficients = decay * (1.0 + 0.1 * rng.standard_normal((taps, dim)))
            layers.append(MemoryLayer(coefficients))
        else:
            raise ConfigurationError(f"Unknown embedding layer type {kind!r}")
    return EmbeddingNet(tuple(layers))


def build_tail(
    state_id: int, input_dim: int, hidden_dims: Sequence[int], rng: np.random.Generator
) -> TailNet:
    """Pyramid tail: input -> hidden_dims (relu) -> 1 (sigmoid)."""
    layers = []
    dim = input_dim
    for hidden in hidden_dims:
        layers.append(_init_dense(rng, dim, int(hidden), "relu"))
        dim = int(hidden)
    layers.append(_init_dense(rng, dim, 1, "sigmoid"))
    return TailNet(state_id, tuple(layers))


def build_bundle(
    num_states: int,
    feature_config: FeatureConfig,
    embedding_spec: Sequence[Mapping[str, Any]],
    tail_dims: Sequence[int],
    seed: int = 0,
) -> ModelBundle:
    """Randomly initialised bundle; deterministic for a given seed."""
    if num_states < 1:
        raise ConfigurationError(f"num_states must be >= 1, got {num_states}")
    rng = np.random.default_rng(seed)
    embedding = build_embedding(feature_config.num_bins, embedding_spec, rng)
    tails = {
        state_id: build_tail(state_id, embedding.output_dim, tail_dims, rng)
        for state_id in range(num_states)
    }
    bundle = ModelBundle(embedding, tails, num_states, feature_config)
    logger.info(
        f"Built bundle: {num_states} states, embedding {embedding.input_dim}->"
        f"{embedding.output_dim} ({embedding.macs_per_frame} MACs/frame), "
        f"{bundle.full_tail_macs // num_states} MACs per tail"
    )
    return bundle


def raw_score_matrix(matrix: np.ndarray, bundle: ModelBundle) -> np.ndarray:
    """(frames, num_states) raw tail outputs, each equal to tail_forward for that frame."""
    embeddings = embed_matrix(matrix, bundle.embedding)
    scores = np.zeros((matrix.shape[0], bundle.num_states), dtype=np.float64)
    for t in range(matrix.shape[0]):
        for tail in bundle.iter_tails():
            scores[t, tail.state_id] = tail_forward(embeddings[t], tail)
    return scores
