"""
Desk-scale training of the tail bank (and optionally the embedding) with the
per-state scaled MSE objective.

Training runs in float64 on copies of the float32 weights; the trained bundle
is cast back to float32. A zero learning rate therefore returns the input
weights bit-exactly.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import ContractViolationError, EmptyClassError, ShapeError, TrainingDivergedError
from ..models.network import (
    DenseLayer,
    EmbeddingNet,
    MemoryLayer,
    ModelBundle,
    SoftmaxHead,
    TailNet,
)
from ..models.training import AlignedSample, TrainConfig
from .nnet import embed_matrix

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]


def state_loss(output: float, label: int, scale: float) -> float:
    """Squared distance to 0 for negatives; squared distance to 1 times scale for positives."""
    if label:
        return (output - 1.0) ** 2 * scale
    return output**2


def _state_loss_vector(outputs: np.ndarray, labels: np.ndarray, scale: float) -> np.ndarray:
    return np.where(labels == 1, (outputs - 1.0) ** 2 * scale, outputs**2)


def _state_loss_grad(outputs: np.ndarray, labels: np.ndarray, scale: float) -> np.ndarray:
    return np.where(labels == 1, 2.0 * (outputs - 1.0) * scale, 2.0 * outputs)


@dataclass
class StateBatch:
    """One epoch's training batch for a state: dataset positions and binary labels."""

    state: int
    indices: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    @property
    def num_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def num_negative(self) -> int:
        return len(self) - self.num_positive

    def pairs(self, dataset: Sequence[AlignedSample]) -> List[Tuple[np.ndarray, int]]:
        """(frame values, label) pairs in batch order."""
        return [(dataset[i].frame.values, int(y)) for i, y in zip(self.indices, self.labels)]


def sample_batch(
    dataset: Sequence[AlignedSample], state: int, ratio: float, rng: np.random.Generator
) -> StateBatch:
    """
    All positives for `state` plus round(ratio x positives) negatives drawn
    without replacement, shuffled together.

    Raises:
        EmptyClassError: the dataset has no frame aligned to `state`
    """
    states = np.fromiter((sample.state for sample in dataset), dtype=np.int64, count=len(dataset))
    return _sample_from_states(states, state, ratio, rng)


def _sample_from_states(
    states: np.ndarray, state: int, ratio: float, rng: np.random.Generator
) -> StateBatch:
    positives = np.flatnonzero(states == state)
    negatives = np.flatnonzero(states != state)
    if positives.size == 0:
        raise EmptyClassError(f"no positive frames for state {state}", state)

    wanted = int(round(ratio * positives.size))
    if wanted > negatives.size:
        logger.warning(
            f"State {state}: wanted {wanted} negatives but only {negatives.size} available"
        )
        wanted = negatives.size
    chosen = rng.choice(negatives, size=wanted, replace=False) if wanted else negatives[:0]

    indices = np.concatenate([positives, chosen])
    labels = np.concatenate([np.ones(positives.size, np.int8), np.zeros(chosen.size, np.int8)])
    order = rng.permutation(indices.size)
    return StateBatch(state, indices[order], labels[order])


class SgdOptimizer:
    """Plain gradient descent."""

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: Params, grads: Params) -> None:
        for name, grad in grads.items():
            params[name] -= self.learning_rate * grad


class AdamOptimizer:
    """Adam with per-parameter moment estimates."""

    def __init__(
        self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: Params = {}
        self._v: Params = {}
        self._t: Dict[str, int] = {}

    def step(self, params: Params, grads: Params) -> None:
        for name, grad in grads.items():
            m = self._m.setdefault(name, np.zeros_like(grad))
            v = self._v.setdefault(name, np.zeros_like(grad))
            t = self._t[name] = self._t.get(name, 0) + 1
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "adam":
        return AdamOptimizer(config.learning_rate)
    return SgdOptimizer(config.learning_rate)


# -- float64 differentiable views of the network ------------------------------------


def embedding_params(net: EmbeddingNet) -> Params:
    params: Params = OrderedDict()
    for position, layer in enumerate(net.layers):
        if isinstance(layer, MemoryLayer):
            params[f"embedding.{position}.coefficients"] = layer.coefficients.astype(np.float64)
        else:
            params[f"embedding.{position}.weights"] = layer.weights.astype(np.float64)
            params[f"embedding.{position}.bias"] = layer.bias.astype(np.float64)
    return params


def tail_params(tail: TailNet) -> Params:
    params: Params = OrderedDict()
    for position, layer in enumerate(tail.layers):
        params[f"tail.{tail.state_id}.{position}.weights"] = layer.weights.astype(np.float64)
        params[f"tail.{tail.state_id}.{position}.bias"] = layer.bias.astype(np.float64)
    return params


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _activation_grad(z: np.ndarray, h: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return (z > 0).astype(np.float64)
    if activation == "sigmoid":
        return h * (1.0 - h)
    return np.ones_like(z)


def _dense_stack_forward(
    layers: Sequence[DenseLayer], params: Params, prefix: str, x: np.ndarray
) -> Tuple[np.ndarray, list]:
    cache = []
    h = x
    for position, layer in enumerate(layers):
        w = params[f"{prefix}.{position}.weights"]
        b = params[f"{prefix}.{position}.bias"]
        z = h @ w.T + b
        out = _activate(z, layer.activation)
        cache.append((h, z, out))
        h = out
    return h, cache


def _dense_stack_backward(
    layers: Sequence[DenseLayer], params: Params, prefix: str, cache: list, grad_out: np.ndarray,
    grads: Params,
) -> np.ndarray:
    grad = grad_out
    for position in reversed(range(len(layers))):
        h_in, z, out = cache[position]
        dz = grad * _activation_grad(z, out, layers[position].activation)
        w_name, b_name = f"{prefix}.{position}.weights", f"{prefix}.{position}.bias"
        grads[w_name] = grads.get(w_name, 0.0) + dz.T @ h_in
        grads[b_name] = grads.get(b_name, 0.0) + dz.sum(axis=0)
        grad = dz @ params[w_name]
    return grad


def _embedding_forward(net: EmbeddingNet, params: Params, x: np.ndarray) -> Tuple[np.ndarray, list]:
    """Whole-sequence float64 forward; x is (frames, input_dim)."""
    cache = []
    h = x
    for position, layer in enumerate(net.layers):
        if isinstance(layer, MemoryLayer):
            c = params[f"embedding.{position}.coefficients"]
            padded = np.vstack([np.zeros((layer.taps - 1, h.shape[1])), h])
            frames = h.shape[0]
            out = np.zeros_like(h)
            for tap in range(layer.taps):
                start = layer.taps - 1 - tap
                out += c[tap] * padded[start : start + frames]
            cache.append(("memory", padded, None, out))
        else:
            w = params[f"embedding.{position}.weights"]
            b = params[f"embedding.{position}.bias"]
            z = h @ w.T + b
            out = _activate(z, layer.activation)
            cache.append(("dense", h, z, out))
        h = out
    return h, cache


def _embedding_backward(
    net: EmbeddingNet, params: Params, cache: list, grad_out: np.ndarray, grads: Params
) -> None:
    grad = grad_out
    for position in reversed(range(len(net.layers))):
        layer = net.layers[position]
        kind, h_in, z, out = cache[position]
        if kind == "memory":
            c_name = f"embedding.{position}.coefficients"
            c = params[c_name]
            frames = grad.shape[0]
            padded_grad = np.zeros_like(h_in)
            dc = np.zeros_like(c)
            for tap in range(layer.taps):
                start = layer.taps - 1 - tap
                dc[tap] = (h_in[start : start + frames] * grad).sum(axis=0)
                padded_grad[start : start + frames] += c[tap] * grad
            grads[c_name] = grads.get(c_name, 0.0) + dc
            grad = padded_grad[layer.taps - 1 :]
        else:
            dz = grad * _activation_grad(z, out, layer.activation)
            w_name, b_name = f"embedding.{position}.weights", f"embedding.{position}.bias"
            grads[w_name] = grads.get(w_name, 0.0) + dz.T @ h_in
            grads[b_name] = grads.get(b_name, 0.0) + dz.sum(axis=0)
            grad = dz @ params[w_name]


def _relu_pattern(bundle: ModelBundle, state: int, emb_cache: list, tail_cache: list) -> bytes:
    """Sign pattern of every relu pre-activation; changes mark a kink."""
    parts = []
    for layer, (_, _, z, _) in zip(bundle.embedding.layers, emb_cache):
        if isinstance(layer, DenseLayer) and layer.activation == "relu":
            parts.append(np.packbits(z > 0).tobytes())
    for layer, (_, z, _) in zip(bundle.tails[state].layers, tail_cache):
        if layer.activation == "relu":
            parts.append(np.packbits(z > 0).tobytes())
    return b"".join(parts)


def _rebuild_embedding(net: EmbeddingNet, params: Params) -> EmbeddingNet:
    layers = []
    for position, layer in enumerate(net.layers):
        if isinstance(layer, MemoryLayer):
            layers.append(MemoryLayer(params[f"embedding.{position}.coefficients"]))
        else:
            layers.append(
                DenseLayer(
                    params[f"embedding.{position}.weights"],
                    params[f"embedding.{position}.bias"],
                    layer.activation,
                )
            )
    return EmbeddingNet(tuple(layers))


def _rebuild_tail(tail: TailNet, params: Params) -> TailNet:
    prefix = f"tail.{tail.state_id}"
    return TailNet(
        tail.state_id,
        tuple(
            DenseLayer(
                params[f"{prefix}.{position}.weights"],
                params[f"{prefix}.{position}.bias"],
                layer.activation,
            )
            for position, layer in enumerate(tail.layers)
        ),
    )


# -- dataset helpers ----------------------------------------------------------------


def group_utterances(dataset: Sequence[AlignedSample]) -> "OrderedDict[str, np.ndarray]":
    """Dataset positions per utterance, in first-seen order, sorted by frame index."""
    groups: "OrderedDict[str, List[int]]" = OrderedDict()
    for position, sample in enumerate(dataset):
        groups.setdefault(sample.utterance_id, []).append(position)
    return OrderedDict(
        (utt, np.array(sorted(positions, key=lambda p: dataset[p].frame.index), dtype=np.int64))
        for utt, positions in groups.items()
    )


def _frame_matrix(dataset: Sequence[AlignedSample], positions: np.ndarray) -> np.ndarray:
    return np.stack([dataset[p].frame.values for p in positions]).astype(np.float32)


def embed_dataset(dataset: Sequence[AlignedSample], net: EmbeddingNet) -> np.ndarray:
    """Embedding of every sample, computed per utterance so memory layers see context."""
    out = np.zeros((len(dataset), net.output_dim), dtype=np.float32)
    for positions in group_utterances(dataset).values():
        out[positions] = embed_matrix(_frame_matrix(dataset, positions), net)
    return out


def _check_dataset(dataset: Sequence[AlignedSample], bundle: ModelBundle) -> np.ndarray:
    if not dataset:
        raise ContractViolationError("training dataset is empty")
    dim = bundle.embedding.input_dim
    for position, sample in enumerate(dataset):
        if sample.frame.dim != dim:
            raise ShapeError(f"sample {position} has frame dim {sample.frame.dim}, model expects {dim}")
        if sample.num_states != bundle.num_states:
            raise ShapeError(
                f"sample {position} labels {sample.num_states} states, model has {bundle.num_states}"
            )
    states = np.fromiter((s.state for s in dataset), dtype=np.int64, count=len(dataset))
    missing = sorted(set(range(bundle.num_states)) - set(states.tolist()))
    if missing:
        raise EmptyClassError(f"no positive frames for state {missing[0]}", missing[0])
    return states


# -- training -----------------------------------------------------------------------


@dataclass
class TrainResult:
    bundle: ModelBundle
    loss_trace: Dict[int, List[float]] = field(default_factory=dict)


def train(
    dataset: Sequence[AlignedSample], bundle: ModelBundle, config: TrainConfig
) -> TrainResult:
    """
    Train every tail independently on a frozen embedding, or jointly with the
    embedding when config.joint is set. Deterministic for a given rng_seed.

    Raises:
        EmptyClassError: some state has no aligned frame
        TrainingDivergedError: a loss became NaN or infinite
    """
    config.validate(bundle.num_states)
    states = _check_dataset(dataset, bundle)
    if config.joint:
        return _train_joint(dataset, states, bundle, config)

    embeddings = embed_dataset(dataset, bundle.embedding).astype(np.float64)
    trace: Dict[int, List[float]] = {}
    tails: Dict[int, TailNet] = {}
    for state in bundle.state_ids:
        tails[state], trace[state] = _train_tail(embeddings, states, bundle.tails[state], config)
        logger.info(f"State {state}: final epoch loss {trace[state][-1]:.5f}")
    return TrainResult(bundle.with_tails(tails), trace)


def _train_tail(
    embeddings: np.ndarray, states: np.ndarray, tail: TailNet, config: TrainConfig
) -> Tuple[TailNet, List[float]]:
    state = tail.state_id
    rng = np.random.default_rng([config.rng_seed, state])
    params = tail_params(tail)
    optimizer = make_optimizer(config)
    scale = config.scale_for(state)
    prefix = f"tail.{state}"
    trace = []

    for epoch in range(config.epochs):
        batch = _sample_from_states(states, state, config.ratio_for(state), rng)
        total = 0.0
        for start in range(0, len(batch), config.batch_size):
            idx = batch.indices[start : start + config.batch_size]
            labels = batch.labels[start : start + config.batch_size]
            out, cache = _dense_stack_forward(tail.layers, params, prefix, embeddings[idx])
            outputs = out[:, 0]
            total += float(_state_loss_vector(outputs, labels, scale).sum())
            grad_out = (_state_loss_grad(outputs, labels, scale) / len(idx))[:, None]
            grads: Params = {}
            _dense_stack_backward(tail.layers, params, prefix, cache, grad_out, grads)
            optimizer.step(params, grads)
        epoch_loss = total / len(batch)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch, state)
        trace.append(epoch_loss)
        logger.debug(f"State {state} epoch {epoch}: loss {epoch_loss:.6f}")

    return _rebuild_tail(tail, params), trace


def _train_joint(
    dataset: Sequence[AlignedSample], states: np.ndarray, bundle: ModelBundle, config: TrainConfig
) -> TrainResult:
    """Embedding and tails updated together, one optimizer step per utterance."""
    rng = np.random.default_rng(config.rng_seed)
    params = embedding_params(bundle.embedding)
    for tail in bundle.iter_tails():
        params.update(tail_params(tail))
    optimizer = make_optimizer(config)
    groups = group_utterances(dataset)
    utterances = list(groups)
    trace: Dict[int, List[float]] = {state: [] for state in bundle.state_ids}

    for epoch in range(config.epochs):
        batches = {
            state: _sample_from_states(states, state, config.ratio_for(state), rng)
            for state in bundle.state_ids
        }
        # dataset position -> list of (state, label) picked this epoch
        picks: Dict[int, List[Tuple[int, int]]] = {}
        for state, batch in batches.items():
            for position, label in zip(batch.indices.tolist(), batch.labels.tolist()):
                picks.setdefault(position, []).append((state, label))
        totals = {state: 0.0 for state in bundle.state_ids}

        for utt_index in rng.permutation(len(utterances)):
            positions = groups[utterances[utt_index]]
            rows = [row for row, p in enumerate(positions.tolist()) if p in picks]
            if not rows:
                continue
            x = _frame_matrix(dataset, positions).astype(np.float64)
            emb, emb_cache = _embedding_forward(bundle.embedding, params, x)
            grad_emb = np.zeros_like(emb)
            grads: Params = {}

            by_state: Dict[int, Tuple[List[int], List[int]]] = {}
            for row in rows:
                for state, label in picks[int(positions[row])]:
                    rows_for, labels_for = by_state.setdefault(state, ([], []))
                    rows_for.append(row)
                    labels_for.append(label)

            for state, (state_rows, state_labels) in sorted(by_state.items()):
                tail = bundle.tails[state]
                prefix = f"tail.{state}"
                labels = np.array(state_labels, dtype=np.int8)
                scale = config.scale_for(state)
                out, cache = _dense_stack_forward(tail.layers, params, prefix, emb[state_rows])
                outputs = out[:, 0]
                totals[state] += float(_state_loss_vector(outputs, labels, scale).sum())
                grad_out = (_state_loss_grad(outputs, labels, scale) / len(batches[state]))[:, None]
                grad_in = _dense_stack_backward(tail.layers, params, prefix, cache, grad_out, grads)
                np.add.at(grad_emb, state_rows, grad_in)

            _embedding_backward(bundle.embedding, params, emb_cache, grad_emb, grads)
            optimizer.step(params, grads)

        for state in bundle.state_ids:
            epoch_loss = totals[state] / len(batches[state])
            if not np.isfinite(epoch_loss):
                raise TrainingDivergedError(epoch, state)
            trace[state].append(epoch_loss)
        logger.info(
            f"Joint epoch {epoch}: mean loss "
            f"{np.mean([trace[s][-1] for s in bundle.state_ids]):.5f}"
        )

    embedding = _rebuild_embedding(bundle.embedding, params)
    tails = {state: _rebuild_tail(bundle.tails[state], params) for state in bundle.state_ids}
    trained = ModelBundle(
        embedding, tails, bundle.num_states, bundle.feature_config, bundle.softmax_head
    )
    return TrainResult(trained, trace)


# -- gradient check -----------------------------------------------------------------


def _sample_loss(
    bundle: ModelBundle, params: Params, x: np.ndarray, state: int, label: int, scale: float
) -> Tuple[float, np.ndarray, list, list]:
    emb, emb_cache = _embedding_forward(bundle.embedding, params, x)
    tail = bundle.tails[state]
    out, tail_cache = _dense_stack_forward(tail.layers, params, f"tail.{state}", emb[-1:])
    loss = float(_state_loss_vector(out[:, 0], np.array([label]), scale)[0])
    return loss, out, emb_cache, tail_cache


def loss_gradients(
    bundle: ModelBundle, sample: AlignedSample, state: int, scale: float = 4.0
) -> Tuple[float, Params]:
    """
    Analytic gradient of state_loss for one sample with respect to every
    embedding parameter and every parameter of the state's tail.
    """
    params = embedding_params(bundle.embedding)
    params.update(tail_params(bundle.tails[state]))
    x = sample.frame.values.astype(np.float64)[None, :]
    label = sample.label_for(state)
    loss, out, emb_cache, tail_cache = _sample_loss(bundle, params, x, state, label, scale)

    grads: Params = {}
    grad_out = _state_loss_grad(out[:, 0], np.array([label]), scale)[:, None]
    tail = bundle.tails[state]
    grad_emb = _dense_stack_backward(tail.layers, params, f"tail.{state}", tail_cache, grad_out, grads)
    _embedding_backward(bundle.embedding, params, emb_cache, grad_emb, grads)
    return loss, {name: np.asarray(grads[name], dtype=np.float64) for name in params}


def gradient_check(
    bundle: ModelBundle,
    sample: AlignedSample,
    state: int,
    epsilon: float = 1e-4,
    scale: float = 4.0,
) -> float:
    """
    Largest relative error between analytic gradients and central finite
    differences over all parameters the sample touches. Entries whose
    perturbation flips a relu are skipped since the loss is not differentiable there.
    """
    if not 1e-6 <= epsilon <= 1e-3:
        raise ContractViolationError(f"epsilon must lie in [1e-6, 1e-3], got {epsilon}")

    _, analytic = loss_gradients(bundle, sample, state, scale)
    params = embedding_params(bundle.embedding)
    params.update(tail_params(bundle.tails[state]))
    x = sample.frame.values.astype(np.float64)[None, :]
    label = sample.label_for(state)
    _, _, base_emb, base_tail = _sample_loss(bundle, params, x, state, label, scale)
    base_pattern = _relu_pattern(bundle, state, base_emb, base_tail)

    worst = 0.0
    skipped = 0
    for name, array in params.items():
        flat = array.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            plus, _, emb_p, tail_p = _sample_loss(bundle, params, x, state, label, scale)
            pattern_plus = _relu_pattern(bundle, state, emb_p, tail_p)
            flat[i] = original - epsilon
            minus, _, emb_m, tail_m = _sample_loss(bundle, params, x, state, label, scale)
            pattern_minus = _relu_pattern(bundle, state, emb_m, tail_m)
            flat[i] = original
            if pattern_plus != base_pattern or pattern_minus != base_pattern:
                skipped += 1
                continue
            numeric = (plus - minus) / (2.0 * epsilon)
            denominator = max(abs(numeric), abs(grad_flat[i]), 1e-6)
            worst = max(worst, abs(numeric - grad_flat[i]) / denominator)

    if skipped:
        logger.debug(f"Gradient check skipped {skipped} entries at relu kinks")
    return worst


# -- softmax comparison head --------------------------------------------------------


def train_softmax_head(
    dataset: Sequence[AlignedSample],
    bundle: ModelBundle,
    config: TrainConfig,
) -> Tuple[ModelBundle, List[float]]:
    """Cross-entropy training of a single softmax layer on the frozen embedding."""
    config.validate(bundle.num_states)
    states = _check_dataset(dataset, bundle)
    embeddings = embed_dataset(dataset, bundle.embedding).astype(np.float64)
    rng = np.random.default_rng([config.rng_seed, bundle.num_states])

    if bundle.softmax_head is not None:
        layer = bundle.softmax_head.layer
        params: Params = {"head.0.weights": layer.weights.astype(np.float64),
                          "head.0.bias": layer.bias.astype(np.float64)}
    else:
        scale = np.sqrt(1.0 / bundle.embedding.output_dim)
        params = {
            "head.0.weights": rng.normal(0.0, scale, (bundle.num_states, bundle.embedding.output_dim)),
            "head.0.bias": np.zeros(bundle.num_states),
        }
    optimizer = make_optimizer(config)
    trace = []

    for epoch in range(config.epochs):
        order = rng.permutation(len(dataset))
        total = 0.0
        for start in range(0, order.size, config.batch_size):
            idx = order[start : start + config.batch_size]
            logits = embeddings[idx] @ params["head.0.weights"].T + params["head.0.bias"]
            logits -= logits.max(axis=1, keepdims=True)
            log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
            target = states[idx]
            total -= float(log_probs[np.arange(idx.size), target].sum())
            dz = np.exp(log_probs)
            dz[np.arange(idx.size), target] -= 1.0
            dz /= idx.size
            optimizer.step(
                params,
                {"head.0.weights": dz.T @ embeddings[idx], "head.0.bias": dz.sum(axis=0)},
            )
        epoch_loss = total / len(dataset)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch, None)
        trace.append(epoch_loss)
        logger.debug(f"Softmax head epoch {epoch}: cross-entropy {epoch_loss:.5f}")

    head = SoftmaxHead(DenseLayer(params["head.0.weights"], params["head.0.bias"], "identity"))
    logger.info(f"Softmax head trained, final cross-entropy {trace[-1]:.5f}")
    trained = ModelBundle(
        bundle.embedding, bundle.tails, bundle.num_states, bundle.feature_config, head
    )
    return trained, trace
