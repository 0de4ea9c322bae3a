"""
Network data models: dense and memory layers, the shared embedding network,
per-state tail classifiers and the loadable model bundle.

All weights are float32. Layers are immutable once a bundle is built so any
number of decode sessions can share one bundle.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, ShapeError
from .features import FeatureConfig

ACTIVATIONS = ("relu", "sigmoid", "identity")


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float32, copy=True)
    if array.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ConfigurationError(f"{name} contains non-finite entries")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DenseLayer:
    """Affine projection followed by an elementwise activation."""

    weights: np.ndarray  # (out_dim, in_dim), row-major
    bias: np.ndarray  # (out_dim,)
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen_array(self.weights, 2, "weights"))
        object.__setattr__(self, "bias", _frozen_array(self.bias, 1, "bias"))
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != weight rows {self.weights.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"Unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weights.shape[0])

    @property
    def macs(self) -> int:
        return self.out_dim * self.in_dim

    def same_as(self, other: "DenseLayer") -> bool:
        return (
            isinstance(other, DenseLayer)
            and self.activation == other.activation
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.bias, other.bias)
        )

    def describe(self) -> str:
        return f"dense {self.in_dim}->{self.out_dim} {self.activation}"


@dataclass(frozen=True, eq=False)
class MemoryLayer:
    """
    Causal elementwise memory block.

    y_t = sum_i coefficients[i] * x_{t-i} for i in [0, taps), with frames before
    the start of the stream treated as zero.
    """

    coefficients: np.ndarray  # (taps, dim)

    def __post_init__(self):
        object.__setattr__(
            self, "coefficients", _frozen_array(self.coefficients, 2, "coefficients")
        )
        if self.coefficients.shape[0] < 1:
            raise ShapeError("memory layer needs at least one tap")

    @property
    def taps(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def dim(self) -> int:
        return int(self.coefficients.shape[1])

    in_dim = dim
    out_dim = dim

    @property
    def macs(self) -> int:
        return self.taps * self.dim

    def same_as(self, other: "MemoryLayer") -> bool:
        return isinstance(other, MemoryLayer) and np.array_equal(
            self.coefficients, other.coefficients
        )

    def describe(self) -> str:
        return f"memory {self.dim} taps={self.taps}"


Layer = Union[DenseLayer, MemoryLayer]


@dataclass(frozen=True, eq=False)
class EmbeddingNet:
    """Shared feature-embedding network."""

    layers: Tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("embedding network needs at least one layer")
        for position in range(1, len(layers)):
            previous, current = layers[position - 1], layers[position]
            if previous.out_dim != current.in_dim:
                raise ShapeError(
                    f"embedding layer {position} ({current.describe()}) expects input "
                    f"dim {current.in_dim}, previous layer produces {previous.out_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def macs_per_frame(self) -> int:
        return sum(layer.macs for layer in self.layers)

    def same_as(self, other: "EmbeddingNet") -> bool:
        return len(self.layers) == len(other.layers) and all(
            type(a) is type(b) and a.same_as(b) for a, b in zip(self.layers, other.layers)
        )


@dataclass(frozen=True, eq=False)
class TailNet:
    """Binary classifier for a single acoustic state."""

    state_id: int
    layers: Tuple[DenseLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError(f"tail {self.state_id} has no layers")
        for position in range(1, len(layers)):
            if layers[position - 1].out_dim != layers[position].in_dim:
                raise ShapeError(
                    f"tail {self.state_id} layer {position} expects input dim "
                    f"{layers[position].in_dim}, previous layer produces "
                    f"{layers[position - 1].out_dim}"
                )
        last = layers[-1]
        if last.out_dim != 1 or last.activation != "sigmoid":
            raise ShapeError(
                f"tail {self.state_id} must end in a single-output sigmoid layer, "
                f"got {last.describe()}"
            )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def macs(self) -> int:
        return sum(layer.macs for layer in self.layers)

    def same_as(self, other: "TailNet") -> bool:
        return (
            self.state_id == other.state_id
            and len(self.layers) == len(other.layers)
            and all(a.same_as(b) for a, b in zip(self.layers, other.layers))
        )


@dataclass(frozen=True, eq=False)
class SoftmaxHead:
    """Single softmax layer over all states; the monolithic comparison classifier."""

    layer: DenseLayer

    def __post_init__(self):
        if self.layer.activation != "identity":
            raise ConfigurationError("softmax head layer must use identity activation")

    @property
    def num_states(self) -> int:
        return self.layer.out_dim

    @property
    def macs(self) -> int:
        return self.layer.macs


@dataclass(frozen=True, eq=False)
class ModelBundle:
    """Embedding network plus one tail per state; immutable after construction."""

    embedding: EmbeddingNet
    tails: Dict[int, TailNet]
    num_states: int
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    softmax_head: Optional[SoftmaxHead] = None

    def __post_init__(self):
        tails = dict(sorted(self.tails.items()))
        missing = [s for s in range(self.num_states) if s not in tails]
        if missing:
            raise ConfigurationError(f"missing tail for state {missing[0]}")
        extra = [s for s in tails if not 0 <= s < self.num_states]
        if extra:
            raise ConfigurationError(f"tail for unknown state {extra[0]}")
        for state_id, tail in tails.items():
            if tail.state_id != state_id:
                raise ConfigurationError(f"tail keyed {state_id} has state_id {tail.state_id}")
            if tail.input_dim != self.embedding.output_dim:
                raise ShapeError(
                    f"tail {state_id} input dim {tail.input_dim} != embedding output dim "
                    f"{self.embedding.output_dim}"
                )
        if self.embedding.input_dim != self.feature_config.num_bins:
            raise ShapeError(
                f"embedding input dim {self.embedding.input_dim} != feature num_bins "
                f"{self.feature_config.num_bins}"
            )
        if self.softmax_head is not None:
            head = self.softmax_head
            if head.num_states != self.num_states or head.layer.in_dim != self.embedding.output_dim:
                raise ShapeError("softmax head does not match bundle dimensions")
        object.__setattr__(self, "tails", tails)

    @property
    def state_ids(self) -> List[int]:
        return list(range(self.num_states))

    def iter_tails(self) -> Iterator[TailNet]:
        return iter(self.tails.values())

    @property
    def tail_macs(self) -> Dict[int, int]:
        return {state_id: tail.macs for state_id, tail in self.tails.items()}

    @property
    def full_tail_macs(self) -> int:
        return sum(self.tail_macs.values())

    def same_as(self, other: "ModelBundle") -> bool:
        """Bit-exact comparison of structure and weights."""
        if self.num_states != other.num_states or self.feature_config != other.feature_config:
            return False
        if not self.embedding.same_as(other.embedding):
            return False
        if not all(self.tails[s].same_as(other.tails[s]) for s in self.state_ids):
            return False
        if (self.softmax_head is None) != (other.softmax_head is None):
            return False
        if self.softmax_head is not None:
            return self.softmax_head.layer.same_as(other.softmax_head.layer)
        return True

    def with_tails(self, tails: Dict[int, TailNet]) -> "ModelBundle":
        return ModelBundle(
            self.embedding, {**self.tails, **tails}, self.num_states, self.feature_config,
            self.softmax_head,
        )


@dataclass
class MacReport:
    """Multiply-accumulate accounting for a decode run."""

    embedding_macs: int = 0
    tail_macs_full: int = 0
    tail_macs_lazy: int = 0
    frames: int = 0

    @property
    def lazy_ratio(self) -> float:
        if self.tail_macs_full == 0:
            return 0.0
        return self.tail_macs_lazy / self.tail_macs_full

    def merge(self, other: "MacReport") -> "MacReport":
        return MacReport(
            self.embedding_macs + other.embedding_macs,
            self.tail_macs_full + other.tail_macs_full,
            self.tail_macs_lazy + other.tail_macs_lazy,
            self.frames + other.frames,
        )

    def summary(self) -> str:
        return (
            f"MAC frames={self.frames} embedding={self.embedding_macs} "
            f"tail_full={self.tail_macs_full} tail_lazy={self.tail_macs_lazy} "
            f"ratio={self.lazy_ratio:.4f}"
        )
