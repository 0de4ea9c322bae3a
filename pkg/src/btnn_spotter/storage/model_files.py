"""
Model file format.

    BTNN-MODEL
    <YAML header: version, num_states, feature_config, layer specs, blob_bytes>
    %%WEIGHTS
    <little-endian f32 blobs in declared layer order>

Dense layers store weights (row-major, out x in) then bias; memory layers store
their (taps x dim) coefficients. Order: embedding layers, tails by state id,
then the optional softmax head.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import yaml

from ..errors import BtnnError, FormatError, TruncatedFileError
from ..models.features import FeatureConfig
from ..models.network import (
    DenseLayer,
    EmbeddingNet,
    Layer,
    MemoryLayer,
    ModelBundle,
    SoftmaxHead,
    TailNet,
)

logger = logging.getLogger(__name__)

MAGIC_LINE = b"BTNN-MODEL\n"
WEIGHTS_LINE = b"%%WEIGHTS\n"
VERSION = 1


def _layer_spec(layer: Layer) -> Dict[str, Any]:
    if isinstance(layer, MemoryLayer):
        return {"type": "memory", "dim": layer.dim, "taps": layer.taps}
    return {
        "type": "dense",
        "in_dim": layer.in_dim,
        "out_dim": layer.out_dim,
        "activation": layer.activation,
    }


def _layer_arrays(layer: Layer) -> List[np.ndarray]:
    if isinstance(layer, MemoryLayer):
        return [layer.coefficients]
    return [layer.weights, layer.bias]


def save_model(bundle: ModelBundle, path: Union[str, Path]) -> None:
    """Write a bundle; load_model(path) reproduces it bit-exactly."""
    layer_groups: List[List[Layer]] = [list(bundle.embedding.layers)]
    layer_groups += [list(tail.layers) for tail in bundle.iter_tails()]
    if bundle.softmax_head is not None:
        layer_groups.append([bundle.softmax_head.layer])

    blobs = [
        np.ascontiguousarray(array, dtype="<f4").tobytes()
        for group in layer_groups
        for layer in group
        for array in _layer_arrays(layer)
    ]
    header = {
        "version": VERSION,
        "num_states": bundle.num_states,
        "feature_config": bundle.feature_config.to_dict(),
        "embedding": [_layer_spec(layer) for layer in bundle.embedding.layers],
        "tails": {
            tail.state_id: [_layer_spec(layer) for layer in tail.layers]
            for tail in bundle.iter_tails()
        },
        "softmax_head": (
            _layer_spec(bundle.softmax_head.layer) if bundle.softmax_head is not None else None
        ),
        "blob_bytes": sum(len(blob) for blob in blobs),
    }

    with open(path, "wb") as f:
        f.write(MAGIC_LINE)
        f.write(yaml.safe_dump(header, sort_keys=False).encode("utf-8"))
        f.write(WEIGHTS_LINE)
        for blob in blobs:
            f.write(blob)
    logger.info(f"Saved model with {bundle.num_states} states to {path}")


class _BlobReader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, shape: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape))
        end = self.offset + count * 4
        if end > len(self.data):
            raise TruncatedFileError(f"{self.path}: weight blob ends early")
        array = np.frombuffer(self.data[self.offset : end], dtype="<f4").reshape(shape)
        self.offset = end
        return array.astype(np.float32)


def _read_layer(spec: Dict[str, Any], reader: _BlobReader, where: str) -> Layer:
    kind = spec.get("type")
    if kind == "memory":
        return MemoryLayer(reader.take((int(spec["taps"]), int(spec["dim"]))))
    if kind == "dense":
        out_dim, in_dim = int(spec["out_dim"]), int(spec["in_dim"])
        weights = reader.take((out_dim, in_dim))
        bias = reader.take((out_dim,))
        return DenseLayer(weights, bias, spec.get("activation", "relu"))
    raise FormatError(f"{reader.path}: unknown layer type {kind!r} in {where}")


def _check_chain(specs: List[Dict[str, Any]], input_dim: int, where: str, path: str) -> int:
    dim = input_dim
    for position, spec in enumerate(specs):
        if spec.get("type") == "memory":
            layer_in = layer_out = int(spec["dim"])
        else:
            layer_in, layer_out = int(spec["in_dim"]), int(spec["out_dim"])
        if layer_in != dim:
            raise FormatError(
                f"{path}: {where} layer {position} expects input dim {layer_in}, "
                f"previous produces {dim}"
            )
        dim = layer_out
    return dim


def _read_header(data: bytes, split: int, path: str) -> Dict[str, Any]:
    try:
        header = yaml.safe_load(data[len(MAGIC_LINE) : split].decode("utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as e:
        raise FormatError(f"{path}: unreadable header: {e}") from e
    if not isinstance(header, dict):
        raise FormatError(f"{path}: model header must be a mapping")

    version = header.get("version")
    if version != VERSION:
        raise FormatError(f"{path}: model version {version} is not supported (need {VERSION})")
    return header


def _read_structure(header: Dict[str, Any], path: str):
    """num_states, feature config and tail specs, with every layer chain checked."""
    num_states = int(header["num_states"])
    feature_config = FeatureConfig.from_dict(header["feature_config"])
    tail_specs = {int(k): v for k, v in (header.get("tails") or {}).items()}
    for state_id in range(num_states):
        if state_id not in tail_specs:
            raise FormatError(f"{path}: missing tail for state {state_id} of {num_states}")

    embedding_dim = _check_chain(header["embedding"], feature_config.num_bins, "embedding", path)
    for state_id in range(num_states):
        out_dim = _check_chain(tail_specs[state_id], embedding_dim, f"tail {state_id}", path)
        if out_dim != 1:
            raise FormatError(f"{path}: tail {state_id} has output dim {out_dim}, expected 1")
    return num_states, feature_config, tail_specs


def load_model(path: Union[str, Path]) -> ModelBundle:
    """
    Load a bundle written by save_model.

    Raises:
        FormatError: malformed header, version mismatch, inconsistent dims or a missing tail
        TruncatedFileError: weight data shorter than the header declares
    """
    path = str(path)
    with open(path, "rb") as f:
        data = f.read()

    if not data.startswith(MAGIC_LINE):
        raise FormatError(f"{path}: not a model file")
    split = data.find(WEIGHTS_LINE, len(MAGIC_LINE))
    if split < 0:
        raise FormatError(f"{path}: missing weights section")
    header = _read_header(data, split, path)

    try:
        num_states, feature_config, tail_specs = _read_structure(header, path)
    except FormatError:
        raise
    except KeyError as e:
        raise FormatError(f"{path}: model header lacks {e}") from e
    except (TypeError, ValueError, AttributeError) as e:
        raise FormatError(f"{path}: malformed model header: {e}") from e

    blob = data[split + len(WEIGHTS_LINE) :]
    declared = header.get("blob_bytes", len(blob))
    if not isinstance(declared, int):
        raise FormatError(f"{path}: blob_bytes must be an integer, got {declared!r}")
    if len(blob) != declared:
        if len(blob) < declared:
            raise TruncatedFileError(f"{path}: expected {declared} weight bytes, found {len(blob)}")
        raise FormatError(f"{path}: {len(blob) - declared} trailing weight bytes")

    reader = _BlobReader(blob, path)
    try:
        embedding = EmbeddingNet(
            tuple(_read_layer(spec, reader, "embedding") for spec in header["embedding"])
        )
        tails = {
            state_id: TailNet(
                state_id,
                tuple(_read_layer(spec, reader, f"tail {state_id}") for spec in tail_specs[state_id]),
            )
            for state_id in range(num_states)
        }
        head = None
        if header.get("softmax_head"):
            head = SoftmaxHead(_read_layer(header["softmax_head"], reader, "softmax head"))
        bundle = ModelBundle(embedding, tails, num_states, feature_config, head)
    except TruncatedFileError:
        raise
    except BtnnError as e:
        raise FormatError(f"{path}: {e}") from e
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise FormatError(f"{path}: malformed layer spec: {e}") from e

    logger.info(f"Loaded model with {num_states} states from {path}")
    return bundle
