"""Binary feature file format ("BTFE").

Layout, little-endian:
    magic  b"BTFE"
    u32    version (1)
    u32    dim
    u64    frame count
    f32    frame rows, contiguous
"""

import logging
import struct
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from ..errors import FormatError, ShapeError, TruncatedFileError
from ..models.features import FeatureFrame

logger = logging.getLogger(__name__)

MAGIC = b"BTFE"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


def write_frames(path: Union[str, Path], frames: Sequence[FeatureFrame], dim: int = None) -> None:
    """Write frames in order; dim is required when frames is empty."""
    if dim is None:
        if not frames:
            raise ShapeError("dim must be given when writing an empty frame sequence")
        dim = frames[0].dim
    for position, frame in enumerate(frames):
        if frame.dim != dim:
            raise ShapeError(f"frame {position} has dim {frame.dim}, expected {dim}")

    body = np.zeros((len(frames), dim), dtype="<f4")
    for position, frame in enumerate(frames):
        body[position] = frame.values

    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, dim, len(frames)))
        f.write(body.tobytes())


def write_matrix(path: Union[str, Path], matrix: np.ndarray) -> None:
    """Write a (frames, dim) array directly."""
    matrix = np.asarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ShapeError(f"expected a 2-D frame matrix, got shape {matrix.shape}")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, matrix.shape[1], matrix.shape[0]))
        f.write(matrix.tobytes())


def read_frames(path: Union[str, Path], expected_dim: int) -> List[FeatureFrame]:
    """
    Read every frame of a feature file.

    Raises:
        FormatError: bad magic, unsupported version or a dimension mismatch
        TruncatedFileError: the body is shorter than the header declares
    """
    matrix = read_matrix(path, expected_dim)
    return [FeatureFrame(row, index) for index, row in enumerate(matrix)]


def read_matrix(path: Union[str, Path], expected_dim: int) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFileError(f"{path}: truncated header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"{path}: not a feature file (magic {magic!r})")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported feature file version {version}")
        if dim != expected_dim:
            raise FormatError(f"{path}: file dim {dim} != expected dim {expected_dim}")
        if dim == 0:
            raise FormatError(f"{path}: dim must be positive")
        body = f.read()

    row_bytes = dim * 4
    complete, remainder = divmod(len(body), row_bytes)
    if remainder:
        raise FormatError(
            f"{path}: frame {complete} has {remainder // 4} values, expected {dim}"
        )
    expected_bytes = count * row_bytes
    if len(body) < expected_bytes:
        raise TruncatedFileError(
            f"{path}: declares {count} frames but holds only {complete}"
        )
    if len(body) > expected_bytes:
        raise FormatError(f"{path}: {len(body) - expected_bytes} trailing bytes after frame {count - 1}")

    matrix = np.frombuffer(body, dtype="<f4", count=count * dim).reshape(count, dim)
    logger.debug(f"Read {count} frames of dim {dim} from {path}")
    return matrix.astype(np.float32)


def read_dim(path: Union[str, Path]) -> int:
    """Frame dimension declared in a feature file's header."""
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
    if len(header) < _HEADER.size:
        raise TruncatedFileError(f"{path}: truncated header")
    magic, _, dim, _ = _HEADER.unpack(header)
    if magic != MAGIC:
        raise FormatError(f"{path}: not a feature file (magic {magic!r})")
    return int(dim)
