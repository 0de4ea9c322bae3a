"""Tests for the binary feature file format."""

import struct

import numpy as np
import pytest

from btnn_spotter.errors import FormatError, ShapeError, TruncatedFileError
from btnn_spotter.models.features import FeatureFrame
from btnn_spotter.storage.feature_files import (
    read_dim,
    read_frames,
    read_matrix,
    write_frames,
    write_matrix,
)


class TestFeatureFiles:
    """Tests for reading and writing BTFE files."""

    def test_frames_survive_a_write_and_read(self, tmp_path, random_frames):
        path = tmp_path / "f.btfe"
        write_frames(path, random_frames)

        assert read_frames(path, 6) == random_frames
        assert read_dim(path) == 6

    def test_empty_file_has_zero_frames(self, tmp_path):
        path = tmp_path / "empty.btfe"
        write_frames(path, [], dim=40)

        assert read_frames(path, 40) == []

    def test_empty_write_needs_dim(self, tmp_path):
        with pytest.raises(ShapeError):
            write_frames(tmp_path / "x.btfe", [])

    def test_mixed_dims_rejected(self, tmp_path):
        frames = [FeatureFrame(np.zeros(4), 0), FeatureFrame(np.zeros(5), 1)]
        with pytest.raises(ShapeError):
            write_frames(tmp_path / "x.btfe", frames)

    def test_dim_mismatch_is_format_error(self, tmp_path):
        path = tmp_path / "f.btfe"
        write_matrix(path, np.zeros((3, 40)))

        with pytest.raises(FormatError):
            read_matrix(path, 39)

    def test_short_last_row_is_format_error(self, tmp_path):
        path = tmp_path / "f.btfe"
        write_matrix(path, np.zeros((2, 40)))
        with open(path, "ab") as f:
            f.write(np.zeros(39, dtype="<f4").tobytes())

        with pytest.raises(FormatError, match="39 values"):
            read_matrix(path, 40)

    def test_missing_rows_is_truncation(self, tmp_path):
        path = tmp_path / "f.btfe"
        with open(path, "wb") as f:
            f.write(struct.pack("<4sIIQ", b"BTFE", 1, 2, 5))
            f.write(np.zeros(4, dtype="<f4").tobytes())

        with pytest.raises(TruncatedFileError):
            read_matrix(path, 2)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "f.btfe"
        path.write_bytes(struct.pack("<4sIIQ", b"NOPE", 1, 2, 0))

        with pytest.raises(FormatError):
            read_matrix(path, 2)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "f.btfe"
        path.write_bytes(struct.pack("<4sIIQ", b"BTFE", 2, 2, 0))

        with pytest.raises(FormatError, match="version"):
            read_matrix(path, 2)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "f.btfe"
        path.write_bytes(b"BTFE")

        with pytest.raises(TruncatedFileError):
            read_dim(path)
