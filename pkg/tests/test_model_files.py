"""Tests for the model file format."""

import numpy as np
import pytest
import yaml

from btnn_spotter.errors import FormatError, TruncatedFileError
from btnn_spotter.models.network import DenseLayer, SoftmaxHead
from btnn_spotter.storage.model_files import MAGIC_LINE, WEIGHTS_LINE, load_model, save_model


def rewrite_header(path, edit):
    data = path.read_bytes()
    split = data.find(WEIGHTS_LINE)
    header = yaml.safe_load(data[len(MAGIC_LINE) : split].decode("utf-8"))
    edit(header)
    path.write_bytes(MAGIC_LINE + yaml.safe_dump(header).encode("utf-8") + data[split:])


class TestModelFiles:
    """Tests for save_model / load_model."""

    def test_loaded_bundle_is_bit_exact(self, tmp_path, small_bundle):
        path = tmp_path / "m.btnn"
        save_model(small_bundle, path)

        assert load_model(path).same_as(small_bundle)

    def test_softmax_head_is_kept(self, tmp_path, small_bundle, rng):
        head = SoftmaxHead(DenseLayer(rng.normal(size=(4, 8)), np.zeros(4), "identity"))
        bundle = type(small_bundle)(
            small_bundle.embedding, small_bundle.tails, 4, small_bundle.feature_config, head
        )
        path = tmp_path / "m.btnn"
        save_model(bundle, path)

        loaded = load_model(path)

        assert loaded.softmax_head is not None
        assert loaded.same_as(bundle)

    def test_missing_tail(self, tmp_path, small_bundle):
        path = tmp_path / "m.btnn"
        save_model(small_bundle, path)
        rewrite_header(path, lambda header: header["tails"].pop(2))

        with pytest.raises(FormatError, match="missing tail for state 2"):
            load_model(path)

    def test_unsupported_version(self, tmp_path, small_bundle):
        path = tmp_path / "m.btnn"
        save_model(small_bundle, path)
        rewrite_header(path, lambda header: header.update(version=99))

        with pytest.raises(FormatError, match="version"):
            load_model(path)

    def test_inconsistent_dims(self, tmp_path, small_bundle):
        path = tmp_path / "m.btnn"
        save_model(small_bundle, path)
        rewrite_header(path, lambda header: header["embedding"][0].update(in_dim=7))

        with pytest.raises(FormatError, match="expects input dim"):
            load_model(path)

    def test_truncated_weights(self, tmp_path, small_bundle):
        path = tmp_path / "m.btnn"
        save_model(small_bundle, path)
        path.write_bytes(path.read_bytes()[:-8])

        with pytest.raises(TruncatedFileError):
            load_model(path)

    @pytest.mark.parametrize(
        "header",
        [b"- just\n- a list\n", b"version: 1\nfeature_config: {}\n", b"version: 1\nnum_states: x\n"],
    )
    def test_malformed_header(self, tmp_path, header):
        path = tmp_path / "m.btnn"
        path.write_bytes(MAGIC_LINE + header + WEIGHTS_LINE)

        with pytest.raises(FormatError):
            load_model(path)

    def test_header_is_not_utf8(self, tmp_path):
        path = tmp_path / "m.btnn"
        path.write_bytes(MAGIC_LINE + b"version: \xff\xfe\n" + WEIGHTS_LINE)

        with pytest.raises(FormatError, match="unreadable header"):
            load_model(path)

    def test_missing_feature_config(self, tmp_path, small_bundle):
        path = tmp_path / "m.btnn"
        save_model(small_bundle, path)
        rewrite_header(path, lambda header: header.pop("feature_config"))

        with pytest.raises(FormatError, match="feature_config"):
            load_model(path)

    def test_not_a_model(self, tmp_path):
        path = tmp_path / "m.btnn"
        path.write_text("hello\n")

        with pytest.raises(FormatError):
            load_model(path)
