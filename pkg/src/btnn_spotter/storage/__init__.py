from .calibration_files import load_calibration, save_calibration
from .datasets import Utterance, aligned_samples, load_utterance, load_utterances, manifest_dim
from .feature_files import read_dim, read_frames, read_matrix, write_frames, write_matrix
from .graph_files import load_graph, save_graph
from .model_files import load_model, save_model
from .text_files import (
    ManifestEntry,
    read_alignment,
    read_lexicon,
    read_manifest,
    read_references,
    read_results,
    write_alignment,
    write_lexicon,
    write_manifest,
    write_references,
    write_results,
)

__all__ = [
    "ManifestEntry",
    "Utterance",
    "aligned_samples",
    "load_calibration",
    "load_graph",
    "load_model",
    "load_utterance",
    "load_utterances",
    "manifest_dim",
    "read_alignment",
    "read_dim",
    "read_frames",
    "read_lexicon",
    "read_manifest",
    "read_matrix",
    "read_references",
    "read_results",
    "save_calibration",
    "save_graph",
    "save_model",
    "write_alignment",
    "write_frames",
    "write_lexicon",
    "write_manifest",
    "write_matrix",
    "write_references",
    "write_results",
]
