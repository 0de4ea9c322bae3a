from .calibration import (
    adapt_scales,
    calibrate_frame,
    estimate_table,
    fuse,
    negative_prob,
    positive_prob,
)
from .decoder import DecodeSession, active_states, decode_stream, detect, step
from .evaluation import false_alarm_rate, sweep, wakeup_rate
from .features import StreamingFeatureExtractor, mel_filterbank
from .graph import build_graph, keyword_to_states, validate_graph
from .nnet import build_bundle, count_macs, embed_forward, tail_forward, tail_forward_sparse
from .training import gradient_check, sample_batch, state_loss, train, train_softmax_head

__all__ = [
    "DecodeSession",
    "StreamingFeatureExtractor",
    "active_states",
    "adapt_scales",
    "build_bundle",
    "build_graph",
    "calibrate_frame",
    "count_macs",
    "decode_stream",
    "detect",
    "embed_forward",
    "estimate_table",
    "false_alarm_rate",
    "fuse",
    "gradient_check",
    "keyword_to_states",
    "mel_filterbank",
    "negative_prob",
    "positive_prob",
    "sample_batch",
    "state_loss",
    "step",
    "sweep",
    "tail_forward",
    "tail_forward_sparse",
    "train",
    "train_softmax_head",
    "validate_graph",
    "wakeup_rate",
]
