"""btnn spot: decode features or audio against enrolled keywords."""

import argparse
import contextlib
import logging
import sys
from pathlib import Path
from typing import Iterator, Tuple

import numpy as np

from ..errors import ConfigurationError
from ..models.decoding import DecodeConfig
from ..models.network import MacReport
from ..services.decoder import DecodeSession
from ..services.features import mel_filterbank, read_wav
from ..storage.calibration_files import load_calibration
from ..storage.datasets import load_utterances
from ..storage.feature_files import read_matrix
from ..storage.graph_files import load_graph
from ..storage.model_files import load_model
from ..storage.text_files import format_result_lines, write_frame_scores
from . import register_command
from .base import BaseCommand

logger = logging.getLogger(__name__)


@register_command("spot")
class SpotCommand(BaseCommand):
    help = "detect enrolled keywords in audio or feature streams"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", required=True)
        parser.add_argument("--calib", help="calibration file (required for the btnn scorer)")
        parser.add_argument("--graph", required=True, action="append",
                            help="keyword graph; repeat for several keywords")
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--audio", help="16-bit mono WAV file")
        source.add_argument("--features", help="feature file")
        source.add_argument("--manifest", help="dataset manifest; every utterance is decoded")
        parser.add_argument("--threshold", type=float)
        parser.add_argument("--beam", type=int, help="0 keeps every token")
        parser.add_argument("--min-frames", type=int)
        parser.add_argument("--refractory", type=int, dest="refractory_frames")
        parser.add_argument("--token-floor", type=float)
        parser.add_argument("--scorer", choices=["btnn", "softmax"], default="btnn")
        parser.add_argument("--full", action="store_true",
                            help="evaluate every tail each frame instead of the active ones")
        parser.add_argument("--chunk-size", type=int, default=0,
                            help="push frames in chunks of this size (0: whole stream)")
        parser.add_argument("--emit-frame-scores", metavar="PATH",
                            help="dump active-state raw scores and confidences per frame")
        parser.add_argument("--out", help="results file (default: stdout)")

    def decode_config(self, args: argparse.Namespace) -> DecodeConfig:
        section = dict(self.config["decode"])
        for key in ("threshold", "min_frames", "refractory_frames", "token_floor"):
            value = getattr(args, key, None)
            if value is not None:
                section[key] = value
        if args.beam is not None:
            section["beam"] = args.beam or None
        return DecodeConfig.from_dict(section)

    def _streams(self, args: argparse.Namespace, bundle) -> Iterator[Tuple[str, np.ndarray]]:
        if args.audio:
            frames = mel_filterbank(read_wav(args.audio), bundle.feature_config)
            yield Path(args.audio).stem, np.stack([f.values for f in frames])
        elif args.features:
            yield Path(args.features).stem, read_matrix(args.features, bundle.embedding.input_dim)
        else:
            for utt in load_utterances(args.manifest, bundle.embedding.input_dim):
                yield utt.utterance_id, utt.frames

    def run(self, args: argparse.Namespace) -> int:
        bundle = load_model(args.model)
        calib = load_calibration(args.calib) if args.calib else None
        if args.scorer == "btnn" and calib is None:
            raise ConfigurationError("--calib is required with the btnn scorer")
        graphs = [load_graph(path) for path in args.graph]
        config = self.decode_config(args)

        total = MacReport()
        with contextlib.ExitStack() as stack:
            out = stack.enter_context(open(args.out, "w")) if args.out else sys.stdout
            scores_out = (
                stack.enter_context(open(args.emit_frame_scores, "w"))
                if args.emit_frame_scores
                else None
            )
            for utt_id, frames in self._streams(args, bundle):
                session = DecodeSession(
                    bundle, calib, graphs, config,
                    scorer=args.scorer,
                    lazy=not args.full,
                    record_scores=scores_out is not None,
                )
                chunk = args.chunk_size or max(len(frames), 1)
                for start in range(0, len(frames), chunk):
                    session.push(frames[start : start + chunk])
                events, report = session.finish()
                total = total.merge(report)
                for line in format_result_lines(utt_id, events):
                    out.write(line + "\n")
                if scores_out is not None:
                    write_frame_scores(session.frame_scores, scores_out, utt_id)
            out.write(f"# {total.summary()}\n")

        logger.info(f"Tail computation ratio {total.lazy_ratio:.4f}")
        return 0
