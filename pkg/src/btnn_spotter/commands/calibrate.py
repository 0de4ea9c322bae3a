"""btnn calibrate / btnn adapt-scales."""

import argparse
import logging
from typing import List, Tuple

import numpy as np

from ..errors import ConfigurationError
from ..models.network import ModelBundle
from ..services.calibration import (
    adapt_calibration,
    calibrate_frame,
    confidence_overlap,
    estimate_calibration,
    parse_grid,
    scale_grid,
    state_histograms,
)
from ..services.nnet import raw_score_matrix
from ..storage.calibration_files import load_calibration, save_calibration
from ..storage.datasets import Utterance, load_utterances
from ..storage.model_files import load_model
from ..storage.text_files import write_distributions
from . import register_command
from .base import BaseCommand

logger = logging.getLogger(__name__)


def score_aligned(utterances: List[Utterance], bundle: ModelBundle) -> Tuple[np.ndarray, np.ndarray]:
    """Raw scores of every state on every frame, with the frames' aligned states."""
    raw = [raw_score_matrix(utt.frames, bundle) for utt in utterances]
    states = [utt.states for utt in utterances]
    if not raw:
        raise ConfigurationError("no utterances to score")
    states = np.concatenate(states)
    if states.max() >= bundle.num_states:
        raise ConfigurationError(
            f"alignment uses state {states.max()} but the model has {bundle.num_states} states"
        )
    return np.vstack(raw), states


@register_command("calibrate")
class CalibrateCommand(BaseCommand):
    help = "estimate per-state boundary tables from aligned development data"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--manifest", required=True, help="aligned dataset manifest")
        parser.add_argument("--model", required=True)
        parser.add_argument("--out", required=True, help="calibration file to write")
        parser.add_argument("--segments", type=int)
        parser.add_argument("--scale-pos", type=float)
        parser.add_argument("--scale-neg", type=float)
        parser.add_argument("--fusion", choices=["complement", "literal"])
        parser.add_argument("--dump-distributions", metavar="PATH",
                            help="write per-state score histograms and state overlap as TSV")

    def run(self, args: argparse.Namespace) -> int:
        bundle = load_model(args.model)
        utterances = load_utterances(args.manifest, bundle.embedding.input_dim, require_alignment=True)
        raw, states = score_aligned(utterances, bundle)

        scales = (
            self.setting(args, "scale_pos", "calibration"),
            self.setting(args, "scale_neg", "calibration"),
        )
        calib = estimate_calibration(
            raw,
            states,
            bundle.num_states,
            self.setting(args, "segments", "calibration"),
            scales,
            self.setting(args, "fusion", "calibration"),
        )
        save_calibration(calib, args.out)

        if args.dump_distributions:
            confidences = np.array(
                [
                    [row[s] for s in range(bundle.num_states)]
                    for row in (
                        calibrate_frame(dict(enumerate(frame)), calib) for frame in raw
                    )
                ]
            )
            write_distributions(
                state_histograms(raw, states), confidence_overlap(confidences), args.dump_distributions
            )
            logger.info(f"Wrote score distributions to {args.dump_distributions}")

        print(f"calibrated {bundle.num_states} states from {raw.shape[0]} frames")
        return 0


@register_command("adapt-scales")
class AdaptScalesCommand(BaseCommand):
    help = "choose per-state fusion scales by weighted frame likelihood on dev data"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--dev", required=True, help="aligned dev manifest")
        parser.add_argument("--model", required=True)
        parser.add_argument("--calib", required=True, help="calibration file to adapt")
        parser.add_argument("--grid", help='comma-separated scale values, e.g. "0.5,1,2,4,8"')
        parser.add_argument("--out", help="output calibration file (default: overwrite --calib)")

    def run(self, args: argparse.Namespace) -> int:
        bundle = load_model(args.model)
        calib = load_calibration(args.calib)
        if calib.num_states != bundle.num_states:
            raise ConfigurationError(
                f"model has {bundle.num_states} states but calibration has {calib.num_states}"
            )
        grid = parse_grid(args.grid) if args.grid else scale_grid(self.config["calibration"]["grid"])

        utterances = load_utterances(args.dev, bundle.embedding.input_dim, require_alignment=True)
        raw, states = score_aligned(utterances, bundle)
        adapted = adapt_calibration(raw, states, calib, grid)
        save_calibration(adapted, args.out or args.calib)

        for state, entry in adapted.per_state.items():
            print(f"state {state}\t{entry.scale_pos:g}\t{entry.scale_neg:g}")
        return 0
