"""btnn train: build and train a model from aligned features."""

import argparse
import logging

import numpy as np

from ..models.features import FeatureConfig
from ..models.training import TrainConfig
from ..services.nnet import build_bundle
from ..services.training import train, train_softmax_head
from ..storage.datasets import aligned_samples, load_utterances, manifest_dim
from ..storage.model_files import load_model, save_model
from . import register_command
from .base import BaseCommand

logger = logging.getLogger(__name__)


@register_command("train")
class TrainCommand(BaseCommand):
    help = "train the tail bank (and optionally the embedding) on aligned features"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--manifest", required=True, help="dataset manifest with alignments")
        parser.add_argument("--out", required=True, help="model file to write")
        parser.add_argument("--init-model", help="start from this model instead of a fresh one")
        parser.add_argument("--num-states", type=int, help="default: largest aligned state + 1")
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--lr", type=float, dest="learning_rate")
        parser.add_argument("--batch-size", type=int)
        parser.add_argument("--scale-pos", type=float)
        parser.add_argument("--neg-pos-ratio", type=float)
        parser.add_argument("--optimizer", choices=["sgd", "adam"])
        parser.add_argument("--joint", action="store_true", default=None,
                            help="update the embedding together with the tails")
        parser.add_argument("--seed", type=int, help="seeds initialisation and sampling")
        parser.add_argument("--softmax-baseline", action="store_true",
                            help="also train a softmax head for comparison decoding")
        parser.add_argument("--loss-trace", help="write per-state epoch losses as TSV")

    def run(self, args: argparse.Namespace) -> int:
        section = dict(self.config["training"])
        for key in ("epochs", "learning_rate", "batch_size", "scale_pos", "neg_pos_ratio",
                    "optimizer", "joint", "seed"):
            value = getattr(args, key, None)
            if value is not None:
                section[key] = value
        train_config = TrainConfig.from_dict(section)

        dim = manifest_dim(args.manifest)
        utterances = load_utterances(args.manifest, dim, require_alignment=True)
        num_states = args.num_states or int(max(u.states.max() for u in utterances)) + 1

        if args.init_model:
            bundle = load_model(args.init_model)
        else:
            features = dict(self.config["features"])
            if features.get("num_bins") != dim:
                logger.info(f"Feature dim {dim} from {args.manifest} overrides num_bins")
            features["num_bins"] = dim
            model = self.config["model"]
            seed = args.seed if args.seed is not None else model.get("seed", 0)
            bundle = build_bundle(
                num_states, FeatureConfig.from_dict(features), model["embedding"],
                model["tail_dims"], seed,
            )

        samples = aligned_samples(utterances, bundle.num_states)
        result = train(samples, bundle, train_config)
        bundle = result.bundle
        if args.softmax_baseline:
            bundle, head_trace = train_softmax_head(samples, bundle, train_config)
            logger.info(f"Softmax head cross-entropy {head_trace[0]:.4f} -> {head_trace[-1]:.4f}")

        save_model(bundle, args.out)
        if args.loss_trace:
            with open(args.loss_trace, "w") as f:
                f.write("state\tepoch\tloss\n")
                for state, losses in result.loss_trace.items():
                    for epoch, loss in enumerate(losses):
                        f.write(f"{state}\t{epoch}\t{loss:.6f}\n")

        finals = [losses[-1] for losses in result.loss_trace.values()]
        print(f"trained {bundle.num_states} states; mean final loss {np.mean(finals):.5f}")
        return 0
