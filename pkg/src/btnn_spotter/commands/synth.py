"""btnn synth-data: write a deterministic synthetic corpus."""

import argparse
import logging

from ..models.synthetic import SynthSpec
from ..services.synthetic import generate_synthetic_dataset
from . import register_command
from .base import BaseCommand

logger = logging.getLogger(__name__)


def _parse_keywords(text: str):
    """'0-1-2-3,4-5-6-7' -> ((0, 1, 2, 3), (4, 5, 6, 7))"""
    return tuple(tuple(int(s) for s in group.split("-")) for group in text.split(",") if group)


@register_command("synth-data")
class SynthDataCommand(BaseCommand):
    help = "generate a synthetic aligned corpus with references and a lexicon"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--out", required=True, help="output directory")
        parser.add_argument("--num-states", type=int)
        parser.add_argument("--feature-dim", type=int)
        parser.add_argument("--frames-per-state", type=int)
        parser.add_argument("--num-utterances", type=int)
        parser.add_argument("--dev-utterances", type=int)
        parser.add_argument("--test-utterances", type=int)
        parser.add_argument("--positive-fraction", type=float)
        parser.add_argument("--keywords", type=_parse_keywords, dest="keyword_state_seqs",
                            help='state sequences, e.g. "0-1-2-3,4-5-6-7"')
        parser.add_argument("--noise-std", type=float)
        parser.add_argument("--seed", type=int)

    def run(self, args: argparse.Namespace) -> int:
        section = dict(self.config["synth"])
        for key in ("num_states", "feature_dim", "frames_per_state", "num_utterances",
                    "dev_utterances", "test_utterances", "positive_fraction",
                    "keyword_state_seqs", "noise_std", "seed"):
            value = getattr(args, key, None)
            if value is not None:
                section[key] = value
        spec = SynthSpec.from_dict(section)
        dataset = generate_synthetic_dataset(spec, args.out)
        for split, manifest in dataset.manifests.items():
            print(f"{split}\t{manifest}\t{dataset.references[split]}")
        print(f"lexicon\t{dataset.lexicon_path}")
        return 0
