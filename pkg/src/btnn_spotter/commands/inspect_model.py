"""btnn inspect: describe a model file."""

import argparse
import sys

from ..services.nnet import count_macs
from ..storage.model_files import load_model
from ..utils.templates import render_template
from . import register_command
from .base import BaseCommand


@register_command("inspect")
class InspectCommand(BaseCommand):
    help = "print model dimensions, state count and per-frame MAC estimate"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", required=True)

    def run(self, args: argparse.Namespace) -> int:
        bundle = load_model(args.model)
        report = count_macs(bundle, [set(bundle.state_ids)])
        sys.stdout.write(
            render_template(
                "inspect.txt.j2",
                path=args.model,
                num_states=bundle.num_states,
                feature_config=bundle.feature_config,
                embedding_in=bundle.embedding.input_dim,
                embedding_out=bundle.embedding.output_dim,
                embedding_layers=[layer.describe() for layer in bundle.embedding.layers],
                tail_layers=[layer.describe() for layer in bundle.tails[0].layers],
                has_softmax_head=bundle.softmax_head is not None,
                report=report,
            )
        )
        return 0
