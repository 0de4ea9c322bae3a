"""btnn eval: wakeup rate and false alarms over a threshold sweep."""

import argparse
import logging
import sys

from ..errors import ConfigurationError
from ..services.evaluation import OUTPUT_FORMATS, render_sweep, sweep
from ..storage.text_files import read_references, read_results
from . import register_command
from .base import BaseCommand

logger = logging.getLogger(__name__)


def parse_thresholds(text: str) -> list:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigurationError(f"invalid threshold list {text!r}: {e}") from e


@register_command("eval")
class EvalCommand(BaseCommand):
    help = "score spot results against references"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--results", required=True, help="output of btnn spot")
        parser.add_argument("--refs", required=True, help="reference manifest")
        parser.add_argument("--fa-target", type=float, help="false alarms per 24 hours")
        parser.add_argument("--thresholds", help="ascending comma-separated thresholds")
        parser.add_argument("--output-format", choices=OUTPUT_FORMATS, default="table")

    def run(self, args: argparse.Namespace) -> int:
        results = read_results(args.results)
        refs = read_references(args.refs)
        thresholds = (
            parse_thresholds(args.thresholds) if args.thresholds else self.config["eval"]["thresholds"]
        )
        result = sweep(thresholds, results, refs, self.setting(args, "fa_target", "eval"))
        sys.stdout.write(render_sweep(result, args.output_format))
        return 0
