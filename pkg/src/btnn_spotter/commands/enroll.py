"""btnn enroll: compile a user keyword into a decoding graph."""

import argparse
import logging

from ..models.graph import JumpConfig, Lexicon
from ..services.graph import build_graph, keyword_to_states
from ..storage.graph_files import save_graph
from ..storage.text_files import read_lexicon
from . import register_command
from .base import BaseCommand

logger = logging.getLogger(__name__)


@register_command("enroll")
class EnrollCommand(BaseCommand):
    help = "build the keyword graph for a new keyword"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--keyword", required=True)
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--lexicon", help="lexicon file: word state_id ...")
        source.add_argument("--graphemes", metavar="ALPHABET",
                            help="treat each character of ALPHABET as its own state")
        parser.add_argument("--jump-skip", type=int, dest="max_skip")
        parser.add_argument("--jump-punishment", type=float, dest="punishment")
        parser.add_argument("--out", required=True, help="graph file to write")

    def run(self, args: argparse.Namespace) -> int:
        if args.lexicon:
            lexicon = read_lexicon(args.lexicon)
            states = keyword_to_states(args.keyword, lexicon)
        else:
            lexicon = Lexicon.from_graphemes(args.graphemes)
            states = keyword_to_states(args.keyword, lexicon, graphemes=True)

        jump = JumpConfig(
            max_skip=self.setting(args, "max_skip", "graph"),
            punishment=self.setting(args, "punishment", "graph"),
        )
        graph = build_graph(states, jump, keyword="_".join(args.keyword.split()))
        save_graph(graph, args.out)
        print(f"enrolled {args.keyword!r}: states {' '.join(map(str, states))}, {len(graph.arcs)} arcs")
        return 0
