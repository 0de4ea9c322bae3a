"""Keyword graph file format (.btg): a versioned YAML node/arc listing."""

import logging
from pathlib import Path
from typing import Union

import yaml

from ..errors import FormatError
from ..models.graph import Arc, KeywordGraph
from ..services.graph import validate_graph

logger = logging.getLogger(__name__)

FORMAT_NAME = "btnn-graph"
VERSION = 1


def save_graph(graph: KeywordGraph, path: Union[str, Path]) -> None:
    document = {
        "format": FORMAT_NAME,
        "version": VERSION,
        "keyword": graph.keyword,
        "num_nodes": graph.num_nodes,
        "state_of_node": {int(k): int(v) for k, v in graph.state_of_node.items()},
        "arcs": [[a.src, a.dst, a.kind, a.state, float(a.weight)] for a in graph.arcs],
    }
    with open(path, "w") as f:
        yaml.safe_dump(document, f, sort_keys=False, default_flow_style=None)
    logger.info(f"Saved graph for {graph.keyword!r} ({len(graph.arcs)} arcs) to {path}")


def load_graph(path: Union[str, Path]) -> KeywordGraph:
    """
    Raises:
        FormatError: wrong header or a graph that fails validation
    """
    with open(path, "r") as f:
        try:
            document = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise FormatError(f"{path}: unreadable graph file: {e}") from e

    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise FormatError(f"{path}: not a graph file")
    if document.get("version") != VERSION:
        raise FormatError(f"{path}: graph version {document.get('version')} is not supported")

    try:
        arcs = tuple(
            Arc(int(src), int(dst), str(kind), None if state is None else int(state), float(weight))
            for src, dst, kind, state, weight in document["arcs"]
        )
        graph = KeywordGraph(
            str(document["keyword"]),
            int(document["num_nodes"]),
            arcs,
            {int(k): int(v) for k, v in document["state_of_node"].items()},
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: malformed graph: {e}") from e

    violations = validate_graph(graph)
    if violations:
        raise FormatError(f"{path}: invalid graph: {violations[0]}")
    return graph
