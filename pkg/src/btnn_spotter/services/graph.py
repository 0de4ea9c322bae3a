"""Keyword graph construction and validation."""

import logging
from typing import List, Sequence

from ..errors import GraphConstructionError, OutOfVocabularyError
from ..models.graph import (
    EMISSION,
    JUMP,
    SELF_LOOP,
    Arc,
    JumpConfig,
    KeywordGraph,
    Lexicon,
)

logger = logging.getLogger(__name__)


def keyword_to_states(keyword: str, lexicon: Lexicon, graphemes: bool = False) -> List[int]:
    """
    Concatenate the lexicon entries of the keyword's words, in order.

    With graphemes=True every non-space character is looked up on its own.

    Raises:
        OutOfVocabularyError: a unit is missing from the lexicon
        GraphConstructionError: the keyword has no units
    """
    units = [char for char in keyword if not char.isspace()] if graphemes else keyword.split()
    if not units:
        raise GraphConstructionError("keyword is empty")
    states: List[int] = []
    for unit in units:
        if unit not in lexicon.entries:
            raise OutOfVocabularyError(unit)
        states.extend(lexicon.entries[unit])
    return states


def build_graph(states: Sequence[int], jump: JumpConfig = None, keyword: str = "") -> KeywordGraph:
    """
    Linear chain over `states` with self-loops, emission arcs and jump arcs.

    Jump arc i -> i+1+k skips k states and weighs -k * punishment. Arcs into
    the final node consume no frame.
    """
    jump = jump or JumpConfig()
    jump.validate()
    states = [int(s) for s in states]
    if not states:
        raise GraphConstructionError("cannot build a graph from an empty state sequence")

    final = len(states) + 1
    state_of_node = {node: states[node - 1] for node in range(1, final)}

    def consumed(dst: int):
        return None if dst == final else state_of_node[dst]

    arcs: List[Arc] = []
    for node in range(1, final):
        arcs.append(Arc(node, node, SELF_LOOP, state_of_node[node], 0.0))
        arcs.append(Arc(node, node + 1, EMISSION, consumed(node + 1), 0.0))
        for skip in range(1, jump.max_skip + 1):
            dst = node + 1 + skip
            if dst > final:
                break
            arcs.append(Arc(node, dst, JUMP, consumed(dst), -skip * jump.punishment))

    graph = KeywordGraph(keyword or " ".join(map(str, states)), final + 1, tuple(arcs), state_of_node)
    logger.debug(
        f"Built graph for {graph.keyword!r}: {len(states)} states, {len(arcs)} arcs "
        f"({len(graph.arcs_of_kind(JUMP))} jump)"
    )
    return graph


def validate_graph(graph: KeywordGraph) -> List[str]:
    """Every broken graph invariant, as a readable message. Empty means valid."""
    violations: List[str] = []
    final = graph.final_node
    emitting = range(1, final)

    if graph.num_nodes < 3:
        violations.append(f"graph needs start, final and at least one state node, has {graph.num_nodes}")
        return violations
    for node in emitting:
        if node not in graph.state_of_node:
            violations.append(f"node {node} has no state")
    for node in (graph.start_node, final):
        if node in graph.state_of_node:
            violations.append(f"node {node} must not carry a state")

    for arc in graph.arcs:
        label = f"{arc.kind} arc {arc.src}->{arc.dst}"
        if arc.kind not in (SELF_LOOP, EMISSION, JUMP):
            violations.append(f"{label}: unknown arc kind")
            continue
        if not (1 <= arc.src < final and 1 <= arc.dst <= final):
            violations.append(f"{label}: endpoint outside the chain")
            continue
        expected_state = None if arc.dst == final else graph.state_of_node.get(arc.dst)
        if arc.state != expected_state:
            violations.append(f"{label}: consumes state {arc.state}, expected {expected_state}")
        if arc.kind == SELF_LOOP and arc.src != arc.dst:
            violations.append(f"{label}: self-loop must start and end on one node")
        if arc.kind == EMISSION and arc.dst != arc.src + 1:
            violations.append(f"{label}: emission arc must go to the next node")
        if arc.kind == JUMP:
            if arc.dst < arc.src + 2:
                violations.append(f"{label}: jump must skip at least one node")
            if arc.weight > 0:
                violations.append(f"{label}: jump weight must be <= 0, got {arc.weight}")
        elif arc.kind != JUMP and arc.weight != 0:
            violations.append(f"{label}: weight must be 0, got {arc.weight}")

    for node in emitting:
        if not any(arc.kind == SELF_LOOP for arc in graph.outgoing(node)):
            violations.append(f"node {node} lacks self-loop")

    # hypotheses enter at node 1; everything else must follow from there
    reached = {graph.entry_node}
    frontier = [graph.entry_node]
    while frontier:
        node = frontier.pop()
        for arc in graph.outgoing(node):
            if arc.dst not in reached:
                reached.add(arc.dst)
                frontier.append(arc.dst)
    for node in range(1, graph.num_nodes):
        if node not in reached:
            violations.append(f"node {node} is unreachable from the start")

    dead_ends = [
        node for node in emitting
        if not any(arc.dst != node for arc in graph.outgoing(node))
    ]
    for node in dead_ends:
        violations.append(f"node {node} has no way forward")
    if graph.outgoing(final):
        violations.append(f"final node {final} must have no outgoing arcs")

    return violations
