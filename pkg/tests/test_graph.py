"""Tests for keyword graph construction, validation and files."""

import dataclasses

import pytest
import yaml

from btnn_spotter.errors import (
    ConfigurationError,
    FormatError,
    GraphConstructionError,
    OutOfVocabularyError,
)
from btnn_spotter.models.graph import EMISSION, JUMP, SELF_LOOP, Arc, JumpConfig, KeywordGraph, Lexicon
from btnn_spotter.services.graph import build_graph, keyword_to_states, validate_graph
from btnn_spotter.storage.graph_files import load_graph, save_graph


def without_arcs(graph, drop):
    arcs = tuple(arc for arc in graph.arcs if not drop(arc))
    return KeywordGraph(graph.keyword, graph.num_nodes, arcs, graph.state_of_node)


def paths(graph, node, length):
    """Every node sequence of `length` arcs starting at `node`."""
    if length == 0:
        return [[node]]
    found = []
    for arc in graph.outgoing(node):
        found.extend([node] + rest for rest in paths(graph, arc.dst, length - 1))
    return found


class TestKeywordToStates:
    """Tests for lexicon lookup."""

    @pytest.fixture
    def lexicon(self):
        return Lexicon({"hey": (1, 2), "tv": (3,), "go": (2, 5, 7)}, 8)

    def test_single_word(self, lexicon):
        assert keyword_to_states("go", lexicon) == [2, 5, 7]

    def test_words_concatenate(self, lexicon):
        assert keyword_to_states("hey tv", lexicon) == [1, 2, 3]

    def test_unknown_word(self, lexicon):
        with pytest.raises(OutOfVocabularyError, match="radio"):
            keyword_to_states("hey radio", lexicon)

    def test_empty_keyword(self, lexicon):
        with pytest.raises(GraphConstructionError):
            keyword_to_states("   ", lexicon)

    def test_graphemes(self):
        lexicon = Lexicon.from_graphemes("abcdefgh")
        assert keyword_to_states("bad", lexicon, graphemes=True) == [1, 0, 3]

    def test_lexicon_rejects_out_of_range_state(self):
        with pytest.raises(ConfigurationError, match="outside"):
            Lexicon({"x": (9,)}, 4)


class TestBuildGraph:
    """Tests for chain construction."""

    def test_minimal_chain(self):
        graph = build_graph([4], JumpConfig(max_skip=0))

        assert graph.num_nodes == 3
        assert len(graph.arcs_of_kind(SELF_LOOP)) == 1
        assert len(graph.arcs_of_kind(EMISSION)) == 1
        assert graph.arcs_of_kind(JUMP) == []
        assert graph.arcs_of_kind(EMISSION)[0].state is None

    def test_three_states_one_skip(self, chain_graph):
        jumps = chain_graph.arcs_of_kind(JUMP)

        assert len(chain_graph.arcs) == 8
        assert len(chain_graph.arcs_of_kind(SELF_LOOP)) == 3
        assert len(chain_graph.arcs_of_kind(EMISSION)) == 3
        assert {(a.src, a.dst, a.state) for a in jumps} == {(1, 3, 2), (2, 4, None)}
        assert all(a.weight == -4.0 for a in jumps)

    def test_longer_skips_cost_more(self):
        graph = build_graph([0, 1, 2, 3], JumpConfig(max_skip=2, punishment=1.5))

        weights = {(a.src, a.dst): a.weight for a in graph.arcs_of_kind(JUMP)}

        assert weights[(1, 3)] == -1.5
        assert weights[(1, 4)] == -3.0

    def test_free_jumps(self):
        graph = build_graph([0, 1, 2], JumpConfig(max_skip=1, punishment=0.0))

        assert graph.arcs_of_kind(JUMP)
        assert all(a.weight == 0.0 for a in graph.arcs_of_kind(JUMP))

    def test_empty_states(self):
        with pytest.raises(GraphConstructionError):
            build_graph([])

    def test_repeated_states_get_their_own_nodes(self):
        graph = build_graph([3, 3, 1])
        assert graph.states == [3, 3, 1]

    def test_paths_never_go_backwards(self, chain_graph):
        for length in range(1, 7):
            for path in paths(chain_graph, chain_graph.entry_node, length):
                assert path == sorted(path)

    def test_every_path_to_final_keeps_keyword_order(self):
        graph = build_graph([5, 6, 7, 8], JumpConfig(max_skip=2))
        for length in range(1, 6):
            for path in paths(graph, graph.entry_node, length):
                consumed = [graph.state_of_node[n] for n in path if n in graph.state_of_node]
                assert consumed == sorted(consumed)


class TestValidateGraph:
    """Tests for graph invariant checks."""

    def test_built_graphs_are_valid(self, chain_graph):
        assert validate_graph(chain_graph) == []
        assert validate_graph(build_graph([1], JumpConfig(max_skip=3))) == []

    def test_missing_self_loop(self, chain_graph):
        broken = without_arcs(chain_graph, lambda a: a.kind == SELF_LOOP and a.src == 2)

        assert "node 2 lacks self-loop" in validate_graph(broken)

    def test_positive_jump_weight(self, chain_graph):
        arcs = tuple(
            dataclasses.replace(a, weight=2.0) if a.kind == JUMP and a.src == 1 else a
            for a in chain_graph.arcs
        )
        broken = KeywordGraph("abc", chain_graph.num_nodes, arcs, chain_graph.state_of_node)

        assert any("jump weight must be <= 0" in v for v in validate_graph(broken))

    def test_unreachable_final(self):
        graph = build_graph([0, 1], JumpConfig(max_skip=0))
        broken = without_arcs(graph, lambda a: a.kind == EMISSION and a.src == 2)

        violations = validate_graph(broken)

        assert "node 3 is unreachable from the start" in violations
        assert "node 2 has no way forward" in violations

    def test_arc_out_of_final(self, chain_graph):
        arcs = chain_graph.arcs + (Arc(4, 4, SELF_LOOP, None),)
        broken = KeywordGraph("abc", chain_graph.num_nodes, arcs, chain_graph.state_of_node)

        assert validate_graph(broken)


class TestGraphFiles:
    def test_written_graph_loads_identically(self, tmp_path, chain_graph):
        path = tmp_path / "abc.btg"
        save_graph(chain_graph, path)

        loaded = load_graph(path)

        assert loaded.keyword == "abc"
        assert loaded.arcs == chain_graph.arcs
        assert loaded.state_of_node == chain_graph.state_of_node

    def test_invalid_graph_rejected_on_load(self, tmp_path, chain_graph):
        path = tmp_path / "abc.btg"
        save_graph(chain_graph, path)
        document = yaml.safe_load(path.read_text())
        document["arcs"] = [arc for arc in document["arcs"] if arc[2] != "self_loop"]
        path.write_text(yaml.safe_dump(document))

        with pytest.raises(FormatError, match="lacks self-loop"):
            load_graph(path)

    def test_not_a_graph(self, tmp_path):
        path = tmp_path / "x.btg"
        path.write_text("format: something-else\n")

        with pytest.raises(FormatError):
            load_graph(path)
