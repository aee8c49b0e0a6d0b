import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalim.hypergraph import (EmptyGraphError, Hypergraph, HypergraphError,
                                 dumps_hypergraph, load_hypergraph,
                                 loads_hypergraph, save_hypergraph)


class TestParsing:
    def test_two_edge_file(self):
        g = loads_hypergraph("e0\tA,B,C\ne1\tC,D\n")
        assert g.node_count == 4 and g.edge_count == 2
        c = g.node_labels.index("C")
        assert g.stars[c] == (0, 1)

    def test_comments_and_blanks_skipped(self):
        g = loads_hypergraph("# header\n\ne0\tA,B\n   \n# tail\n")
        assert g.edge_count == 1

    def test_empty_file_rejected(self):
        with pytest.raises(EmptyGraphError):
            loads_hypergraph("")
        with pytest.raises(EmptyGraphError):
            loads_hypergraph("# only a comment\n")

    def test_duplicate_member_reports_line(self):
        with pytest.raises(HypergraphError, match="line 2"):
            loads_hypergraph("e0\tA,B\ne1\tC,C\n")

    def test_missing_tab(self):
        with pytest.raises(HypergraphError, match="line 1"):
            loads_hypergraph("e0 A,B\n")

    def test_duplicate_edge_label(self):
        with pytest.raises(HypergraphError, match="duplicate hyperedge"):
            loads_hypergraph("e0\tA,B\ne0\tC,D\n")

    def test_empty_node_label(self):
        with pytest.raises(HypergraphError, match="line 1"):
            loads_hypergraph("e0\tA,,B\n")

    def test_round_trip(self, tmp_path):
        g = loads_hypergraph("author-1\tx,y,z\nauthor-2\tz,q\n")
        path = tmp_path / "g.txt"
        save_hypergraph(g, path)
        assert load_hypergraph(path) == g

    def test_round_trip_text(self):
        text = "e0\tA,B,C\ne1\tC,D\n"
        assert dumps_hypergraph(loads_hypergraph(text)) == text


class TestStructure:
    def test_empty_hyperedge_rejected(self):
        with pytest.raises(HypergraphError, match="empty"):
            Hypergraph([[0, 1], []])

    def test_duplicate_within_edge_rejected(self):
        with pytest.raises(HypergraphError, match="duplicate"):
            Hypergraph([[0, 0, 1]])

    def test_singleton_edge_allowed(self):
        g = Hypergraph([[3]], node_count=5)
        assert g.members[0] == (3,)
        assert g.neighbors(3) == frozenset()

    def test_isolated_node_allowed(self):
        g = Hypergraph([[0, 1]], node_count=3)
        assert g.neighbors(2) == frozenset()

    def test_neighbors_union(self):
        g = Hypergraph([[0, 1], [1, 2]])
        assert g.neighbors(1) == {0, 2}
        assert g.neighbors(0) == {1}

    def test_neighbors_out_of_range(self):
        g = Hypergraph([[0, 1]])
        with pytest.raises(HypergraphError):
            g.neighbors(5)

    def test_figure_topology(self, fig_graph):
        v6 = fig_graph.node_labels.index("V6")
        edge_names = {fig_graph.edge_labels[e] for e in fig_graph.stars[v6]}
        assert edge_names >= {"H2", "H3", "H4"}
        nbr_names = {fig_graph.node_labels[v] for v in fig_graph.neighbors(v6)}
        assert nbr_names >= {"V3", "V4", "V5", "V7"}


class TestStarExpansion:
    def test_single_edge(self):
        g = Hypergraph([[0, 1]])
        se = g.star_expansion()
        assert se.pairs == ((0, 0), (1, 0))

    def test_no_edges(self):
        g = Hypergraph([], node_count=4)
        assert g.star_expansion().pairs == ()

    def test_edge_count_matches_membership_total(self):
        rng = np.random.default_rng(5)
        from conftest import random_hypergraph
        for _ in range(20):
            g = random_hypergraph(rng, max_nodes=20, max_edges=6)
            se = g.star_expansion()
            assert len(se.pairs) == sum(len(m) for m in g.members)


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_cross_consistency_property(data):
    n = data.draw(st.integers(min_value=2, max_value=12))
    m = data.draw(st.integers(min_value=1, max_value=6))
    members = []
    for _ in range(m):
        size = data.draw(st.integers(min_value=1, max_value=n))
        members.append(sorted(data.draw(
            st.sets(st.integers(min_value=0, max_value=n - 1),
                    min_size=size, max_size=size))))
    g = Hypergraph(members, node_count=n)
    for e in range(g.edge_count):
        for v in g.members[e]:
            assert e in g.stars[v]
    for v in range(g.node_count):
        for e in g.stars[v]:
            assert v in g.members[e]
        assert v not in g.neighbors(v)


def test_components():
    g = Hypergraph([[0, 1], [2, 3], [3, 4]], node_count=6)
    comps = {frozenset(c) for c in g.components()}
    assert comps == {frozenset({0, 1}), frozenset({2, 3, 4}), frozenset({5})}
