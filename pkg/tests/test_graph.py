import numpy as np
import pytest

from pathrec.graph import (
    GraphBuildError,
    Relation,
    VertexKind,
    build_graph,
    candidate_items,
)

from helpers import bfs_adjacent_attributes, random_graph

A, I, U = VertexKind.ATTRIBUTE, VertexKind.ITEM, VertexKind.USER


class TestBuildGraph:
    def test_g0_counts(self, g0):
        assert (g0.user_count, g0.item_count, g0.attribute_count) == (1, 3, 3)
        assert len(g0.edges) == 6

    def test_self_loop_rejected(self):
        with pytest.raises(GraphBuildError, match="self-loop"):
            build_graph((2, 0, 0), [(Relation.FRIEND, (U, 1), (U, 1))])

    def test_kind_mismatch_rejected(self):
        with pytest.raises(GraphBuildError, match="belong_to"):
            build_graph((2, 0, 0), [(Relation.BELONG_TO, (U, 0), (U, 1))])

    def test_out_of_range_vertex_rejected(self):
        with pytest.raises(GraphBuildError, match="out of range"):
            build_graph((1, 1, 1), [(Relation.BELONG_TO, (I, 5), (A, 0))])

    def test_duplicate_edge_rejected_either_direction(self):
        recs = [
            (Relation.BELONG_TO, (I, 0), (A, 0)),
            (Relation.BELONG_TO, (A, 0), (I, 0)),
        ]
        with pytest.raises(GraphBuildError, match="duplicate"):
            build_graph((0, 1, 1), recs)

    def test_error_names_offending_record(self):
        bad = (Relation.LIKE, (I, 0), (A, 0))
        with pytest.raises(GraphBuildError, match="like"):
            build_graph((0, 1, 1), [bad])


class TestNeighborhoods:
    def test_items_with_attribute(self, g0):
        assert g0.items_with_attribute(0) == (0, 1)
        assert g0.items_with_attribute(1) == (0,)

    def test_attribute_with_no_items(self):
        g = build_graph((0, 1, 2), [(Relation.BELONG_TO, (I, 0), (A, 0))])
        assert g.items_with_attribute(1) == ()

    def test_attributes_of_item(self, g0):
        assert g0.attributes_of_item(0) == (0, 1)
        assert g0.attributes_of_item(2) == (2,)

    def test_item_with_no_attributes(self):
        g = build_graph((1, 1, 0), [(Relation.INTERACT, (U, 0), (I, 0))])
        assert g.attributes_of_item(0) == ()

    def test_invalid_indexes_raise(self, g0):
        with pytest.raises(IndexError):
            g0.items_with_attribute(3)
        with pytest.raises(IndexError):
            g0.attributes_of_item(-1)

    def test_membership_duality(self, g0):
        for v in range(g0.item_count):
            for p in range(g0.attribute_count):
                assert (v in g0.items_with_attribute(p)) == (
                    p in g0.attributes_of_item(v)
                )


class TestAdjacentAttributes:
    def test_g0_values_match_bfs_oracle(self, g0):
        assert g0.adjacent_attributes(0) == (1, 2) == bfs_adjacent_attributes(g0, 0)
        assert g0.adjacent_attributes(1) == (0,) == bfs_adjacent_attributes(g0, 1)
        assert g0.adjacent_attributes(2) == (0,) == bfs_adjacent_attributes(g0, 2)

    def test_single_attribute_graph(self):
        g = build_graph((0, 1, 1), [(Relation.BELONG_TO, (I, 0), (A, 0))])
        assert g.adjacent_attributes(0) == ()

    def test_user_mediated_adjacency(self):
        # Two attributes liked by the same user but sharing no item.
        recs = [
            (Relation.LIKE, (U, 0), (A, 0)),
            (Relation.LIKE, (U, 0), (A, 1)),
        ]
        g = build_graph((1, 0, 2), recs)
        assert g.adjacent_attributes(0) == (1,)
        assert bfs_adjacent_attributes(g, 0) == (1,)

    def test_random_graphs_match_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            g = random_graph(rng)
            for p in range(g.attribute_count):
                assert g.adjacent_attributes(p) == bfs_adjacent_attributes(g, p)

    def test_never_contains_self_and_symmetric(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            g = random_graph(rng)
            for p in range(g.attribute_count):
                adj = g.adjacent_attributes(p)
                assert p not in adj
                for q in adj:
                    assert p in g.adjacent_attributes(q)


class TestCandidateItems:
    def test_g0_examples(self, g0):
        assert candidate_items(g0, [0]) == (0, 1)
        assert candidate_items(g0, [0, 2]) == (1,)
        assert candidate_items(g0, [1, 2]) == ()

    def test_empty_accepted_rejected(self, g0):
        with pytest.raises(ValueError):
            candidate_items(g0, [])

    def test_antitone_in_accepted_set(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            g = random_graph(rng)
            if g.attribute_count < 2:
                continue
            p, q = rng.choice(g.attribute_count, size=2, replace=False)
            small = set(candidate_items(g, [int(p), int(q)]))
            assert small <= set(candidate_items(g, [int(p)]))
