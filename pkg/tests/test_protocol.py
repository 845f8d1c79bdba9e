import json

import pytest

from repchain.protocol import (
    Branch,
    Leaf,
    ProtocolParseError,
    canonical_vertex_order,
    catalan,
    count_space,
    enumerate_protocols,
    enumerate_shapes,
    from_json_dict,
    get_labels,
    leaf_depths,
    n_vertices,
    parse,
    serialize,
    shapes_by_symmetricity,
    span,
    symmetricity,
    to_json_dict,
    validate_tree,
    with_labels,
)

BALANCED4 = Branch(Branch(Leaf(0), Leaf(1)), Branch(Leaf(2), Leaf(3)))
CATERPILLAR4 = Branch(Branch(Branch(Leaf(0), Leaf(1)), Leaf(2)), Leaf(3))


def catalan_recurrence(n):
    table = [1]
    for m in range(1, n + 1):
        table.append(sum(table[i] * table[m - 1 - i] for i in range(m)))
    return table[n]


class TestShapeEnumeration:
    def test_single_leaf(self):
        assert len(enumerate_shapes(1)) == 1

    def test_four_leaves(self):
        assert len(enumerate_shapes(4)) == 5

    def test_ten_leaves_matches_scenario_d_decomposition(self):
        assert len(enumerate_shapes(10)) == 4862

    @pytest.mark.parametrize("n", range(13))
    def test_catalan_matches_independent_recurrence(self, n):
        assert catalan(n) == catalan_recurrence(n)

    def test_counts_match_catalan_for_small_sizes(self):
        for n in range(1, 9):
            assert len(enumerate_shapes(n)) == catalan(n - 1)

    def test_shapes_carry_consecutive_links(self):
        for shape_id in enumerate_shapes(5):
            validate_tree(shape_id.shape, n_links=5)

    def test_enumeration_is_deterministic(self):
        first = [serialize(s.shape) for s in enumerate_shapes(5)]
        second = [serialize(s.shape) for s in enumerate_shapes(5)]
        assert first == second


def mirror(tree):
    if isinstance(tree, Leaf):
        return tree
    return Branch(mirror(tree.right), mirror(tree.left), tree.rounds)


class TestSymmetricity:
    def test_balanced_tree_scores_one(self):
        assert symmetricity(BALANCED4) == 1.0

    def test_caterpillar_hand_value(self):
        assert leaf_depths(CATERPILLAR4) == [3, 3, 2, 1]
        assert symmetricity(CATERPILLAR4) == pytest.approx(1.0 - 0.6875 / 3.0, abs=1e-12)

    def test_single_leaf_convention(self):
        assert symmetricity(Leaf(0)) == 1.0

    def test_both_three_leaf_shapes_score_equal(self):
        shapes = enumerate_shapes(3)
        assert len(shapes) == 2
        assert shapes[0].symmetricity == pytest.approx(shapes[1].symmetricity, abs=1e-15)

    def test_mirroring_preserves_score(self):
        for shape_id in enumerate_shapes(6):
            mirrored = mirror(shape_id.shape)
            assert symmetricity(mirrored) == pytest.approx(
                shape_id.symmetricity, abs=1e-15
            )

    def test_ordering_is_stable_on_ties(self):
        ordered = shapes_by_symmetricity(4)
        scores = [s.symmetricity for s in ordered]
        assert scores == sorted(scores)
        tied = [s.index for s in ordered if s.symmetricity < 1.0]
        assert tied == sorted(tied)


class TestCountSpace:
    @pytest.mark.parametrize(
        "n_nodes, beta, expected",
        [
            (2, 2, 3),
            (3, 2, 27),
            (5, 1, 640),
            (5, 2, 10935),
            (11, 2, 4862 * 3**19),
        ],
    )
    def test_table_values(self, n_nodes, beta, expected):
        assert count_space(n_nodes, beta) == expected

    def test_scenario_d_exact_big_integer(self):
        value = count_space(11, 2)
        assert value == 5650915252554
        assert value == catalan(9) * 1162261467
        assert 5.6e12 < value < 5.7e12

    def test_rejects_tiny_chain(self):
        with pytest.raises(ValueError):
            count_space(1, 2)


class TestCanonicalOrder:
    def test_single_leaf(self):
        assert canonical_vertex_order(Leaf(0)) == [()]

    def test_balanced_four_leaves(self):
        order = canonical_vertex_order(BALANCED4)
        assert order == [(0, 0), (0, 1), (1, 0), (1, 1), (0,), (1,), ()]

    def test_left_deep_three_leaves(self):
        tree = Branch(Branch(Leaf(0), Leaf(1)), Leaf(2))
        order = canonical_vertex_order(tree)
        # leaves L0, L1, L2, then the inner vertex over {L0, L1}, then root
        assert order == [(0, 0), (0, 1), (1,), (0,), ()]

    def test_leaves_first_root_last(self):
        for shape_id in enumerate_shapes(6):
            order = canonical_vertex_order(shape_id.shape)
            assert len(order) == n_vertices(shape_id.shape)
            leaves = set(order[:6])
            assert all(len(p) > 0 for p in leaves)  # no internal among leaves
            assert order[-1] == ()

    def test_labels_round_trip(self):
        labels = [2, 0, 1, 1, 0, 2, 1]
        tree = with_labels(BALANCED4, labels)
        assert get_labels(tree) == labels


class TestEnumerateProtocols:
    def test_single_link_space(self):
        protocols = list(enumerate_protocols(2, 2))
        assert [p.rounds for p in protocols] == [0, 1, 2]

    def test_unlabeled_singleton(self):
        assert len(list(enumerate_protocols(3, 0))) == 1

    def test_four_node_count(self):
        assert len(list(enumerate_protocols(4, 1))) == 64

    @pytest.mark.parametrize("n_nodes", [2, 3, 4, 5])
    @pytest.mark.parametrize("beta", [0, 1, 2])
    def test_count_matches_cardinality_exactly(self, n_nodes, beta):
        seen = set()
        for p in enumerate_protocols(n_nodes, beta):
            seen.add(serialize(p))
        assert len(seen) == count_space(n_nodes, beta)


class TestSpan:
    def test_leaf(self):
        assert span(Leaf(2)) == (2, 3)

    def test_subtree(self):
        assert span(BALANCED4) == (0, 4)
        assert span(BALANCED4.right) == (2, 4)


class TestSerialization:
    def test_leaf_text(self):
        assert serialize(Leaf(0, 2)) == "(L0:2)"

    def test_figure_protocol_text(self):
        tree = with_labels(BALANCED4, [2, 2, 2, 2, 0, 0, 0])
        assert serialize(tree) == "(((L0:2)(L1:2):0)((L2:2)(L3:2):0):0)"

    def test_round_trip_thousand_protocols(self):
        count = 0
        for n_nodes, beta in [(2, 2), (3, 2), (4, 2), (5, 1)]:
            for p in enumerate_protocols(n_nodes, beta):
                assert parse(serialize(p)) == p
                count += 1
        assert count >= 1000

    def test_whitespace_is_insignificant(self):
        assert parse(" ( (L0:1) (L1:2) : 0 ) ") == Branch(Leaf(0, 1), Leaf(1, 2), 0)

    @pytest.mark.parametrize(
        "text",
        ["", "(L0:1", "(L0)", "((L0:1)(L1:2):0)x", "(L0:1)(L1:0)", "(Lx:1)", "(:1)"],
    )
    def test_malformed_text_rejected_with_position(self, text):
        with pytest.raises(ProtocolParseError) as err:
            parse(text)
        assert "position" in str(err.value)

    def test_non_consecutive_links_rejected(self):
        with pytest.raises(ProtocolParseError):
            parse("((L0:0)(L2:0):0)")
        with pytest.raises(ProtocolParseError):
            parse("((L1:0)(L0:0):0)")

    def test_json_round_trip(self):
        tree = with_labels(CATERPILLAR4, [1, 0, 2, 0, 1, 0, 2])
        blob = json.dumps(to_json_dict(tree))
        assert from_json_dict(json.loads(blob)) == tree

    def test_json_rejects_unknown_type(self):
        with pytest.raises(ValueError):
            from_json_dict({"type": "mystery"})


class TestValidateTree:
    def test_beta_bound_enforced(self):
        with pytest.raises(ValueError):
            validate_tree(Leaf(0, 3), beta=2)

    def test_wrong_link_count_rejected(self):
        with pytest.raises(ValueError):
            validate_tree(BALANCED4, n_links=3)
