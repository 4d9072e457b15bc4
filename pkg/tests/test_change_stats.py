"""
Tests for change statistics and full statistics
"""
import numpy as np
import pytest

from estimnet.exceptions import PreconditionError
from estimnet.models.attributes import MISSING, AttributeKind, AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import Effect, EffectKind, ModelSpec
from estimnet.services.change_stats import (
    ChangeStatEvaluator,
    Direction,
    change_stat,
    change_stats_all,
    compute_statistic,
    compute_statistics,
    statistics_record,
)
from tests.conftest import all_effects_model, random_attributes, random_digraph
from tests.oracle import dense_matrix, dense_statistics


class TestDocumentedValues:

    def test_arc_is_one(self):
        g = Digraph.from_arcs(4, [(0, 1), (2, 3)])
        assert change_stat(Effect(kind=EffectKind.ARC), g, None, 1, 2) == 1.0

    def test_reciprocity(self):
        effect = Effect(kind=EffectKind.RECIPROCITY)
        assert change_stat(effect, Digraph(3), None, 0, 1) == 0.0
        assert change_stat(effect, Digraph.from_arcs(3, [(1, 0)]), None, 0, 1) == 1.0

    def test_in_star(self):
        g = Digraph.from_arcs(5, [(1, 3), (2, 3)])
        assert change_stat(Effect(kind=EffectKind.AINS), g, None, 4, 3) == pytest.approx(1.5)

    def test_first_out_arc_star_is_zero(self):
        g = Digraph.from_arcs(4, [(1, 2)])
        assert change_stat(Effect(kind=EffectKind.AOUTS), g, None, 0, 3) == 0.0

    def test_triangle_closure(self):
        g = Digraph.from_arcs(4, [(1, 2), (2, 3)])
        assert change_stat(Effect(kind=EffectKind.AT_T), g, None, 1, 3) == pytest.approx(1.0)

    def test_isolates(self):
        assert change_stat(Effect(kind=EffectKind.ISOLATES), Digraph(3), None, 0, 1) == -2.0

    def test_diff_identical_values(self):
        attrs = AttributeSet(3)
        attrs.add_column(AttributeKind.CONTINUOUS, "u", [0.3, 0.3, 0.3])
        effect = Effect(kind=EffectKind.DIFF, attribute="u")
        assert change_stat(effect, Digraph(3), attrs, 0, 1) == 0.0

    def test_matching_and_mismatching(self):
        attrs = AttributeSet(3)
        attrs.add_column(AttributeKind.CATEGORICAL, "c", [1, 1, 0])
        matching = Effect(kind=EffectKind.MATCHING, attribute="c")
        mismatching = Effect(kind=EffectKind.MISMATCHING, attribute="c")
        assert change_stat(matching, Digraph(3), attrs, 0, 1) == 1.0
        assert change_stat(mismatching, Digraph(3), attrs, 0, 1) == 0.0
        assert change_stat(mismatching, Digraph(3), attrs, 0, 2) == 1.0

    def test_missing_attribute_contributes_zero(self):
        attrs = AttributeSet(3)
        attrs.add_column(AttributeKind.BINARY, "b", [1, MISSING, 1])
        g = Digraph(3)
        assert change_stat(Effect(kind=EffectKind.SENDER, attribute="b"), g, attrs, 1, 0) == 0.0
        assert change_stat(Effect(kind=EffectKind.RECEIVER, attribute="b"), g, attrs, 0, 1) == 0.0
        assert change_stat(Effect(kind=EffectKind.INTERACTION, attribute="b"), g, attrs, 0, 1) == 0.0
        assert change_stat(Effect(kind=EffectKind.INTERACTION, attribute="b"), g, attrs, 0, 2) == 1.0

    def test_in_star_delta_monotone_in_degree(self):
        effect = Effect(kind=EffectKind.AINS)
        g = Digraph(8)
        deltas = []
        for tail in range(1, 7):
            deltas.append(change_stat(effect, g, None, tail, 0))
            g.insert_arc(tail, 0)
        assert deltas == sorted(deltas)


class TestPreconditions:

    def test_self_loop(self):
        with pytest.raises(PreconditionError):
            change_stat(Effect(kind=EffectKind.ARC), Digraph(3), None, 1, 1)

    def test_present_arc_add(self):
        g = Digraph.from_arcs(3, [(0, 1)])
        with pytest.raises(PreconditionError):
            change_stat(Effect(kind=EffectKind.ARC), g, None, 0, 1)
        with pytest.raises(PreconditionError):
            change_stats_all(ModelSpec.of(EffectKind.ARC), g, None, 0, 1, Direction.ADD)

    def test_absent_arc_delete(self):
        with pytest.raises(PreconditionError):
            change_stats_all(ModelSpec.of(EffectKind.ARC), Digraph(3), None, 0, 1, Direction.DELETE)

    def test_attribute_effect_without_attributes(self):
        with pytest.raises(PreconditionError):
            change_stat(Effect(kind=EffectKind.SENDER, attribute="b"), Digraph(3), None, 0, 1)


class TestAgainstDenseOracle:

    def test_full_statistics_match_dense(self, full_model, attrs30):
        for seed in range(5):
            g = random_digraph(30, 0.08, seed=seed)
            sparse = compute_statistics(full_model, g, attrs30)
            dense = dense_statistics(full_model, dense_matrix(g), attrs30)
            np.testing.assert_allclose(sparse, dense, rtol=1e-10, atol=1e-9)

    def test_random_toggles_match_statistic_differences(self):
        model = all_effects_model()
        n = 20
        attrs = random_attributes(n, seed=3)
        evaluator = ChangeStatEvaluator(model, attrs)
        rng = np.random.default_rng(17)
        checked = 0
        for graph_seed in range(40):
            g = random_digraph(n, 0.12, seed=100 + graph_seed)
            for _ in range(5):
                i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
                before = dense_statistics(model, dense_matrix(g), attrs)
                if g.is_arc(i, j):
                    delta = np.array(evaluator.delete_deltas(g, i, j))
                else:
                    delta = np.array(evaluator.add_deltas(g, i, j))
                g.toggle_arc(i, j)
                after = dense_statistics(model, dense_matrix(g), attrs)
                np.testing.assert_allclose(delta, after - before, rtol=1e-9, atol=1e-9)
                checked += 1
        assert checked == 200

    @pytest.mark.slow
    def test_random_toggles_over_many_graphs(self):
        model = all_effects_model()
        rng = np.random.default_rng(29)
        checked = 0
        for graph_seed in range(200):
            n = int(rng.integers(5, 31))
            attrs = random_attributes(n, seed=500 + graph_seed)
            evaluator = ChangeStatEvaluator(model, attrs)
            g = random_digraph(n, float(rng.uniform(0.0, 0.2)), seed=500 + graph_seed)
            before = dense_statistics(model, dense_matrix(g), attrs)
            for _ in range(6):
                i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
                if g.is_arc(i, j):
                    delta = np.array(evaluator.delete_deltas(g, i, j))
                else:
                    delta = np.array(evaluator.add_deltas(g, i, j))
                g.toggle_arc(i, j)
                after = dense_statistics(model, dense_matrix(g), attrs)
                np.testing.assert_allclose(delta, after - before, rtol=1e-9, atol=1e-9)
                before = after
                checked += 1
        assert checked == 1200

    def test_delete_then_add_cancels(self, full_model, attrs30):
        g = random_digraph(30, 0.1, seed=21)
        for i, j in list(g.arcs)[:20]:
            deleted = change_stats_all(full_model, g, attrs30, i, j, Direction.DELETE)
            g.delete_arc(i, j)
            added = change_stats_all(full_model, g, attrs30, i, j, Direction.ADD)
            g.insert_arc(i, j)
            np.testing.assert_allclose(deleted + added, 0.0, atol=1e-12)

    def test_empty_graph_statistics(self, full_model, attrs30):
        stats = statistics_record(full_model, compute_statistics(full_model, Digraph(30), attrs30))
        assert stats["Arc"] == 0.0
        assert stats["Isolates"] == 30.0
        assert stats["AinSpread"] == 0.0


class TestStructuralIdentities:

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_td_is_t_plus_half_d(self, seed):
        g = random_digraph(25, 0.1, seed=seed)
        t = compute_statistic(Effect(kind=EffectKind.A2P_T), g)
        d = compute_statistic(Effect(kind=EffectKind.A2P_D), g)
        td = compute_statistic(Effect(kind=EffectKind.A2P_TD), g)
        assert td == pytest.approx(t + 0.5 * d)

    @pytest.mark.parametrize("seed", [4, 5])
    def test_two_path_d_is_u_of_reversed_graph(self, seed):
        g = random_digraph(25, 0.1, seed=seed)
        d = compute_statistic(Effect(kind=EffectKind.A2P_D), g)
        u = compute_statistic(Effect(kind=EffectKind.A2P_U), g.reversed())
        assert d == pytest.approx(u)

    def test_mutual_dyad_counted_once(self):
        g = Digraph.from_arcs(3, [(0, 1), (1, 0)])
        assert compute_statistic(Effect(kind=EffectKind.RECIPROCITY), g) == 1.0

    def test_large_lambda_alternating_close_to_count(self):
        # lambda -> infinity gives the plain two-path count
        g = Digraph.from_arcs(4, [(0, 1), (1, 2), (0, 3), (3, 2)])
        value = compute_statistic(Effect(kind=EffectKind.A2P_T, lam=1e6), g)
        assert value == pytest.approx(2.0, rel=1e-5)

    def test_lambda_one_counts_pairs(self):
        g = Digraph.from_arcs(4, [(0, 1), (1, 2), (0, 3), (3, 2)])
        assert compute_statistic(Effect(kind=EffectKind.A2P_T, lam=1.0), g) == 1.0
