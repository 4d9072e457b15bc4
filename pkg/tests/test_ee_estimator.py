"""
Tests for contrastive divergence initialisation and the EE loop
"""
from math import log

import numpy as np
import pytest
from pydantic import ValidationError

from estimnet.exceptions import PreconditionError
from estimnet.models.digraph import Digraph
from estimnet.models.effect import EffectKind, ModelSpec
from estimnet.models.estimation import EEConfig, SamplerState
from estimnet.services.change_stats import compute_statistics
from estimnet.services.ee_estimator import cd_initialize, ee_estimate, init_D, initial_theta
from estimnet.services.estimation_service import estimation_service
from estimnet.services.sampler import arc_param_from_V
from estimnet.utils.rng import RandomStream
from tests.conftest import all_effects_model, random_attributes, random_digraph

SMALL = dict(m=50, M1=5, M_outer=8, M_inner=5)


class TestInitD:

    def test_floor_at_one(self):
        D = init_D(Digraph(10), ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY))
        np.testing.assert_array_equal(D, [1.0, 1.0])

    def test_reciprocal_of_statistic(self):
        n = 100
        arcs = [(i, j) for i in range(n) for j in range(n) if i != j][:4000]
        g = Digraph.from_arcs(n, arcs, use_prefilter=False)
        assert init_D(g, ModelSpec.of(EffectKind.ARC))[0] == pytest.approx(2.5e-4)

    def test_positive_and_finite_for_all_effects(self):
        model = all_effects_model()
        D = init_D(random_digraph(20, 0.1, seed=1), model, random_attributes(20, seed=1))
        assert np.all(D > 0) and np.all(np.isfinite(D))


class TestInitialTheta:

    def test_basic_sampler_starts_at_log_odds(self):
        g = random_digraph(20, 0.1, seed=2)
        theta = initial_theta(g, ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY), use_ifd=False)
        assert theta[0] == pytest.approx(log(g.L / (g.max_arcs - g.L)))
        assert theta[1] == 0.0

    def test_ifd_starts_at_zero(self):
        g = random_digraph(20, 0.1, seed=2)
        theta = initial_theta(g, ModelSpec.of(EffectKind.RECIPROCITY), use_ifd=True)
        np.testing.assert_array_equal(theta, [0.0])


class TestCDInitialize:

    def test_graph_restored(self):
        g = random_digraph(25, 0.1, seed=3)
        arcs = sorted(g.arcs)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY, EffectKind.AT_T)
        cd_initialize(g, None, model, EEConfig(**SMALL))
        assert sorted(g.arcs) == arcs
        g.check_invariants()

    def test_sign_steps_bounded(self):
        g = random_digraph(25, 0.1, seed=4)
        model = ModelSpec.of(EffectKind.RECIPROCITY, EffectKind.AINS)
        cfg = EEConfig(m=50, M1=50, K1_A=0.1, M_outer=8, M_inner=5, use_ifd=True)
        theta = cd_initialize(g, None, model, cfg)
        assert np.all(np.abs(theta) <= 5.0 + 1e-12)

    def test_one_round_is_unscaled_sign_step(self):
        g = random_digraph(25, 0.1, seed=4)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY, EffectKind.AT_T)
        cfg = EEConfig(m=50, M1=1, K1_A=0.1, M_outer=8, M_inner=5)
        step = np.abs(cd_initialize(g, None, model, cfg) - initial_theta(g, model, False))
        assert np.all(np.isclose(step, 0.0) | np.isclose(step, 0.1))
        assert np.any(np.isclose(step, 0.1))

    def test_zero_rounds_returns_start(self):
        g = random_digraph(25, 0.1, seed=5)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY)
        cfg = EEConfig(m=50, M1=0, M_outer=8, M_inner=5)
        np.testing.assert_array_equal(cd_initialize(g, None, model, cfg), initial_theta(g, model, False))

    def test_ifd_state_carries_V(self):
        g = random_digraph(25, 0.1, seed=6)
        state = SamplerState(rng=RandomStream(1, (0,)), k_ifd=0.5)
        model = ModelSpec.of(EffectKind.RECIPROCITY, EffectKind.AT_T)
        cd_initialize(g, None, model, EEConfig(**SMALL, use_ifd=True), state)
        assert state.is_delete is False
        assert state.l_obs == g.L


class TestEEEstimate:

    def test_zero_gain_keeps_theta_constant(self):
        g = random_digraph(25, 0.1, seed=7)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY)
        trace = ee_estimate(g, None, model, EEConfig(**SMALL, K_A=0.0), seed=1)
        thetas = trace.theta_matrix()
        assert len(trace) == 8
        np.testing.assert_array_equal(thetas, np.broadcast_to(thetas[0], thetas.shape))

    def test_observed_graph_untouched(self):
        g = random_digraph(25, 0.1, seed=8)
        arcs = sorted(g.arcs)
        ee_estimate(g, None, ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY), EEConfig(**SMALL), seed=2)
        assert sorted(g.arcs) == arcs

    def test_dz_tracks_the_chain(self):
        g = random_digraph(25, 0.1, seed=9)
        attrs = random_attributes(25, seed=9)
        model = ModelSpec.of(
            EffectKind.ARC, EffectKind.RECIPROCITY, EffectKind.AT_T, (EffectKind.SENDER, "b"), (EffectKind.DIFF, "u"),
        )
        observed = compute_statistics(model, g, attrs)
        trace = ee_estimate(g, attrs, model, EEConfig(**SMALL), seed=3, in_place=True)
        np.testing.assert_allclose(trace.stats_matrix()[-1], compute_statistics(model, g, attrs), atol=1e-8)
        np.testing.assert_allclose(trace.observed, observed)

    def test_reproducible(self):
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY, EffectKind.AINS)
        cfg = EEConfig(**SMALL)
        traces = [ee_estimate(random_digraph(25, 0.1, seed=10), None, model, cfg, run_index=2, seed=4) for _ in range(2)]
        np.testing.assert_array_equal(traces[0].theta_matrix(), traces[1].theta_matrix())
        np.testing.assert_array_equal(traces[0].dz_matrix(), traces[1].dz_matrix())

    def test_runs_use_independent_streams(self):
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY)
        g = random_digraph(25, 0.1, seed=11)
        a = ee_estimate(g, None, model, EEConfig(**SMALL), run_index=0, seed=5)
        b = ee_estimate(g, None, model, EEConfig(**SMALL), run_index=1, seed=5)
        assert not np.array_equal(a.dz_matrix(), b.dz_matrix())

    def test_ifd_trace_has_leading_arc_column(self):
        g = random_digraph(25, 0.1, seed=12)
        model = ModelSpec.of(EffectKind.RECIPROCITY, EffectKind.AINS)
        trace = ee_estimate(g, None, model, EEConfig(**SMALL, use_ifd=True), seed=6)
        assert trace.theta_labels == ["Arc", "Reciprocity", "AinSpread"]
        assert trace.stat_labels == ["Reciprocity", "AinSpread"]
        assert trace.theta_matrix().shape == (8, 3)
        assert np.all(np.isfinite(trace.theta_matrix()))

    def test_ifd_arc_keeps_model_position(self):
        g = random_digraph(25, 0.1, seed=14)
        model = ModelSpec.of(EffectKind.RECIPROCITY, EffectKind.ARC, EffectKind.AINS)
        trace = ee_estimate(g, None, model, EEConfig(**SMALL, use_ifd=True), seed=6)
        assert trace.theta_labels == ["Reciprocity", "Arc", "AinSpread"]
        assert trace.stat_labels == ["Reciprocity", "AinSpread"]
        arc = [arc_param_from_V(V, g.L, g.n) for V in trace.V]
        np.testing.assert_allclose(trace.theta_matrix()[:, 1], arc)

    def test_ifd_arc_only_model(self):
        g = random_digraph(50, 0.05, seed=15)
        trace = ee_estimate(g, None, ModelSpec.of(EffectKind.ARC), EEConfig(**SMALL, use_ifd=True), seed=8)
        assert trace.theta_labels == ["Arc"]
        assert trace.stat_labels == []
        assert trace.stats_matrix().shape == (8, 0)
        # every move is accepted at V = 0, so add and delete proposals balance
        np.testing.assert_array_equal(trace.V, 0.0)
        np.testing.assert_allclose(trace.theta_matrix()[:, 0], log((g.L + 1) / (g.max_arcs - g.L)))

    def test_single_node_rejected(self):
        with pytest.raises(PreconditionError):
            ee_estimate(Digraph(1), None, ModelSpec.of(EffectKind.ARC), EEConfig(**SMALL))

    def test_huge_gain_diverges(self):
        g = random_digraph(25, 0.1, seed=13)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY)
        trace = ee_estimate(g, None, model, EEConfig(**SMALL, K_A=1e12), seed=7)
        assert trace.diverged
        assert len(trace) >= 1


class TestSnapshots:

    def test_off_by_default(self):
        g = random_digraph(25, 0.1, seed=16)
        trace = ee_estimate(g, None, ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY), EEConfig(**SMALL), seed=9)
        assert trace.snapshots == []

    def test_schedule_and_fields(self):
        g = random_digraph(25, 0.1, seed=17)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY)
        trace = ee_estimate(g, None, model, EEConfig(**SMALL, snapshot_every=3), run_index=4, seed=10)
        assert [s["t"] for s in trace.snapshots] == [0, 15, 30]
        assert all(s["run"] == 4 for s in trace.snapshots)
        first = trace.snapshots[0]
        assert first["arcs"] == g.L
        assert first["Arc"] == g.L
        assert {"density", "reciprocity", "components", "global_clustering"} <= set(first)

    def test_last_snapshot_matches_chain_graph(self):
        g = random_digraph(25, 0.1, seed=18)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY, EffectKind.AT_T)
        trace = ee_estimate(g, None, model, EEConfig(**SMALL, snapshot_every=8), seed=11, in_place=True)
        last = trace.snapshots[-1]
        assert last["t"] == 40
        assert last["arcs"] == g.L
        expected = compute_statistics(model, g)
        for label, value in zip(model.labels, expected):
            assert last[label] == pytest.approx(value, abs=1e-8)


class TestEEConfig:

    def test_too_few_retained_iterations(self):
        with pytest.raises(ValidationError):
            EEConfig(M_outer=6)

    def test_inner_steps_at_least_two(self):
        with pytest.raises(ValidationError):
            EEConfig(M_inner=1)


@pytest.mark.slow
class TestRecovery:

    @staticmethod
    def bernoulli_graph(n=500, p=0.005, seed=14) -> Digraph:
        rng = np.random.default_rng(seed)
        X = rng.random((n, n)) < p
        np.fill_diagonal(X, False)
        return Digraph.from_arcs(n, ((int(i), int(j)) for i, j in zip(*np.nonzero(X))))

    def test_bernoulli_arc_parameter(self):
        g = self.bernoulli_graph()
        mle = log(g.L / (g.max_arcs - g.L))
        cfg = EEConfig(K_A=1e-6, m=1000, M1=50, M_outer=200, M_inner=50)
        result = estimation_service.estimate(g, None, ModelSpec.of(EffectKind.ARC), cfg, n_runs=4, seed=8, workers=2)
        assert result.n_converged == 4
        for run in result.runs:
            assert abs(run.t_ratio[0]) <= 0.3
        assert result.pooled.theta[0] == pytest.approx(mle, abs=0.1)
        assert result.pooled.se[0] > 0

    def test_bernoulli_arc_parameter_from_V(self):
        g = self.bernoulli_graph(seed=15)
        mle = log(g.L / (g.max_arcs - g.L))
        cfg = EEConfig(K_A=1e-6, m=1000, M1=50, M_outer=100, M_inner=50, use_ifd=True)
        result = estimation_service.estimate(g, None, ModelSpec.of(EffectKind.ARC), cfg, n_runs=2, seed=9, workers=2)
        assert result.converged
        assert result.pooled.labels == ["Arc"]
        assert result.pooled.theta[0] == pytest.approx(mle, abs=0.15)
        assert np.isnan(result.pooled.se[0])
