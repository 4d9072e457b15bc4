"""
Tests for parallel estimation runs and pooling
"""
import resource
import time

import numpy as np
import pytest

from estimnet.config import OutputFile
from estimnet.exceptions import PreconditionError
from estimnet.io_formats import emit_results
from estimnet.models.digraph import Digraph
from estimnet.models.effect import EffectKind, ModelSpec
from estimnet.models.estimation import EEConfig, SimSpec
from estimnet.services.ee_estimator import sampling_model
from estimnet.services.estimation_service import estimation_service, resolve_workers
from estimnet.services.simulator import simulate
from tests.conftest import random_attributes, random_digraph

CFG = EEConfig(m=50, M1=5, M_outer=8, M_inner=5)
MODEL = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY, EffectKind.AINS)


class TestHelpers:

    def test_resolve_workers(self):
        assert resolve_workers(4, 2) == 2
        assert resolve_workers(1, 8) == 1
        assert resolve_workers(0, 1) == 1

    def test_sampling_model_drops_arc_under_ifd(self):
        cfg = EEConfig(m=50, M1=5, M_outer=8, M_inner=5, use_ifd=True)
        assert sampling_model(MODEL, cfg).labels == ["Reciprocity", "AinSpread"]
        assert sampling_model(MODEL, CFG).labels == MODEL.labels


class TestEstimate:

    def test_one_trace_per_run(self):
        g = random_digraph(25, 0.1, seed=1)
        result = estimation_service.estimate(g, None, MODEL, CFG, n_runs=3, seed=1, workers=1)
        assert [t.run_index for t in result.traces] == [0, 1, 2]
        assert len(result.runs) == 3
        assert set(result.observed) == set(MODEL.labels)
        assert result.observed["Arc"] == g.L
        if result.converged:
            assert result.pooled.labels == MODEL.labels
        else:
            assert result.n_converged == 0

    def test_ifd_estimates_include_arc(self):
        g = random_digraph(25, 0.1, seed=2)
        cfg = EEConfig(m=50, M1=5, M_outer=8, M_inner=5, use_ifd=True)
        result = estimation_service.estimate(g, None, MODEL, cfg, n_runs=2, seed=2, workers=1)
        assert result.traces[0].theta_labels == ["Arc", "Reciprocity", "AinSpread"]
        assert result.runs[0].labels == ["Arc", "Reciprocity", "AinSpread"]

    def test_ifd_keeps_configured_effect_order(self):
        g = random_digraph(25, 0.1, seed=2)
        model = ModelSpec.of(EffectKind.RECIPROCITY, EffectKind.ARC, EffectKind.AINS)
        cfg = EEConfig(m=50, M1=5, M_outer=8, M_inner=5, use_ifd=True)
        result = estimation_service.estimate(g, None, model, cfg, n_runs=2, seed=2, workers=1)
        assert list(result.observed) == model.labels
        assert result.traces[0].theta_labels == model.labels
        assert result.runs[0].labels == model.labels
        if result.converged:
            assert result.pooled.labels == model.labels

    def test_ifd_arc_only_model(self):
        g = random_digraph(60, 0.05, seed=8)
        cfg = EEConfig(m=50, M1=5, M_outer=8, M_inner=5, use_ifd=True)
        result = estimation_service.estimate(g, None, ModelSpec.of(EffectKind.ARC), cfg, n_runs=2, seed=8, workers=1)
        assert result.n_converged == 2
        assert result.pooled.labels == ["Arc"]
        assert result.pooled.theta[0] == pytest.approx(np.log(g.L / (g.max_arcs - g.L)), abs=0.15)
        assert np.isnan(result.pooled.se[0])
        assert np.isnan(result.pooled.t_ratio[0])
        assert not result.pooled.significant[0]

    def test_single_node_rejected(self):
        with pytest.raises(PreconditionError):
            estimation_service.estimate(Digraph(1), None, ModelSpec.of(EffectKind.ARC), CFG, n_runs=1, workers=1)

    def test_attribute_effects(self):
        g = random_digraph(25, 0.1, seed=3)
        attrs = random_attributes(25, seed=3)
        model = ModelSpec.of(EffectKind.ARC, (EffectKind.SENDER, "b"), (EffectKind.MATCHING, "c"))
        result = estimation_service.estimate(g, attrs, model, CFG, n_runs=1, seed=3, workers=1)
        assert result.traces[0].theta_matrix().shape == (8, 3)

    def test_hub_removal(self):
        g = random_digraph(25, 0.1, seed=4)
        for v in range(1, 20):
            if not g.is_arc(0, v):
                g.insert_arc(0, v)
        result = estimation_service.estimate(g, None, MODEL, CFG, n_runs=1, seed=4, workers=1, max_degree=10)
        assert 0 in result.hubs_removed
        assert result.observed["Arc"] < g.L

    def test_same_result_for_any_worker_count(self):
        g = random_digraph(25, 0.1, seed=5)
        serial = estimation_service.run_traces(g, None, MODEL, CFG, n_runs=2, seed=6, workers=1)
        parallel = estimation_service.run_traces(g, None, MODEL, CFG, n_runs=2, seed=6, workers=2)
        for a, b in zip(serial, parallel):
            np.testing.assert_array_equal(a.theta_matrix(), b.theta_matrix())
            np.testing.assert_array_equal(a.dz_matrix(), b.dz_matrix())

    def test_observed_graph_unchanged(self):
        g = random_digraph(25, 0.1, seed=7)
        arcs = sorted(g.arcs)
        estimation_service.estimate(g, None, MODEL, CFG, n_runs=2, seed=7, workers=1)
        assert sorted(g.arcs) == arcs


@pytest.mark.slow
class TestIFDRecovery:

    def test_reciprocity_sign_recovered(self):
        spec = SimSpec(n=300, model=ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY), theta=[-5.0, 4.0],
                       burnin=2_000_000, interval=1, seed=11)
        g = simulate(spec).graphs[0]
        cfg = EEConfig(K_A=1e-6, m=1000, M1=50, M_outer=200, M_inner=50, use_ifd=True)
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY)
        result = estimation_service.estimate(g, None, model, cfg, n_runs=4, seed=12)
        assert result.converged
        k = result.pooled.labels.index("Reciprocity")
        assert result.pooled.theta[k] == pytest.approx(4.0, abs=1.0)


class TestReproducibleOutput:

    def emit(self, out_dir, workers):
        g = random_digraph(25, 0.1, seed=9)
        cfg = EEConfig(m=50, M1=5, M_outer=8, M_inner=5, snapshot_every=4)
        result = estimation_service.estimate(g, None, MODEL, cfg, n_runs=2, seed=13, workers=workers)
        return emit_results(result.pooled, result.runs, out_dir, result.traces, result.observed)

    def test_same_seed_writes_identical_files(self, tmp_path):
        first = self.emit(tmp_path / "a", workers=1)
        second = self.emit(tmp_path / "b", workers=2)
        assert sorted(p.name for p in first) == sorted(p.name for p in second)
        assert OutputFile.THETA_TRACE.format(run=1) in {p.name for p in first}
        for path in first:
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes(), path.name


@pytest.mark.slow
class TestScale:

    def test_hundred_thousand_nodes(self):
        n, mean_degree = 100_000, 5.0
        rng = np.random.default_rng(21)
        size = int(n * mean_degree / 2)
        heads, tails = rng.integers(n, size=size), rng.integers(n, size=size)
        arcs = {(int(i), int(j)) for i, j in zip(heads, tails) if i != j}
        g = Digraph.from_arcs(n, sorted(arcs))
        model = ModelSpec.of(EffectKind.ARC, EffectKind.RECIPROCITY)
        cfg = EEConfig(m=1000, M1=50, M_outer=100, M_inner=100, use_ifd=True)

        started = time.perf_counter()
        result = estimation_service.estimate(g, None, model, cfg, n_runs=1, seed=22, workers=1)
        elapsed = time.perf_counter() - started

        trace = result.traces[0]
        assert not trace.diverged
        assert len(trace) == 100
        assert trace.theta_labels == ["Arc", "Reciprocity"]
        assert elapsed < 30 * 60
        # ru_maxrss is in KiB on Linux
        assert resource.getrusage(resource.RUSAGE_SELF).ru_maxrss < 4 * 1024 * 1024
