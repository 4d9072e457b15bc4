"""
Estimation Service
Runs independent EE estimations in parallel and pools their estimates
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging
import os

from estimnet.config import settings
from estimnet.exceptions import EstimationFailedError, PreconditionError
from estimnet.models.attributes import AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import ModelSpec
from estimnet.models.estimation import EEConfig, PooledEstimate, RunEstimate, ThetaTrace
from estimnet.services.change_stats import compute_statistics, statistics_record
from estimnet.services.ee_estimator import ee_estimate
from estimnet.services.inference import estimate_from_trace, pool_runs

logger = logging.getLogger(__name__)


@dataclass
class EstimationResult:
    """Traces, per-run estimates and the pooled estimate of one estimation."""
    model: ModelSpec
    observed: Dict[str, float]
    traces: List[ThetaTrace]
    runs: List[RunEstimate]
    pooled: Optional[PooledEstimate] = None
    hubs_removed: List[int] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.pooled is not None

    @property
    def n_converged(self) -> int:
        return sum(1 for r in self.runs if r.converged)


# Arguments of one worker job: (N, arcs, use_prefilter, prefilter_capacity,
# attrs, sampling model, cfg, run_index, seed)
RunJob = Tuple[int, List[Tuple[int, int]], bool, int, Optional[AttributeSet], ModelSpec, EEConfig, int, int]


def _run_job(job: RunJob) -> ThetaTrace:
    """Worker entry point; rebuilds a private graph from the arc list."""
    n, arcs, use_prefilter, capacity, attrs, model, cfg, run_index, seed = job
    g = Digraph.from_arcs(n, arcs, use_prefilter=use_prefilter, prefilter_capacity=capacity)
    return ee_estimate(g, attrs, model, cfg, run_index=run_index, seed=seed, in_place=True)


def resolve_workers(requested: Optional[int], n_runs: int) -> int:
    workers = requested if requested is not None else settings.MAX_WORKERS
    if workers <= 0:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_runs))


class EstimationService:
    """
    Parallel independent EE runs on one observed network.
    """

    @staticmethod
    def run_traces(
        g_obs: Digraph,
        attrs: Optional[AttributeSet],
        model: ModelSpec,
        cfg: EEConfig,
        n_runs: int,
        seed: int = 0,
        workers: Optional[int] = None,
    ) -> List[ThetaTrace]:
        """One trace per run, in run index order. Each run draws from its own stream."""
        workers = resolve_workers(workers, n_runs)
        arcs = list(g_obs.arcs)
        jobs: List[RunJob] = [
            (g_obs.n, arcs, g_obs.use_prefilter, g_obs.prefilter_capacity, attrs, model, cfg, r, seed)
            for r in range(n_runs)
        ]
        logger.info(f"Starting {n_runs} runs on {workers} worker(s), seed={seed}")
        if workers == 1:
            return [_run_job(job) for job in jobs]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_job, jobs))

    @staticmethod
    def estimate(
        g_obs: Digraph,
        attrs: Optional[AttributeSet],
        model: ModelSpec,
        cfg: EEConfig,
        n_runs: int = 8,
        seed: int = 0,
        workers: Optional[int] = None,
        max_degree: Optional[int] = None,
    ) -> EstimationResult:
        """
        Estimate the model on g_obs with n_runs independent runs.

        The pooled estimate is None when no run converged.
        """
        hubs: List[int] = []
        if max_degree is not None:
            g_obs, hubs = g_obs.without_hubs(max_degree)
            logger.info(f"Removed arcs of {len(hubs)} nodes with degree above {max_degree}; L={g_obs.L}")
        if g_obs.n < 2:
            raise PreconditionError(f"estimation needs at least 2 nodes, got {g_obs.n}")
        if attrs is not None:
            model.validate_against(attrs)

        observed = statistics_record(model, compute_statistics(model, g_obs, attrs))
        logger.info(f"Observed statistics: {observed}")

        traces = EstimationService.run_traces(
            g_obs, attrs, model, cfg, n_runs, seed=seed, workers=workers
        )
        runs = [estimate_from_trace(trace, cfg.burnin_fraction) for trace in traces]
        result = EstimationResult(model=model, observed=observed, traces=traces, runs=runs, hubs_removed=hubs)
        try:
            result.pooled = pool_runs(runs)
            logger.info(f"Pooled {result.pooled.n_runs_used} of {n_runs} runs")
        except EstimationFailedError as e:
            logger.warning(f"Estimation not converged: {e}")
        return result


# Singleton instance
estimation_service = EstimationService()
