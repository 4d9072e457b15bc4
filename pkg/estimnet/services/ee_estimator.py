"""
EE Estimator Service
Contrastive divergence initialisation and the Equilibrium Expectation loop
"""
from math import log
from typing import Callable, Dict, List, Optional, Tuple
import logging

import numpy as np

from estimnet.config import settings
from estimnet.exceptions import DivergenceError, PreconditionError
from estimnet.models.attributes import AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import EffectKind, ModelSpec
from estimnet.models.estimation import DivergenceReason, EEConfig, SamplerState, ThetaTrace
from estimnet.services.change_stats import ChangeStatEvaluator, compute_statistics
from estimnet.services.sampler import arc_param_from_V, basic_sampler, ifd_sampler
from estimnet.services.simulator import diagnostics_summary
from estimnet.utils.rng import RandomStream, StreamKind

logger = logging.getLogger(__name__)

ARC_LABEL = EffectKind.ARC.value

Sampler = Callable[..., object]


def _sampler_for(cfg: EEConfig) -> Sampler:
    return ifd_sampler if cfg.use_ifd else basic_sampler


def _undo(g: Digraph, moves: List[Tuple[int, int]]) -> None:
    for i, j in reversed(moves):
        g.toggle_arc(i, j)
    moves.clear()


def init_D(g_obs: Digraph, model: ModelSpec, attrs: Optional[AttributeSet] = None) -> np.ndarray:
    """Initial step-size multipliers 1 / max(|z_A(g_obs)|, 1)."""
    z_obs = compute_statistics(model, g_obs, attrs)
    return 1.0 / np.maximum(np.abs(z_obs), 1.0)


def initial_theta(g_obs: Digraph, model: ModelSpec, use_ifd: bool) -> np.ndarray:
    """Zero vector, with the Arc parameter at the Bernoulli log-odds for the basic sampler."""
    theta = np.zeros(len(model), dtype=np.float64)
    if not use_ifd and model.has(EffectKind.ARC):
        L, L_max = g_obs.L, g_obs.max_arcs
        if 0 < L < L_max:
            theta[model.index_of(ARC_LABEL)] = log(L / (L_max - L))
    return theta


def cd_initialize(
    g_obs: Digraph,
    attrs: Optional[AttributeSet],
    model: ModelSpec,
    cfg: EEConfig,
    state: Optional[SamplerState] = None,
    evaluator: Optional[ChangeStatEvaluator] = None,
) -> np.ndarray:
    """
    Contrastive divergence starting values.

    Each of the M1 rounds runs the sampler m steps from the observed graph,
    takes a sign step of size K1_A against the statistic drift, and undoes
    the accepted moves so the next round starts at the data again. g_obs is
    mutated during a round and is restored on return.
    """
    if state is None:
        state = SamplerState(rng=RandomStream.for_run(0, StreamKind.ESTIMATION, 0), k_ifd=cfg.K_ifd)
    if evaluator is None:
        evaluator = ChangeStatEvaluator(model, attrs)
    sampler = _sampler_for(cfg)
    theta = initial_theta(g_obs, model, cfg.use_ifd)
    moves: List[Tuple[int, int]] = []

    logger.info(f"CD initialisation: {cfg.M1} rounds of {cfg.m} steps")
    for round_index in range(cfg.M1):
        state.is_delete = False
        try:
            out = sampler(g_obs, attrs, model, theta, cfg.m, state, evaluator, moves)
        finally:
            _undo(g_obs, moves)
        theta = theta - cfg.K1_A * np.sign(out.dz_add + out.dz_del)
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(f"non-finite theta in CD round {round_index}: {theta}")
    state.is_delete = False
    return theta


def _check_divergence(theta: np.ndarray) -> Optional[DivergenceReason]:
    if not np.all(np.isfinite(theta)):
        return DivergenceReason.NAN
    if np.any(np.abs(theta) > settings.HUGE_THETA):
        return DivergenceReason.HUGE
    return None


def sampling_model(model: ModelSpec, cfg: EEConfig) -> ModelSpec:
    """Under IFD the Arc effect is carried by V and is not a sampled effect."""
    if cfg.use_ifd and model.has(EffectKind.ARC):
        return model.without(EffectKind.ARC)
    return model


def _arc_position(model: ModelSpec, cfg: EEConfig) -> Optional[int]:
    """Column of the V-derived Arc parameter in the trace, None without IFD."""
    if not cfg.use_ifd:
        return None
    return model.index_of(ARC_LABEL) if model.has(EffectKind.ARC) else 0


def _snapshot(g: Digraph, run_index: int, t: int, labels: List[str], stats: np.ndarray) -> Dict[str, float]:
    record: Dict[str, float] = {"run": run_index, "t": t}
    record.update(diagnostics_summary(g).to_record())
    record.update(zip(labels, stats.tolist()))
    return record


def ee_estimate(
    g_obs: Digraph,
    attrs: Optional[AttributeSet],
    model: ModelSpec,
    cfg: EEConfig,
    run_index: int = 0,
    seed: int = 0,
    rng: Optional[RandomStream] = None,
    in_place: bool = False,
) -> ThetaTrace:
    """
    One Equilibrium Expectation run.

    The chain starts at the observed graph and is never reset; dz is the
    accumulated statistic drift from the observed statistics. After every
    inner update the parameters move against the drift with step
    K_A * D * dz^2; after every block of M_inner updates the step sizes D
    are rescaled from the mean and sd of the block's parameter values.

    Under the IFD sampler Arc is not sampled; the trace carries an Arc
    column derived from the auxiliary parameter V, at Arc's position in
    the model or first when the model has no Arc effect. With
    cfg.snapshot_every > 0 the chain graph is summarised at t=0 and every
    snapshot_every outer iterations.
    """
    if g_obs.n < 2:
        raise PreconditionError(f"estimation needs at least 2 nodes, got {g_obs.n}")
    g = g_obs if in_place else g_obs.copy()
    if rng is None:
        rng = RandomStream.for_run(seed, StreamKind.ESTIMATION, run_index)
    state = SamplerState(rng=rng, k_ifd=cfg.K_ifd)
    sampled = sampling_model(model, cfg)
    arc_position = _arc_position(model, cfg)
    evaluator = ChangeStatEvaluator(sampled, attrs)
    sampler = _sampler_for(cfg)

    z_obs = compute_statistics(sampled, g, attrs)
    theta_labels = list(sampled.labels)
    if arc_position is not None:
        theta_labels.insert(arc_position, ARC_LABEL)
    trace = ThetaTrace(run_index=run_index, theta_labels=theta_labels, stat_labels=sampled.labels, observed=z_obs)
    L_obs = g.L

    logger.info(f"run {run_index}: start (N={g.n}, L={L_obs}, effects={theta_labels}, ifd={cfg.use_ifd})")
    try:
        theta = cd_initialize(g, attrs, sampled, cfg, state, evaluator)
    except DivergenceError as e:
        logger.warning(f"run {run_index}: diverged during CD: {e}")
        trace.diverged_reason = DivergenceReason.NAN
        return trace

    D = init_D(g, sampled, attrs)
    dz = np.zeros(len(sampled), dtype=np.float64)
    window = np.empty((cfg.M_inner, len(sampled)), dtype=np.float64)
    t = 0
    if cfg.snapshot_every:
        trace.snapshots.append(_snapshot(g, run_index, t, sampled.labels, z_obs))

    def record(accepted: float) -> None:
        row = theta
        if arc_position is not None:
            row = np.insert(theta, arc_position, arc_param_from_V(state.V, L_obs, g.n))
        trace.append(t, row, dz, accepted, state.V)

    logger.info(f"run {run_index}: EE {cfg.M_outer} x {cfg.M_inner} iterations of {cfg.m} steps")
    for outer in range(cfg.M_outer):
        acceptance = 0.0
        for inner in range(cfg.M_inner):
            out = sampler(g, attrs, sampled, theta, cfg.m, state, evaluator)
            dz += out.dz_add + out.dz_del
            theta = theta - np.sign(dz) * cfg.K_A * D * dz * dz
            window[inner] = theta
            acceptance += out.acceptance_rate
            t += 1
            reason = _check_divergence(theta)
            if reason is not None:
                record(acceptance / (inner + 1))
                trace.diverged_reason = reason
                logger.warning(f"run {run_index}: diverged ({reason.value}) at t={t}")
                return trace

        mean = window.mean(axis=0)
        sd = window.std(axis=0, ddof=1)
        moving = sd > 0
        D[moving] *= np.sqrt(cfg.c2 * np.maximum(np.abs(mean[moving]), cfg.c1) / sd[moving])
        record(acceptance / cfg.M_inner)
        if cfg.snapshot_every and (outer + 1) % cfg.snapshot_every == 0:
            trace.snapshots.append(_snapshot(g, run_index, t, sampled.labels, z_obs + dz))
        logger.debug(f"run {run_index}: outer {outer} t={t} theta={theta.tolist()} dz={dz.tolist()}")

    logger.info(f"run {run_index}: finished after t={t}")
    return trace
