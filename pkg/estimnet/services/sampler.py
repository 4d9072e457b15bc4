"""
Sampler Service
Metropolis-Hastings samplers over the ERGM distribution: the basic
dyad-toggle sampler and the improved fixed density (IFD) sampler
"""
from math import exp, log
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from estimnet.config import settings
from estimnet.exceptions import ConfigurationError, InternalInvariantError, PreconditionError
from estimnet.models.attributes import AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import EffectKind, ModelSpec
from estimnet.models.estimation import SamplerOutput, SamplerState
from estimnet.services.change_stats import ChangeStatEvaluator

logger = logging.getLogger(__name__)


def _prepare(
    g: Digraph,
    model: ModelSpec,
    attrs: Optional[AttributeSet],
    theta: Sequence[float],
    m: int,
    evaluator: Optional[ChangeStatEvaluator],
) -> Tuple[ChangeStatEvaluator, List[float]]:
    if g.n < 2:
        raise PreconditionError(f"sampler needs at least 2 nodes, got {g.n}")
    if m <= 0:
        raise ConfigurationError(f"sampler needs m > 0 iterations, got {m}")
    if len(theta) != len(model):
        raise ConfigurationError(f"theta has {len(theta)} values for {len(model)} effects")
    if evaluator is None:
        evaluator = ChangeStatEvaluator(model, attrs)
    return evaluator, [float(t) for t in theta]


def ifd_sampler(
    g: Digraph,
    attrs: Optional[AttributeSet],
    model: ModelSpec,
    theta: Sequence[float],
    m: int,
    state: SamplerState,
    evaluator: Optional[ChangeStatEvaluator] = None,
    record_moves: Optional[List[Tuple[int, int]]] = None,
) -> SamplerOutput:
    """
    Improved fixed density sampler.

    Alternates add and delete phases; the phase flips only after an
    accepted move, so the arc count stays within one of L_obs. The arc
    parameter is replaced by the auxiliary parameter V, adapted after the
    m proposals from the imbalance between delete and add proposals.
    """
    if model.has(EffectKind.ARC):
        raise ConfigurationError("the Arc effect must not be in the model with the IFD sampler")
    evaluator, theta = _prepare(g, model, attrs, theta, m, evaluator)
    if state.l_obs is None:
        state.l_obs = g.L - (1 if state.is_delete else 0)

    s = len(theta)
    rng = state.rng
    dz_add = [0.0] * s
    dz_del = [0.0] * s
    n_add = n_del = accepted = 0
    V = state.V
    is_delete = state.is_delete

    for _ in range(m):
        if is_delete:
            n_del += 1
            i, j = g.random_arc(rng)
            deltas = evaluator.delete_deltas(g, i, j)
            total = -V
        else:
            n_add += 1
            i, j = g.random_nonarc_dyad(rng)
            deltas = evaluator.add_deltas(g, i, j)
            total = V
        for k in range(s):
            total += theta[k] * deltas[k]

        if total >= 0.0 or rng.uniform() < exp(total):
            accepted += 1
            if is_delete:
                g.delete_arc(i, j)
                for k in range(s):
                    dz_del[k] += deltas[k]
            else:
                g.insert_arc(i, j)
                for k in range(s):
                    dz_add[k] += deltas[k]
            if record_moves is not None:
                record_moves.append((i, j))
            is_delete = not is_delete

    state.is_delete = is_delete
    imbalance = n_del - n_add
    proposals = n_del + n_add
    V_step = (imbalance / proposals) ** 2
    if imbalance > 0:
        state.V = V - state.k_ifd * V_step
    else:
        state.V = V + state.k_ifd * V_step
    if abs(imbalance) / proposals > settings.IFD_WARN_RATIO:
        logger.warning(
            f"IFD sampler move imbalance {abs(imbalance)}/{proposals}: K_IFD={state.k_ifd} might be too small"
        )
    if abs(g.L - state.l_obs) > 1:
        raise InternalInvariantError(f"IFD arc count {g.L} drifted from L_obs={state.l_obs}")

    return SamplerOutput(
        dz_add=np.array(dz_add, dtype=np.float64),
        dz_del=np.array(dz_del, dtype=np.float64),
        n_add=n_add,
        n_del=n_del,
        accept_count=accepted,
        proposals=m,
    )


def basic_sampler(
    g: Digraph,
    attrs: Optional[AttributeSet],
    model: ModelSpec,
    theta: Sequence[float],
    m: int,
    state: SamplerState,
    evaluator: Optional[ChangeStatEvaluator] = None,
    record_moves: Optional[List[Tuple[int, int]]] = None,
) -> SamplerOutput:
    """
    Basic sampler: propose toggling a uniformly random ordered dyad and
    accept with probability min(1, exp(theta . dz)).
    """
    evaluator, theta = _prepare(g, model, attrs, theta, m, evaluator)
    s = len(theta)
    rng = state.rng
    out_adj = g.out_adj
    dz_add = [0.0] * s
    dz_del = [0.0] * s
    n_add = n_del = accepted = 0

    for _ in range(m):
        i, j = g.random_dyad(rng)
        is_delete = j in out_adj[i]
        if is_delete:
            n_del += 1
            deltas = evaluator.delete_deltas(g, i, j)
        else:
            n_add += 1
            deltas = evaluator.add_deltas(g, i, j)
        total = 0.0
        for k in range(s):
            total += theta[k] * deltas[k]

        if total >= 0.0 or rng.uniform() < exp(total):
            accepted += 1
            if is_delete:
                g.delete_arc(i, j)
                for k in range(s):
                    dz_del[k] += deltas[k]
            else:
                g.insert_arc(i, j)
                for k in range(s):
                    dz_add[k] += deltas[k]
            if record_moves is not None:
                record_moves.append((i, j))

    return SamplerOutput(
        dz_add=np.array(dz_add, dtype=np.float64),
        dz_del=np.array(dz_del, dtype=np.float64),
        n_add=n_add,
        n_del=n_del,
        accept_count=accepted,
        proposals=m,
    )


def arc_param_from_V(V: float, L_obs: int, N: int) -> float:
    """Arc parameter implied by the IFD auxiliary parameter V."""
    L_max = N * (N - 1)
    if not 0 <= L_obs <= L_max:
        raise PreconditionError(f"L_obs={L_obs} outside 0..{L_max}")
    if L_obs == L_max:
        raise PreconditionError("arc parameter undefined for a complete graph")
    return V - log((L_max - L_obs) / (L_obs + 1))
