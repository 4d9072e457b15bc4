"""
Experiment Harness Service
Simulation studies: estimate many networks simulated at known parameters
and report bias, RMSE, coverage and inferential error rates
"""
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from estimnet.config import settings
from estimnet.exceptions import ConfigurationError, EstimationFailedError
from estimnet.models.attributes import AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import ModelSpec
from estimnet.models.estimation import EEConfig, PooledEstimate, SimSpec, StudyResult, StudyRow
from estimnet.services.estimation_service import estimation_service
from estimnet.services.inference import wilson_interval
from estimnet.services.simulator import generate_attributes, simulate
from estimnet.utils.rng import RandomStream, StreamKind, derive_seed

logger = logging.getLogger(__name__)

# (graph, attributes, estimated model, network index) -> (pooled estimate or
# None when no run converged, number of converged runs)
Estimator = Callable[[Digraph, Optional[AttributeSet], ModelSpec, int], Tuple[Optional[PooledEstimate], int]]

FNR = "FNR"
FPR = "FPR"


def ee_estimator(cfg: EEConfig, n_runs: int, seed: int = 0, workers: Optional[int] = None) -> Estimator:
    """Estimator that runs the parallel EE estimation on each network."""

    def estimate(g: Digraph, attrs: Optional[AttributeSet], model: ModelSpec, index: int):
        result = estimation_service.estimate(
            g, attrs, model, cfg, n_runs=n_runs,
            seed=derive_seed(seed, StreamKind.STUDY, index), workers=workers,
        )
        return result.pooled, result.n_converged

    return estimate


def true_values(model: ModelSpec, true_theta: Sequence[float], zero_effect: Optional[str] = None) -> Dict[str, float]:
    if len(true_theta) != len(model):
        raise ConfigurationError(f"{len(true_theta)} true values for {len(model)} effects")
    values = dict(zip(model.labels, (float(v) for v in true_theta)))
    if zero_effect is not None:
        if zero_effect not in values:
            raise ConfigurationError(f"zero effect '{zero_effect}' not in model {model.labels}")
        values[zero_effect] = 0.0
    return values


def generating_model(model: ModelSpec, values: Dict[str, float]) -> Tuple[ModelSpec, List[float]]:
    """Model and parameters used for simulation; zero-valued effects are dropped."""
    effects = [e for e in model if values[e.label] != 0.0]
    return ModelSpec(effects=effects), [values[e.label] for e in effects]


def _effect_row(
    label: str,
    true_value: float,
    estimates: List[Tuple[PooledEstimate, int]],
    z: float,
) -> StudyRow:
    """
    Bias and RMSE over every finite estimate; coverage and the error rate
    over the estimates that also have a standard error. Arc under IFD has
    none, so its coverage and rate are NaN.
    """
    theta_hat, se, runs = [], [], []
    for pooled, n_runs in estimates:
        if label not in pooled.labels:
            continue
        c = pooled.labels.index(label)
        if np.isfinite(pooled.theta[c]):
            theta_hat.append(pooled.theta[c])
            se.append(pooled.se[c])
            runs.append(n_runs)
    rate_kind = FPR if true_value == 0.0 else FNR
    n_c = len(theta_hat)
    nan = float("nan")
    if n_c == 0:
        return StudyRow(label, true_value, nan, nan, rate_kind, nan, nan, nan, nan, 0, nan)

    theta_hat = np.array(theta_hat)
    se = np.array(se)
    error = theta_hat - true_value
    row = StudyRow(
        effect=label,
        true_value=true_value,
        bias=float(error.mean()),
        rmse=float(np.sqrt(np.mean(error * error))),
        rate_kind=rate_kind,
        rate=nan,
        rate_lower=nan,
        rate_upper=nan,
        coverage=nan,
        n_converged=n_c,
        mean_runs=float(np.mean(runs)),
    )
    with_se = np.isfinite(se)
    if not with_se.any():
        return row

    error, theta_hat, se = error[with_se], theta_hat[with_se], se[with_se]
    covered = np.abs(error) <= z * se
    contains_zero = np.abs(theta_hat) <= z * se
    failures = int(np.sum(~contains_zero)) if rate_kind == FPR else int(np.sum(contains_zero))
    lo, hi = wilson_interval(failures, se.size)
    row.rate = 100.0 * failures / se.size
    row.rate_lower = 100.0 * lo
    row.rate_upper = 100.0 * hi
    row.coverage = 100.0 * float(covered.mean())
    return row


def summarize_study(
    model: ModelSpec,
    values: Dict[str, float],
    estimates: Sequence[Optional[Tuple[PooledEstimate, int]]],
    z: float = settings.Z_CRITICAL,
) -> StudyResult:
    """Per-effect study metrics over the networks whose estimation converged."""
    converged = [e for e in estimates if e is not None]
    if not converged:
        raise EstimationFailedError(f"no estimation converged on any of {len(estimates)} networks")
    rows = [_effect_row(label, values[label], converged, z) for label in model.labels]
    extra = [label for label in converged[0][0].labels if label not in values]
    if extra:
        logger.info(f"Effects without a true value are not reported: {extra}")
    return StudyResult(
        rows=rows,
        n_networks=len(estimates),
        n_converged=len(converged),
        estimates=[e[0] if e is not None else None for e in estimates],
    )


def run_study(
    true_theta: Sequence[float],
    model: ModelSpec,
    n_networks: int,
    n_runs: int,
    spec: SimSpec,
    cfg: Optional[EEConfig] = None,
    estimator: Optional[Estimator] = None,
    zero_effect: Optional[str] = None,
    seed: int = 0,
    workers: Optional[int] = None,
) -> StudyResult:
    """
    Simulate n_networks networks at the true parameters and estimate each.

    true_theta is ordered as the estimated model. Effects whose true value
    is zero, including zero_effect, are left out of the generating model
    and kept in the estimated one. spec supplies the simulation settings;
    its model and theta are replaced by the generating ones.
    """
    if n_networks < 1:
        raise ConfigurationError("a study needs at least one network")
    values = true_values(model, true_theta, zero_effect)
    gen_model, gen_theta = generating_model(model, values)
    if estimator is None:
        estimator = ee_estimator(cfg or EEConfig(), n_runs, seed=seed, workers=workers)

    logger.info(f"Study: {n_networks} networks, {n_runs} runs each, true values {values}")
    estimates: List[Optional[Tuple[PooledEstimate, int]]] = []
    for index in range(n_networks):
        net_spec = spec.model_copy(update={
            "model": gen_model, "theta": gen_theta, "n_samples": 1,
            "seed": derive_seed(seed, StreamKind.SIMULATION, index),
        })
        attrs = generate_attributes(
            model, spec.n, RandomStream.for_run(seed, StreamKind.ATTRIBUTES, index),
            spec.n_binary_true, spec.n_categories,
        )
        g = simulate(net_spec, attrs=attrs, index=index).graphs[0]
        pooled, n_converged = estimator(g, attrs, model, index)
        if pooled is None:
            logger.warning(f"network {index}: no converged run")
            estimates.append(None)
        else:
            estimates.append((pooled, n_converged))
        logger.info(f"network {index}: L={g.L}, converged runs {n_converged}")

    return summarize_study(model, values, estimates)
