"""
Inference Service
Standard errors from the parameter and statistics chains of each run,
convergence classification and pooling across runs
"""
from math import floor, sqrt
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy import linalg
from scipy.stats import norm

from estimnet.config import settings
from estimnet.exceptions import (
    EstimationFailedError,
    InsufficientSamplesError,
    PreconditionError,
    SingularCovarianceError,
)
from estimnet.models.estimation import DivergenceReason, PooledEstimate, RunEstimate, ThetaTrace

logger = logging.getLogger(__name__)

MIN_SAMPLES = 4


def _as_matrix(chain) -> np.ndarray:
    x = np.asarray(chain, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise PreconditionError(f"chain must be a T x s matrix, got shape {x.shape}")
    return x


def batch_means_cov(chain) -> Tuple[np.ndarray, np.ndarray]:
    """
    Multivariate batch means.

    Batch size b = floor(sqrt(T)) with a = floor(T/b) batches. Returns the
    chain mean and the estimated covariance of that mean, i.e. the
    asymptotic covariance b * S / (a - 1) divided by T.
    """
    x = _as_matrix(chain)
    T = x.shape[0]
    if T < MIN_SAMPLES:
        raise InsufficientSamplesError(f"batch means needs at least {MIN_SAMPLES} samples, got {T}")
    b = int(floor(sqrt(T)))
    a = T // b
    batches = x[: a * b].reshape(a, b, x.shape[1]).mean(axis=1)
    centred = batches - batches.mean(axis=0)
    sigma = b * (centred.T @ centred) / (a - 1)
    return x.mean(axis=0), sigma / T


def fisher_cov(stats_chain) -> np.ndarray:
    """Inverse of the sample covariance of the simulated statistics."""
    x = _as_matrix(stats_chain)
    if x.shape[0] < 2:
        raise InsufficientSamplesError("statistics covariance needs at least 2 samples")
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    condition = np.linalg.cond(cov)
    if not np.isfinite(condition) or condition > settings.CONDITION_LIMIT:
        raise SingularCovarianceError(f"statistics covariance is (nearly) singular: condition number {condition:.3g}")
    return linalg.inv(cov)


def t_ratios(stats_chain, observed=None) -> np.ndarray:
    """
    (mean simulated - observed) / sd(simulated) per statistic, with the
    sample sd (n-1). A constant statistic equal to its observed value has
    t-ratio 0.
    """
    x = _as_matrix(stats_chain)
    deviation = x - (0.0 if observed is None else np.asarray(observed, dtype=np.float64))
    mean = deviation.mean(axis=0)
    sd = x.std(axis=0, ddof=1) if x.shape[0] > 1 else np.zeros(x.shape[1])
    out = np.zeros(x.shape[1], dtype=np.float64)
    varying = sd > 0
    out[varying] = mean[varying] / sd[varying]
    stuck = ~varying & (mean != 0)
    out[stuck] = np.copysign(np.inf, mean[stuck])
    return out


def _stat_columns(theta_labels: Sequence[str], stat_labels: Sequence[str]) -> List[int]:
    try:
        return [list(theta_labels).index(label) for label in stat_labels]
    except ValueError as e:
        raise PreconditionError(f"statistic labels {list(stat_labels)} not all in {list(theta_labels)}") from e


def run_se(
    theta_chain,
    stats_chain,
    observed=None,
    theta_labels: Optional[Sequence[str]] = None,
    stat_labels: Optional[Sequence[str]] = None,
    run_index: int = 0,
) -> RunEstimate:
    """
    Point estimate and standard errors of one run from its retained window.

    Total covariance is batch-means covariance of the parameter chain plus
    the inverse covariance of the statistics chain. A parameter with no
    statistic column (Arc derived from V under IFD) has no Fisher
    information: its estimate is the chain mean, its standard error and
    t-ratio are NaN. The batch-means error of that chain is only Monte
    Carlo error and is logged, not reported as a standard error.
    """
    theta = _as_matrix(theta_chain)
    stats = _as_matrix(stats_chain) if np.size(stats_chain) else np.empty((theta.shape[0], 0))
    if theta.shape[0] != stats.shape[0]:
        raise PreconditionError(f"chains differ in length: {theta.shape[0]} vs {stats.shape[0]}")
    if theta_labels is None:
        theta_labels = [str(k) for k in range(theta.shape[1])]
    if stat_labels is None:
        stat_labels = list(theta_labels)
    columns = _stat_columns(theta_labels, stat_labels)
    unmatched = [k for k in range(theta.shape[1]) if k not in columns]

    theta_hat, cov = batch_means_cov(theta)
    t_ratio = np.full(theta.shape[1], np.nan)
    reason = None
    if columns:
        t_ratio[columns] = t_ratios(stats, observed)
        try:
            cov[np.ix_(columns, columns)] += fisher_cov(stats)
        except SingularCovarianceError as e:
            logger.warning(f"run {run_index}: {e}")
            reason = DivergenceReason.SINGULAR

    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    for k in unmatched:
        logger.debug(f"run {run_index}: {theta_labels[k]} Monte Carlo error {se[k]:.3g}")
        se[k] = np.nan
    if reason is None and columns and np.any(np.abs(t_ratio[columns]) > settings.T_RATIO_THRESHOLD):
        reason = DivergenceReason.T_RATIO
    return RunEstimate(
        run_index=run_index,
        labels=list(theta_labels),
        theta_hat=theta_hat,
        se=se,
        t_ratio=t_ratio,
        converged=reason is None,
        diverged_reason=reason,
    )


def retained_start(length: int, burnin_fraction: float = settings.BURNIN_FRACTION) -> int:
    """First retained outer iteration; the leading burnin_fraction is discarded."""
    return int(length * burnin_fraction)


def estimate_from_trace(trace: ThetaTrace, burnin_fraction: float = settings.BURNIN_FRACTION) -> RunEstimate:
    """RunEstimate for an EE trace, classifying diverged and short traces as non-converged."""
    k = len(trace.theta_labels)
    failed = RunEstimate(
        run_index=trace.run_index,
        labels=list(trace.theta_labels),
        theta_hat=np.full(k, np.nan),
        se=np.full(k, np.nan),
        t_ratio=np.full(k, np.nan),
        converged=False,
        diverged_reason=trace.diverged_reason,
    )
    if trace.diverged:
        return failed

    start = retained_start(len(trace), burnin_fraction)
    try:
        estimate = run_se(
            trace.theta_matrix()[start:],
            trace.stats_matrix()[start:],
            trace.observed,
            theta_labels=trace.theta_labels,
            stat_labels=trace.stat_labels,
            run_index=trace.run_index,
        )
    except InsufficientSamplesError as e:
        logger.warning(f"run {trace.run_index}: {e}")
        return failed
    if not estimate.converged:
        logger.warning(
            f"run {trace.run_index}: not converged ({estimate.diverged_reason.value}), "
            f"t-ratios {dict(zip(estimate.labels, estimate.t_ratio.round(3).tolist()))}"
        )
    return estimate


def pool_runs(estimates: Sequence[RunEstimate]) -> PooledEstimate:
    """
    Inverse variance weighted average of the converged runs.

    Runs whose standard error for a coordinate is undefined do not
    contribute to that coordinate. A zero standard error dominates: the
    pooled value is the mean over the zero-se runs and the pooled se is 0.
    A coordinate without a standard error in any run (Arc under IFD) is the
    plain mean of the run estimates with se NaN, and is never significant.
    """
    converged = [e for e in estimates if e.converged]
    if not converged:
        raise EstimationFailedError(f"none of {len(estimates)} runs converged")
    labels = converged[0].labels
    thetas = np.vstack([e.theta_hat for e in converged])
    ses = np.vstack([e.se for e in converged])
    k = thetas.shape[1]

    theta = np.empty(k)
    se = np.empty(k)
    for c in range(k):
        usable = np.isfinite(ses[:, c]) & np.isfinite(thetas[:, c])
        th, s = thetas[usable, c], ses[usable, c]
        if th.size == 0:
            # no standard error in any run: plain mean of the point estimates
            finite = thetas[np.isfinite(thetas[:, c]), c]
            theta[c] = finite.mean() if finite.size else np.nan
            se[c] = np.nan
        elif np.any(s == 0):
            theta[c], se[c] = th[s == 0].mean(), 0.0
        else:
            w = 1.0 / (s * s)
            theta[c] = np.sum(w * th) / np.sum(w)
            se[c] = sqrt(1.0 / np.sum(w))

    t_ratio = np.full(k, np.nan)
    for c in range(k):
        defined = [e.t_ratio[c] for e in converged if np.isfinite(e.t_ratio[c])]
        if defined:
            t_ratio[c] = float(np.mean(defined))

    return PooledEstimate(
        labels=list(labels),
        theta=theta,
        se=se,
        t_ratio=t_ratio,
        n_runs_used=len(converged),
        significant=significance(theta, se),
    )


def significance(theta: np.ndarray, se: np.ndarray, z: float = settings.Z_CRITICAL) -> np.ndarray:
    """True where zero lies outside theta +- z*se."""
    theta = np.asarray(theta, dtype=np.float64)
    se = np.asarray(se, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(theta) / se
    return np.where(se == 0, theta != 0, ratio > z) & np.isfinite(theta)


def critical_value(conf: float) -> float:
    if conf == 0.95:
        return settings.Z_CRITICAL
    return float(norm.ppf(1.0 - (1.0 - conf) / 2.0))


def wilson_interval(successes: int, trials: int, conf: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise PreconditionError("Wilson interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise PreconditionError(f"successes {successes} outside 0..{trials}")
    z = critical_value(conf)
    p = successes / trials
    z2n = z * z / trials
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z / (1.0 + z2n) * sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi
