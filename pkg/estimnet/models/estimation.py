"""
Estimation Models
Sampler state, EE configuration and traces, run and pooled estimates,
simulation specs and study results
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional
import enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from estimnet.models.effect import ModelSpec
from estimnet.utils.rng import RandomStream


class DivergenceReason(str, enum.Enum):
    """Why a run is not converged"""
    NAN = "nan"
    HUGE = "huge"
    SINGULAR = "singular"
    T_RATIO = "t_ratio"


@dataclass
class SamplerState:
    """IFD auxiliary parameter, move phase and random stream of one chain."""
    rng: RandomStream
    V: float = 0.0
    is_delete: bool = False
    k_ifd: float = 0.1
    l_obs: Optional[int] = None


@dataclass
class SamplerOutput:
    """
    Accumulated change statistics of accepted moves for one sampler call.

    dz_del sums the signed deletion deltas, so dz_add + dz_del is the net
    change in the statistics over the call.
    """
    dz_add: np.ndarray
    dz_del: np.ndarray
    n_add: int = 0
    n_del: int = 0
    accept_count: int = 0
    proposals: int = 0

    @property
    def dz(self) -> np.ndarray:
        return self.dz_add + self.dz_del

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.proposals if self.proposals else 0.0


class EEConfig(BaseModel):
    """
    Algorithm settings for contrastive divergence and Equilibrium Expectation.
    Defaults follow the settings used for simulated networks.
    """
    model_config = ConfigDict(frozen=True)

    K_A: float = Field(default=1e-9, ge=0)
    c1: float = Field(default=1e-2, gt=0)
    c2: float = Field(default=1e-2, gt=0)
    K1_A: float = Field(default=0.1, ge=0)
    m: int = Field(default=1000, gt=0)
    M1: int = Field(default=50, ge=0)
    M_outer: int = Field(default=500, gt=0)
    M_inner: int = Field(default=100, ge=2)
    use_ifd: bool = False
    K_ifd: float = Field(default=0.1, gt=0)
    burnin_fraction: float = Field(default=0.5, ge=0, lt=1)
    # summarise the chain graph every snapshot_every outer iterations (0 = never)
    snapshot_every: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def enough_retained_iterations(self) -> "EEConfig":
        retained = self.M_outer - int(self.M_outer * self.burnin_fraction)
        if retained < 4:
            raise ValueError(f"only {retained} retained outer iterations; need at least 4")
        return self


@dataclass
class ThetaTrace:
    """
    Per-outer-iteration record of one EE run.

    theta columns follow theta_labels (model effects, plus Arc derived from
    V under the IFD sampler); dz and stats columns follow stat_labels.
    """
    run_index: int
    theta_labels: List[str]
    stat_labels: List[str]
    observed: np.ndarray
    t: List[int] = field(default_factory=list)
    theta: List[np.ndarray] = field(default_factory=list)
    dz: List[np.ndarray] = field(default_factory=list)
    acceptance_rate: List[float] = field(default_factory=list)
    V: List[float] = field(default_factory=list)
    diverged_reason: Optional[DivergenceReason] = None
    snapshots: List[Dict[str, float]] = field(default_factory=list)

    def append(self, t: int, theta: np.ndarray, dz: np.ndarray, acceptance_rate: float, V: float) -> None:
        self.t.append(t)
        self.theta.append(np.array(theta, dtype=np.float64))
        self.dz.append(np.array(dz, dtype=np.float64))
        self.acceptance_rate.append(float(acceptance_rate))
        self.V.append(float(V))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def diverged(self) -> bool:
        return self.diverged_reason is not None

    def theta_matrix(self) -> np.ndarray:
        return np.vstack(self.theta) if self.theta else np.empty((0, len(self.theta_labels)))

    def dz_matrix(self) -> np.ndarray:
        return np.vstack(self.dz) if self.dz else np.empty((0, len(self.stat_labels)))

    def stats_matrix(self) -> np.ndarray:
        """Simulated statistics chain z(g_obs) + dz."""
        return self.dz_matrix() + self.observed


@dataclass
class RunEstimate:
    """Point estimate, standard errors and convergence of one run."""
    run_index: int
    labels: List[str]
    theta_hat: np.ndarray
    se: np.ndarray
    t_ratio: np.ndarray
    converged: bool
    diverged_reason: Optional[DivergenceReason] = None

    def to_dict(self) -> Dict:
        return {
            "run": self.run_index,
            "converged": self.converged,
            "reason": self.diverged_reason.value if self.diverged_reason else None,
            "estimates": dict(zip(self.labels, self.theta_hat.tolist())),
            "std_errors": dict(zip(self.labels, self.se.tolist())),
            "t_ratios": dict(zip(self.labels, self.t_ratio.tolist())),
        }


@dataclass
class PooledEstimate:
    """Inverse variance weighted estimate over converged runs."""
    labels: List[str]
    theta: np.ndarray
    se: np.ndarray
    t_ratio: np.ndarray
    n_runs_used: int
    significant: np.ndarray

    def ci(self, z: float) -> np.ndarray:
        """Rows of (lower, upper) nominal confidence bounds."""
        return np.column_stack([self.theta - z * self.se, self.theta + z * self.se])


class SimSpec(BaseModel):
    """Forward simulation settings."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(gt=1)
    model: ModelSpec
    theta: List[float]
    burnin: Optional[int] = Field(default=None, gt=0)
    interval: int = Field(default=100_000, gt=0)
    n_samples: int = Field(default=1, gt=0)
    seed: int = 0
    density_target: float = Field(default=0.005, gt=0, le=1)
    n_binary_true: Optional[int] = Field(default=None, ge=0)
    n_categories: int = Field(default=3, gt=0)

    @model_validator(mode="after")
    def theta_matches_model(self) -> "SimSpec":
        if len(self.theta) != len(self.model):
            raise ValueError(f"theta has {len(self.theta)} values for {len(self.model)} effects")
        return self


@dataclass
class StudyRow:
    """One effect's line of a simulation study report."""
    effect: str
    true_value: float
    bias: float
    rmse: float
    rate_kind: str
    rate: float
    rate_lower: float
    rate_upper: float
    coverage: float
    n_converged: int
    mean_runs: float

    def to_dict(self) -> Dict:
        return {
            "Effect": self.effect,
            "Bias": self.bias,
            "RMSE": self.rmse,
            "estim.": self.rate,
            "lower": self.rate_lower,
            "upper": self.rate_upper,
            "in C.I. (%)": self.coverage,
            "N_C": self.n_converged,
            "mean runs": self.mean_runs,
        }


@dataclass
class StudyResult:
    """Bias, RMSE, coverage and error rates over a set of simulated networks."""
    rows: List[StudyRow]
    n_networks: int
    n_converged: int
    estimates: List[Optional[PooledEstimate]] = field(default_factory=list)

    def row(self, effect: str) -> StudyRow:
        for r in self.rows:
            if r.effect == effect:
                return r
        raise KeyError(effect)
