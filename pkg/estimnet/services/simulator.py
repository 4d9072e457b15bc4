"""
Simulator Service
Forward simulation of networks from an ERGM and descriptive summaries of
sampled or observed networks
"""
from dataclasses import dataclass, field
from math import ceil
from typing import Dict, List, Optional
import logging

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from estimnet.config import settings
from estimnet.exceptions import ConfigurationError
from estimnet.models.attributes import AttributeKind, AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import ModelSpec
from estimnet.models.estimation import SamplerState, SimSpec
from estimnet.services.change_stats import ChangeStatEvaluator, compute_statistics
from estimnet.services.sampler import basic_sampler
from estimnet.utils.rng import RandomStream, StreamKind

logger = logging.getLogger(__name__)

# Share of nodes with a True binary attribute when not configured
BINARY_TRUE_FRACTION = 0.025


@dataclass
class GraphSummary:
    """Descriptive statistics of one network."""
    n: int
    arcs: int
    mean_degree: float
    density: float
    reciprocity: float
    components: int
    giant_component: int
    global_clustering: float
    mean_local_clustering: float
    in_degree_histogram: np.ndarray = field(repr=False)
    out_degree_histogram: np.ndarray = field(repr=False)
    component_sizes: np.ndarray = field(repr=False)

    def to_record(self) -> Dict[str, float]:
        return {
            "nodes": self.n,
            "arcs": self.arcs,
            "mean_degree": self.mean_degree,
            "density": self.density,
            "reciprocity": self.reciprocity,
            "components": self.components,
            "giant_component": self.giant_component,
            "global_clustering": self.global_clustering,
            "mean_local_clustering": self.mean_local_clustering,
        }


@dataclass
class SimulationResult:
    """Sampled networks, their shared attributes and one summary row per sample."""
    spec: SimSpec
    graphs: List[Digraph]
    attrs: Optional[AttributeSet]
    summaries: List[Dict[str, float]]
    burnin: int = 0


def _adjacency(g: Digraph) -> sparse.csr_matrix:
    if g.L == 0:
        return sparse.csr_matrix((g.n, g.n), dtype=np.int64)
    tails, heads = zip(*g.arcs)
    data = np.ones(g.L, dtype=np.int64)
    return sparse.csr_matrix((data, (np.array(tails), np.array(heads))), shape=(g.n, g.n))


def reciprocity_fraction(g: Digraph) -> float:
    """Share of arcs whose reverse arc is also present; 0 for an empty graph."""
    if g.L == 0:
        return 0.0
    out_adj = g.out_adj
    reciprocated = sum(1 for i, j in g.arcs if i in out_adj[j])
    return reciprocated / g.L


def diagnostics_summary(g: Digraph) -> GraphSummary:
    """
    Degree histograms, reciprocity, weak components and clustering.

    Clustering is measured on the underlying undirected simple graph;
    nodes with fewer than two neighbours have local clustering 0 and are
    included in the mean.
    """
    A = _adjacency(g)
    U = ((A + A.T) > 0).astype(np.int64).tocsr()
    degree = np.asarray(U.sum(axis=1)).ravel()
    triangles = np.asarray((U @ U).multiply(U).sum(axis=1)).ravel() / 2.0
    pairs = degree * (degree - 1) / 2.0
    total_pairs = pairs.sum()
    global_clustering = float(triangles.sum() / total_pairs) if total_pairs > 0 else 0.0
    local = np.zeros(g.n)
    has_pairs = pairs > 0
    local[has_pairs] = triangles[has_pairs] / pairs[has_pairs]

    n_components, labels = connected_components(A, directed=True, connection="weak")
    sizes = np.bincount(labels, minlength=n_components)

    in_degrees = np.array([len(a) for a in g.in_adj], dtype=np.int64)
    out_degrees = np.array([len(a) for a in g.out_adj], dtype=np.int64)
    return GraphSummary(
        n=g.n,
        arcs=g.L,
        mean_degree=g.L / g.n,
        density=g.density,
        reciprocity=reciprocity_fraction(g),
        components=int(n_components),
        giant_component=int(sizes.max()) if sizes.size else 0,
        global_clustering=global_clustering,
        mean_local_clustering=float(local.mean()) if g.n else 0.0,
        in_degree_histogram=np.bincount(in_degrees),
        out_degree_histogram=np.bincount(out_degrees),
        component_sizes=np.sort(sizes)[::-1],
    )


def generate_attributes(
    model: ModelSpec,
    n: int,
    rng: RandomStream,
    n_binary_true: Optional[int] = None,
    n_categories: int = 3,
) -> Optional[AttributeSet]:
    """
    Attribute columns for every attribute-bound effect of the model.

    Binary columns have exactly n_binary_true True nodes (default 2.5% of
    n); categorical columns are uniform over n_categories values;
    continuous columns are standard normal.
    """
    wanted = {}
    for effect in model:
        kind = effect.kind.attribute_kind
        if kind is not None:
            wanted.setdefault((kind, effect.attribute), None)
    if not wanted:
        return None

    attrs = AttributeSet(n)
    k_true = n_binary_true if n_binary_true is not None else int(round(BINARY_TRUE_FRACTION * n))
    if k_true > n:
        raise ConfigurationError(f"numBinaryTrue={k_true} exceeds {n} nodes")
    generator = rng.generator
    for kind, name in wanted:
        if kind == AttributeKind.BINARY:
            column = np.zeros(n, dtype=np.int64)
            column[generator.choice(n, size=k_true, replace=False)] = 1
        elif kind == AttributeKind.CATEGORICAL:
            column = generator.integers(0, n_categories, size=n)
            # dense codes: relabel in order of first appearance
            _, first, inverse = np.unique(column, return_index=True, return_inverse=True)
            column = np.argsort(np.argsort(first))[inverse]
        else:
            column = generator.standard_normal(n)
        attrs.add_column(kind, name, column)
    return attrs


def default_burnin(n: int, density_target: float) -> int:
    return min(50 * n * ceil(1.0 / density_target), settings.BURNIN_CAP)


def simulate(
    spec: SimSpec,
    attrs: Optional[AttributeSet] = None,
    index: int = 0,
) -> SimulationResult:
    """
    Draw spec.n_samples networks from the ERGM with parameters spec.theta.

    One basic-sampler chain starts from the empty graph, runs the burn-in,
    then yields a snapshot every spec.interval proposals. Attributes are
    generated once per call when not supplied.
    """
    theta = np.asarray(spec.theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise ConfigurationError(f"simulation parameters must be finite, got {spec.theta}")
    if attrs is None:
        attrs = generate_attributes(
            spec.model, spec.n,
            RandomStream.for_run(spec.seed, StreamKind.ATTRIBUTES, index),
            spec.n_binary_true, spec.n_categories,
        )
    evaluator = ChangeStatEvaluator(spec.model, attrs)
    state = SamplerState(rng=RandomStream.for_run(spec.seed, StreamKind.SIMULATION, index))
    burnin = spec.burnin if spec.burnin is not None else default_burnin(spec.n, spec.density_target)

    g = Digraph(spec.n)
    logger.info(f"Simulating N={spec.n}: burn-in {burnin}, {spec.n_samples} sample(s) every {spec.interval}")
    out = basic_sampler(g, attrs, spec.model, theta, burnin, state, evaluator)
    logger.debug(f"burn-in done: L={g.L}, acceptance {out.acceptance_rate:.4f}")

    graphs: List[Digraph] = []
    summaries: List[Dict[str, float]] = []
    t = burnin
    for k in range(spec.n_samples):
        out = basic_sampler(g, attrs, spec.model, theta, spec.interval, state, evaluator)
        t += spec.interval
        sample = g.copy()
        record: Dict[str, float] = {"sample": k, "t": t, "acceptance_rate": out.acceptance_rate}
        record.update(diagnostics_summary(sample).to_record())
        record.update(zip(spec.model.labels, compute_statistics(spec.model, sample, attrs).tolist()))
        graphs.append(sample)
        summaries.append(record)
        logger.debug(f"sample {k}: L={sample.L}")
    return SimulationResult(spec=spec, graphs=graphs, attrs=attrs, summaries=summaries, burnin=burnin)
