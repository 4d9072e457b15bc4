"""
Change Statistics Service
Change in each model statistic from adding or deleting one arc, and the
full statistics computed sparsely from adjacency and two-path tables
"""
from typing import Callable, Dict, List, Optional, Sequence
import enum
import logging

import numpy as np

from estimnet.exceptions import PreconditionError
from estimnet.models.attributes import AttributeKind, AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import Effect, EffectKind, ModelSpec

logger = logging.getLogger(__name__)


class Direction(str, enum.Enum):
    ADD = "add"
    DELETE = "delete"


# Every change function returns z(g + arc) - z(g) for arc i -> j evaluated
# on the graph without the arc. When present=True the arc is currently in g
# and counts touched by it are read one lower, which equals evaluating on
# g - arc without mutating g.
ChangeFunction = Callable[[Digraph, Optional[list], int, int, float, bool], float]


def _arc(g, col, i, j, lam, present):
    return 1.0


def _reciprocity(g, col, i, j, lam, present):
    return 1.0 if i in g.out_adj[j] else 0.0


def _isolates(g, col, i, j, lam, present):
    k = 1 if present else 0
    delta = 0.0
    if len(g.out_adj[i]) + len(g.in_adj[i]) == k:
        delta -= 1.0
    if len(g.out_adj[j]) + len(g.in_adj[j]) == k:
        delta -= 1.0
    return delta


def _in_star(g, col, i, j, lam, present):
    d = len(g.in_adj[j]) - (1 if present else 0)
    return lam * (1.0 - (1.0 - 1.0 / lam) ** d)


def _out_star(g, col, i, j, lam, present):
    d = len(g.out_adj[i]) - (1 if present else 0)
    return lam * (1.0 - (1.0 - 1.0 / lam) ** d)


def _triangles_t(g, col, i, j, lam, present):
    r = 1.0 - 1.0 / lam
    off = -1 if present else 0
    tp = g.tp_mix
    out_adj = g.out_adj
    out_i = out_adj[i]
    delta = lam * (1.0 - r ** tp.get(i, j))
    # arcs i -> v closed by new path i -> j -> v
    for v in out_adj[j]:
        if v in out_i:
            delta += r ** (tp.get(i, v) + off)
    # arcs u -> j closed by new path u -> i -> j
    for u in g.in_adj[i]:
        if u != j and j in out_adj[u]:
            delta += r ** (tp.get(u, j) + off)
    return delta


def _triangles_c(g, col, i, j, lam, present):
    r = 1.0 - 1.0 / lam
    off = -1 if present else 0
    tp = g.tp_mix
    out_adj = g.out_adj
    out_j = out_adj[j]
    delta = lam * (1.0 - r ** tp.get(j, i))
    # cycle i -> j -> v -> i
    for v in out_j:
        if v != i and i in out_adj[v]:
            delta += r ** (tp.get(i, v) + off)
    # cycle u -> i -> j -> u
    for u in g.in_adj[i]:
        if u != j and u in out_j:
            delta += r ** (tp.get(u, j) + off)
    return delta


def _triangles_d(g, col, i, j, lam, present):
    r = 1.0 - 1.0 / lam
    off = -1 if present else 0
    tp = g.tp_in
    out_adj = g.out_adj
    out_j = out_adj[j]
    delta = lam * (1.0 - r ** tp.get(i, j))
    # j and v gain shared in-neighbour i
    for v in out_adj[i]:
        if v == j:
            continue
        weight = (1 if v in out_j else 0) + (1 if j in out_adj[v] else 0)
        if weight:
            delta += weight * r ** (tp.get(j, v) + off)
    return delta


def _triangles_u(g, col, i, j, lam, present):
    r = 1.0 - 1.0 / lam
    off = -1 if present else 0
    tp = g.tp_out
    out_adj = g.out_adj
    out_i = out_adj[i]
    delta = lam * (1.0 - r ** tp.get(i, j))
    # i and v gain shared out-neighbour j
    for v in g.in_adj[j]:
        if v == i:
            continue
        weight = (1 if v in out_i else 0) + (1 if i in out_adj[v] else 0)
        if weight:
            delta += weight * r ** (tp.get(i, v) + off)
    return delta


def _two_paths_t(g, col, i, j, lam, present):
    # pairs (a, b) with a < b only
    r = 1.0 - 1.0 / lam
    off = -1 if present else 0
    tp = g.tp_mix
    delta = 0.0
    for v in g.out_adj[j]:
        if v != i and i < v:
            delta += r ** (tp.get(i, v) + off)
    for u in g.in_adj[i]:
        if u != j and u < j:
            delta += r ** (tp.get(u, j) + off)
    return delta


def _two_paths_d(g, col, i, j, lam, present):
    r = 1.0 - 1.0 / lam
    off = -1 if present else 0
    tp = g.tp_in
    delta = 0.0
    for v in g.out_adj[i]:
        if v != j:
            delta += r ** (tp.get(j, v) + off)
    return delta


def _two_paths_u(g, col, i, j, lam, present):
    r = 1.0 - 1.0 / lam
    off = -1 if present else 0
    tp = g.tp_out
    delta = 0.0
    for v in g.in_adj[j]:
        if v != i:
            delta += r ** (tp.get(i, v) + off)
    return delta


def _two_paths_td(g, col, i, j, lam, present):
    return _two_paths_t(g, col, i, j, lam, present) + 0.5 * _two_paths_d(g, col, i, j, lam, present)


def _sender(g, col, i, j, lam, present):
    a = col[i]
    return float(a) if a is not None else 0.0


def _receiver(g, col, i, j, lam, present):
    a = col[j]
    return float(a) if a is not None else 0.0


def _interaction(g, col, i, j, lam, present):
    a, b = col[i], col[j]
    if a is None or b is None:
        return 0.0
    return float(a * b)


def _matching(g, col, i, j, lam, present):
    a, b = col[i], col[j]
    if a is None or b is None:
        return 0.0
    return 1.0 if a == b else 0.0


def _mismatching(g, col, i, j, lam, present):
    a, b = col[i], col[j]
    if a is None or b is None:
        return 0.0
    return 0.0 if a == b else 1.0


def _matching_reciprocity(g, col, i, j, lam, present):
    a, b = col[i], col[j]
    if a is None or b is None or a != b:
        return 0.0
    return 1.0 if i in g.out_adj[j] else 0.0


def _mismatching_reciprocity(g, col, i, j, lam, present):
    a, b = col[i], col[j]
    if a is None or b is None or a == b:
        return 0.0
    return 1.0 if i in g.out_adj[j] else 0.0


def _diff(g, col, i, j, lam, present):
    a, b = col[i], col[j]
    if a is None or b is None:
        return 0.0
    return abs(a - b)


CHANGE_FUNCTIONS: Dict[EffectKind, ChangeFunction] = {
    EffectKind.ARC: _arc,
    EffectKind.RECIPROCITY: _reciprocity,
    EffectKind.ISOLATES: _isolates,
    EffectKind.AINS: _in_star,
    EffectKind.AOUTS: _out_star,
    EffectKind.AT_T: _triangles_t,
    EffectKind.AT_C: _triangles_c,
    EffectKind.AKT_D: _triangles_d,
    EffectKind.AKT_U: _triangles_u,
    EffectKind.A2P_T: _two_paths_t,
    EffectKind.A2P_D: _two_paths_d,
    EffectKind.A2P_U: _two_paths_u,
    EffectKind.A2P_TD: _two_paths_td,
    EffectKind.SENDER: _sender,
    EffectKind.RECEIVER: _receiver,
    EffectKind.INTERACTION: _interaction,
    EffectKind.MATCHING: _matching,
    EffectKind.MISMATCHING: _mismatching,
    EffectKind.MATCHING_RECIPROCITY: _matching_reciprocity,
    EffectKind.MISMATCHING_RECIPROCITY: _mismatching_reciprocity,
    EffectKind.CONTINUOUS_SENDER: _sender,
    EffectKind.CONTINUOUS_RECEIVER: _receiver,
    EffectKind.DIFF: _diff,
}


def _column(effect: Effect, attrs: Optional[AttributeSet]) -> Optional[list]:
    kind = effect.kind.attribute_kind
    if kind is None:
        return None
    if attrs is None:
        raise PreconditionError(f"effect {effect.label} needs attributes")
    return attrs.column_as_list(kind, effect.attribute)


class ChangeStatEvaluator:
    """
    Model bound to an attribute set, for repeated change statistic calls.

    Attribute columns are converted to Python lists once so the sampler
    inner loop does no numpy scalar access.
    """

    def __init__(self, model: ModelSpec, attrs: Optional[AttributeSet] = None):
        if attrs is not None:
            model.validate_against(attrs)
        self.model = model
        self.terms = [(CHANGE_FUNCTIONS[e.kind], _column(e, attrs), e.lam) for e in model.effects]

    def __len__(self) -> int:
        return len(self.terms)

    def add_deltas(self, g: Digraph, i: int, j: int) -> List[float]:
        """Deltas for adding absent arc i -> j."""
        return [fn(g, col, i, j, lam, False) for fn, col, lam in self.terms]

    def delete_deltas(self, g: Digraph, i: int, j: int) -> List[float]:
        """Deltas z(g - arc) - z(g) for deleting present arc i -> j."""
        return [-fn(g, col, i, j, lam, True) for fn, col, lam in self.terms]


def change_stat(effect: Effect, g: Digraph, attrs: Optional[AttributeSet], i: int, j: int) -> float:
    """z_effect(g + arc(i,j)) - z_effect(g) for an absent arc."""
    if i == j:
        raise PreconditionError(f"self-loop ({i},{j}) has no change statistic")
    if g.is_arc(i, j):
        raise PreconditionError(f"arc ({i},{j}) already present")
    return CHANGE_FUNCTIONS[effect.kind](g, _column(effect, attrs), i, j, effect.lam, False)


def change_stats_all(
    model: ModelSpec,
    g: Digraph,
    attrs: Optional[AttributeSet],
    i: int,
    j: int,
    direction: Direction = Direction.ADD,
) -> np.ndarray:
    """Change statistic vector, ordered as in the model, for one arc toggle."""
    if i == j:
        raise PreconditionError(f"self-loop ({i},{j}) has no change statistic")
    evaluator = ChangeStatEvaluator(model, attrs)
    present = g.is_arc(i, j)
    if direction == Direction.ADD:
        if present:
            raise PreconditionError(f"arc ({i},{j}) already present")
        return np.array(evaluator.add_deltas(g, i, j), dtype=np.float64)
    if not present:
        raise PreconditionError(f"arc ({i},{j}) not present")
    return np.array(evaluator.delete_deltas(g, i, j), dtype=np.float64)


# ---------------------------------------------------------------------------
# Full statistics

def _alternating_sum(counts, lam: float) -> float:
    r = 1.0 - 1.0 / lam
    return lam * sum(1.0 - r ** c for c in counts)


def _star_sum(degrees, lam: float) -> float:
    r = 1.0 - 1.0 / lam
    return lam * lam * sum(r ** d - 1.0 + d / lam for d in degrees)


def _mutual_pairs(g: Digraph):
    out_adj = g.out_adj
    for i, j in g.arcs:
        if i < j and i in out_adj[j]:
            yield i, j


def compute_statistic(effect: Effect, g: Digraph, attrs: Optional[AttributeSet] = None) -> float:
    """Full statistic z_effect(g) in O(L + table size)."""
    kind = effect.kind
    lam = effect.lam
    col = _column(effect, attrs)

    if kind == EffectKind.ARC:
        return float(g.L)
    if kind == EffectKind.RECIPROCITY:
        return float(sum(1 for _ in _mutual_pairs(g)))
    if kind == EffectKind.ISOLATES:
        return float(sum(1 for v in range(g.n) if g.is_isolate(v)))
    if kind == EffectKind.AINS:
        return _star_sum((len(a) for a in g.in_adj), lam)
    if kind == EffectKind.AOUTS:
        return _star_sum((len(a) for a in g.out_adj), lam)
    if kind == EffectKind.AT_T:
        return _alternating_sum((g.tp_mix.get(i, j) for i, j in g.arcs), lam)
    if kind == EffectKind.AT_C:
        return _alternating_sum((g.tp_mix.get(j, i) for i, j in g.arcs), lam)
    if kind == EffectKind.AKT_D:
        return _alternating_sum((g.tp_in.get(i, j) for i, j in g.arcs), lam)
    if kind == EffectKind.AKT_U:
        return _alternating_sum((g.tp_out.get(i, j) for i, j in g.arcs), lam)
    if kind == EffectKind.A2P_T:
        return _alternating_sum((c for i, j, c in g.tp_mix.items() if i < j), lam)
    if kind == EffectKind.A2P_D:
        return _alternating_sum((c for _, _, c in g.tp_in.items()), lam)
    if kind == EffectKind.A2P_U:
        return _alternating_sum((c for _, _, c in g.tp_out.items()), lam)
    if kind == EffectKind.A2P_TD:
        t = _alternating_sum((c for i, j, c in g.tp_mix.items() if i < j), lam)
        d = _alternating_sum((c for _, _, c in g.tp_in.items()), lam)
        return t + 0.5 * d
    if kind in (EffectKind.SENDER, EffectKind.CONTINUOUS_SENDER):
        return float(sum(col[i] for i, _ in g.arcs if col[i] is not None))
    if kind in (EffectKind.RECEIVER, EffectKind.CONTINUOUS_RECEIVER):
        return float(sum(col[j] for _, j in g.arcs if col[j] is not None))
    if kind == EffectKind.INTERACTION:
        return float(sum(col[i] * col[j] for i, j in g.arcs if col[i] is not None and col[j] is not None))
    if kind == EffectKind.DIFF:
        return float(sum(abs(col[i] - col[j]) for i, j in g.arcs if col[i] is not None and col[j] is not None))
    if kind in (EffectKind.MATCHING, EffectKind.MISMATCHING):
        want_match = kind == EffectKind.MATCHING
        return float(sum(
            1 for i, j in g.arcs
            if col[i] is not None and col[j] is not None and (col[i] == col[j]) == want_match
        ))
    if kind in (EffectKind.MATCHING_RECIPROCITY, EffectKind.MISMATCHING_RECIPROCITY):
        want_match = kind == EffectKind.MATCHING_RECIPROCITY
        return float(sum(
            1 for i, j in _mutual_pairs(g)
            if col[i] is not None and col[j] is not None and (col[i] == col[j]) == want_match
        ))
    raise PreconditionError(f"no statistic for effect {effect.label}")


def compute_statistics(model: ModelSpec, g: Digraph, attrs: Optional[AttributeSet] = None) -> np.ndarray:
    """Statistics vector ordered as in the model."""
    return np.array([compute_statistic(e, g, attrs) for e in model.effects], dtype=np.float64)


def statistics_record(model: ModelSpec, values: Sequence[float]) -> Dict[str, float]:
    return {label: float(v) for label, v in zip(model.labels, values)}
