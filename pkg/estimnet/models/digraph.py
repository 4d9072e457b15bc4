"""
Digraph Model
Sparse mutable directed graph with incrementally maintained two-path tables
"""
from math import ceil, log
from typing import Dict, Iterable, Iterator, List, Optional, Tuple
import enum
import logging

import mmh3
from bitarray import bitarray

from estimnet.config import settings
from estimnet.exceptions import InternalInvariantError, PreconditionError
from estimnet.utils.rng import RandomStream

logger = logging.getLogger(__name__)


class TableKind(str, enum.Enum):
    """Two-path table selector"""
    MIX = "mix"  # L2(i,j): i -> h -> j
    IN = "in"    # L2D(i,j): h -> i, h -> j
    OUT = "out"  # L2U(i,j): i -> h, j -> h


class BloomPrefilter:
    """
    Append-only Bloom filter over integer pair keys.

    Answers "possibly present" or "definitely absent". Keys are never
    removed, so entries deleted from a table may still test positive.
    """

    def __init__(self, capacity: int, error_rate: float):
        capacity = max(int(capacity), 1)
        self.num_bits = max(int(-capacity * log(error_rate) / (log(2) ** 2)), 64)
        self.num_hashes = max(int(ceil(self.num_bits / capacity * log(2))), 1)
        self.bits = bitarray(self.num_bits)
        self.bits.setall(0)
        self.count = 0

    def _positions(self, key: int) -> Iterator[int]:
        h1, h2 = mmh3.hash64(key.to_bytes(8, "little"), signed=False)
        for k in range(self.num_hashes):
            yield (h1 + k * h2) % self.num_bits

    def add(self, key: int) -> None:
        for pos in self._positions(key):
            self.bits[pos] = 1
        self.count += 1

    def might_contain(self, key: int) -> bool:
        for pos in self._positions(key):
            if not self.bits[pos]:
                return False
        return True

    def clear(self) -> None:
        self.bits.setall(0)
        self.count = 0


class TwoPathTable:
    """
    Sparse map from node pair key to a positive two-path count.

    Absent keys have count 0; entries that fall to zero are deleted.
    Symmetric tables store each unordered pair once under (min, max).
    """

    def __init__(self, n: int, symmetric: bool, prefilter: Optional[BloomPrefilter] = None):
        self.n = n
        self.symmetric = symmetric
        self.entries: Dict[int, int] = {}
        self.prefilter = prefilter

    def key(self, i: int, j: int) -> int:
        if self.symmetric and i > j:
            i, j = j, i
        return i * self.n + j

    def unkey(self, key: int) -> Tuple[int, int]:
        return divmod(key, self.n)

    def get(self, i: int, j: int) -> int:
        if self.symmetric and i > j:
            i, j = j, i
        key = i * self.n + j
        if self.prefilter is not None and not self.prefilter.might_contain(key):
            return 0
        return self.entries.get(key, 0)

    def increment(self, i: int, j: int) -> None:
        if self.symmetric and i > j:
            i, j = j, i
        key = i * self.n + j
        count = self.entries.get(key)
        if count is None:
            self.entries[key] = 1
            if self.prefilter is not None:
                self.prefilter.add(key)
        else:
            self.entries[key] = count + 1

    def decrement(self, i: int, j: int) -> None:
        if self.symmetric and i > j:
            i, j = j, i
        key = i * self.n + j
        count = self.entries.get(key, 0)
        if count <= 0:
            raise InternalInvariantError(f"two-path count for ({i},{j}) would go negative")
        if count == 1:
            del self.entries[key]
        else:
            self.entries[key] = count - 1

    def items(self) -> Iterator[Tuple[int, int, int]]:
        """Yield (i, j, count) for every stored entry."""
        n = self.n
        for key, count in self.entries.items():
            i, j = divmod(key, n)
            yield i, j, count

    def rebuild_prefilter(self) -> None:
        if self.prefilter is None:
            return
        self.prefilter.clear()
        for key in self.entries:
            self.prefilter.add(key)

    def __len__(self) -> int:
        return len(self.entries)


class Digraph:
    """
    Directed graph on dense node ids 0..n-1.

    Keeps out- and in-adjacency (insertion-ordered dicts used as ordered
    sets), a flat arc list with positional index for uniform arc selection,
    and the three two-path tables tp_mix, tp_in and tp_out.
    """

    def __init__(self, n: int, use_prefilter: Optional[bool] = None, prefilter_capacity: Optional[int] = None):
        if n < 1:
            raise PreconditionError(f"node count must be positive, got {n}")
        self.n = n
        self.out_adj: List[Dict[int, None]] = [{} for _ in range(n)]
        self.in_adj: List[Dict[int, None]] = [{} for _ in range(n)]
        self.arcs: List[Tuple[int, int]] = []
        self.arc_pos: Dict[int, int] = {}

        if use_prefilter is None:
            use_prefilter = settings.PREFILTER_ENABLED
        capacity = prefilter_capacity or settings.PREFILTER_CAPACITY
        self.use_prefilter = use_prefilter
        self.prefilter_capacity = capacity

        def make_filter() -> Optional[BloomPrefilter]:
            if not use_prefilter:
                return None
            return BloomPrefilter(capacity, settings.PREFILTER_ERROR_RATE)

        self.tp_mix = TwoPathTable(n, symmetric=False, prefilter=make_filter())
        self.tp_in = TwoPathTable(n, symmetric=True, prefilter=make_filter())
        self.tp_out = TwoPathTable(n, symmetric=True, prefilter=make_filter())

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[Tuple[int, int]], **kwargs) -> "Digraph":
        g = cls(n, **kwargs)
        for i, j in arcs:
            g.insert_arc(i, j)
        return g

    def __repr__(self):
        return f"<Digraph n={self.n} L={self.L}>"

    @property
    def L(self) -> int:
        return len(self.arcs)

    @property
    def max_arcs(self) -> int:
        return self.n * (self.n - 1)

    @property
    def density(self) -> float:
        return self.L / self.max_arcs if self.n > 1 else 0.0

    def _check_node(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise PreconditionError(f"node id {i} out of range 0..{self.n - 1}")

    def table(self, kind: TableKind) -> TwoPathTable:
        if kind == TableKind.MIX:
            return self.tp_mix
        if kind == TableKind.IN:
            return self.tp_in
        return self.tp_out

    def is_arc(self, i: int, j: int) -> bool:
        self._check_node(i)
        self._check_node(j)
        return j in self.out_adj[i]

    def out_degree(self, i: int) -> int:
        self._check_node(i)
        return len(self.out_adj[i])

    def in_degree(self, i: int) -> int:
        self._check_node(i)
        return len(self.in_adj[i])

    def two_path_count(self, kind: TableKind, i: int, j: int) -> int:
        self._check_node(i)
        self._check_node(j)
        return self.table(kind).get(i, j)

    def insert_arc(self, i: int, j: int) -> None:
        """Add arc i -> j and increment every two-path count it creates."""
        self._check_node(i)
        self._check_node(j)
        if i == j:
            raise PreconditionError(f"self-loop ({i},{j}) not allowed")
        out_i = self.out_adj[i]
        if j in out_i:
            raise PreconditionError(f"arc ({i},{j}) already present")

        in_i = self.in_adj[i]
        out_j = self.out_adj[j]
        in_j = self.in_adj[j]
        tp_mix, tp_in, tp_out = self.tp_mix, self.tp_in, self.tp_out

        # h -> i -> j
        for h in in_i:
            if h != j:
                tp_mix.increment(h, j)
        # i -> j -> h
        for h in out_j:
            if h != i:
                tp_mix.increment(i, h)
        # i -> j, i -> h: j and h share in-neighbour i
        for h in out_i:
            tp_in.increment(j, h)
        # i -> j, h -> j: i and h share out-neighbour j
        for h in in_j:
            tp_out.increment(i, h)

        out_i[j] = None
        in_j[i] = None
        self.arc_pos[i * self.n + j] = len(self.arcs)
        self.arcs.append((i, j))

    def delete_arc(self, i: int, j: int) -> None:
        """Remove arc i -> j; two-path entries falling to zero are removed."""
        self._check_node(i)
        self._check_node(j)
        out_i = self.out_adj[i]
        if j not in out_i:
            raise PreconditionError(f"arc ({i},{j}) not present")

        del out_i[j]
        in_j = self.in_adj[j]
        del in_j[i]

        in_i = self.in_adj[i]
        out_j = self.out_adj[j]
        tp_mix, tp_in, tp_out = self.tp_mix, self.tp_in, self.tp_out
        for h in in_i:
            if h != j:
                tp_mix.decrement(h, j)
        for h in out_j:
            if h != i:
                tp_mix.decrement(i, h)
        for h in out_i:
            tp_in.decrement(j, h)
        for h in in_j:
            tp_out.decrement(i, h)

        # swap-remove from the flat arc list
        key = i * self.n + j
        pos = self.arc_pos.pop(key)
        last = self.arcs.pop()
        if pos < len(self.arcs):
            self.arcs[pos] = last
            self.arc_pos[last[0] * self.n + last[1]] = pos

    def toggle_arc(self, i: int, j: int) -> None:
        if j in self.out_adj[i]:
            self.delete_arc(i, j)
        else:
            self.insert_arc(i, j)

    def random_arc(self, rng: RandomStream) -> Tuple[int, int]:
        """Uniformly random existing arc."""
        if not self.arcs:
            raise PreconditionError("cannot select an arc from an empty graph")
        return self.arcs[rng.integer(len(self.arcs))]

    def random_nonarc_dyad(self, rng: RandomStream) -> Tuple[int, int]:
        """Uniformly random ordered dyad (i != j) with no arc, by rejection."""
        n = self.n
        if self.L >= self.max_arcs:
            raise PreconditionError("cannot select a non-arc dyad from a complete graph")
        out_adj = self.out_adj
        while True:
            i = rng.integer(n)
            j = rng.integer(n - 1)
            if j >= i:
                j += 1
            if j not in out_adj[i]:
                return i, j

    def random_dyad(self, rng: RandomStream) -> Tuple[int, int]:
        """Uniformly random ordered dyad (i != j)."""
        if self.n < 2:
            raise PreconditionError(f"no dyads in a graph with {self.n} node(s)")
        i = rng.integer(self.n)
        j = rng.integer(self.n - 1)
        if j >= i:
            j += 1
        return i, j

    def is_isolate(self, i: int) -> bool:
        return not self.out_adj[i] and not self.in_adj[i]

    def copy(self) -> "Digraph":
        g = Digraph(self.n, use_prefilter=self.use_prefilter, prefilter_capacity=self.prefilter_capacity)
        for i, j in self.arcs:
            g.insert_arc(i, j)
        return g

    def reversed(self) -> "Digraph":
        return Digraph.from_arcs(
            self.n, ((j, i) for i, j in self.arcs),
            use_prefilter=self.use_prefilter, prefilter_capacity=self.prefilter_capacity,
        )

    def without_hubs(self, max_degree: int) -> Tuple["Digraph", List[int]]:
        """
        Copy with every arc incident to a node of in- or out-degree above
        max_degree dropped. Node ids are kept; removed hubs become isolates.
        """
        hubs = [v for v in range(self.n) if len(self.out_adj[v]) > max_degree or len(self.in_adj[v]) > max_degree]
        hub_set = set(hubs)
        g = Digraph.from_arcs(
            self.n, ((i, j) for i, j in self.arcs if i not in hub_set and j not in hub_set),
            use_prefilter=self.use_prefilter, prefilter_capacity=self.prefilter_capacity,
        )
        return g, hubs

    def rebuild_prefilters(self) -> None:
        for table in (self.tp_mix, self.tp_in, self.tp_out):
            table.rebuild_prefilter()
        logger.debug(f"Rebuilt prefilters for {self}")

    def check_invariants(self) -> None:
        """Verify adjacency triple-consistency and arc list bookkeeping."""
        n = self.n
        out_total = sum(len(a) for a in self.out_adj)
        in_total = sum(len(a) for a in self.in_adj)
        if not out_total == in_total == len(self.arcs) == len(self.arc_pos):
            raise InternalInvariantError(
                f"arc counts disagree: out={out_total} in={in_total} list={len(self.arcs)}"
            )
        for pos, (i, j) in enumerate(self.arcs):
            if i == j:
                raise InternalInvariantError(f"self-loop ({i},{j}) stored")
            if j not in self.out_adj[i] or i not in self.in_adj[j]:
                raise InternalInvariantError(f"arc ({i},{j}) missing from adjacency")
            if self.arc_pos.get(i * n + j) != pos:
                raise InternalInvariantError(f"arc ({i},{j}) has stale position index")
        for table in (self.tp_mix, self.tp_in, self.tp_out):
            for key, count in table.entries.items():
                if count <= 0:
                    raise InternalInvariantError(f"non-positive entry {count} stored for key {key}")
                if table.prefilter is not None and not table.prefilter.might_contain(key):
                    raise InternalInvariantError(f"prefilter false negative for key {key}")
