"""Exact simulation of the triangle-free random graph process.

The process starts from the empty graph on n vertices.  At every step an
edge is drawn uniformly at random from the set of *open* pairs (pairs
that are neither edges nor would complete a triangle if inserted) and
added to the graph.  It terminates when no open pair remains; the final
graph is then maximal triangle-free.

Every unordered vertex pair carries exactly one status at all times:

    OPEN    insertable without creating a triangle
    EDGE    already inserted
    CLOSED  not an edge, but the endpoints share a neighbour

Statuses live in a packed triangular byte array, so lookups are O(1) and
the store costs n(n-1)/2 bytes.  Open pairs additionally sit in a dense
array with a rank->position index, giving O(1) uniform sampling and O(1)
deletion (swap with last).  A step therefore costs O(deg u + deg v).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from typing import Callable

DEFAULT_VERTEX_GUARD = 65535  # status store is n(n-1)/2 bytes; guard the allocation


class SizingError(ValueError):
    """Raised when a requested vertex count cannot be simulated."""


class PairStatus(IntEnum):
    OPEN = 0
    EDGE = 1
    CLOSED = 2


class VertexClass(Enum):
    """Classification of a vertex w relative to a non-edge pair {u, v}.

    OPEN_VERTEX  both {u,w} and {v,w} are open
    PARTIAL      exactly one of {u,w}, {v,w} is an edge, the other open
    COMPLETE     both {u,w} and {v,w} are edges (w is a common neighbour)
    NEITHER      any remaining combination (some pair involved is closed)
    """

    OPEN_VERTEX = "open"
    PARTIAL = "partial"
    COMPLETE = "complete"
    NEITHER = "neither"


@dataclass(frozen=True)
class StepResult:
    """One insertion: the chosen pair and every pair it closed."""

    chosen: tuple[int, int]
    newly_closed: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Saturation:
    """Run until no open pair remains."""


@dataclass(frozen=True)
class Steps:
    """Run until the given number of edges has been inserted."""

    limit: int


@dataclass(frozen=True)
class TimeLimit:
    """Run until scaled time i / n^(3/2) reaches t_max."""

    t_max: float


StopCondition = Saturation | Steps | TimeLimit


@dataclass(frozen=True)
class RunOutcome:
    steps: int
    open_pairs: int
    saturated: bool


@dataclass(frozen=True)
class AuditReport:
    """Result of recomputing pair statuses and triangle-freeness from scratch."""

    pairs_checked: int
    discrepancies: tuple[tuple[int, int, PairStatus, PairStatus], ...]
    edges_scanned: int
    triangles: tuple[tuple[int, int, int], ...]
    open_count_consistent: bool

    @property
    def ok(self) -> bool:
        return (
            not self.discrepancies
            and not self.triangles
            and self.open_count_consistent
        )


class ProcessState:
    """The evolving graph plus exact pair statuses and an O(1) open-pair sampler.

    A state is owned by one execution context while it is being stepped;
    once a run has finished, read-only queries are safe from anywhere.
    Identical (n, seed) and an identical step sequence reproduce the same
    edge log; measurement helpers never touch the process RNG.
    """

    def __init__(
        self,
        n: int,
        seed: int,
        *,
        record_frozen_y: bool = False,
        vertex_guard: int = DEFAULT_VERTEX_GUARD,
    ) -> None:
        if n < 2:
            raise SizingError(f"need at least 2 vertices to form a pair, got n={n}")
        if n > vertex_guard:
            raise SizingError(
                f"n={n} exceeds the memory guard ({vertex_guard}); "
                f"the status store alone would need n(n-1)/2 bytes"
            )
        self.n = n
        self.seed = seed
        total = n * (n - 1) // 2
        self._total = total
        # rank of pair (a, b) with a < b is _rowbase[a] + b
        self._rowbase = [a * n - a * (a + 1) // 2 - a - 1 for a in range(n)]
        self._status = bytearray(total)  # all OPEN
        self._open = list(range(total))
        self._open_pos = list(range(total))
        self._open_size = total
        self.adjacency: list[set[int]] = [set() for _ in range(n)]
        self.edge_log: list[tuple[int, int]] = []
        self._rng = random.Random(seed)
        self._frozen: dict[int, frozenset[int]] | None = (
            {} if record_frozen_y else None
        )

    # ------------------------------------------------------------------
    # basic queries

    @property
    def steps(self) -> int:
        """Number of edges inserted so far."""
        return len(self.edge_log)

    @property
    def open_pairs(self) -> int:
        """Q(i), the number of open pairs."""
        return self._open_size

    @property
    def total_pairs(self) -> int:
        return self._total

    def __repr__(self) -> str:
        return (
            f"ProcessState(n={self.n}, steps={self.steps}, "
            f"open={self._open_size})"
        )

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range for n={self.n}")

    def _rank(self, u: int, v: int) -> int:
        if u == v:
            raise ValueError(f"pair requires distinct vertices, got ({u}, {v})")
        self._check_vertex(u)
        self._check_vertex(v)
        if u > v:
            u, v = v, u
        return self._rowbase[u] + v

    def _unrank(self, rank: int) -> tuple[int, int]:
        n = self.n
        tn = 2 * n - 1
        u = int((tn - math.sqrt(tn * tn - 8 * rank)) // 2)
        if u < 0:
            u = 0
        elif u > n - 2:
            u = n - 2
        # row of u starts at rank(u, u+1); fix any float rounding
        rowbase = self._rowbase
        while u > 0 and rowbase[u] + u + 1 > rank:
            u -= 1
        while u < n - 2 and rowbase[u + 1] + u + 2 <= rank:
            u += 1
        return u, rank - rowbase[u]

    def pair_status(self, u: int, v: int) -> PairStatus:
        return PairStatus(self._status[self._rank(u, v)])

    # ------------------------------------------------------------------
    # stepping

    def step(self) -> StepResult | None:
        """Insert one uniformly random open pair.

        Returns None when no open pair remains (saturation); that is the
        normal terminal signal, not an error.
        """
        if self._open_size == 0:
            return None
        rank = self._open[self._rng.randrange(self._open_size)]
        return self._insert(rank)

    def force_step(self, u: int, v: int) -> StepResult:
        """Insert a specific open pair, bypassing the random draw.

        Intended for building test fixtures; the pair must be open.
        """
        rank = self._rank(u, v)
        if self._status[rank] != PairStatus.OPEN:
            raise ValueError(
                f"pair ({u}, {v}) is {PairStatus(self._status[rank]).name}, not OPEN"
            )
        return self._insert(rank)

    def _insert(self, rank: int) -> StepResult:
        u, v = self._unrank(rank)
        if self._frozen is not None:
            self._frozen[rank] = frozenset(self.partial_set(u, v))

        status = self._status
        open_list = self._open
        open_pos = self._open_pos
        rowbase = self._rowbase
        size = self._open_size

        # chosen pair leaves the open set and becomes an edge
        size -= 1
        pos = open_pos[rank]
        last = open_list[size]
        open_list[pos] = last
        open_pos[last] = pos
        open_pos[rank] = -1
        status[rank] = 1

        adj_u = self.adjacency[u]
        adj_v = self.adjacency[v]
        newly: list[tuple[int, int]] = []

        # every open pair {v, w} with w a neighbour of u gains the common
        # neighbour u, and symmetrically for {u, w}; those pairs close now
        for w in adj_u:
            a, b = (v, w) if v < w else (w, v)
            r = rowbase[a] + b
            if status[r] == 0:
                status[r] = 2
                size -= 1
                p = open_pos[r]
                last = open_list[size]
                open_list[p] = last
                open_pos[last] = p
                open_pos[r] = -1
                newly.append((a, b))
        for w in adj_v:
            a, b = (u, w) if u < w else (w, u)
            r = rowbase[a] + b
            if status[r] == 0:
                status[r] = 2
                size -= 1
                p = open_pos[r]
                last = open_list[size]
                open_list[p] = last
                open_pos[last] = p
                open_pos[r] = -1
                newly.append((a, b))

        self._open_size = size
        adj_u.add(v)
        adj_v.add(u)
        self.edge_log.append((u, v))
        return StepResult(chosen=(u, v), newly_closed=tuple(newly))

    def run(
        self,
        stop: StopCondition = Saturation(),
        on_step: Callable[["ProcessState", StepResult], None] | None = None,
    ) -> RunOutcome:
        """Step repeatedly until the stop condition or saturation.

        `on_step` fires after each insertion with the updated state.
        """
        if isinstance(stop, Saturation):
            limit = None
        elif isinstance(stop, Steps):
            limit = stop.limit
        elif isinstance(stop, TimeLimit):
            limit = math.ceil(stop.t_max * self.n**1.5)
        else:
            raise TypeError(f"unknown stop condition: {stop!r}")
        while limit is None or self.steps < limit:
            result = self.step()
            if result is None:
                break
            if on_step is not None:
                on_step(self, result)
        return RunOutcome(self.steps, self._open_size, self._open_size == 0)

    # ------------------------------------------------------------------
    # pair-local structure

    def classify_vertex(self, u: int, v: int, w: int) -> VertexClass:
        """Classify w relative to the non-edge pair {u, v}."""
        if w == u or w == v:
            raise ValueError("w must be distinct from u and v")
        if self.pair_status(u, v) == PairStatus.EDGE:
            raise ValueError(
                f"({u}, {v}) is an edge; vertex classification is defined "
                f"for non-edge pairs only"
            )
        s_uw = self._status[self._rank(u, w)]
        s_vw = self._status[self._rank(v, w)]
        if s_uw == 0 and s_vw == 0:
            return VertexClass.OPEN_VERTEX
        if (s_uw, s_vw) in ((0, 1), (1, 0)):
            return VertexClass.PARTIAL
        if s_uw == 1 and s_vw == 1:
            return VertexClass.COMPLETE
        return VertexClass.NEITHER

    def partial_set(self, u: int, v: int) -> set[int]:
        """All partial vertices of the non-edge pair {u, v}.

        Computed on demand by scanning both neighbourhoods, so the cost
        is O(deg u + deg v).
        """
        rank = self._rank(u, v)
        if self._status[rank] == PairStatus.EDGE:
            raise ValueError(
                f"({u}, {v}) is an edge; use frozen_partial_set for the "
                f"set recorded at insertion time"
            )
        status = self._status
        rowbase = self._rowbase
        out: set[int] = set()
        for w in self.adjacency[u]:  # {u,w} is an edge; need {v,w} open
            a, b = (v, w) if v < w else (w, v)
            if status[rowbase[a] + b] == 0:
                out.add(w)
        for w in self.adjacency[v]:
            a, b = (u, w) if u < w else (w, u)
            if status[rowbase[a] + b] == 0:
                out.add(w)
        return out

    def frozen_partial_set(self, u: int, v: int) -> frozenset[int] | None:
        """Partial set of an edge, as recorded just before its insertion.

        Returns None when the state was created without recording
        enabled.  Raises for pairs that were never inserted.
        """
        rank = self._rank(u, v)
        if self._status[rank] != PairStatus.EDGE:
            raise ValueError(f"({u}, {v}) was never inserted")
        if self._frozen is None:
            return None
        return self._frozen[rank]

    def closure_probability_estimate(self, u: int, v: int) -> Fraction:
        """Probability that the next step closes the open pair {u, v}.

        Exactly |partial_set(u, v)| / Q: the pair closes precisely when
        the missing edge at one of its partial vertices is chosen.
        """
        rank = self._rank(u, v)
        if self._status[rank] != PairStatus.OPEN:
            raise ValueError(
                f"({u}, {v}) is {PairStatus(self._status[rank]).name}; "
                f"closure probability is defined for open pairs"
            )
        return Fraction(len(self.partial_set(u, v)), self._open_size)

    def sample_open_pairs(
        self, count: int, rng: random.Random
    ) -> list[tuple[int, int]]:
        """Uniformly sample distinct open pairs (all of them if count >= Q).

        Uses the supplied RNG so measurement never perturbs the process
        stream.
        """
        size = self._open_size
        if count >= size:
            indices: range | list[int] = range(size)
        else:
            indices = rng.sample(range(size), count)
        return [self._unrank(self._open[i]) for i in indices]

    # ------------------------------------------------------------------
    # auditing

    def audit(self, sample_size: int, rng: random.Random | None = None) -> AuditReport:
        """Recompute ground truth and compare against the stored state.

        Checks `sample_size` random pairs (all pairs if the sample covers
        the store) against statuses recomputed from adjacency alone, and
        scans every edge for a common endpoint neighbour (a triangle).
        """
        if rng is None:
            rng = random.Random(0xA0D17)
        adj = self.adjacency
        total = self._total
        if sample_size >= total:
            ranks: range | list[int] = range(total)
            checked = total
        else:
            ranks = rng.sample(range(total), sample_size)
            checked = sample_size

        discrepancies: list[tuple[int, int, PairStatus, PairStatus]] = []
        for r in ranks:
            u, v = self._unrank(r)
            stored = PairStatus(self._status[r])
            if v in adj[u]:
                actual = PairStatus.EDGE
            elif not adj[u].isdisjoint(adj[v]):
                actual = PairStatus.CLOSED
            else:
                actual = PairStatus.OPEN
            if stored != actual:
                discrepancies.append((u, v, stored, actual))

        triangles: list[tuple[int, int, int]] = []
        for u, v in self.edge_log:
            common = adj[u] & adj[v]
            if common:
                triangles.append((u, v, min(common)))

        return AuditReport(
            pairs_checked=checked,
            discrepancies=tuple(discrepancies),
            edges_scanned=len(self.edge_log),
            triangles=tuple(triangles),
            open_count_consistent=self._status.count(0) == self._open_size,
        )


def new_process(
    n: int,
    seed: int,
    *,
    record_frozen_y: bool = False,
    vertex_guard: int = DEFAULT_VERTEX_GUARD,
) -> ProcessState:
    """Create a fresh process: step 0, empty graph, every pair open."""
    return ProcessState(
        n, seed, record_frozen_y=record_frozen_y, vertex_guard=vertex_guard
    )
