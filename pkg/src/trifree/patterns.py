"""Fixed triangle-free patterns: loading, copy detection, density auditors.

A pattern is a small fixed graph F.  A *copy* of F in the evolving graph
is an injective map of pattern vertices to graph vertices that realises
every pattern edge as a graph edge (non-induced).  Because closed pairs
never become edges, a placement with any pattern edge on a closed pair
is permanently blocked: no copy can ever appear on those positions.

The search machinery is plain backtracking with degree pruning and
candidate ordering by constraint count.  Appearance tracking during a
run is incremental: after inserting an edge, only copies whose image
uses that edge need to be searched, anchored at automorphism-distinct
pattern edge orientations.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

from .process import PairStatus, ProcessState

# patterns with at least this many edges per vertex count as dense for
# the blocking analysis; far above what any small triangle-free graph
# can reach, so the flag is informational
DENSE_EDGE_FACTOR = 10240

DEFAULT_MAX_PATTERN_VERTICES = 12
EXACT_SUBSET_GUARD = 10_000_000


class PatternError(ValueError):
    """Malformed or invalid pattern input."""


@dataclass(frozen=True)
class Pattern:
    """A fixed triangle-free graph on vertices 0..k-1."""

    k: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""

    @property
    def e(self) -> int:
        return len(self.edges)

    @property
    def dense_flag(self) -> bool:
        return self.e >= DENSE_EDGE_FACTOR * self.k

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        adj: list[set[int]] = [set() for _ in range(self.k)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return tuple(frozenset(s) for s in adj)

    @property
    def label(self) -> str:
        return self.name or f"pattern-{self.k}v{self.e}e"


def make_pattern(
    k: int,
    edges: list[tuple[int, int]],
    name: str = "",
    max_vertices: int = DEFAULT_MAX_PATTERN_VERTICES,
) -> Pattern:
    """Validate and build a pattern (triangle-free, simple, k >= 2, e >= 1)."""
    if k < 2:
        raise PatternError(f"pattern needs k >= 2 vertices, got k={k}")
    if k > max_vertices:
        raise PatternError(
            f"pattern has k={k} vertices; the search default caps at "
            f"{max_vertices} (raise max_vertices to override)"
        )
    if not edges:
        raise PatternError("pattern needs at least one edge")
    seen: set[tuple[int, int]] = set()
    adj: list[set[int]] = [set() for _ in range(k)]
    for a, b in edges:
        if a == b:
            raise PatternError(f"self-loop at vertex {a}")
        if not (0 <= a < k and 0 <= b < k):
            raise PatternError(f"edge ({a}, {b}) out of range for k={k}")
        key = (a, b) if a < b else (b, a)
        if key in seen:
            raise PatternError(f"duplicate edge {key}")
        seen.add(key)
        adj[a].add(b)
        adj[b].add(a)
    for a, b in sorted(seen):
        common = adj[a] & adj[b]
        if common:
            w = min(common)
            raise PatternError(
                f"not triangle-free: vertices ({a}, {b}, {w}) form a triangle"
            )
    return Pattern(k=k, edges=tuple(sorted(seen)), name=name)


def parse_pattern(
    text: str,
    name: str = "",
    max_vertices: int = DEFAULT_MAX_PATTERN_VERTICES,
) -> Pattern:
    """Parse the text format: header line `k e`, then e lines `u v` (u < v).

    `#` starts a comment; blank lines are ignored.  Errors carry the
    offending 1-based line number.
    """
    header: tuple[int, int] | None = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise PatternError(f"line {lineno}: expected two integers, got {raw!r}")
        try:
            a, b = int(fields[0]), int(fields[1])
        except ValueError:
            raise PatternError(
                f"line {lineno}: expected two integers, got {raw!r}"
            ) from None
        if header is None:
            header = (a, b)
            continue
        if a >= b:
            raise PatternError(f"line {lineno}: edges must satisfy u < v, got {a} {b}")
        edges.append((a, b))
    if header is None:
        raise PatternError("empty pattern file")
    k, e = header
    if len(edges) != e:
        raise PatternError(f"header declares {e} edges but {len(edges)} were given")
    try:
        return make_pattern(k, edges, name=name, max_vertices=max_vertices)
    except PatternError as err:
        raise PatternError(str(err)) from None


def load_pattern_file(
    path: str, max_vertices: int = DEFAULT_MAX_PATTERN_VERTICES
) -> Pattern:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stem = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_pattern(text, name=stem, max_vertices=max_vertices)


def pattern_text(pattern: Pattern) -> str:
    lines = [f"{pattern.k} {pattern.e}"]
    lines.extend(f"{a} {b}" for a, b in pattern.edges)
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# common pattern constructors

def single_edge_pattern() -> Pattern:
    return make_pattern(2, [(0, 1)], name="edge")


def path_pattern(edge_count: int) -> Pattern:
    return make_pattern(
        edge_count + 1,
        [(i, i + 1) for i in range(edge_count)],
        name=f"P{edge_count + 1}",
    )


def cycle_pattern(length: int) -> Pattern:
    if length < 4:
        raise PatternError("cycles shorter than C4 are not triangle-free patterns")
    edges = [(i, i + 1) for i in range(length - 1)] + [(0, length - 1)]
    return make_pattern(length, edges, name=f"C{length}")


def complete_bipartite_pattern(a: int, b: int) -> Pattern:
    edges = [(i, a + j) for i in range(a) for j in range(b)]
    return make_pattern(a + b, edges, name=f"K{a},{b}")


# ----------------------------------------------------------------------
# copy search

def _build_order(
    pattern: Pattern, anchored: tuple[int, int] | None
) -> list[tuple[int, tuple[int, ...], int]]:
    """Greedy vertex order: most placed-neighbours first, then degree.

    Entries are (pattern vertex, placed pattern neighbours, min degree).
    With no anchor the order covers every vertex (the first entry has no
    constraints); with an anchor it covers the k-2 remaining vertices.
    """
    adj = pattern.adjacency
    placed: list[int] = list(anchored) if anchored else []
    remaining = [a for a in range(pattern.k) if a not in placed]
    order: list[tuple[int, tuple[int, ...], int]] = []
    while remaining:
        placed_set = set(placed)
        best = max(
            remaining,
            key=lambda a: (len(adj[a] & placed_set), len(adj[a])),
        )
        nbrs = tuple(b for b in placed if b in adj[best])
        order.append((best, nbrs, len(adj[best])))
        placed.append(best)
        remaining.remove(best)
    return order


def _search(
    gadj: list[set[int]],
    order: list[tuple[int, tuple[int, ...], int]],
    idx: int,
    assign: dict[int, int],
    used: set[int],
    cap: int,
    witness: list[dict[int, int]],
) -> int:
    """Count extensions of a partial assignment, stopping at cap."""
    if idx == len(order):
        if not witness:
            witness.append(dict(assign))
        return 1
    pv, nbrs, mindeg = order[idx]
    if nbrs:
        candidates = min((gadj[assign[b]] for b in nbrs), key=len)
    else:
        candidates = range(len(gadj))  # type: ignore[assignment]
    found = 0
    for c in candidates:
        if c in used or len(gadj[c]) < mindeg:
            continue
        ok = True
        for b in nbrs:
            if c not in gadj[assign[b]]:
                ok = False
                break
        if not ok:
            continue
        assign[pv] = c
        used.add(c)
        found += _search(gadj, order, idx + 1, assign, used, cap - found, witness)
        used.discard(c)
        del assign[pv]
        if found >= cap:
            break
    return found


def find_copy(
    gadj: list[set[int]], pattern: Pattern
) -> tuple[int, ...] | None:
    """An injective placement realising every pattern edge, or None.

    Patterns larger than the graph simply have no copy.
    """
    if pattern.k > len(gadj):
        return None
    order = _build_order(pattern, anchored=None)
    witness: list[dict[int, int]] = []
    if _search(gadj, order, 0, {}, set(), 1, witness):
        mapping = witness[0]
        return tuple(mapping[a] for a in range(pattern.k))
    return None


def count_copies(gadj: list[set[int]], pattern: Pattern, cap: int) -> int:
    """Exact count of labelled copies (injective placements), capped."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if pattern.k > len(gadj):
        return 0
    order = _build_order(pattern, anchored=None)
    return _search(gadj, order, 0, {}, set(), cap, [])


# ----------------------------------------------------------------------
# automorphism-distinct anchor orientations

def _automorphism_with(pattern: Pattern, pre: dict[int, int]) -> bool:
    """Is there an automorphism extending the given partial vertex map?"""
    adj = pattern.adjacency
    for a, fa in pre.items():
        if len(adj[a]) != len(adj[fa]):
            return False
    for (a, fa), (b, fb) in itertools.combinations(pre.items(), 2):
        if (b in adj[a]) != (fb in adj[fa]):
            return False

    rest = [a for a in range(pattern.k) if a not in pre]
    rest.sort(key=lambda a: -len(adj[a]))
    assign = dict(pre)
    used = set(pre.values())

    def extend(idx: int) -> bool:
        if idx == len(rest):
            return True
        a = rest[idx]
        for c in range(pattern.k):
            if c in used or len(adj[c]) != len(adj[a]):
                continue
            if any((b in adj[a]) != (fb in adj[c]) for b, fb in assign.items()):
                continue
            assign[a] = c
            used.add(c)
            if extend(idx + 1):
                return True
            used.discard(c)
            del assign[a]
        return False

    return extend(0)


def anchor_orientations(pattern: Pattern) -> list[tuple[int, int]]:
    """One ordered pattern edge per automorphism orbit.

    Anchoring an incremental search at these orientations covers every
    way a new graph edge can sit inside a copy; edge-transitive patterns
    collapse to a single anchor.
    """
    reps: list[tuple[int, int]] = []
    for a, b in pattern.edges:
        for pair in ((a, b), (b, a)):
            if not any(
                _automorphism_with(pattern, {rep[0]: pair[0], rep[1]: pair[1]})
                for rep in reps
            ):
                reps.append(pair)
    return reps


class FirstAppearanceTracker:
    """Incremental first-copy detection during a run.

    After each insertion, offer the new edge; only copies using that
    edge are searched, so a run that never produces a copy stays cheap
    while the graph is sparse.  `until_step` bounds the search window
    (useful for dense patterns, whose search cost grows late in a run).
    """

    def __init__(self, pattern: Pattern, until_step: int | None = None) -> None:
        self.pattern = pattern
        self.until_step = until_step
        self.first_step: int | None = None
        self.witness: tuple[int, ...] | None = None
        self._anchors = [
            (pair, _build_order(pattern, anchored=pair))
            for pair in anchor_orientations(pattern)
        ]

    def offer(self, gadj: list[set[int]], u: int, v: int, step: int) -> bool:
        """Check for a copy using the just-inserted edge {u, v}.

        Returns True exactly when this call records the first copy.
        """
        if self.first_step is not None:
            return False
        if self.until_step is not None and step > self.until_step:
            return False
        if self.pattern.k > len(gadj):
            return False
        pattern_adj = self.pattern.adjacency
        for (a, b), order in self._anchors:
            if len(gadj[u]) < len(pattern_adj[a]) or len(gadj[v]) < len(
                pattern_adj[b]
            ):
                continue
            witness: list[dict[int, int]] = []
            if _search(gadj, order, 0, {a: u, b: v}, {u, v}, 1, witness):
                mapping = witness[0]
                self.first_step = step
                self.witness = tuple(mapping[x] for x in range(self.pattern.k))
                return True
        return False


# ----------------------------------------------------------------------
# density auditors

@dataclass(frozen=True)
class KSubsetResult:
    """Best k-subset found: spanned edge count, certificate, exactness."""

    edges: int
    vertices: tuple[int, ...]
    exact: bool


def _spanned_edges(gadj: list[set[int]], vertices: tuple[int, ...]) -> int:
    total = 0
    for i, a in enumerate(vertices):
        ga = gadj[a]
        for b in vertices[i + 1 :]:
            if b in ga:
                total += 1
    return total


def max_edges_k_subset(
    gadj: list[set[int]],
    k: int,
    mode: str = "exact",
    restarts: int = 100,
    rng: random.Random | None = None,
    exact_guard: int = EXACT_SUBSET_GUARD,
) -> KSubsetResult:
    """Maximum number of edges spanned by any k-subset of vertices.

    "exact" enumerates all C(n, k) subsets (guarded); "local" runs
    randomized hill-climbing with vertex swaps and returns a lower bound
    with exact=False.
    """
    n = len(gadj)
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")

    if mode == "exact":
        if math.comb(n, k) > exact_guard:
            raise ValueError(
                f"C({n}, {k}) = {math.comb(n, k)} subsets exceed the exact "
                f"guard ({exact_guard}); use mode='local' for a lower bound"
            )
        best = -1
        best_w: tuple[int, ...] = ()
        for w in itertools.combinations(range(n), k):
            e = _spanned_edges(gadj, w)
            if e > best:
                best, best_w = e, w
        return KSubsetResult(edges=best, vertices=best_w, exact=True)

    if mode != "local":
        raise ValueError(f"mode must be 'exact' or 'local', got {mode!r}")

    if rng is None:
        rng = random.Random(0x5EA7)
    top_candidates = 16
    by_degree = sorted(range(n), key=lambda v: len(gadj[v]), reverse=True)
    best = -1
    best_w = ()
    for restart in range(restarts):
        members = set(by_degree[:k]) if restart == 0 else set(rng.sample(range(n), k))
        cnt = [0] * n
        for w in members:
            for y in gadj[w]:
                cnt[y] += 1
        edges = sum(cnt[w] for w in members) // 2
        while True:
            outs = heapq.nlargest(
                top_candidates,
                (x for x in range(n) if x not in members),
                key=cnt.__getitem__,
            )
            best_gain = 0
            move: tuple[int, int] | None = None
            for w in members:
                cw = cnt[w]
                for x in outs:
                    gain = cnt[x] - cw - (1 if x in gadj[w] else 0)
                    if gain > best_gain:
                        best_gain, move = gain, (w, x)
            if move is None:
                break
            w, x = move
            members.discard(w)
            members.add(x)
            for y in gadj[w]:
                cnt[y] -= 1
            for y in gadj[x]:
                cnt[y] += 1
            edges += best_gain
        if edges > best:
            candidate = tuple(sorted(members))
            # certificate is authoritative; recount defensively
            best = _spanned_edges(gadj, candidate)
            best_w = candidate
    return KSubsetResult(edges=best, vertices=best_w, exact=False)


def heavy_neighbors(
    gadj: list[set[int]], subset: set[int] | frozenset[int], threshold: int = 6
) -> set[int]:
    """Vertices outside the subset with more than `threshold` neighbours in it."""
    if not subset:
        raise ValueError("subset must be nonempty")
    counts: dict[int, int] = {}
    for w in subset:
        for y in gadj[w]:
            if y not in subset:
                counts[y] = counts.get(y, 0) + 1
    return {v for v, c in counts.items() if c > threshold}


# ----------------------------------------------------------------------
# placement blocking

class PlacementClass(Enum):
    BLOCKED = "blocked"  # some pattern edge sits on a closed pair
    REALIZED = "realized"  # every pattern edge sits on an edge
    OPEN_COMPATIBLE = "open"  # neither: the copy could still appear


@dataclass(frozen=True)
class BlockReport:
    """Classification counts over sampled random placements.

    kept_blocked holds a prefix of the blocked placements when the
    caller asked to retain some for later re-examination.
    """

    sampled: int
    blocked: int
    realized: int
    kept_blocked: tuple[tuple[int, ...], ...] = ()

    @property
    def open_compatible(self) -> int:
        return self.sampled - self.blocked - self.realized

    @property
    def fraction_blocked(self) -> float:
        return self.blocked / self.sampled if self.sampled else 0.0


def classify_placement(
    state: ProcessState, pattern: Pattern, mapping: tuple[int, ...]
) -> PlacementClass:
    """Classify one injective placement against current pair statuses."""
    all_edges = True
    for a, b in pattern.edges:
        status = state.pair_status(mapping[a], mapping[b])
        if status == PairStatus.CLOSED:
            return PlacementClass.BLOCKED
        if status != PairStatus.EDGE:
            all_edges = False
    return PlacementClass.REALIZED if all_edges else PlacementClass.OPEN_COMPATIBLE


def sample_placement(n: int, k: int, rng: random.Random) -> tuple[int, ...]:
    """A uniformly random injective placement (partial shuffle)."""
    return tuple(rng.sample(range(n), k))


def blocked_placements(
    state: ProcessState,
    pattern: Pattern,
    sample_count: int,
    rng: random.Random,
    keep_blocked: int = 0,
) -> BlockReport:
    """Classify `sample_count` uniformly random placements.

    Optionally keeps up to `keep_blocked` of the blocked placements so a
    caller can re-examine them later in the run (a blocked placement can
    never become realized, because closed pairs never become edges).
    """
    if pattern.k > state.n:
        raise ValueError(f"pattern needs {pattern.k} vertices, graph has {state.n}")
    blocked = 0
    realized = 0
    kept: list[tuple[int, ...]] = []
    for _ in range(sample_count):
        placement = sample_placement(state.n, pattern.k, rng)
        verdict = classify_placement(state, pattern, placement)
        if verdict == PlacementClass.BLOCKED:
            blocked += 1
            if len(kept) < keep_blocked:
                kept.append(placement)
        elif verdict == PlacementClass.REALIZED:
            realized += 1
    return BlockReport(
        sampled=sample_count,
        blocked=blocked,
        realized=realized,
        kept_blocked=tuple(kept),
    )
