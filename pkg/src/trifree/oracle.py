"""Independent reference implementation via random pair orderings.

Drawing a uniformly random permutation of all vertex pairs and inserting
each pair in order whenever it keeps the graph triangle-free produces
the same distribution over runs as sampling a uniform open pair at every
step.  This module implements that permutation scheme from scratch (no
status store, no open-pair sampler) so the two code paths can be
compared distributionally: at small n the total variation distance
between their final-edge-set distributions must vanish with the trial
count.
"""

from __future__ import annotations

import random
from collections import Counter

from .process import ProcessState, Saturation

EdgeSet = frozenset[tuple[int, int]]


def permutation_final_edges(n: int, rng: random.Random) -> EdgeSet:
    """Final graph of one permutation-ordered insertion pass."""
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    rng.shuffle(pairs)
    adjacency: list[set[int]] = [set() for _ in range(n)]
    edges: list[tuple[int, int]] = []
    for u, v in pairs:
        if adjacency[u].isdisjoint(adjacency[v]):
            adjacency[u].add(v)
            adjacency[v].add(u)
            edges.append((u, v))
    return frozenset(edges)


def engine_final_edges(n: int, seed: int) -> EdgeSet:
    """Final graph of one engine run to saturation."""
    state = ProcessState(n, seed)
    state.run(Saturation())
    return frozenset(state.edge_log)


def permutation_distribution(n: int, trials: int, seed: int) -> Counter[EdgeSet]:
    rng = random.Random(seed)
    counts: Counter[EdgeSet] = Counter()
    for _ in range(trials):
        counts[permutation_final_edges(n, rng)] += 1
    return counts


def engine_distribution(n: int, trials: int, seed_base: int) -> Counter[EdgeSet]:
    counts: Counter[EdgeSet] = Counter()
    for trial in range(trials):
        counts[engine_final_edges(n, seed_base + trial)] += 1
    return counts


def total_variation(a: Counter, b: Counter) -> float:
    """TV distance between two empirical distributions."""
    na = sum(a.values())
    nb = sum(b.values())
    if na == 0 or nb == 0:
        raise ValueError("both samples must be nonempty")
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a[k] / na - b[k] / nb) for k in keys)


def equivalence_tv(
    n: int, trials: int, engine_seed_base: int = 7_000_000, oracle_seed: int = 42
) -> float:
    """TV distance between engine and permutation final-graph samples."""
    return total_variation(
        engine_distribution(n, trials, engine_seed_base),
        permutation_distribution(n, trials, oracle_seed),
    )
