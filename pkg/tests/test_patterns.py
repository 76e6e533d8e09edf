"""Tests for pattern loading, copy search, density auditors, and blocking."""

from __future__ import annotations

import itertools
import random

import pytest

from trifree.process import ProcessState, Saturation, Steps
from trifree.patterns import (
    BlockReport,
    FirstAppearanceTracker,
    PatternError,
    PlacementClass,
    anchor_orientations,
    blocked_placements,
    classify_placement,
    complete_bipartite_pattern,
    count_copies,
    cycle_pattern,
    find_copy,
    heavy_neighbors,
    load_pattern_file,
    make_pattern,
    max_edges_k_subset,
    parse_pattern,
    path_pattern,
    pattern_text,
    single_edge_pattern,
)

C4_TEXT = """\
# a four-cycle
4 4
0 1
1 2
2 3
0 3
"""


def adjacency_from_edges(n, edges):
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def brute_force_copy_count(adj, pattern):
    """Oracle: try every injective assignment of pattern vertices."""
    n = len(adj)
    count = 0
    for image in itertools.permutations(range(n), pattern.k):
        if all(image[b] in adj[image[a]] for a, b in pattern.edges):
            count += 1
    return count


def brute_force_max_k_subset(adj, k):
    """Oracle: enumerate all k-subsets directly."""
    best = -1
    for subset in itertools.combinations(range(len(adj)), k):
        edges = sum(
            1 for a, b in itertools.combinations(subset, 2) if b in adj[a]
        )
        best = max(best, edges)
    return best


# ----------------------------------------------------------------------
# loading and validation

def test_parse_c4():
    pattern = parse_pattern(C4_TEXT, name="C4")
    assert pattern.k == 4
    assert pattern.e == 4
    assert not pattern.dense_flag
    assert pattern.edges == ((0, 1), (0, 3), (1, 2), (2, 3))


def test_parse_rejects_triangle_with_witness():
    text = "3 3\n0 1\n1 2\n0 2\n"
    with pytest.raises(PatternError, match=r"\(0, 1, 2\)"):
        parse_pattern(text)


def test_k66_is_not_dense_flagged():
    pattern = complete_bipartite_pattern(6, 6)
    assert pattern.k == 12 and pattern.e == 36
    assert not pattern.dense_flag  # 36 is far below 10240 * 12


def test_parse_error_line_numbers():
    with pytest.raises(PatternError, match="line 3"):
        parse_pattern("4 2\n0 1\nnot numbers\n")
    with pytest.raises(PatternError, match="line 4"):
        parse_pattern("4 2\n# comment\n0 1\n2 1\n")  # u < v violated
    with pytest.raises(PatternError, match="declares 3"):
        parse_pattern("4 3\n0 1\n1 2\n")
    with pytest.raises(PatternError, match="empty"):
        parse_pattern("# nothing\n")


def test_make_pattern_validation():
    with pytest.raises(PatternError, match="self-loop"):
        make_pattern(3, [(1, 1)])
    with pytest.raises(PatternError, match="duplicate"):
        make_pattern(3, [(0, 1), (1, 0)])
    with pytest.raises(PatternError, match="out of range"):
        make_pattern(3, [(0, 3)])
    with pytest.raises(PatternError, match="k >= 2"):
        make_pattern(1, [(0, 0)])
    with pytest.raises(PatternError, match="at least one edge"):
        make_pattern(3, [])


def test_pattern_vertex_cap_is_overridable():
    edges = [(i, i + 1) for i in range(13)]
    with pytest.raises(PatternError, match="caps"):
        make_pattern(14, edges)
    assert make_pattern(14, edges, max_vertices=16).k == 14


def test_load_pattern_file_roundtrip(tmp_path):
    path = tmp_path / "c4.pattern"
    path.write_text(C4_TEXT)
    pattern = load_pattern_file(str(path))
    assert pattern.name == "c4"
    assert parse_pattern(pattern_text(pattern)).edges == pattern.edges


def test_cycle_pattern_rejects_triangle():
    with pytest.raises(PatternError):
        cycle_pattern(3)


# ----------------------------------------------------------------------
# copy search

def test_find_copy_single_edge():
    adj = adjacency_from_edges(5, [(2, 4)])
    mapping = find_copy(adj, single_edge_pattern())
    assert mapping is not None
    assert set(mapping) == {2, 4}


def test_find_copy_c4_in_k22():
    adj = adjacency_from_edges(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
    mapping = find_copy(adj, cycle_pattern(4))
    assert mapping is not None
    pattern = cycle_pattern(4)
    assert all(mapping[b] in adj[mapping[a]] for a, b in pattern.edges)


def test_find_copy_pattern_larger_than_graph():
    adj = adjacency_from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert find_copy(adj, cycle_pattern(5)) is None


def test_find_copy_non_induced():
    # C4 sits inside K4 even though the K4 has chords
    adj = adjacency_from_edges(4, list(itertools.combinations(range(4), 2)))
    assert find_copy(adj, cycle_pattern(4)) is not None


def test_count_copies_single_edge_is_twice_edge_count():
    edges = [(0, 1), (1, 2), (3, 4), (0, 4)]
    adj = adjacency_from_edges(5, edges)
    assert count_copies(adj, single_edge_pattern(), cap=10**6) == 2 * len(edges)


def test_count_copies_c4_in_k22_is_eight():
    adj = adjacency_from_edges(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
    pattern = cycle_pattern(4)
    assert count_copies(adj, pattern, cap=10**6) == 8
    assert brute_force_copy_count(adj, pattern) == 8


def test_count_copies_empty_graph():
    adj = adjacency_from_edges(6, [])
    assert count_copies(adj, cycle_pattern(4), cap=10) == 0


def test_count_copies_cap():
    adj = adjacency_from_edges(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
    assert count_copies(adj, cycle_pattern(4), cap=3) == 3
    with pytest.raises(ValueError):
        count_copies(adj, cycle_pattern(4), cap=0)


def test_count_matches_brute_force_on_random_graphs():
    rng = random.Random(7)
    patterns = [cycle_pattern(4), path_pattern(3), complete_bipartite_pattern(2, 2)]
    for _ in range(20):
        n = rng.randint(4, 7)
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.4]
        adj = adjacency_from_edges(n, edges)
        for pattern in patterns:
            expected = brute_force_copy_count(adj, pattern)
            assert count_copies(adj, pattern, cap=10**6) == expected
            assert (find_copy(adj, pattern) is None) == (expected == 0)


# ----------------------------------------------------------------------
# anchors and incremental appearance

def test_anchor_orientation_counts():
    assert len(anchor_orientations(cycle_pattern(4))) == 1
    assert len(anchor_orientations(cycle_pattern(6))) == 1
    assert len(anchor_orientations(complete_bipartite_pattern(6, 6))) == 1
    # P4 has automorphism group {id, reversal}: 6 ordered pairs, 3 orbits
    assert len(anchor_orientations(path_pattern(3))) == 3


def test_tracker_single_edge_fires_at_step_one():
    state = ProcessState(10, seed=3)
    tracker = FirstAppearanceTracker(single_edge_pattern())
    result = state.step()
    tracker.offer(state.adjacency, *result.chosen, state.steps)
    assert tracker.first_step == 1


def test_tracker_p3_on_three_vertices_fires_at_step_two():
    state = ProcessState(3, seed=11)
    tracker = FirstAppearanceTracker(path_pattern(2))
    while (result := state.step()) is not None:
        tracker.offer(state.adjacency, *result.chosen, state.steps)
    assert tracker.first_step == 2


def test_tracker_matches_from_scratch_search():
    """Incremental anchored detection equals a full search at every step."""
    patterns = [
        cycle_pattern(4),
        cycle_pattern(5),
        path_pattern(3),
        complete_bipartite_pattern(2, 3),
    ]
    for seed in range(6):
        state = ProcessState(14, seed=seed)
        trackers = [FirstAppearanceTracker(p) for p in patterns]
        expected: dict[str, int | None] = {p.label: None for p in patterns}
        while (result := state.step()) is not None:
            for tracker in trackers:
                tracker.offer(state.adjacency, *result.chosen, state.steps)
            for pattern in patterns:
                if expected[pattern.label] is None and find_copy(
                    state.adjacency, pattern
                ):
                    expected[pattern.label] = state.steps
        for tracker in trackers:
            assert tracker.first_step == expected[tracker.pattern.label]


def test_tracker_until_step_window():
    state = ProcessState(12, seed=1)
    tracker = FirstAppearanceTracker(single_edge_pattern(), until_step=0)
    result = state.step()
    assert not tracker.offer(state.adjacency, *result.chosen, state.steps)
    assert tracker.first_step is None


def test_tracker_witness_is_a_copy():
    state = ProcessState(16, seed=4)
    pattern = cycle_pattern(4)
    tracker = FirstAppearanceTracker(pattern)
    while (result := state.step()) is not None:
        if tracker.offer(state.adjacency, *result.chosen, state.steps):
            break
    assert tracker.first_step is not None
    mapping = tracker.witness
    assert len(set(mapping)) == pattern.k
    assert all(mapping[b] in state.adjacency[mapping[a]] for a, b in pattern.edges)


# ----------------------------------------------------------------------
# k-subset density

def test_max_edges_empty_graph():
    adj = adjacency_from_edges(6, [])
    assert max_edges_k_subset(adj, 3).edges == 0


def test_max_edges_k23_and_star():
    # K_{2,3}: best 4 of 5 vertices span 4 edges
    k23 = adjacency_from_edges(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)])
    result = max_edges_k_subset(k23, 4)
    assert result.exact
    assert result.edges == 4 == brute_force_max_k_subset(k23, 4)
    # star K_{1,4}: any 3 vertices span at most 2 edges
    star = adjacency_from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    result = max_edges_k_subset(star, 3)
    assert result.edges == 2 == brute_force_max_k_subset(star, 3)


def test_max_edges_certificate_is_consistent():
    rng = random.Random(3)
    for _ in range(10):
        edges = [e for e in itertools.combinations(range(9), 2) if rng.random() < 0.3]
        adj = adjacency_from_edges(9, edges)
        for mode in ("exact", "local"):
            result = max_edges_k_subset(adj, 4, mode=mode, rng=random.Random(5))
            spanned = sum(
                1
                for a, b in itertools.combinations(result.vertices, 2)
                if b in adj[a]
            )
            assert spanned == result.edges
            assert len(result.vertices) == 4


def test_local_search_never_beats_exact():
    rng = random.Random(9)
    for trial in range(10):
        edges = [e for e in itertools.combinations(range(12), 2) if rng.random() < 0.35]
        adj = adjacency_from_edges(12, edges)
        exact = max_edges_k_subset(adj, 5, mode="exact")
        local = max_edges_k_subset(
            adj, 5, mode="local", restarts=30, rng=random.Random(trial)
        )
        assert not local.exact
        assert local.edges <= exact.edges


def test_exact_guard_points_at_local_search():
    adj = adjacency_from_edges(40, [(0, 1)])
    with pytest.raises(ValueError, match="local"):
        max_edges_k_subset(adj, 20, mode="exact", exact_guard=1000)


def test_max_edges_argument_errors():
    adj = adjacency_from_edges(5, [(0, 1)])
    with pytest.raises(ValueError):
        max_edges_k_subset(adj, 1)
    with pytest.raises(ValueError):
        max_edges_k_subset(adj, 6)
    with pytest.raises(ValueError):
        max_edges_k_subset(adj, 3, mode="noexact")


# ----------------------------------------------------------------------
# heavy neighbours

def test_heavy_neighbors_cases():
    empty = adjacency_from_edges(8, [])
    assert heavy_neighbors(empty, {0, 1, 2}) == set()
    # star centre 0 with 7 leaves; the leaves as the subset
    star = adjacency_from_edges(8, [(0, i) for i in range(1, 8)])
    leaves = set(range(1, 8))
    assert heavy_neighbors(star, leaves, threshold=6) == {0}
    assert heavy_neighbors(star, leaves, threshold=7) == set()
    with pytest.raises(ValueError):
        heavy_neighbors(star, set())


def test_heavy_neighbors_edge_count_arithmetic():
    # K_{7,8}: subset = one side (size 7); every opposite vertex has 7 > 6
    # neighbours inside, so all 8 are heavy, and the subset plus any 7 of
    # them spans 49 > 42 edges
    adj = adjacency_from_edges(
        15, [(i, 7 + j) for i in range(7) for j in range(8)]
    )
    side = set(range(7))
    heavy = heavy_neighbors(adj, side, threshold=6)
    assert heavy == set(range(7, 15))
    assert len(heavy) > 7
    spanned = sum(
        1
        for a, b in itertools.combinations(sorted(side | set(list(heavy)[:7])), 2)
        if b in adj[a]
    )
    assert spanned == 49 > 6 * 7


# ----------------------------------------------------------------------
# blocking

def test_blocked_placements_fresh_state_is_zero():
    state = ProcessState(10, seed=1)
    report = blocked_placements(state, cycle_pattern(4), 500, random.Random(0))
    assert report.blocked == 0
    assert report.fraction_blocked == 0.0


def test_blocked_placements_matches_closed_density_for_single_edge():
    state = ProcessState(20, seed=6)
    state.run(Saturation())
    closed = sum(
        1
        for u, v in itertools.combinations(range(20), 2)
        if state.pair_status(u, v).name == "CLOSED"
    )
    exact = closed / state.total_pairs
    report = blocked_placements(
        state, single_edge_pattern(), 20_000, random.Random(2)
    )
    assert abs(report.fraction_blocked - exact) < 0.02
    assert report.realized + report.blocked + report.open_compatible == 20_000


def test_blocked_placements_requires_small_pattern():
    state = ProcessState(5, seed=1)
    with pytest.raises(ValueError):
        blocked_placements(state, complete_bipartite_pattern(6, 6), 10, random.Random(0))


def test_classify_placement_cases():
    state = ProcessState(6, seed=1)
    state.force_step(0, 1)
    state.force_step(1, 2)  # path 0-1-2; {0,2} closed
    p3 = path_pattern(2)  # edges (0,1),(1,2)
    assert classify_placement(state, p3, (0, 1, 2)) == PlacementClass.REALIZED
    # map the path onto 0-2 via 1: edge (0,1)->{0,2} closed
    assert classify_placement(state, p3, (0, 2, 1)) == PlacementClass.BLOCKED
    assert classify_placement(state, p3, (3, 4, 5)) == PlacementClass.OPEN_COMPATIBLE


def test_blocked_placements_keep_and_monotone_never_realized():
    state = ProcessState(15, seed=9)
    state.run(Steps(12))
    pattern = path_pattern(2)
    report = blocked_placements(
        state, pattern, 2000, random.Random(4), keep_blocked=50
    )
    kept = report.kept_blocked
    assert len(kept) <= 50
    assert all(
        classify_placement(state, pattern, p) == PlacementClass.BLOCKED for p in kept
    )
    state.run(Saturation())
    # blocked placements can never become realized later in the run
    for placement in kept:
        assert classify_placement(state, pattern, placement) != PlacementClass.REALIZED


def test_block_report_arithmetic():
    report = BlockReport(sampled=10, blocked=6, realized=1)
    assert report.open_compatible == 3
    assert report.fraction_blocked == 0.6


# ----------------------------------------------------------------------
# density / appearance cross-check

def test_dense_subset_implication_wiring():
    # a copy of K_{6,6} forces some 12-subset to span >= 36 edges; on the
    # 12-vertex K_{6,6} itself both sides of the implication are tight
    pattern = complete_bipartite_pattern(6, 6)
    adj = adjacency_from_edges(12, list(pattern.edges))
    assert max_edges_k_subset(adj, 12).edges == 36
    assert find_copy(adj, pattern) is not None
    # and on a sparse graph the subset bound certifies absence
    sparse = adjacency_from_edges(12, [(i, i + 1) for i in range(11)])
    assert max_edges_k_subset(sparse, 12).edges < 36
    assert find_copy(sparse, pattern) is None
