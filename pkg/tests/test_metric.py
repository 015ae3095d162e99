import itertools
from collections import deque
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pgfkit.metric import (
    ComparabilityBound,
    DisconnectedGraph,
    FiniteGraph,
    KappaTooSmall,
    LengthMismatch,
    NotAWalk,
    NotComparable,
    PreconditionError,
    check_comparable,
    check_lemma21,
    check_projection_monotone,
    estimate_delta,
    hausdorff_quasigeodesic,
    is_local_quasigeodesic,
    projection_constant,
    truncate,
)
from pgfkit.farey import ZERO, farey_ball


def cycle(n):
    return FiniteGraph(range(n), [(i, (i + 1) % n) for i in range(n)])


def bfs_dist(g, s):
    dist = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        for w in g.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def brute_delta(g):
    """Plain-python thin-triangle oracle."""
    D = {v: bfs_dist(g, v) for v in g.vertices}
    best = 0
    for x, y, z in itertools.combinations_with_replacement(g.vertices, 3):
        s1, s2, s3 = g.geodesic(x, y), g.geodesic(y, z), g.geodesic(x, z)
        for side, others in ((s1, s2 + s3), (s2, s1 + s3), (s3, s1 + s2)):
            for p in side:
                best = max(best, min(D[p][o] for o in others))
    return best


def test_truncate_examples():
    assert truncate(5, 3) == 5
    assert truncate(2, 3) == 0
    assert truncate(3, 3) == 3
    with pytest.raises(ValueError):
        truncate(-1, 3)


@given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
def test_truncate_idempotent_and_monotone(a, a2, b):
    assert truncate(truncate(a, b), b) == truncate(a, b)
    if a <= a2:
        assert truncate(a, b) <= truncate(a2, b)


def test_comparable_examples():
    assert check_comparable(10, 10, ComparabilityBound(1, 0))
    assert not check_comparable(10, 0, ComparabilityBound(1, 0))
    assert check_comparable(4, 10, ComparabilityBound(2, 2))


def test_bound_invariants():
    with pytest.raises(ValueError):
        ComparabilityBound(Fraction(1, 2), 0)
    with pytest.raises(ValueError):
        ComparabilityBound(1, -1)
    assert ComparabilityBound(3, 2).symmetrize() == ComparabilityBound(3, 6)
    assert ComparabilityBound(2, 4).compose(ComparabilityBound(3, 1)) == ComparabilityBound(6, Fraction(1) + Fraction(4, 3))


@given(
    st.fractions(0, 50),
    st.fractions(0, 50),
    st.fractions(1, 5),
    st.fractions(0, 5),
)
def test_symmetry_rule(a, b, K, C):
    bound = ComparabilityBound(K, C)
    if check_comparable(a, b, bound):
        assert check_comparable(b, a, bound.symmetrize())


@given(st.fractions(0, 30), st.fractions(1, 4), st.fractions(0, 4), st.fractions(1, 4), st.fractions(0, 4), st.data())
def test_compose_rule(a, K1, C1, K2, C2, data):
    b1, b2 = ComparabilityBound(K1, C1), ComparabilityBound(K2, C2)
    b = data.draw(st.fractions(max(0, a / K1 - C1), K1 * a + C1))
    d = data.draw(st.fractions(max(0, b / K2 - C2), K2 * b + C2))
    assert check_comparable(a, d, b1.compose(b2))


def test_lemma21_examples():
    assert check_lemma21([5, 7], [5, 7], 1, 0, 1)
    assert check_lemma21([10], [5], 2, 0, 1)


def test_lemma21_preconditions_are_distinct_errors():
    with pytest.raises(LengthMismatch):
        check_lemma21([1, 2], [1], 1, 0, 1)
    with pytest.raises(KappaTooSmall):
        check_lemma21([1], [1], 3, 2, 12)
    with pytest.raises(NotComparable):
        check_lemma21([10], [0], 1, 0, 1)


def test_lemma21_randomized():
    rng = np.random.default_rng(7)
    K, C, kappa = 3, 2, 13
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        xs, ys = [], []
        for _ in range(n):
            x = Fraction(int(rng.integers(0, 60)), int(rng.integers(1, 4)))
            lo, hi = max(Fraction(0), x / K - C), K * x + C
            y = lo + (hi - lo) * Fraction(int(rng.integers(0, 101)), 100)
            xs.append(x)
            ys.append(y)
        assert check_lemma21(xs, ys, K, C, kappa)


def test_delta_of_trees_is_zero():
    rng = np.random.default_rng(3)
    for n in (1, 2, 5, 12):
        edges = [(i, int(rng.integers(0, i))) for i in range(1, n)]
        assert estimate_delta(FiniteGraph(range(n), edges)) == 0


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8])
def test_delta_of_cycles_matches_brute_force(n):
    g = cycle(n)
    assert estimate_delta(g) == brute_delta(g)


def test_six_cycle_delta():
    assert estimate_delta(cycle(6)) == 1


def test_delta_of_farey_ball():
    g = farey_ball(ZERO, 3, 4)
    d = estimate_delta(g)
    assert d == brute_delta(g)
    assert d >= 0


def test_disconnected_graph_errors():
    g = FiniteGraph([0, 1], [])
    with pytest.raises(DisconnectedGraph):
        estimate_delta(g)


def test_graph_rejects_loops():
    with pytest.raises(ValueError):
        FiniteGraph([0], [(0, 0)])


def test_canonical_geodesic_is_lexicographic():
    g = cycle(6)
    assert g.geodesic(0, 3) == [0, 1, 2, 3]
    assert g.geodesic(3, 0) == [3, 2, 1, 0]


def test_local_quasigeodesic_examples():
    g = cycle(8)
    geo = g.geodesic(0, 4)
    for D in range(1, 6):
        assert is_local_quasigeodesic(geo, D, 1, 0, g)
    assert not is_local_quasigeodesic([0, 1, 0], 2, 1, 0, g)
    with pytest.raises(NotAWalk):
        is_local_quasigeodesic([0, 2], 2, 1, 0, g)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 9), min_size=2, max_size=12), st.integers(1, 12), st.integers(1, 3), st.integers(0, 3))
def test_local_quasigeodesic_monotone_in_D(steps, D, K, C):
    g = cycle(10)
    path = [0]
    for s in steps:
        path.append((path[-1] + (1 if s % 2 else -1)) % 10)
    if is_local_quasigeodesic(path, D, K, C, g):
        for D2 in range(1, D + 1):
            assert is_local_quasigeodesic(path, D2, K, C, g)


def test_hausdorff_examples():
    g = FiniteGraph(range(5), [(0, 1), (1, 2), (1, 3), (3, 2), (2, 4)])
    assert hausdorff_quasigeodesic(g.geodesic(0, 4), g) == 0
    assert hausdorff_quasigeodesic([0, 1, 3, 2, 4], g) == 1


def test_projection_monotone():
    g = cycle(12)
    geo = g.geodesic(0, 5)
    assert projection_constant(1, 0, 0) == 1
    assert check_projection_monotone(geo, 1, 0, 0, g)
    with pytest.raises(PreconditionError):
        check_projection_monotone([0, 1, 2, 1, 2, 3], 1, 0, 0, g)


def test_fit_comparability_identity_and_budget():
    from pgfkit.metric import fit_comparability

    same = [(k, k) for k in range(6)]
    assert fit_comparability(same) == ComparabilityBound(1, 0)
    assert fit_comparability(same, C_budget=0) == ComparabilityBound(1, 0)
    pairs = [(2, 4), (3, 6), (0, 1)]
    assert fit_comparability(pairs) == ComparabilityBound(1, 3)
    fit = fit_comparability(pairs, C_budget=1)
    assert fit.K == Fraction(5, 3) and fit.C <= 1
    assert all(check_comparable(a, b, fit) for a, b in pairs)
    with pytest.raises(ValueError):
        fit_comparability([(0, 5), (1, 1)], C_budget=2)
    with pytest.raises(ValueError):
        fit_comparability([(1, 1)])


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=2, max_size=20), st.integers(0, 60))
def test_fit_is_minimal_within_budget(pairs, budget):
    from pgfkit.metric import fit_comparability

    try:
        fit = fit_comparability(pairs, C_budget=budget)
    except ValueError:
        assert any(a == 0 and b > budget for a, b in pairs) or any(a > 0 and b + budget == 0 for a, b in pairs)
        return
    assert fit.C <= budget
    assert all(check_comparable(a, b, fit) for a, b in pairs)
    if fit.K > 1:
        smaller = ComparabilityBound(fit.K - Fraction(1, 1000), budget)
        assert not all(check_comparable(a, b, smaller) for a, b in pairs)
