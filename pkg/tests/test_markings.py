import itertools

import numpy as np
import pytest

from pgfkit.cache import BallCache
from pgfkit.farey import INFINITY, SPHERE, ZERO, Slope, apply, random_sl2z, random_slope, twist
from pgfkit.markings import (
    SURFACE_DOMAIN,
    ExceedsCap,
    Marking,
    MarkingGraphConfig,
    adjacent,
    base_marking,
    bfs_marking_distance,
    clique_marking_distance,
    distance_formula_estimate,
    is_marking,
    k_of,
    marking_ball,
    marking_ball_graph,
    marking_distance,
    marking_neighbors,
    marking_projection_diameter,
    slopes_within,
    triangle_distance,
)
from pgfkit.metric import PreconditionError, check_comparable, fit_comparability
from pgfkit.projections import AnnularDomain

S = Slope.parse
CFG = MarkingGraphConfig.standard()
MU0 = base_marking()
T = twist(INFINITY, 1)


def test_is_marking_examples():
    assert is_marking({ZERO, INFINITY}, 1)
    assert not is_marking({ZERO}, 5)
    assert not is_marking({ZERO, S("2/3")}, 1)
    assert is_marking({ZERO, S("2/3")}, 2)


def test_text_format():
    m = Marking.parse("{1/0, 0/1} @1")
    assert m == MU0 and str(m) == "{0/1, 1/0} @1"
    with pytest.raises(ValueError):
        Marking.parse("{0/1} @1")
    with pytest.raises(ValueError):
        Marking.parse("0/1, 1/0")


def test_standard_config():
    assert (CFG.R, CFG.E) == (1, 1)
    assert CFG.is_clique_model and CFG.minimal_A2 == 4
    sph = MarkingGraphConfig.standard(SPHERE)
    assert (sph.R, sph.E) == (2, 2) and sph.is_clique_model
    with pytest.raises(ValueError):
        MarkingGraphConfig(1, 1, (twist(INFINITY, 2),))


def test_adjacent_examples():
    assert adjacent(MU0, MU0, CFG)
    for h in CFG.generators:
        assert adjacent(MU0, MU0.translate(h), CFG)
    assert not adjacent(MU0, MU0.translate(T ** 20), CFG)
    with pytest.raises(PreconditionError):
        adjacent(MU0, Marking((ZERO, S("2/3")), 2), CFG)


def test_neighbors_of_base_marking():
    nbrs = marking_neighbors(MU0, CFG)
    # subsets of the two Farey triangles on the edge {0/1, 1/0}
    assert len(nbrs) == 6
    assert all(adjacent(MU0, n, CFG) for n in nbrs)


def test_slopes_within_matches_brute_force():
    rng = np.random.default_rng(1)
    box = [Slope.of(p, q) for p in range(-60, 61) for q in range(0, 61) if np.gcd(p, q) == 1 and (q or p == 1)]
    for _ in range(10):
        a, b = random_slope(rng, 4), random_slope(rng, 4)
        if a == b:
            continue
        for bound in (1, 2, 3):
            brute = sorted(c for c in box if abs(c.p * a.q - c.q * a.p) <= bound and abs(c.p * b.q - c.q * b.p) <= bound)
            assert slopes_within([a, b], bound) == brute


def test_distance_examples():
    assert marking_distance(MU0, MU0, CFG) == 0
    for h in CFG.generators:
        assert marking_distance(MU0, MU0.translate(h), CFG) == 1
    h1, h2 = CFG.generators
    assert marking_distance(MU0, MU0.translate(h1 @ h2), CFG) <= 2
    assert marking_distance(MU0, MU0.translate(h1 @ h2), CFG, oracle=True) == marking_distance(MU0, MU0.translate(h1 @ h2), CFG)


def test_exceeds_cap():
    far = MU0.translate(T ** 9)
    assert isinstance(bfs_marking_distance(MU0, far, CFG, 3), ExceedsCap)
    assert str(ExceedsCap(3)) == ">3"
    assert bfs_marking_distance(MU0, far, CFG, 12) == clique_marking_distance(MU0, far)


def test_triangle_distance():
    t0 = (INFINITY, ZERO, S("1/1"))
    assert triangle_distance(t0, t0) == 0
    assert triangle_distance(t0, (ZERO, S("1/1"), S("1/2"))) == 1
    assert triangle_distance(t0, (INFINITY, ZERO, S("-1/1"))) == 1
    assert triangle_distance(t0, (S("1/2"), S("1/3"), S("2/5"))) == 3


def test_clique_formula_matches_bfs_on_ball():
    ms = sorted(marking_ball(MU0, 3, CFG))
    for x, y in itertools.combinations(ms, 2):
        assert clique_marking_distance(x, y) == bfs_marking_distance(x, y, CFG, 12)


def test_sphere_model_matches_bfs():
    cfg = MarkingGraphConfig.standard(SPHERE)
    ms = sorted(marking_ball(base_marking(SPHERE), 2, cfg))
    for x, y in itertools.combinations(ms, 2):
        assert marking_distance(x, y, cfg) == marking_distance(x, y, cfg, oracle=True)


def test_ball_graph_distances_from_center():
    g = marking_ball_graph(MU0, 3, CFG)
    for m, d in marking_ball(MU0, 3, CFG).items():
        assert g.distance(MU0, m) == d


def test_marking_distance_is_equivariant():
    rng = np.random.default_rng(6)
    ms = sorted(marking_ball(MU0, 3, CFG))
    for _ in range(100):
        x, y = (ms[int(i)] for i in rng.integers(0, len(ms), 2))
        g = random_sl2z(rng, 4, 2)
        assert marking_distance(x.translate(g), y.translate(g), CFG) == marking_distance(x, y, CFG)


def test_ball_cache_round_trip(tmp_path):
    cache = BallCache(tmp_path)
    b1 = marking_ball(MU0, 3, CFG, cache)
    assert list(tmp_path.glob("*.ball"))
    b2 = marking_ball(MU0, 3, CFG, cache)
    assert b1 == b2
    assert not list(tmp_path.glob(".tmp-*"))


def test_k_of():
    assert k_of(1) == 8
    assert k_of(0) == 6
    assert k_of(100) == 101
    with pytest.raises(ValueError):
        k_of(-1)


def test_projection_diameter_examples():
    Y = AnnularDomain(S("1/1"))
    assert marking_projection_diameter(MU0, Y) <= k_of(1)
    m = Marking((INFINITY, ZERO, S("1/1")), 1)
    assert marking_projection_diameter(m, AnnularDomain(INFINITY)) == marking_projection_diameter(Marking((ZERO, S("1/1")), 1), AnnularDomain(INFINITY))
    # the core itself projects to nothing, leaving a single lift
    assert marking_projection_diameter(Marking((INFINITY, ZERO), 1), AnnularDomain(INFINITY)) == 0


def test_lemma42_on_random_markings():
    rng = np.random.default_rng(42)
    ms = sorted(marking_ball(MU0, 5, CFG))
    for _ in range(200):
        m = ms[int(rng.integers(len(ms)))]
        Y = AnnularDomain(random_slope(rng, 30))
        if set(m.slopes) == {Y.core}:
            continue
        assert marking_projection_diameter(m, Y) <= k_of(CFG.R)
        n = marking_neighbors(m, CFG)
        n = n[int(rng.integers(len(n)))]
        union = Marking(m.union(n), CFG.E)
        assert marking_projection_diameter(union, Y) <= k_of(CFG.E)


def test_estimate_examples():
    assert distance_formula_estimate(MU0, MU0, 6)[0] == 0
    value, witnesses = distance_formula_estimate(MU0, MU0.translate(T ** 20), 6)
    dom, term = max(witnesses, key=lambda w: w[1])
    assert dom == AnnularDomain(INFINITY) and abs(term - 20) <= 5
    with pytest.raises(PreconditionError):
        distance_formula_estimate(MU0, MU0, 2)


def test_estimate_hull_matches_sweep():
    rng = np.random.default_rng(8)
    ms = sorted(marking_ball(MU0, 4, CFG))
    for _ in range(150):
        x, y = (ms[int(i)] for i in rng.integers(0, len(ms), 2))
        fast = distance_formula_estimate(x, y, 6, CFG)
        slow = distance_formula_estimate(x, y, 6, CFG, oracle=True)
        assert fast == slow


def test_estimate_is_comparable_on_ball():
    ms = sorted(marking_ball(MU0, 3, CFG))
    pairs = [(marking_distance(x, y, CFG), distance_formula_estimate(x, y, CFG.minimal_A2, CFG)[0]) for x, y in itertools.combinations(ms, 2)]
    fit = fit_comparability(pairs, C_budget=CFG.minimal_A2)
    assert fit.K <= 20
    assert all(check_comparable(a, b, fit) for a, b in pairs)
    d = np.array(pairs, dtype=float)
    assert np.corrcoef(d[:, 0], d[:, 1])[0, 1] > 0.5
