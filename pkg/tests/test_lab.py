import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgfkit.farey import INFINITY, ZERO, MappingClass, Slope, apply, curve_distance, is_pseudo_anosov, twist
from pgfkit.freeprod import IDENTITY_WORD, Presentation, ScaledPoint, TreePoint, Word, build_scaled_tree, normal_form, random_word
from pgfkit.lab import (
    FAIL,
    PASS,
    VACUOUS,
    OrbitMarking,
    RealizedGroup,
    UnsupportedRealization,
    annular_coefficient,
    d0_probe,
    distortion_fit,
    edge_constant_harness,
    estimate_constants,
    family,
    injectivity_scan,
    lemma31_check,
    lemma32_check,
    lemma53_check,
    lemma59_check,
    local_qg_check,
    marking_annular_distance,
    mu,
    offorbit_cores,
    orbit_curves,
    pa_scan,
    pell_slope,
    phi,
    qi_fit,
    realize,
    sample_pairs,
    standard_group,
    thm510_check,
    wordlen_twist_check,
)
from pgfkit.ledger import default_ledger
from pgfkit.metric import ComparabilityBound, PreconditionError

W = Word.parse
G6 = standard_group(6)
B_POWERS = [Word((("B", (k,)),)) for k in range(-10, 11) if k]


def _matrix_product(mats):
    out = np.eye(2, dtype=object)
    for m in mats:
        out = out.dot(np.array(m.rows, dtype=object))
    return out


def test_realize_examples():
    rg = RealizedGroup(ZERO, INFINITY)
    assert realize(rg, IDENTITY_WORD).is_identity()
    assert realize(RealizedGroup(INFINITY, ZERO), W("A(1)")) == twist(INFINITY, 1)
    ab = realize(rg, W("A(1)B(1)"))
    assert [list(r) for r in _matrix_product([twist(ZERO, 1), twist(INFINITY, 1)])] == [list(r) for r in ab.rows]
    # two positive twists about curves meeting once have order 6
    assert abs(ab.trace) == 1
    assert (ab ** 6).is_identity()
    assert abs(realize(rg, W("A(1)B(-1)")).trace) == 3


def test_realize_rejects_higher_rank():
    w = normal_form([("A", (1, 2))], Presentation(2, 1))
    with pytest.raises(UnsupportedRealization):
        realize(G6, w)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_realize_is_a_homomorphism(seed):
    rng = np.random.default_rng(seed)
    w1, w2 = random_word(rng, 4, 3), random_word(rng, 4, 3)
    assert realize(G6, w1 * w2) == realize(G6, w1) @ realize(G6, w2)
    assert realize(G6, w1.inverse()) == realize(G6, w1).inverse()


def test_pell_family():
    assert [pell_slope(D) for D in (1, 2, 3, 6)] == [ZERO, Slope.of(1, 2), Slope.of(2, 5), Slope.of(29, 70)]
    for rg in family(range(1, 9)):
        assert curve_distance(rg.alpha1, rg.beta1) == rg.D
    with pytest.raises(ValueError):
        RealizedGroup(ZERO, ZERO)


def test_phi_examples():
    assert phi(G6, TreePoint.W("A")) == G6.alpha1
    g = W("A(2)B(-1)A(1)")
    assert phi(G6, TreePoint.W("B", g)) == apply(realize(G6, g), G6.beta1)
    assert phi(G6, TreePoint.V()) == G6.geodesic[3]
    assert G6.D == 6
    assert [phi(G6, ScaledPoint("E", "", IDENTITY_WORD, j)) for j in range(1, 6)] == list(G6.geodesic[1:6])


def test_phi_on_scaled_tree_is_lipschitz_and_equivariant():
    tD = build_scaled_tree(3, G6.D)
    for p, q in tD.edges:
        assert curve_distance(phi(G6, p), phi(G6, q)) <= 1
    rng = np.random.default_rng(3)
    for p in list(tD.vertices)[:200]:
        g = random_word(rng, 3, 2)
        if p.kind == "W":
            moved = TreePoint.W(p.side, g * p.word)
        else:
            moved = ScaledPoint("E", "", g * p.word, p.step)
        assert phi(G6, moved) == apply(realize(G6, g), phi(G6, p))


def test_mu_contains_phi_and_is_equivariant():
    rng = np.random.default_rng(4)
    assert G6.geodesic[G6.mid] in G6.base_marking.slopes
    for _ in range(50):
        g, h = random_word(rng, 3, 3), random_word(rng, 3, 3)
        v = TreePoint.V(h)
        assert phi(G6, v) in mu(G6, v).slopes
        assert mu(G6, v.translate(g)) == mu(G6, v).translate(realize(G6, g))
        assert OrbitMarking(G6.base_marking, h).marking(G6) == mu(G6, v)


def test_injectivity_scan_examples():
    rep = injectivity_scan(standard_group(5), 4, 3)
    assert rep.passed and rep.summary["kernel_hits"] == 0
    # the braid relation: (ab)^6 = 1 when the curves meet once
    rg = RealizedGroup(ZERO, INFINITY)
    rep = injectivity_scan(rg, 12, 1)
    assert not rep.passed and W("A(1)B(1)") ** 6 in [r[0] for r in rep.rows]
    with pytest.raises(ValueError):
        injectivity_scan(G6, 0, 1)


def test_conjugates_of_factor_elements_are_multitwists():
    rng = np.random.default_rng(5)
    for _ in range(50):
        g = random_word(rng, 3, 3)
        f = g * W("B(2)") * g.inverse()
        m = realize(G6, f)
        curve = apply(realize(G6, g), G6.beta1)
        assert not m.is_identity() and m.trace == 2 and apply(m, curve) == curve


def test_pa_scan_examples():
    assert is_pseudo_anosov(realize(G6, W("A(1)B(1)")))
    assert pa_scan(standard_group(6), 2, 5).passed
    rep = pa_scan(RealizedGroup(ZERO, INFINITY), 2, 1)
    assert not rep.passed
    # b a^2 b^-1 is conjugate into a factor and never asserted
    assert all(r[0] != W("B(1)A(2)B(-1)") for r in rep.rows)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pa_verdict_is_conjugation_invariant(seed):
    rng = np.random.default_rng(seed)
    rg = standard_group(2)
    w, g = random_word(rng, 4, 3), random_word(rng, 3, 3)
    assert is_pseudo_anosov(realize(rg, w)) == is_pseudo_anosov(realize(rg, g * w * g.inverse()))


def test_d0_probe_matches_free_group_criterion():
    rep = d0_probe(family(range(1, 6)), 4, 2)
    assert rep.passed
    assert rep.summary["minimal_passing_D"] == 3
    for row in rep.rows:
        D, known_free, hits = row[0], row[4], row[5]
        if known_free:
            assert hits == 0
    assert rep.rows[0][6] > 0  # D = 1 fails the trace scan
    assert d0_probe(family([4]), 3, 2).summary["minimal_passing_D"] == 4
    assert d0_probe(family(range(1, 6)), 4, 2).to_csv() == rep.to_csv()


def test_lemma31_examples():
    assert lemma31_check(G6, B_POWERS, 23).verdict == PASS
    rep = lemma31_check(standard_group(2), [W("B(1)")], 23)
    assert rep.summary["bound"] == 0 and rep.verdict == VACUOUS
    with pytest.raises(PreconditionError):
        lemma31_check(G6, [W("B(1)")], 8, M=4)
    with pytest.raises(PreconditionError):
        lemma31_check(G6, [W("A(1)")], 23)


def test_lemma32_reports_vacuity_and_monotone_distances():
    rep = lemma32_check(G6, B_POWERS, 10, 1)
    assert rep.verdict == VACUOUS and rep.summary["vacuous"]
    assert all(r[1] >= 2 * G6.D - rep.summary["empirical_c"] for r in rep.rows)
    ds = [lemma32_check(rg, [W("B(1)")], 10, 1).rows[0][1] for rg in family(range(1, 9))]
    assert ds == sorted(ds)
    assert lemma32_check(G6, B_POWERS, 1, 0).verdict == PASS


def test_local_quasigeodesic_check():
    rep = local_qg_check(G6, B_POWERS[:6], 1, 2)
    assert rep.passed
    assert all(r[4] <= r[3] for r in rep.rows)
    assert any(r[5] == 1 for r in rep.rows) and any(r[5] == 2 for r in rep.rows)


def test_qi_fit_examples():
    pts = [(1, 2), (3, 7), (4, 4)]
    ident = qi_fit(pts, lambda x: x, lambda a, b: abs(a - b), lambda a, b: abs(a - b))
    assert ident == ComparabilityBound(1, 0)
    with pytest.raises(ValueError):
        qi_fit(pts[:1], lambda x: x, lambda a, b: 0, lambda a, b: 0)
    tD = build_scaled_tree(3, G6.D)
    ws = [p for p in tD.vertices if p.kind == "W"]
    fit = qi_fit(list(itertools.combinations(ws, 2)), lambda p: phi(G6, p), tD.distance, curve_distance)
    assert fit.K == 1 and fit.C < 2 * G6.D


def test_lemma53_examples():
    assert lemma53_check(G6, 3, 2).passed
    assert phi(G6, TreePoint.W("A", W("B(1)"))) != G6.alpha1


def test_edge_constants_and_equivariance():
    rep = edge_constant_harness(G6, 60)
    assert rep.passed and rep.summary["C1"] >= 1
    rng = np.random.default_rng(9)
    for core, *_ in rep.rows[:40]:
        g = realize(G6, random_word(rng, 3, 2))
        a = annular_coefficient(core, (G6.alpha1, G6.beta1))
        b = annular_coefficient(apply(g, core), (apply(g, G6.alpha1), apply(g, G6.beta1)))
        assert a == b


def test_ledger_and_lemma59():
    led = estimate_constants(G6, default_ledger(), bgim_samples=60, tree_radius=3, core_samples=40)
    assert led["thin_C0"] == (led["power_N"] + 1) * led["delta"] + 2
    assert led["local_P0"] == 2 * led["qi_K"] * (led["qi_C"] + 2 * led["stability_R0"]) + led["qi_K"] ** 2
    pairs = sample_pairs(np.random.default_rng(1), 60, 6, 3)
    rep = lemma59_check(G6, pairs, led)
    assert rep.passed and rep.summary["checked"] > 0
    assert rep.summary["empirical_C3"] <= led["proj_C3"]
    # a midpoint that is its own gate contributes nothing
    v = TreePoint.V(W("A(1)"))
    assert marking_annular_distance(G6.alpha1, mu(G6, v), mu(G6, v)) == 0
    assert all(r[4] == 0 for r in rep.rows if r[3] == 1)


def test_thm510_examples():
    rng = np.random.default_rng(2)
    cores = offorbit_cores(G6, [Slope.of(1, 1), Slope.of(3, 7), Slope.of(-2, 3)])
    assert Slope.of(1, 1) in cores
    assert offorbit_cores(G6, [G6.alpha1, G6.beta1]) == []
    rep = thm510_check(G6, sample_pairs(rng, 400, 4, 3), cores, contrast=(40,))
    assert rep.passed
    assert [r[-1] for r in rep.rows if r[0] == "onorbit"][0] >= 35
    with pytest.raises(PreconditionError):
        thm510_check(G6, [], [G6.alpha1])


def test_orbit_curves_contains_translates():
    orb = orbit_curves(G6, 2, 2)
    assert G6.alpha1 in orb and G6.beta1 in orb
    assert apply(realize(G6, W("B(1)")), G6.alpha1) in orb


def test_wordlen_twist():
    rep = wordlen_twist_check(G6, [0, 10])
    assert rep.rows[0][:2] == (0, 0)
    assert 5 <= rep.rows[1][1] <= 15
    assert wordlen_twist_check(G6, range(1, 51)).passed


def test_distortion_fit_has_positive_lower_slope():
    rng = np.random.default_rng(0)
    p1 = sample_pairs(rng, 150, 4, 3)
    p2 = sample_pairs(rng, 150, 4, 3, exclude=p1)
    assert not set(p1) & set(p2)
    f1, rep = distortion_fit(G6, p1, 4)
    f2, _ = distortion_fit(G6, p2, 4)
    assert rep.summary["lower_slope"] > 0
    assert abs(Fraction(f1.K) - Fraction(f2.K)) / Fraction(f1.K) <= Fraction(1, 5)


def test_report_formats():
    rep = injectivity_scan(G6, 1, 1)
    assert rep.to_csv().splitlines()[0] == "word,matrix"
    assert rep.summary_text().splitlines()[0] == "experiment = injectivity"
    assert "verdict = PASS" in rep.summary_text()
