"""Surface realizations of free products of two cyclic twist groups, and the
experiments run on them.

A realization fixes two slopes alpha1, beta1 and twist powers; the word
a^k b^l ... maps to the product of the corresponding Dehn twists.  The
equivariant maps phi (tree points to curves) and mu (edge midpoints to
markings) are built from one fixed curve-graph geodesic [alpha1, beta1].

Every experiment returns a Report: a CSV table with one row per checked item
and a stable key/value summary whose ``verdict`` is PASS, FAIL or VACUOUS.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .farey import (
    INFINITY,
    TORUS,
    MappingClass,
    Slope,
    SurfaceModel,
    apply,
    curve_distance,
    curve_geodesic,
    det,
    farey_ladder_graph,
    fills,
    geometric_intersection,
    intersection_growth,
    is_pseudo_anosov,
    random_slope,
    twist,
)
from .freeprod import (
    IDENTITY_WORD,
    Presentation,
    ScaledPoint,
    TreePoint,
    V0,
    Word,
    cyclic_reduce,
    enumerate_words,
    flats_on_geodesic,
    gate,
    random_word,
    total_distance,
    tree_distance,
)
from .ledger import ConstantsLedger
from .markings import Marking, MarkingGraphConfig, k_of, marking_distance
from .metric import ComparabilityBound, FiniteGraph, PreconditionError, fit_comparability, is_local_quasigeodesic
from .projections import AnnularDomain, projection_diameter

PASS, FAIL, VACUOUS = "PASS", "FAIL", "VACUOUS"


class UnsupportedRealization(ValueError):
    """Only cyclic factors can be realized on a complexity-one surface."""


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    name: str
    columns: Tuple[str, ...]
    rows: List[tuple] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return str(self.summary.get("verdict", PASS))

    @property
    def passed(self) -> bool:
        return self.verdict != FAIL

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = [f"experiment = {self.name}"]
        lines += [f"{k} = {_fmt(self.summary[k])}" for k in sorted(self.summary)]
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt(y) for y in x)
    if x is None:
        return ""
    return str(x)


def _verdict(ok: bool) -> str:
    return PASS if ok else FAIL


# ---------------------------------------------------------------------------
# the realized group


@dataclass(frozen=True)
class RealizedGroup:
    alpha1: Slope
    beta1: Slope
    gen_exponents_A: int = 1
    gen_exponents_B: int = 1
    surface: SurfaceModel = TORUS

    def __post_init__(self):
        if self.alpha1 == self.beta1:
            raise ValueError("alpha1 and beta1 must differ")
        if self.gen_exponents_A == 0 or self.gen_exponents_B == 0:
            raise ValueError("twist powers must be nonzero")

    @cached_property
    def D(self) -> int:
        return curve_distance(self.alpha1, self.beta1, self.surface)

    @cached_property
    def geodesic(self) -> Tuple[Slope, ...]:
        return tuple(curve_geodesic(self.alpha1, self.beta1, self.surface))

    @property
    def mid(self) -> int:
        """Index on the fixed geodesic of the image of an edge midpoint."""
        return (self.D + 1) // 2

    @property
    def intersection(self) -> int:
        return abs(det(self.alpha1.vector, self.beta1.vector))

    def curve(self, side: str) -> Slope:
        return self.alpha1 if side == "A" else self.beta1

    def generator(self, side: str, e: int) -> MappingClass:
        power = self.gen_exponents_A if side == "A" else self.gen_exponents_B
        return twist(self.curve(side), e * power)

    @cached_property
    def marking_config(self) -> MarkingGraphConfig:
        return MarkingGraphConfig.standard(self.surface)

    @cached_property
    def base_marking(self) -> Marking:
        geo = self.geodesic
        return Marking((geo[self.mid - 1], geo[self.mid]), self.marking_config.R, self.surface)

    def is_known_free(self) -> bool:
        """Two transvection powers generate a free group of rank two exactly
        when |k l| i^2 >= 4 (ping-pong on the upper half plane)."""
        k, l = self.gen_exponents_A, self.gen_exponents_B
        return abs(k * l) * self.intersection ** 2 >= 4

    def __str__(self) -> str:
        return f"alpha1={self.alpha1} beta1={self.beta1} powers={self.gen_exponents_A},{self.gen_exponents_B} D={self.D}"


def pell_slope(D: int) -> Slope:
    """Slope with continued fraction [0; 2, ..., 2] (D - 1 twos), which sits
    at Farey distance D from 1/0 with the smallest denominator."""
    if D < 1:
        raise ValueError("D must be at least 1")
    p, q = 0, 1
    for _ in range(D - 1):
        # x -> 1 / (2 + x)
        p, q = q, 2 * q + p
    return Slope.of(p, q)


def family(D_range: Iterable[int], power_A: int = 1, power_B: int = 1, surface: SurfaceModel = TORUS) -> List[RealizedGroup]:
    out = []
    for D in D_range:
        rg = RealizedGroup(INFINITY, pell_slope(D), power_A, power_B, surface)
        if rg.D != D:
            raise AssertionError(f"family slope {rg.beta1} sits at distance {rg.D}, not {D}")
        out.append(rg)
    return out


def standard_group(D: int = 6, surface: SurfaceModel = TORUS) -> RealizedGroup:
    return family([D], surface=surface)[0]


def _check_rank(w: Word):
    for _, e in w.syllables:
        if len(e) != 1:
            raise UnsupportedRealization("surface realization needs cyclic factors (rank 1)")


def realize(rg: RealizedGroup, w: Word) -> MappingClass:
    _check_rank(w)
    out = MappingClass.identity()
    for side, (e,) in w.syllables:
        out = out @ rg.generator(side, e)
    return out


def phi(rg: RealizedGroup, p) -> Slope:
    """Image in the curve graph of a tree point or a point of T_D."""
    if isinstance(p, ScaledPoint):
        g = realize(rg, p.word)
        if p.kind == "W":
            return apply(g, rg.curve(p.side))
        return apply(g, rg.geodesic[p.step])
    g = realize(rg, p.word)
    if p.kind == "W":
        return apply(g, rg.curve(p.side))
    return apply(g, rg.geodesic[rg.mid])


def mu(rg: RealizedGroup, p: TreePoint) -> Marking:
    if p.kind != "V":
        raise ValueError("mu is defined on edge midpoints")
    return rg.base_marking.translate(realize(rg, p.word))


@dataclass(frozen=True)
class OrbitMarking:
    base: Marking
    group_element: Word

    def marking(self, rg: RealizedGroup) -> Marking:
        return self.base.translate(realize(rg, self.group_element))


def annular_coefficient(core: Slope, slopes: Iterable[Slope]) -> Optional[int]:
    """Annular diameter of the slopes crossing ``core``; None if none cross."""
    crossing = sorted({a for a in slopes if det(a.vector, core.vector) != 0})
    if not crossing:
        return None
    return projection_diameter(crossing, AnnularDomain(core))


def marking_annular_distance(core: Slope, m1: Marking, m2: Marking) -> Optional[int]:
    """d_Y between two markings: 0 for equal markings, otherwise the annular
    diameter of their union."""
    if m1 == m2:
        return 0
    return annular_coefficient(core, m1.union(m2))


# ---------------------------------------------------------------------------
# scans over group elements


def _products(rg: RealizedGroup, max_syll: int, max_exp: int) -> Iterator[Tuple[Word, MappingClass]]:
    """Every nontrivial normal-form word with prefix products, depth first."""
    gens = {(s, e): rg.generator(s, e) for s in "AB" for e in range(-max_exp, max_exp + 1) if e}
    exps = [e for e in range(-max_exp, max_exp + 1) if e]

    def rec(prefix, mat, last):
        for side in "AB":
            if side == last:
                continue
            for e in exps:
                syl = prefix + ((side, (e,)),)
                m = mat @ gens[(side, e)]
                yield Word(syl), m
                if len(syl) < max_syll:
                    yield from rec(syl, m, side)

    if max_syll >= 1:
        yield from rec((), MappingClass.identity(), None)


def _is_trivial(m: MappingClass, s: SurfaceModel) -> bool:
    if m.is_identity():
        return True
    # -I acts trivially on the sphere's curves and lies in its kernel
    return s.intersection_multiplier == 2 and (m.a, m.b, m.c, m.d) == (-1, 0, 0, -1)


def _check_bounds(max_syll, max_exp):
    if max_syll < 1 or max_exp < 1:
        raise ValueError("word bounds must be at least 1")


def injectivity_scan(rg: RealizedGroup, max_syll: int, max_exp: int) -> Report:
    _check_bounds(max_syll, max_exp)
    rep = Report("injectivity", ("word", "matrix"))
    n = 0
    for w, m in _products(rg, max_syll, max_exp):
        n += 1
        if _is_trivial(m, rg.surface):
            rep.rows.append((w, m))
    rep.summary.update(config=str(rg), words=n, kernel_hits=len(rep.rows), verdict=_verdict(not rep.rows))
    return rep


def pa_scan(rg: RealizedGroup, max_syll: int, max_exp: int, crosscheck: int = 20) -> Report:
    """Every word not conjugate into a factor must realize with |trace| > 2.

    The first ``crosscheck`` passing words are also checked for exponential
    intersection growth (ratio above 2 after eight iterations)."""
    _check_bounds(max_syll, max_exp)
    rep = Report("pseudo-anosov", ("word", "trace", "kind"))
    n = checked = grown = 0
    for w, m in _products(rg, max_syll, max_exp):
        n += 1
        if len(cyclic_reduce(w)[0]) < 2:
            continue
        checked += 1
        if not is_pseudo_anosov(m):
            rep.rows.append((w, m.trace, "trace"))
            continue
        if grown < crosscheck:
            grown += 1
            seed = next(s for s in (rg.alpha1, rg.beta1, INFINITY, Slope.of(0, 1)) if apply(m, s) != s)
            ratio = intersection_growth(m, seed, 8, rg.surface)
            if ratio <= 2:
                rep.rows.append((w, m.trace, f"growth {ratio:.4g}"))
    rep.summary.update(config=str(rg), words=n, checked=checked, growth_checked=grown, violations=len(rep.rows), verdict=_verdict(not rep.rows))
    return rep


def d0_probe(groups: Sequence[RealizedGroup], max_syll: int, max_exp: int) -> Report:
    """Smallest D among ``groups`` passing both scans.

    Whenever the free-group criterion holds for a configuration, its
    injectivity scan must pass; a disagreement fails the report.
    """
    rep = Report("d0-probe", ("D", "alpha1", "beta1", "intersection", "known_free", "kernel_hits", "pa_violations", "passes", "oracle"))
    minimal = None
    ok = True
    for rg in sorted(groups, key=lambda g: (g.D, g.beta1, g.alpha1)):
        inj = injectivity_scan(rg, max_syll, max_exp)
        pa = pa_scan(rg, max_syll, max_exp)
        passes = inj.passed and pa.passed
        free = rg.is_known_free()
        oracle = PASS if (not free or inj.passed) else FAIL
        ok &= oracle == PASS
        if passes and minimal is None:
            minimal = rg.D
        rep.rows.append((rg.D, rg.alpha1, rg.beta1, rg.intersection, free, inj.summary["kernel_hits"], pa.summary["violations"], passes, oracle))
    rep.summary.update(max_syllables=max_syll, max_exponent=max_exp, minimal_passing_D="none" if minimal is None else minimal, verdict=_verdict(ok))
    return rep


# ---------------------------------------------------------------------------
# Lemmas on the tree map


def _require_B_syllable(h: Word):
    if len(h) != 1 or h.syllables[0][0] != "B":
        raise PreconditionError("h must be a single nontrivial B syllable")


def lemma31_check(rg: RealizedGroup, hs: Sequence[Word], N: int, M=None) -> Report:
    """d_S(alpha1, Phi(h) alpha1) >= (2D - 4) / N."""
    if M is not None and not N > M + 5:
        raise PreconditionError(f"N = {N} must exceed M + 5 = {M + 5}")
    bound = Fraction(2 * rg.D - 4, N)
    rep = Report("lemma31", ("h", "distance", "bound", "slack", "verdict"))
    for h in hs:
        _require_B_syllable(h)
        d = curve_distance(rg.alpha1, apply(realize(rg, h), rg.alpha1), rg.surface)
        rep.rows.append((h, d, bound, d - bound, _verdict(d >= bound)))
    ok = all(r[-1] == PASS for r in rep.rows)
    rep.summary.update(config=str(rg), N=N, bound=bound, min_slack=min((r[3] for r in rep.rows), default=None))
    rep.summary["verdict"] = FAIL if not ok else (VACUOUS if bound <= 0 else PASS)
    return rep


def lemma32_check(rg: RealizedGroup, hs: Sequence[Word], N: int, delta) -> Report:
    """d_S(alpha1, Phi(h) alpha1) >= 2D - 2((N + 1) delta + 2), with the
    smallest additive constant c making d_S >= 2D - c on the sample."""
    bound = 2 * rg.D - 2 * ((N + 1) * Fraction(delta) + 2)
    rep = Report("lemma32", ("h", "distance", "bound", "verdict"))
    ds = []
    for h in hs:
        _require_B_syllable(h)
        d = curve_distance(rg.alpha1, apply(realize(rg, h), rg.alpha1), rg.surface)
        ds.append(d)
        rep.rows.append((h, d, bound, _verdict(d >= bound)))
    ok = all(r[-1] == PASS for r in rep.rows)
    c_emp = max(2 * rg.D - d for d in ds) if ds else None
    rep.summary.update(config=str(rg), N=N, delta=delta, bound=bound, empirical_c=c_emp, vacuous=bound <= 0)
    rep.summary["verdict"] = FAIL if not ok else (VACUOUS if bound <= 0 else PASS)
    return rep


def _exact_graph(points: Sequence[Slope]) -> FiniteGraph:
    """Union of the Farey ladders of all pairs: every geodesic between two of
    the points lies inside, so distances among them are exact."""
    adj: Dict[Slope, set] = {p: set() for p in points}
    for a, b in itertools.combinations(sorted(set(points)), 2):
        lg = farey_ladder_graph(a, b)
        if lg is None:
            raise ValueError("ladder too large")
        for u, ws in lg.items():
            adj.setdefault(u, set()).update(ws)
    edges = [(u, w) for u, ws in adj.items() for w in ws if u < w]
    return FiniteGraph(adj.keys(), edges)


def local_qg_check(rg: RealizedGroup, hs: Sequence[Word], delta, C0) -> Report:
    """Points x0 on the edge [a, b] and y0 on [b, h a] of T_D; the images must
    satisfy d_TD - (13 delta + 2 C0) <= d_S <= d_TD, and the image of the
    whole two-edge path must be a D-local (1, 13 delta + 2 C0)-quasigeodesic."""
    D, geo = rg.D, rg.geodesic
    slack = 13 * Fraction(delta) + 2 * Fraction(C0)
    rep = Report("lemma33", ("h", "x_step", "y_step", "d_TD", "d_S", "case", "verdict"))
    path_ok = True
    for h in hs:
        _require_B_syllable(h)
        g = realize(rg, h)
        ys = [apply(g, s) for s in geo]
        for j in range(D + 1):
            for k in range(D + 1):
                dT = (D - j) + (D - k)
                dS = curve_distance(geo[j], ys[k], rg.surface)
                case = 1 if D - j <= C0 else 2
                ok = dT - slack <= dS <= dT
                rep.rows.append((h, j, k, dT, dS, case, _verdict(ok)))
        path = list(geo) + ys[::-1][1:]
        path_ok &= is_local_quasigeodesic(path, D, 1, slack, _exact_graph(path))
    ok = path_ok and all(r[-1] == PASS for r in rep.rows)
    rep.summary.update(config=str(rg), constant=slack, min_margin=min((r[4] - r[3] + slack for r in rep.rows), default=None), path_check=_verdict(path_ok), verdict=_verdict(ok))
    return rep


def qi_fit(point_pairs: Sequence[tuple], map: Callable, source_metric: Callable, target_metric: Callable, C_budget=None) -> ComparabilityBound:
    """Smallest (K, C) with source ~ target over the pairs (see fit_comparability)."""
    pairs = [(source_metric(p, q), target_metric(map(p), map(q))) for p, q in point_pairs]
    return fit_comparability(pairs, C_budget)


# ---------------------------------------------------------------------------
# coset curves, edge constants and off-orbit annuli


def _cosets(max_syll: int, max_exp: int) -> List[TreePoint]:
    out = {TreePoint.W(s, IDENTITY_WORD) for s in "AB"}
    for w in enumerate_words(max_syll, max_exp):
        out.add(TreePoint.W("A", w))
        out.add(TreePoint.W("B", w))
    return sorted(out, key=lambda p: (len(p.word), p.side, p.word))


def orbit_curves(rg: RealizedGroup, max_syll: int, max_exp: int) -> Dict[Slope, TreePoint]:
    """Curve of every coset vertex reached by words within the bounds."""
    out: Dict[Slope, TreePoint] = {}
    for w in _cosets(max_syll, max_exp):
        out.setdefault(phi(rg, w), w)
    return out


def lemma53_check(rg: RealizedGroup, max_syll: int, max_exp: int) -> Report:
    """Distinct coset vertices carry distinct curves, and any two of them fill."""
    cos = _cosets(max_syll, max_exp)
    seen: Dict[Slope, TreePoint] = {}
    rep = Report("lemma53", ("coset", "collides_with", "curve"))
    for w in cos:
        c = phi(rg, w)
        if c in seen:
            rep.rows.append((w, seen[c], c))
        else:
            seen[c] = w
    curves = sorted(seen)
    nonfill = sum(1 for a, b in itertools.combinations(curves, 2) if not fills(a, b))
    ok = not rep.rows and nonfill == 0
    rep.summary.update(config=str(rg), cosets=len(cos), collisions=len(rep.rows), nonfilling_pairs=nonfill, verdict=_verdict(ok))
    return rep


def _core_stream(rg: RealizedGroup, rng, n: int, height: int = 40) -> List[Slope]:
    """Deterministic core sample: orbit curves near the base edge and the
    geodesic hull of the base marking first, then random slopes."""
    first = list(orbit_curves(rg, 2, 2))
    first += [c for a in rg.geodesic for c in _neighbors(a)]
    out = list(dict.fromkeys(first))
    while len(out) < n:
        out.append(random_slope(rng, height))
    return out[:n]


def _neighbors(a: Slope, span: int = 3) -> List[Slope]:
    """Farey neighbours t^k(b) of a for |k| <= span, with b one fixed neighbour."""
    from .farey import conjugator_to_infinity

    g = conjugator_to_infinity(a).inverse()
    return [Slope.of(*g.act((k, 1))) for k in range(-span, span + 1)]


def edge_constant_harness(rg: RealizedGroup, samples: int, seed: int = 0) -> Report:
    """Maxima of d_Z(alpha1, beta1) (one edge orbit) and of d_Z(mu(v0), alpha1),
    d_Z(mu(v0), beta1) (two half-edge orbits) over annuli Z where both sides
    project; the maxima must not change when the core sample doubles."""
    rng = np.random.default_rng(seed)
    cores = _core_stream(rg, rng, 2 * samples)
    mu0 = rg.base_marking.slopes
    rep = Report("edge-constants", ("core", "edge", "half_A", "half_B"))
    for c in cores:
        vals = []
        for pts in ((rg.alpha1, rg.beta1), mu0 + (rg.alpha1,), mu0 + (rg.beta1,)):
            side = [pts[-1]], pts[:-1]
            if any(all(det(x.vector, c.vector) == 0 for x in part) for part in side):
                vals.append(None)
            else:
                vals.append(annular_coefficient(c, pts))
        rep.rows.append((c,) + tuple(vals))

    def colmax(rows, i):
        return max((r[i] for r in rows if r[i] is not None), default=0)

    half = rep.rows[:samples]
    c1, c1h = colmax(rep.rows, 1), colmax(half, 1)
    c2 = max(colmax(rep.rows, 2), colmax(rep.rows, 3))
    c2h = max(colmax(half, 2), colmax(half, 3))
    ok = (c1, c2) == (c1h, c2h)
    rep.summary.update(config=str(rg), cores=len(cores), C1=c1, C2=c2, C1_half=c1h, C2_half=c2h, verdict=_verdict(ok))
    return rep


def _pi_vertex(w: TreePoint, p: TreePoint) -> TreePoint:
    """The edge midpoint at the gate of p in the flat of w."""
    e = gate(w, p)
    if not e:
        return TreePoint.V(w.word)
    return TreePoint.V(w.word * Word(((w.side, e),)))


def lemma59_check(rg: RealizedGroup, pairs: Sequence[Tuple[Word, Word]], led: ConstantsLedger) -> Report:
    """d_{A(w)}(mu(v1), mu(v(pi_w(v1)))) <= proj_C3 for every flat w on the
    tree geodesic from v1 to v2 with a nonzero flat term."""
    C3 = led["proj_C3"]
    case1 = (led["local_P0"] - 1) * led["edge_C1"] + 2 * led["halfedge_C2"]
    rep = Report("lemma59", ("v1", "v2", "w", "case", "value", "bound", "verdict"))
    for g1, g2 in pairs:
        v1, v2 = TreePoint.V(g1), TreePoint.V(g2)
        for w in flats_on_geodesic(v1, v2):
            if w.kind != "W":
                continue
            if gate(w, v1) == gate(w, v2):
                continue
            core = phi(rg, w)
            pv = _pi_vertex(w, v1)
            first = tree_distance(v1, w) == Fraction(1, 2)
            val = marking_annular_distance(core, mu(rg, v1), mu(rg, pv))
            if val is None:
                continue
            bound = case1 if first else C3
            rep.rows.append((v1, v2, w, 1 if first else 2, val, bound, _verdict(val <= bound)))
    emp = max((r[4] for r in rep.rows), default=0)
    ok = all(r[-1] == PASS for r in rep.rows)
    rep.summary.update(config=str(rg), checked=len(rep.rows), empirical_C3=emp, proj_C3=C3, verdict=_verdict(ok))
    return rep


def offorbit_cores(rg: RealizedGroup, candidates: Iterable[Slope], radius: Tuple[int, int] = (3, 3)) -> List[Slope]:
    """Candidates that are not orbit curves of coset vertices within
    ``radius`` = (syllables, exponent)."""
    orbit = orbit_curves(rg, *radius)
    return [c for c in candidates if c not in orbit]


def thm510_check(rg: RealizedGroup, pairs: Sequence[Tuple[Word, Word]], cores: Sequence[Slope], contrast: Sequence[int] = (5, 10, 20, 40), orbit_radius: Tuple[int, int] = (3, 3)) -> Report:
    """Largest d_Y(mu(v1), mu(v2)) over off-orbit annuli Y, stable when the
    pair sample doubles (the first half must already reach it); and along
    the twist series a^n the coefficient about alpha1 is at least |n| - 5."""
    orbit = orbit_curves(rg, *orbit_radius)
    bad = [c for c in cores if c in orbit]
    if bad:
        raise PreconditionError(f"cores {bad[:3]} lie in the orbit")
    rep = Report("thm510", ("series", "v1", "v2", "core", "value"))
    marks = {}

    def mk(g):
        if g not in marks:
            marks[g] = mu(rg, TreePoint.V(g)).slopes
        return marks[g]

    half = len(pairs) // 2
    best = [0, 0]
    for i, (g1, g2) in enumerate(pairs):
        pts = mk(g1) + mk(g2)
        top = None
        for c in cores:
            v = annular_coefficient(c, pts)
            if v is not None and (top is None or v > top[1]):
                top = (c, v)
        if top is None:
            continue
        rep.rows.append(("offorbit", g1, g2, top[0], top[1]))
        best[i >= half] = max(best[i >= half], top[1])
    M1_half, M1 = best[0], max(best)
    grow_ok = True
    for n in contrast:
        g = Word((("A", (n,)),))
        v = annular_coefficient(rg.alpha1, mk(IDENTITY_WORD) + mk(g)) or 0
        rep.rows.append(("onorbit", IDENTITY_WORD, g, rg.alpha1, v))
        grow_ok &= v >= abs(n * rg.gen_exponents_A) - 5
    ok = M1 == M1_half and grow_ok
    rep.summary.update(config=str(rg), pairs=len(pairs), cores=len(cores), M1=M1, M1_half=M1_half, contrast_ok=grow_ok, verdict=_verdict(ok))
    return rep


def wordlen_twist_check(rg: RealizedGroup, h_powers: Iterable[int]) -> Report:
    """|n| against the annular coefficient about alpha1 between phi(v0) and
    phi(a^n v0), with constants (1, 5)."""
    bound = ComparabilityBound(1, 5)
    from .metric import check_comparable

    base = rg.geodesic[rg.mid]
    rep = Report("wordlen-twist", ("n", "coefficient", "verdict"))
    for n in h_powers:
        img = apply(realize(rg, Word((("A", (n,)),)) if n else IDENTITY_WORD), base)
        v = annular_coefficient(rg.alpha1, [base, img])
        if v is None:
            raise PreconditionError("phi(v0) does not cross alpha1")
        rep.rows.append((n, v, _verdict(check_comparable(abs(n), v, bound))))
    ok = all(r[-1] == PASS for r in rep.rows)
    rep.summary.update(config=str(rg), K=1, C=5, verdict=_verdict(ok))
    return rep


# ---------------------------------------------------------------------------
# distortion and the constant ledger


def sample_pairs(rng, n: int, max_syll: int, max_exp: int, exclude: Iterable = ()) -> List[Tuple[Word, Word]]:
    seen = set(exclude)
    out = []
    while len(out) < n:
        p = (random_word(rng, max_syll, max_exp), random_word(rng, max_syll, max_exp))
        if p[0] == p[1] or p in seen:
            continue
        seen.add(p)
        out.append(p)
    return out


def distortion_fit(rg: RealizedGroup, pairs: Sequence[Tuple[Word, Word]], C_budget) -> Tuple[ComparabilityBound, Report]:
    """Fit d_tilde_X(v1, v2) against d_M(mu(v1), mu(v2)) with C within budget."""
    cfg = rg.marking_config
    rep = Report("distortion", ("v1", "v2", "d_X", "d_M"))
    vals = []
    for g1, g2 in pairs:
        dX = total_distance(TreePoint.V(g1), TreePoint.V(g2))
        dM = marking_distance(mu(rg, TreePoint.V(g1)), mu(rg, TreePoint.V(g2)), cfg)
        vals.append((dX, dM))
        rep.rows.append((g1, g2, dX, dM))
    fit = fit_comparability(vals, C_budget)
    rep.summary.update(config=str(rg), pairs=len(pairs), C_budget=C_budget, K=fit.K, C=fit.C, lower_slope=1 / Fraction(fit.K), verdict=PASS)
    return fit, rep


def bgim_sample(rng, n: int, radius: int = 10, height: int = 60) -> List[Tuple[Slope, List[Slope]]]:
    """n (core, geodesic) pairs: geodesics of length <= radius starting near
    0/1 whose vertices all cross the core."""
    from .farey import ZERO

    out = []
    while len(out) < n:
        a = random_slope(rng, height)
        if curve_distance(ZERO, a) > radius:
            continue
        b = random_slope(rng, height)
        if a == b or curve_distance(a, b) > radius:
            continue
        path = curve_geodesic(a, b)
        c = random_slope(rng, height)
        if any(det(v.vector, c.vector) == 0 for v in path):
            continue
        out.append((c, path))
    return out


def bgim_constant(samples: Sequence[Tuple[Slope, List[Slope]]]) -> Tuple[int, int]:
    """(max over the first half, max over all) of the projection diameters."""
    vals = [projection_diameter(path, AnnularDomain(c)) for c, path in samples]
    half = len(vals) // 2
    return max(vals[:half], default=0), max(vals, default=0)


def estimate_constants(rg: RealizedGroup, led: Optional[ConstantsLedger] = None, seed: int = 0, bgim_samples: int = 200, tree_radius: int = 4, core_samples: int = 100) -> ConstantsLedger:
    """Fill the ledger for one configuration: delta, M, N, the qi constants
    of phi on T_D, R0, C1 and C2.  Values already present are kept."""
    from .farey import ZERO, farey_ball
    from .freeprod import build_scaled_tree
    from .metric import estimate_delta, hausdorff_quasigeodesic

    led = led.copy() if led is not None else ConstantsLedger()
    rng = np.random.default_rng(seed)
    if "xi" not in led:
        led.configure("xi", 1)
    if "k_R" not in led:
        led.configure("k_R", math.ceil(k_of(rg.marking_config.R)))
    if "A2" not in led:
        led.configure("A2", rg.marking_config.minimal_A2)
    if "delta" not in led:
        led.estimate("delta", estimate_delta(farey_ball(ZERO, 2, 6)), "thin triangles, Farey ball radius 2 height 6 about 0/1")
    if "bgim_M" not in led:
        _, M = bgim_constant(bgim_sample(rng, bgim_samples))
        led.estimate("bgim_M", M, f"{bgim_samples} crossing geodesics, radius 10, height 60, seed {seed}")
    if "power_N" not in led:
        led.configure("power_N", math.floor(led["bgim_M"]) + 6)
    if "qi_K" not in led or "stability_R0" not in led:
        tD = build_scaled_tree(tree_radius, rg.D)
        ws = [p for p in tD.vertices if p.kind == "W"]
        pairs = list(itertools.combinations(ws, 2))
        dT = lambda p, q: tD.distance(p, q)
        fit = qi_fit(pairs, lambda p: phi(rg, p), dT, lambda x, y: curve_distance(x, y, rg.surface))
        desc = f"W pairs of T_D, tree radius {tree_radius}"
        led.estimate("qi_K", fit.K, desc)
        led.estimate("qi_C", fit.C, desc)
        R0 = 0
        for p, q in pairs:
            path = [phi(rg, x) for x in tD.geodesic(p, q)]
            # collapse repeats so the image is a walk
            walk = [x for i, x in enumerate(path) if i == 0 or x != path[i - 1]]
            R0 = max(R0, hausdorff_quasigeodesic(walk, _exact_graph(walk)))
        led.estimate("stability_R0", R0, desc)
    if "edge_C1" not in led:
        r = edge_constant_harness(rg, core_samples, seed)
        desc = f"{2 * core_samples} annuli about the base edge, seed {seed}"
        led.estimate("edge_C1", r.summary["C1"], desc)
        led.estimate("halfedge_C2", r.summary["C2"], desc)
    return led
