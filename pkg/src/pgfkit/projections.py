"""Annular subsurface projections on complexity-one surfaces.

Conjugating the core to 1/0 puts the punctures at the integer lattice and
turns the core's annular cover into the plane modulo horizontal unit
translation.  A crossing slope normalises to x = p/q with q = |det(a, core)|,
and its chosen lift is the straight strand ``X(y) = 1/(2q) + x*y``.  The
strand's two endpoints on the boundary circles of the compactified cover are
recorded by which gap between punctures it uses in each row: the top end by
``floor(X(k))`` for k = 1, 2, ... and the bottom end by ``floor(X(-k))`` for
k = 0, 1, ....  Endpoints are ordered lexicographically by these sequences,
and translating by the deck generator adds 1 to every entry.
"""
from __future__ import annotations

import itertools
import re
from functools import cached_property
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence

from .farey import (
    TORUS,
    MappingClass,
    Slope,
    SurfaceModel,
    apply,
    conjugator_to_infinity,
    curve_distance,
    det,
    twist,
)


class EmptyProjection(ValueError):
    def __init__(self, msg: str, side: Optional[str] = None, component=None):
        super().__init__(msg)
        self.side = side
        self.component = component


@dataclass(frozen=True, order=True)
class AnnularDomain:
    core: Slope

    @classmethod
    def parse(cls, text: str) -> "AnnularDomain":
        m = re.fullmatch(r"\s*ann\((.*)\)\s*", text)
        if not m:
            raise ValueError(f"cannot parse annular domain {text!r}")
        return cls(Slope.parse(m.group(1)))

    @property
    def normalizer(self) -> MappingClass:
        return conjugator_to_infinity(self.core)

    def __str__(self) -> str:
        return f"ann({self.core})"


@dataclass(frozen=True)
class ProjectionClass:
    """Lift data of a crossing slope in the annular cover of ``domain``.

    ``twist_index`` and ``endpoint_phase`` are the integer and fractional
    parts of the normalised slope; they are defined up to a common integer
    shift fixed by the normaliser, which never changes distances.
    """

    domain: AnnularDomain
    twist_index: int
    endpoint_phase: Fraction
    crossings: int = field(compare=False)

    @cached_property
    def x(self) -> Fraction:
        return self.twist_index + self.endpoint_phase

    @cached_property
    def p(self) -> int:
        return int(self.x * self.crossings)


def annular_project(Y: AnnularDomain, a: Slope, normalizer: Optional[MappingClass] = None) -> Optional[ProjectionClass]:
    """None when a misses the core, otherwise the lift data of a."""
    g = Y.normalizer if normalizer is None else normalizer
    if Slope.of(*g.act(Y.core.vector)) != Slope(1, 0):
        raise ValueError("normaliser does not send the core to 1/0")
    p, q = g.act(a.vector)
    if q == 0:
        return None
    if q < 0:
        p, q = -p, -q
    n, r = divmod(p, q)
    return ProjectionClass(Y, n, Fraction(r, q), q)


# ---------------------------------------------------------------------------
# endpoint sequences


def _top(pc: ProjectionClass, k: int) -> int:
    return (1 + 2 * k * pc.p) // (2 * pc.crossings)


def _bottom(pc: ProjectionClass, k: int) -> int:
    return (1 - 2 * k * pc.p) // (2 * pc.crossings)


def _compare(f, A: ProjectionClass, B: ProjectionClass, shift: int, start: int) -> int:
    """Sign of the first difference of f(A, k) - f(B, k) - shift for k >= start.

    The sequences differ eventually because the slopes differ.
    """
    k = start
    while True:
        d = f(A, k) - f(B, k) - shift
        if d:
            return 1 if d > 0 else -1
        k += 1


def _endpoint_order(A: ProjectionClass, B: ProjectionClass, m: int):
    """(sign of bottom(A) - bottom(B)-m, sign of top(A) - top(B)-m), exact."""
    return _compare(_bottom, A, B, m, 0), _compare(_top, A, B, m, 1)


def oracle_algebraic_intersection(A: ProjectionClass, B: ProjectionClass) -> int:
    """Signed count of crossings between the chosen lift of A and all deck
    translates of the chosen lift of B, decided by endpoint interleaving."""
    if A.x == B.x:
        return 0
    delta = A.twist_index - B.twist_index
    total = 0
    # the first entries force 0 <= m <= delta for one sign and delta <= m <= 0 for the other
    for m in range(min(0, delta) - 1, max(0, delta) + 2):
        bot, top = _endpoint_order(A, B, m)
        if bot < 0 and top > 0:
            total += 1
        elif bot > 0 and top < 0:
            total -= 1
    return total


def fast_algebraic_intersection(A: ProjectionClass, B: ProjectionClass) -> int:
    """Closed form of the oracle count from twist indices and phases.

    The interleaving sum collapses to ``delta - 1 + t + u``, where delta is
    the twist-index difference and t, u record how the top and bottom
    endpoints of the two strands compare.  Both comparisons agree with the
    order of the normalised slopes x = twist_index + endpoint_phase, so
    t = u = [x_A > x_B].
    """
    if A.x == B.x:
        return 0
    delta = A.twist_index - B.twist_index
    return delta + 1 if A.x > B.x else delta - 1


def exact_algebraic_intersection(A: ProjectionClass, B: ProjectionClass) -> int:
    """The same closed form with t and u decided by full endpoint comparison."""
    if A.x == B.x:
        return 0
    delta = A.twist_index - B.twist_index
    t = int(_compare(_top, A, B, delta, 1) > 0)
    u = int(_compare(_bottom, A, B, 0, 0) < 0)
    return delta - 1 + t + u


def _projections(Y: AnnularDomain, a: Slope, b: Slope):
    g = Y.normalizer
    A = annular_project(Y, a, g)
    if A is None:
        raise EmptyProjection(f"{a} does not cross the core of {Y}", side="first")
    B = annular_project(Y, b, g)
    if B is None:
        raise EmptyProjection(f"{b} does not cross the core of {Y}", side="second")
    return A, B


def annular_distance(Y: AnnularDomain, a: Slope, b: Slope, oracle: bool = False) -> int:
    """d_Y(a, b) = |a.b| + 1 for a != b, and 0 for a == b."""
    A, B = _projections(Y, a, b)
    if a == b:
        return 0
    ab = oracle_algebraic_intersection(A, B) if oracle else fast_algebraic_intersection(A, B)
    return abs(ab) + 1


def twist_coefficient_check(Y: AnnularDomain, b: Slope, n: int, oracle: bool = False) -> int:
    """d_Y(b, t^n b) for the n-th twist about the core of Y."""
    return annular_distance(Y, b, apply(twist(Y.core, n), b), oracle=oracle)


@dataclass(frozen=True)
class DisjointDomains:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("need at least one component")
        for Y, Z in itertools.combinations(comps, 2):
            if Y == Z or det(Y.core.vector, Z.core.vector) != 0:
                raise ValueError(f"cores of {Y} and {Z} are not disjoint")


def l1_distance(Z: DisjointDomains, a: Slope, b: Slope, oracle: bool = False) -> int:
    total = 0
    for Y in Z.components:
        try:
            total += annular_distance(Y, a, b, oracle=oracle)
        except EmptyProjection as exc:
            raise EmptyProjection(f"component {Y}: {exc}", side=exc.side, component=Y) from exc
    return total


def projection_diameter(slopes: Iterable[Slope], Y: AnnularDomain, oracle: bool = False) -> int:
    """Diameter in the annular curve graph of the union of chosen lifts."""
    pts = sorted(set(slopes))
    g = Y.normalizer
    projs = []
    for a in pts:
        pc = annular_project(Y, a, g)
        if pc is None:
            raise EmptyProjection(f"{a} does not cross the core of {Y}")
        projs.append(pc)
    count = oracle_algebraic_intersection if oracle else fast_algebraic_intersection
    best = 0
    for A, B in itertools.combinations(projs, 2):
        best = max(best, abs(count(A, B)) + 1)
    return best


class NotAGeodesic(ValueError):
    pass


def bgim_diameter(path: Sequence[Slope], Y: AnnularDomain, s: SurfaceModel = TORUS, oracle: bool = False) -> Optional[int]:
    """Projection diameter of a curve-graph geodesic, or None when some vertex
    misses the core (the bounded-image hypothesis fails)."""
    if not path:
        raise NotAGeodesic("empty path")
    if any(abs(det(u.vector, w.vector)) != 1 for u, w in zip(path, path[1:])):
        raise NotAGeodesic("consecutive vertices are not adjacent")
    if curve_distance(path[0], path[-1], s) != len(path) - 1:
        raise NotAGeodesic("path is longer than the distance between its ends")
    if any(det(v.vector, Y.core.vector) == 0 for v in path):
        return None
    return projection_diameter(path, Y, oracle=oracle)


def lipschitz_check(simplex: Sequence[Slope], Y: AnnularDomain, oracle: bool = False) -> int:
    """Projection diameter of a vertex, an edge, or a vertex with some of its neighbours."""
    pts = list(dict.fromkeys(simplex))
    if not pts:
        raise ValueError("empty simplex")
    for v in pts:
        if det(v.vector, Y.core.vector) == 0:
            raise EmptyProjection(f"{v} does not cross the core of {Y}")
    adjacent = lambda u, w: abs(det(u.vector, w.vector)) == 1
    pairwise = all(adjacent(u, w) for u, w in itertools.combinations(pts, 2))
    star = any(all(v == c or adjacent(v, c) for v in pts) for c in pts)
    if not (pairwise or star):
        raise ValueError("input is neither a simplex nor a star")
    return projection_diameter(pts, Y, oracle=oracle)
