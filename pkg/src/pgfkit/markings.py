"""The marking graph on a complexity-one surface.

A marking is a filling set of slopes with pairwise intersection at most R;
two markings are adjacent when their union is an E-marking.  When R and E
allow only pairwise Farey-adjacent slopes, markings are the edges and
triangles of the Farey tessellation and distances reduce to distances in
its dual tree, which gives an exact fast path next to the capped BFS.
"""
from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .cache import BallCache, cache_key
from .farey import (
    INFINITY,
    TORUS,
    ZERO,
    MappingClass,
    Slope,
    SurfaceModel,
    apply,
    conjugator_to_infinity,
    curve_distance,
    curve_geodesic,
    det,
    geometric_intersection,
    twist,
)
from .metric import FiniteGraph, PreconditionError, truncate
from .projections import AnnularDomain, EmptyProjection, projection_diameter


def is_marking(slopes: Iterable[Slope], R: int, s: SurfaceModel = TORUS) -> bool:
    pts = set(slopes)
    if len(pts) < 2:
        return False
    return all(geometric_intersection(a, b, s) <= R for a, b in itertools.combinations(pts, 2))


@dataclass(frozen=True, order=True)
class Marking:
    slopes: Tuple[Slope, ...]
    R: int = 1
    surface: SurfaceModel = field(default=TORUS, compare=False)

    def __post_init__(self):
        pts = tuple(sorted(set(self.slopes)))
        object.__setattr__(self, "slopes", pts)
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if not is_marking(pts, self.R, self.surface):
            raise ValueError(f"{{{', '.join(map(str, pts))}}} is not an {self.R}-marking")

    def __str__(self) -> str:
        return "{" + ", ".join(str(s) for s in self.slopes) + "} @" + str(self.R)

    def __len__(self) -> int:
        return len(self.slopes)

    @classmethod
    def parse(cls, text: str, surface: SurfaceModel = TORUS) -> "Marking":
        m = re.fullmatch(r"\s*\{(.*)\}\s*@\s*(\d+)\s*", text)
        if not m:
            raise ValueError(f"cannot parse marking {text!r}")
        slopes = [Slope.parse(x) for x in m.group(1).split(",") if x.strip()]
        return cls(tuple(slopes), int(m.group(2)), surface)

    def translate(self, mc: MappingClass) -> "Marking":
        return Marking(tuple(apply(mc, a) for a in self.slopes), self.R, self.surface)

    def union(self, other: "Marking") -> Tuple[Slope, ...]:
        return tuple(sorted(set(self.slopes) | set(other.slopes)))


def base_marking(s: SurfaceModel = TORUS) -> Marking:
    """{0/1, 1/0}, the base marking, with R its own intersection number."""
    return Marking((ZERO, INFINITY), geometric_intersection(ZERO, INFINITY, s), s)


def default_generators() -> Tuple[MappingClass, ...]:
    return (twist(INFINITY, 1), twist(ZERO, 1))


@dataclass(frozen=True)
class MarkingGraphConfig:
    R: int
    E: int
    generators: Tuple[MappingClass, ...] = ()
    surface: SurfaceModel = TORUS
    size_cap: int = 3

    def __post_init__(self):
        if self.E < self.R:
            raise ValueError("E must be at least R")
        mu = base_marking(self.surface)
        for h in self.generators:
            if not is_marking(mu.union(mu.translate(h)), self.E, self.surface):
                raise ValueError(f"base marking and its image under {h} do not form an {self.E}-marking")

    @classmethod
    def standard(cls, surface: SurfaceModel = TORUS, generators: Optional[Sequence[MappingClass]] = None) -> "MarkingGraphConfig":
        """R from the base marking, E the least value making every
        generator edge of the base marking an E-marking."""
        gens = tuple(default_generators() if generators is None else generators)
        mu = base_marking(surface)
        E = mu.R
        for h in gens:
            pts = mu.union(mu.translate(h))
            E = max([E] + [geometric_intersection(a, b, surface) for a, b in itertools.combinations(pts, 2)])
        return cls(mu.R, E, gens, surface)

    @property
    def is_clique_model(self) -> bool:
        """True when every E-marking is a set of pairwise Farey-adjacent slopes."""
        m = self.surface.intersection_multiplier
        return self.R // m == 1 and self.E // m == 1

    @property
    def minimal_A2(self) -> int:
        """Smallest truncation threshold above the annular diameter of any
        E-marking (two slopes meeting n times project within 2n + 1)."""
        return 2 * (self.E // self.surface.intersection_multiplier) + 2


def _require_marking(m: Marking, cfg: MarkingGraphConfig):
    if not isinstance(m, Marking) or m.R > cfg.R or m.surface != cfg.surface:
        raise PreconditionError(f"{m} is not an {cfg.R}-marking of {cfg.surface}")
    if not is_marking(m.slopes, cfg.R, cfg.surface):
        raise PreconditionError(f"{m} is not an {cfg.R}-marking")


def adjacent(m1: Marking, m2: Marking, cfg: MarkingGraphConfig) -> bool:
    _require_marking(m1, cfg)
    _require_marking(m2, cfg)
    return is_marking(m1.union(m2), cfg.E, cfg.surface)


def slopes_within(xs: Sequence[Slope], bound: int, s: SurfaceModel = TORUS) -> List[Slope]:
    """All slopes meeting every slope of the filling set xs at most ``bound`` times."""
    pts = sorted(set(xs))
    if len(pts) < 2:
        raise ValueError("need at least two distinct slopes")
    Q = bound // s.intersection_multiplier
    a, b = pts[0], pts[1]
    g = conjugator_to_infinity(a)
    ginv = g.inverse()
    bp, bq = g.act(b.vector)
    if bq < 0:
        bp, bq = -bp, -bq
    out = []
    for q in range(0, Q + 1):
        if q == 0:
            cands = [(1, 0)]
        else:
            lo = -((-(q * bp - Q)) // bq)
            hi = (q * bp + Q) // bq
            cands = [(p, q) for p in range(lo, hi + 1) if math.gcd(p, q) == 1]
        for v in cands:
            c = Slope.of(*ginv.act(v))
            if all(geometric_intersection(c, x, s) <= bound for x in pts):
                out.append(c)
    return sorted(set(out))


def marking_neighbors(m: Marking, cfg: MarkingGraphConfig) -> List[Marking]:
    cands = slopes_within(m.slopes, cfg.E, cfg.surface)
    out = set()
    for k in range(2, cfg.size_cap + 1):
        for sub in itertools.combinations(cands, k):
            if not is_marking(sub, cfg.R, cfg.surface):
                continue
            if not is_marking(set(sub) | set(m.slopes), cfg.E, cfg.surface):
                continue
            nu = Marking(sub, cfg.R, cfg.surface)
            if nu != m:
                out.add(nu)
    return sorted(out)


@dataclass(frozen=True)
class ExceedsCap:
    """Marker returned when two markings are farther apart than the BFS cap."""

    cap: int

    def __str__(self) -> str:
        return f">{self.cap}"


def bfs_marking_distance(m1: Marking, m2: Marking, cfg: MarkingGraphConfig, radius_cap: int) -> Union[int, ExceedsCap]:
    """Bidirectional BFS in the marking graph, generating neighbours on the fly."""
    _require_marking(m1, cfg)
    _require_marking(m2, cfg)
    if m1 == m2:
        return 0
    dist = [{m1: 0}, {m2: 0}]
    frontier = [[m1], [m2]]
    while frontier[0] and frontier[1]:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        if dist[side][frontier[side][0]] + dist[1 - side][frontier[1 - side][0]] >= radius_cap:
            return ExceedsCap(radius_cap)
        nxt = []
        best = None
        for u in frontier[side]:
            du = dist[side][u]
            for v in marking_neighbors(u, cfg):
                if v in dist[side]:
                    continue
                dist[side][v] = du + 1
                nxt.append(v)
                if v in dist[1 - side]:
                    total = du + 1 + dist[1 - side][v]
                    best = total if best is None else min(best, total)
        if best is not None:
            return best if best <= radius_cap else ExceedsCap(radius_cap)
        frontier[side] = nxt
    return ExceedsCap(radius_cap)


# ---------------------------------------------------------------------------
# dual tree of the Farey tessellation


_T0 = (INFINITY, ZERO, Slope(1, 1))


def _to_base_triangle(tri: Sequence[Slope]) -> MappingClass:
    """An element of GL(2, Z) sending the Farey triangle tri to {1/0, 0/1, 1/1}."""
    u, v, w = tri
    M = MappingClass(u.p, v.p, u.q, v.q)
    g = M.inverse()
    if apply(g, w) != Slope(1, 1):
        g = MappingClass(1, 0, 0, -1) @ g
    if {apply(g, x) for x in tri} != set(_T0):
        raise ValueError(f"{tri} is not a Farey triangle")
    return g


def _cf_sum(p: int, q: int) -> int:
    total = 0
    while q:
        a, r = divmod(p, q)
        total += a
        p, q = q, r
    return total


def _depth_from_base(tri: Sequence[Slope]) -> int:
    """Dual-tree distance from {1/0, 0/1, 1/1} to the Farey triangle tri."""
    pts = set(tri)
    if pts == set(_T0):
        return 0
    # pick the complementary region and move it onto (0, 1) by a symmetry of T0
    finite = [x for x in pts if x.q != 0]
    if all(0 <= x.p <= x.q for x in finite):
        g = MappingClass(1, 0, 0, 1)
    elif all(x.p >= x.q for x in finite):
        g = MappingClass(0, 1, 1, 0)
    else:
        g = MappingClass(0, 1, -1, 1)
    img = [apply(g, x) for x in pts]
    newest = max(img, key=lambda x: x.q)
    return _cf_sum(newest.p, newest.q) - 1


def triangle_distance(t1: Sequence[Slope], t2: Sequence[Slope]) -> int:
    g = _to_base_triangle(tuple(t1))
    return _depth_from_base([apply(g, x) for x in t2])


def _triangles(slopes: Sequence[Slope]) -> List[Tuple[Slope, ...]]:
    if len(slopes) == 3:
        return [tuple(slopes)]
    a, b = slopes
    return [(a, b, Slope.of(a.p + b.p, a.q + b.q)), (a, b, Slope.of(a.p - b.p, a.q - b.q))]


def clique_marking_distance(m1: Marking, m2: Marking) -> int:
    """Exact distance when markings are Farey edges and triangles: markings
    in a common triangle are adjacent, and otherwise a shortest path passes
    through the k Farey edges separating their nearest triangles."""
    if m1 == m2:
        return 0
    k = min(triangle_distance(t1, t2) for t1 in _triangles(m1.slopes) for t2 in _triangles(m2.slopes))
    return 1 if k == 0 else k + 1


def marking_distance(
    m1: Marking, m2: Marking, cfg: MarkingGraphConfig, radius_cap: int = 12, oracle: bool = False
) -> Union[int, ExceedsCap]:
    """Distance in the marking graph.  In the clique model the dual-tree
    formula is exact and ignores the cap; otherwise (or with ``oracle``) a
    capped bidirectional BFS answers, returning ExceedsCap past the cap."""
    _require_marking(m1, cfg)
    _require_marking(m2, cfg)
    if cfg.is_clique_model and not oracle:
        return clique_marking_distance(m1, m2)
    return bfs_marking_distance(m1, m2, cfg, radius_cap)


def marking_ball(center: Marking, radius: int, cfg: MarkingGraphConfig, cache: Optional[BallCache] = None) -> Dict[Marking, int]:
    """BFS distances from center to every marking within radius."""
    key = cache_key("marking-ball", center, radius, cfg.R, cfg.E, cfg.size_cap, cfg.surface.kind.value, tuple(map(str, cfg.generators)))
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    dist = {center: 0}
    q = deque([center])
    while q:
        u = q.popleft()
        if dist[u] == radius:
            continue
        for v in marking_neighbors(u, cfg):
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    if cache is not None:
        cache.put(key, dist)
    return dist


def marking_ball_graph(center: Marking, radius: int, cfg: MarkingGraphConfig) -> FiniteGraph:
    ball = marking_ball(center, radius, cfg)
    edges = [(u, v) for u in ball for v in marking_neighbors(u, cfg) if v in ball and u < v]
    return FiniteGraph(ball.keys(), edges)


# ---------------------------------------------------------------------------
# projections and the distance-formula estimator


def k_of(A) -> float:
    if A < 0:
        raise ValueError("A must be nonnegative")
    return max(2 * math.log2(4 * (A + 1)) + 2, A + 1)


def marking_projection_diameter(m: Marking, Y: AnnularDomain) -> int:
    """Diameter in the annular curve graph of the slopes of m crossing Y's core."""
    crossing = [a for a in m.slopes if det(a.vector, Y.core.vector) != 0]
    if not crossing:
        raise EmptyProjection(f"no slope of {m} crosses the core of {Y}")
    return projection_diameter(crossing, Y)


SURFACE_DOMAIN = "S"


def _annular_term(Y: AnnularDomain, slopes: Sequence[Slope]) -> int:
    crossing = [a for a in slopes if det(a.vector, Y.core.vector) != 0]
    return projection_diameter(crossing, Y) if len(crossing) >= 2 else 0


def _surface_term(slopes: Sequence[Slope], s: SurfaceModel) -> int:
    return max((curve_distance(a, b, s) for a, b in itertools.combinations(slopes, 2)), default=0)


def candidate_cores(m1: Marking, m2: Marking, neighbor_bound: int = 4) -> List[Slope]:
    """Slopes of both markings, every slope on the chosen geodesics between
    a slope of m1 and a slope of m2, and the Farey neighbours of those
    slopes meeting every marking slope at most ``neighbor_bound`` times
    more than the slope itself does."""
    hull = set(m1.slopes) | set(m2.slopes)
    for a in m1.slopes:
        for b in m2.slopes:
            hull.update(curve_geodesic(a, b))
    marks = sorted(set(m1.slopes) | set(m2.slopes))
    out = set(hull)
    for v in hull:
        g = conjugator_to_infinity(v)
        ginv = g.inverse()
        imgs = [g.act(x.vector) for x in marks]
        for n in _neighbor_range(imgs, v, marks, neighbor_bound):
            out.add(Slope.of(*ginv.act((n, 1))))
    return sorted(out)


def _neighbor_range(imgs, v, marks, bound):
    """Integers n such that the neighbour n/1 (in coordinates where v = 1/0)
    meets each marking slope x at most i(v, x) + bound times."""
    lo, hi = None, None
    for p, q in imgs:
        if q == 0:
            continue
        if q < 0:
            p, q = -p, -q
        limit = q + bound
        # |n q - p| <= limit
        a, b = -((limit - p) // q), (p + limit) // q
        lo = a if lo is None else max(lo, a)
        hi = b if hi is None else min(hi, b)
    if lo is None or lo > hi:
        return range(0)
    return range(lo, hi + 1)


def distance_formula_estimate(
    m1: Marking,
    m2: Marking,
    A2,
    cfg: Optional[MarkingGraphConfig] = None,
    oracle: bool = False,
    neighbor_bound: int = 4,
    sweep_cap: Optional[int] = None,
):
    """Sum over domains of [d_Y(m1, m2)]_A2 and the witnesses with nonzero terms.

    The whole surface contributes the curve-graph diameter of m1 and m2
    together; an annulus contributes the annular diameter of the slopes of
    both markings that cross its core.  With ``oracle`` every core meeting
    all marking slopes at most ``sweep_cap`` times is swept instead of the
    geodesic hull.
    """
    cfg = cfg or MarkingGraphConfig.standard(m1.surface)
    if A2 < cfg.minimal_A2:
        raise PreconditionError(f"A2={A2} is below the minimal threshold {cfg.minimal_A2}")
    pts = m1.union(m2)
    terms = []
    dS = _surface_term(pts, cfg.surface)
    if truncate(dS, A2):
        terms.append((SURFACE_DOMAIN, dS))
    cores = candidate_cores(m1, m2, neighbor_bound)
    if oracle:
        if sweep_cap is None:
            # reach past every core the hull would report
            hits = [c for c in cores if truncate(_annular_term(AnnularDomain(c), pts), A2)]
            sweep_cap = cfg.E + max([geometric_intersection(c, x, cfg.surface) for c in hits for x in pts], default=0)
        cores = slopes_within(pts, sweep_cap, cfg.surface)
    for c in cores:
        Y = AnnularDomain(c)
        d = _annular_term(Y, pts)
        if truncate(d, A2):
            terms.append((Y, d))
    return sum(t for _, t in terms), terms
