"""Curves and mapping classes on complexity-one surfaces.

Both the once-punctured torus and the four-punctured sphere have the Farey
graph as their curve graph.  A curve is a primitive integer vector (a slope),
a mapping class is a 2x2 integer matrix of determinant +-1, and geometric
intersection is ``m * |det|`` with ``m = 1`` on the torus and ``m = 2`` on the
sphere.
"""
from __future__ import annotations

import enum
import math
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple


class SurfaceKind(enum.Enum):
    ONCE_PUNCTURED_TORUS = "torus"
    FOUR_PUNCTURED_SPHERE = "sphere"


@dataclass(frozen=True)
class SurfaceModel:
    kind: SurfaceKind = SurfaceKind.ONCE_PUNCTURED_TORUS

    @property
    def intersection_multiplier(self) -> int:
        return 1 if self.kind is SurfaceKind.ONCE_PUNCTURED_TORUS else 2

    @property
    def complexity(self) -> int:
        # 3g + p - 3 for (g, p) = (1, 1) and (0, 4)
        return 1

    @classmethod
    def parse(cls, text: str) -> "SurfaceModel":
        text = text.strip().lower()
        for kind in SurfaceKind:
            if text in (kind.value, kind.name.lower()):
                return cls(kind)
        raise ValueError(f"unknown surface {text!r}")


TORUS = SurfaceModel(SurfaceKind.ONCE_PUNCTURED_TORUS)
SPHERE = SurfaceModel(SurfaceKind.FOUR_PUNCTURED_SPHERE)


@dataclass(frozen=True, order=True)
class Slope:
    """A primitive pair (p, q) with q > 0, or the slope 1/0."""

    p: int
    q: int

    def __post_init__(self):
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"slope {self.p}/{self.q} is not primitive")
        if not (self.q > 0 or (self.p, self.q) == (1, 0)):
            raise ValueError(f"slope {self.p}/{self.q} is not in canonical sign")

    @classmethod
    def of(cls, p: int, q: int) -> "Slope":
        """Canonical slope of the nonzero vector (p, q)."""
        if p == 0 and q == 0:
            raise ValueError("the zero vector is not a slope")
        g = math.gcd(p, q)
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        return cls(p, q)

    @classmethod
    def parse(cls, text: str) -> "Slope":
        m = re.fullmatch(r"\s*(-?\d+)\s*/\s*(-?\d+)\s*", text)
        if not m:
            raise ValueError(f"cannot parse slope {text!r}")
        return cls.of(int(m.group(1)), int(m.group(2)))

    @property
    def vector(self) -> Tuple[int, int]:
        return (self.p, self.q)

    @property
    def height(self) -> int:
        return max(abs(self.p), abs(self.q))

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


INFINITY = Slope(1, 0)
ZERO = Slope(0, 1)


def det(u: Sequence[int], v: Sequence[int]) -> int:
    return u[0] * v[1] - u[1] * v[0]


@dataclass(frozen=True)
class MappingClass:
    """Integer matrix [[a, b], [c, d]] with determinant +-1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) != 1:
            raise ValueError("mapping class matrix must have determinant +-1")

    @classmethod
    def identity(cls) -> "MappingClass":
        return cls(1, 0, 0, 1)

    @classmethod
    def parse(cls, text: str) -> "MappingClass":
        nums = [int(x) for x in re.findall(r"-?\d+", text)]
        if len(nums) != 4:
            raise ValueError(f"cannot parse matrix {text!r}")
        return cls(*nums)

    @property
    def rows(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return ((self.a, self.b), (self.c, self.d))

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    def is_identity(self) -> bool:
        return (self.a, self.b, self.c, self.d) == (1, 0, 0, 1)

    def __matmul__(self, o: "MappingClass") -> "MappingClass":
        return MappingClass(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def inverse(self) -> "MappingClass":
        e = self.det
        return MappingClass(e * self.d, -e * self.b, -e * self.c, e * self.a)

    def __pow__(self, n: int) -> "MappingClass":
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        out = MappingClass.identity()
        while n:
            if n & 1:
                out = out @ base
            base = base @ base
            n >>= 1
        return out

    def act(self, v: Sequence[int]) -> Tuple[int, int]:
        return (self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1])

    def __str__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


IDENTITY = MappingClass.identity()


def geometric_intersection(a: Slope, b: Slope, s: SurfaceModel = TORUS) -> int:
    return s.intersection_multiplier * abs(det(a.vector, b.vector))


def twist(v: Slope, n: int) -> MappingClass:
    """n-th power of the Dehn twist about v, as the transvection
    w -> w + n * det(w, v) * v."""
    p, q = v.p, v.q
    return MappingClass(1 + n * p * q, -n * p * p, n * q * q, 1 - n * p * q)


def apply(mc: MappingClass, a: Slope) -> Slope:
    return Slope.of(*mc.act(a.vector))


def fills(a: Slope, b: Slope) -> bool:
    # on a complexity-one surface any two distinct curves fill
    return a != b


def is_pseudo_anosov(mc: MappingClass) -> bool:
    return abs(mc.trace) > 2


def intersection_growth(mc: MappingClass, seed: Slope, iters: int, s: SurfaceModel = TORUS) -> float:
    """Ratio i(mc^(k+1) seed, seed) / i(mc^k seed, seed) at k = iters."""
    if iters < 3:
        raise ValueError("iters must be at least 3")
    if apply(mc, seed) == seed:
        raise ValueError(f"seed {seed} is fixed by {mc}")
    cur = seed
    values = []
    for _ in range(iters + 1):
        cur = apply(mc, cur)
        values.append(geometric_intersection(cur, seed, s))
    if values[-2] == 0 or values[-1] == 0:
        raise ValueError(f"seed {seed} has a vanishing intersection along the orbit")
    return values[-1] / values[-2]


def conjugator_to_infinity(v: Slope) -> MappingClass:
    """An SL(2,Z) matrix sending v to 1/0."""
    p, q = v.p, v.q
    # find r, s with p*s - q*r = 1, so [[p, r], [q, s]] sends 1/0 to v
    g, x, y = _ext_gcd(p, q)
    # p*x + q*y = 1  ->  s = x, r = -y
    return MappingClass(p, -y, q, x).inverse()


def _ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        k, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


# ---------------------------------------------------------------------------
# Farey graph search


def _k_interval(constraints, bound):
    """Integer k with |e + k*c| <= bound for every (c, e) in constraints."""
    lo, hi = None, None
    for c, e in constraints:
        if c == 0:
            if abs(e) > bound:
                return 1, 0
            continue
        if c < 0:
            c, e = -c, -e
        k1 = -((bound + e) // c)  # ceil((-bound - e) / c)
        k2 = (bound - e) // c
        lo = k1 if lo is None else max(lo, k1)
        hi = k2 if hi is None else min(hi, k2)
    if lo is None:
        raise ValueError("unbounded neighbour interval")
    return lo, hi


def farey_neighbors_in_region(u: Slope, a: Slope, b: Slope, bound: int) -> List[Slope]:
    """Farey neighbours w of u with |det(w,a)| <= bound and |det(w,b)| <= bound.

    Every neighbour of u is w0 + k*u for a fixed w0 with det(u, w0) = 1, so both
    constraints are linear in k and cut out an integer interval.
    """
    _, x, y = _ext_gcd(u.p, u.q)
    w0 = (-y, x)  # det(u, w0) = u.p*x + u.q*y = 1
    lo, hi = _k_interval(
        [(det(u.vector, t.vector), det(w0, t.vector)) for t in (a, b)], bound
    )
    return sorted(Slope.of(w0[0] + k * u.p, w0[1] + k * u.q) for k in range(lo, hi + 1))


def farey_neighbors_in_box(u: Slope, height: int) -> List[Slope]:
    """Farey neighbours of u of height at most ``height``."""
    _, x, y = _ext_gcd(u.p, u.q)
    w0 = (-y, x)
    lo, hi = _k_interval([(u.p, w0[0]), (u.q, w0[1])], height)
    return sorted({Slope.of(w0[0] + k * u.p, w0[1] + k * u.q) for k in range(lo, hi + 1)})


class _LadderTest:
    """Membership in the Farey ladder of (a, b) without listing it.

    After moving a to 1/0, with b at x = p/q, the ladder consists of 1/0, the
    two integers around x, and the Stern-Brocot ancestors of x.  A fraction
    r/t (t >= 2) is such an ancestor iff x lies strictly between its two
    Stern-Brocot parents, or equals it.
    """

    def __init__(self, a: Slope, b: Slope):
        self.g = conjugator_to_infinity(a)
        t = apply(self.g, b)
        self.x = Fraction(t.p, t.q) if t.q else None
        self.n = t.p // t.q if t.q else None

    def __contains__(self, s: Slope) -> bool:
        r, t = self.g.act(s.vector)
        if t < 0:
            r, t = -r, -t
        if t == 0:
            return True
        if self.x is None:
            return False
        if t == 1:
            return r in (self.n, self.n + 1)
        if Fraction(r, t) == self.x:
            return True
        # left parent r1/t1 with r*t1 - t*r1 = 1 and 0 < t1 < t
        t1 = pow(r, -1, t)
        r1 = (r * t1 - 1) // t
        return Fraction(r1, t1) < self.x < Fraction(r - r1, t - t1)


def _pruned_bfs_distance(a: Slope, b: Slope) -> int:
    """Bidirectional BFS restricted to slopes u with |det(u,a)|, |det(u,b)| <= |det(a,b)|
    that also lie in the Farey ladder of (a, b).

    Both restrictions are conservative: every geodesic from a to b stays inside
    the ladder (its boundary edges separate the graph), and after normalising
    a = 1/0, b = p/q each ladder vertex r/s is a Stern-Brocot ancestor of p/q,
    so s <= q and |r q - s p| <= q.
    """
    if a == b:
        return 0
    bound = abs(det(a.vector, b.vector))
    if bound == 1:
        return 1
    nbrs = _ladder_neighbors(a, b)
    dist = ({a: 0}, {b: 0})
    frontier = ([a], [b])
    depth = [0, 0]
    while frontier[0] and frontier[1]:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        mine, other = dist[side], dist[1 - side]
        nxt = []
        best = None
        for u in frontier[side]:
            for w in nbrs(u):
                if w in mine:
                    continue
                mine[w] = depth[side] + 1
                nxt.append(w)
                if w in other:
                    cand = depth[side] + 1 + other[w]
                    if best is None or cand < best:
                        best = cand
        if best is not None:
            return best
        depth[side] += 1
        frontier = (nxt, frontier[1]) if side == 0 else (frontier[0], nxt)
    raise RuntimeError("pruned search exhausted; region is not connected")


def box_bfs_distances(source: Slope, height: int, stop: Optional[Slope] = None) -> Dict[Slope, int]:
    """Plain BFS in the Farey graph restricted to slopes of height <= height."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if u == stop:
            break
        for w in farey_neighbors_in_box(u, height):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def oracle_curve_distance(a: Slope, b: Slope, s: SurfaceModel = TORUS, height: Optional[int] = None) -> int:
    """Unpruned BFS over the height box containing both endpoints (with margin)."""
    if height is None:
        height = 2 * max(a.height, b.height) + 2
    dist = box_bfs_distances(a, height, stop=b)
    return dist[b]


class PruningDisagreement(AssertionError):
    pass


def curve_distance(a: Slope, b: Slope, s: SurfaceModel = TORUS, oracle: bool = False, verify: bool = False) -> int:
    """Distance in the curve graph (the Farey graph, on either surface model)."""
    if oracle:
        return oracle_curve_distance(a, b, s)
    d = _pruned_bfs_distance(a, b)
    if verify:
        o = oracle_curve_distance(a, b, s)
        if o != d:
            raise PruningDisagreement(f"pruned {d} != unpruned {o} for {a}, {b}")
    return d


def _ladder_neighbors(a: Slope, b: Slope):
    """Neighbour function of the ladder of (a, b), sorted by (p, q)."""
    lg = farey_ladder_graph(a, b)
    if lg is not None:
        return lambda u: lg[u]
    ladder = _LadderTest(a, b)
    bound = abs(det(a.vector, b.vector))
    return lambda u: [w for w in farey_neighbors_in_region(u, a, b, bound) if w in ladder]


def curve_geodesic(a: Slope, b: Slope, s: SurfaceModel = TORUS) -> List[Slope]:
    """The geodesic that always steps to the smallest (p, q) slope one step closer to b.

    Every geodesic stays in the Farey ladder of (a, b), so the search runs there.
    """
    if a == b:
        return [a]
    nbrs = _ladder_neighbors(a, b)
    to_b = {b: 0}
    queue = deque([b])
    while queue:
        u = queue.popleft()
        for w in nbrs(u):
            if w not in to_b:
                to_b[w] = to_b[u] + 1
                queue.append(w)
    path = [a]
    cur = a
    while cur != b:
        need = to_b[cur] - 1
        cur = next(w for w in nbrs(cur) if to_b.get(w) == need)
        path.append(cur)
    return path


LADDER_CAP = 200_000


def _partial_quotient_sum(p: int, q: int) -> int:
    total = 0
    while q:
        k, r = divmod(p, q)
        total += abs(k)
        p, q = q, r
    return total


def farey_ladder_graph(a: Slope, b: Slope) -> Optional[Dict[Slope, List[Slope]]]:
    """Adjacency of the Farey ladder of (a, b): the union of the triangles of
    the tessellation crossed by the hyperbolic geodesic from a to b.

    The ladder is triangulated, and no Farey edge joins two of its vertices
    except the triangle edges.  Returns None when the ladder would exceed
    ``LADDER_CAP`` vertices (very large partial quotients).
    """
    if a == b:
        return {a: []}
    g = conjugator_to_infinity(a)
    gi = g.inverse()
    t = apply(g, b)  # a sits at 1/0 and t = p/q with q > 0
    p, q = t.p, t.q
    if _partial_quotient_sum(p, q) > LADDER_CAP:
        return None
    n = p // q
    inf, lo, hi = (1, 0), (n, 1), (n + 1, 1)
    edges = [(inf, lo), (inf, hi), (lo, hi)]
    x = Fraction(p, q)
    if x != n:
        while True:
            med = (lo[0] + hi[0], lo[1] + hi[1])
            edges.append((lo, med))
            edges.append((hi, med))
            mx = Fraction(*med)
            if mx == x:
                break
            if x < mx:
                hi = med
            else:
                lo = med
    adj: Dict[Slope, set] = {}
    for u, w in edges:
        su, sw = Slope.of(*gi.act(u)), Slope.of(*gi.act(w))
        adj.setdefault(su, set()).add(sw)
        adj.setdefault(sw, set()).add(su)
    return {u: sorted(ws) for u, ws in adj.items()}


def farey_ladder(a: Slope, b: Slope) -> List[Slope]:
    """Vertices of the triangles of the Farey tessellation crossed by the
    hyperbolic geodesic from a to b, including a and b."""
    lg = farey_ladder_graph(a, b)
    if lg is None:
        raise ValueError("ladder too large to list")
    return sorted(lg)


class FareyGraph:
    """Duck-typed graph view of the whole Farey graph."""

    def __init__(self, surface: SurfaceModel = TORUS):
        self.surface = surface

    def distance(self, a: Slope, b: Slope) -> int:
        return curve_distance(a, b, self.surface)

    def adjacent(self, a: Slope, b: Slope) -> bool:
        return abs(det(a.vector, b.vector)) == 1

    def geodesic(self, a: Slope, b: Slope) -> List[Slope]:
        return curve_geodesic(a, b, self.surface)


def random_slope(rng, bound: int) -> Slope:
    while True:
        p = int(rng.integers(-bound, bound + 1))
        q = int(rng.integers(0, bound + 1))
        if (p, q) != (0, 0) and math.gcd(p, q) == 1:
            return Slope.of(p, q)


def random_sl2z(rng, length: int = 6, power: int = 3) -> MappingClass:
    """Random product of elementary transvections."""
    out = IDENTITY
    for _ in range(length):
        n = int(rng.integers(-power, power + 1))
        out = out @ (twist(INFINITY, n) if rng.integers(2) else twist(ZERO, n))
    return out


def farey_ball(center: Slope, radius: int, max_height: int):
    """Induced subgraph on slopes of height <= max_height within ``radius``
    Farey steps of ``center`` (steps taken inside the height box)."""
    from .metric import FiniteGraph

    dist = {center: 0}
    queue = deque([center])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for w in farey_neighbors_in_box(u, max_height):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    verts = sorted(dist)
    edges = [(u, w) for u in verts for w in farey_neighbors_in_box(u, max_height) if w in dist and u < w]
    return FiniteGraph(verts, edges)
