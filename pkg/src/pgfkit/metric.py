"""Coarse-geometry arithmetic and finite-graph utilities."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


class PreconditionError(ValueError):
    """An operation was called outside its hypotheses."""


class LengthMismatch(PreconditionError):
    pass


class KappaTooSmall(PreconditionError):
    pass


class NotComparable(PreconditionError):
    pass


class NotAWalk(PreconditionError):
    pass


class DisconnectedGraph(ValueError):
    pass


def _exact(x):
    """Fractions for rational input so that comparisons are exact."""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, Rational):
        return Fraction(x)
    return x


def _check_nonneg(*xs):
    for x in xs:
        if x < 0:
            raise ValueError(f"expected a nonnegative number, got {x}")


def truncate(A, B):
    """[A]_B: A when A >= B, otherwise 0."""
    _check_nonneg(A, B)
    return A if A >= B else 0


@dataclass(frozen=True)
class ComparabilityBound:
    K: Real = 1
    C: Real = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.C < 0:
            raise ValueError(f"C must be >= 0, got {self.C}")

    def symmetrize(self) -> "ComparabilityBound":
        """Bound for the reversed relation: B ~ A with (K, K*C)."""
        return ComparabilityBound(self.K, _exact(self.K) * _exact(self.C))

    def compose(self, other: "ComparabilityBound") -> "ComparabilityBound":
        """A ~(K,C) B and B ~(K',C') D give A ~(KK', C' + C/K') D."""
        K, C = _exact(self.K), _exact(self.C)
        K2, C2 = _exact(other.K), _exact(other.C)
        return ComparabilityBound(K * K2, C2 + C / K2)


def check_comparable(A, B, bound: ComparabilityBound) -> bool:
    """A/K - C <= B <= K*A + C, exactly when every input is rational."""
    _check_nonneg(A, B)
    A, B = _exact(A), _exact(B)
    K, C = _exact(bound.K), _exact(bound.C)
    return A / K - C <= B <= K * A + C


def fit_comparability(pairs: Iterable[Tuple], C_budget=None) -> ComparabilityBound:
    """Smallest (K, C), lexicographic in K then C, with every (A, B) pair
    comparable and C at most ``C_budget``.

    Without a budget any K >= 1 can be paid for with a large enough C, so
    the fit is (1, max |A - B|); a budget makes K the informative number.
    Raises ValueError when no K works within the budget (a pair with one
    side 0 and the other beyond the budget).
    """
    pairs = [(_exact(a), _exact(b)) for a, b in pairs]
    if len(pairs) < 2:
        raise ValueError("need at least two pairs")
    for a, b in pairs:
        _check_nonneg(a, b)
    if C_budget is None:
        return ComparabilityBound(1, max(abs(a - b) for a, b in pairs))
    Cb = _exact(C_budget)
    K = Fraction(1)
    for a, b in pairs:
        if a > 0:
            if b + Cb == 0:
                raise ValueError(f"pair ({a}, {b}) cannot be fitted with C <= {Cb}")
            K = max(K, a / (b + Cb))
            K = max(K, (b - Cb) / a)
        elif b > Cb:
            raise ValueError(f"pair ({a}, {b}) cannot be fitted with C <= {Cb}")
    C = max([Fraction(0)] + [max(a / K - b, b - K * a) for a, b in pairs])
    return ComparabilityBound(K, C)


def check_lemma21(xs: Sequence, ys: Sequence, K, C, kappa) -> bool:
    """Truncated-sum comparison for termwise comparable sequences.

    Precondition failures raise distinct ``PreconditionError`` subclasses.
    """
    if len(xs) != len(ys):
        raise LengthMismatch(f"{len(xs)} vs {len(ys)} terms")
    K, C, kappa = _exact(K), _exact(C), _exact(kappa)
    if not kappa > 2 * K * C:
        raise KappaTooSmall(f"kappa={kappa} must exceed 2KC={2 * K * C}")
    bound = ComparabilityBound(K, C)
    for i, (x, y) in enumerate(zip(xs, ys)):
        if not check_comparable(x, y, bound):
            raise NotComparable(f"term {i}: {x} and {y} are not ({K},{C})-comparable")
    lhs = sum((truncate(_exact(x), kappa) for x in xs), 0)
    rhs = 2 * K * sum((truncate(_exact(y), C) for y in ys), 0)
    return lhs <= rhs


class FiniteGraph:
    """Immutable finite simple graph with unit edge lengths.

    Vertices must be mutually orderable; the order drives every tie-break.
    """

    def __init__(self, vertices: Iterable[Hashable], edges: Iterable[Tuple[Hashable, Hashable]]):
        verts = sorted(set(vertices))
        self._vertices: Tuple = tuple(verts)
        self._index: Dict = {v: i for i, v in enumerate(verts)}
        adj: List[set] = [set() for _ in verts]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u!r}")
            if u not in self._index or v not in self._index:
                raise ValueError(f"edge ({u!r}, {v!r}) has an unknown endpoint")
            i, j = self._index[u], self._index[v]
            adj[i].add(j)
            adj[j].add(i)
        self._adj: Tuple[Tuple[int, ...], ...] = tuple(tuple(sorted(s)) for s in adj)
        self._dist: Optional[np.ndarray] = None
        self._geo_cache: Dict[Tuple[int, int], Tuple[int, ...]] = {}

    # -- basic structure
    @property
    def vertices(self) -> Tuple:
        return self._vertices

    @property
    def edges(self) -> List[Tuple]:
        return [(self._vertices[i], self._vertices[j]) for i, nb in enumerate(self._adj) for j in nb if i < j]

    def __len__(self) -> int:
        return len(self._vertices)

    def __contains__(self, v) -> bool:
        return v in self._index

    def index(self, v) -> int:
        return self._index[v]

    def neighbors(self, v) -> List:
        return [self._vertices[j] for j in self._adj[self._index[v]]]

    def adjacent(self, u, v) -> bool:
        return self._index[v] in self._adj[self._index[u]]

    # -- metric
    @property
    def distance_matrix(self) -> np.ndarray:
        if self._dist is None:
            n = len(self._vertices)
            rows = [i for i, nb in enumerate(self._adj) for _ in nb]
            cols = [j for nb in self._adj for j in nb]
            m = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
            d = shortest_path(m, method="D", unweighted=True, directed=False)
            if np.isinf(d).any():
                self._dist = d
            else:
                self._dist = d.astype(np.int64)
            self._dist.setflags(write=False)
        return self._dist

    def is_connected(self) -> bool:
        return not np.isinf(self.distance_matrix).any()

    def _require_connected(self):
        if not self.is_connected():
            raise DisconnectedGraph("graph is not connected")

    def distance(self, u, v) -> int:
        d = self.distance_matrix[self._index[u], self._index[v]]
        if np.isinf(d):
            raise DisconnectedGraph(f"{u!r} and {v!r} lie in different components")
        return int(d)

    def _geodesic_idx(self, i: int, j: int) -> Tuple[int, ...]:
        key = (i, j)
        hit = self._geo_cache.get(key)
        if hit is not None:
            return hit
        d = self.distance_matrix
        if np.isinf(d[i, j]):
            raise DisconnectedGraph("no path")
        path = [i]
        cur = i
        while cur != j:
            need = d[cur, j] - 1
            cur = next(w for w in self._adj[cur] if d[w, j] == need)
            path.append(cur)
        out = tuple(path)
        self._geo_cache[key] = out
        return out

    def geodesic(self, u, v) -> List:
        """Lexicographically smallest geodesic from the smaller endpoint,
        reported in the u -> v direction so every unordered pair has one
        canonical geodesic."""
        i, j = self._index[u], self._index[v]
        if i <= j:
            return [self._vertices[k] for k in self._geodesic_idx(i, j)]
        return [self._vertices[k] for k in reversed(self._geodesic_idx(j, i))]

    def is_walk(self, path: Sequence) -> bool:
        try:
            idx = [self._index[v] for v in path]
        except KeyError:
            return False
        return all(a == b or b in self._adj[a] for a, b in zip(idx, idx[1:]))


def estimate_delta(g: FiniteGraph):
    """Smallest delta making every vertex-triangle of canonical geodesics delta-thin.

    Thinness is measured at vertices: each vertex of a side must be within
    delta of the union of the other two sides.
    """
    if len(g) == 0:
        return 0
    g._require_connected()
    d = g.distance_matrix
    n = len(g)
    sides = {}
    for i in range(n):
        for j in range(i, n):
            sides[(i, j)] = np.asarray(g._geodesic_idx(i, j), dtype=np.int64)

    def side(i, j):
        return sides[(i, j)] if i <= j else sides[(j, i)]

    best = 0
    for x in range(n):
        for y in range(x, n):
            sxy = side(x, y)
            for z in range(y, n):
                syz, sxz = side(y, z), side(x, z)
                for s, o1, o2 in ((sxy, syz, sxz), (syz, sxy, sxz), (sxz, sxy, syz)):
                    others = np.concatenate((o1, o2))
                    val = d[np.ix_(s, others)].min(axis=1).max()
                    if val > best:
                        best = val
    return int(best)


def is_local_quasigeodesic(path: Sequence, D, K, C, g: FiniteGraph) -> bool:
    """Every subpath of parameter length <= D is a (K, C)-quasi-isometric embedding."""
    if not g.is_walk(path):
        raise NotAWalk("path is not a walk in the graph")
    K, C = _exact(K), _exact(C)
    idx = [g.index(v) for v in path]
    d = g.distance_matrix
    n = len(idx)
    for i in range(n):
        for j in range(i + 1, n):
            t = j - i
            if t > D:
                break
            dist = int(d[idx[i], idx[j]])
            if not (Fraction(t) / K - C <= dist <= K * t + C):
                return False
    return True


def hausdorff_quasigeodesic(path: Sequence, g: FiniteGraph) -> int:
    """Hausdorff distance between the path and the canonical geodesic joining its ends."""
    if not g.is_walk(path):
        raise NotAWalk("path is not a walk in the graph")
    geo = g.geodesic(path[0], path[-1])
    p = np.array([g.index(v) for v in path])
    q = np.array([g.index(v) for v in geo])
    block = g.distance_matrix[np.ix_(p, q)]
    return int(max(block.min(axis=1).max(), block.min(axis=0).max()))


def projection_constant(K, C, R):
    """P = 2K(C + 2R) + K^2."""
    K, C, R = _exact(K), _exact(C), _exact(R)
    return 2 * K * (C + 2 * R) + K * K


def check_projection_monotone(path: Sequence, K, C, R, g: FiniteGraph) -> bool:
    """Closest-point projections to the endpoint geodesic are ordered for
    parameters more than P apart."""
    if not g.is_walk(path):
        raise NotAWalk("path is not a walk in the graph")
    if not is_local_quasigeodesic(path, len(path), K, C, g):
        raise PreconditionError(f"path is not a ({K},{C})-quasigeodesic")
    if hausdorff_quasigeodesic(path, g) > R:
        raise PreconditionError(f"path is farther than R={R} from the endpoint geodesic")
    P = projection_constant(K, C, R)
    geo = g.geodesic(path[0], path[-1])
    q = np.array([g.index(v) for v in geo])
    d = g.distance_matrix
    pos = [int(np.argmin(d[g.index(v), q])) for v in path]  # argmin keeps the earliest tie
    n = len(path)
    for s in range(n):
        for t in range(s + 1, n):
            if t - s > P and not pos[s] < pos[t]:
                return False
    return True
