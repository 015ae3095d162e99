"""The free product H_A * H_B of two free abelian groups, its Bass-Serre
tree and the flat-expanded distance.

A word is a tuple of syllables ``(factor, exponents)`` with alternating
factors and nonzero exponent vectors.  The tree T has a vertex for every coset
gH_A and gH_B and an edge of length 1 for every group element g, joining gH_A
to gH_B; the point V(g) is the midpoint of that edge.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .metric import ComparabilityBound, FiniteGraph, check_comparable, truncate

Syllable = Tuple[str, Tuple[int, ...]]
FACTORS = ("A", "B")


def _other(x: str) -> str:
    return "B" if x == "A" else "A"


@dataclass(frozen=True)
class Presentation:
    rank_A: int = 1
    rank_B: int = 1

    def __post_init__(self):
        if self.rank_A < 1 or self.rank_B < 1:
            raise ValueError("both factors need rank at least 1")

    def rank(self, factor: str) -> int:
        return self.rank_A if factor == "A" else self.rank_B


@dataclass(frozen=True, order=True)
class Word:
    syllables: Tuple[Syllable, ...] = ()

    def __post_init__(self):
        prev = None
        for f, e in self.syllables:
            if f not in FACTORS:
                raise ValueError(f"unknown factor {f!r}")
            if not any(e):
                raise ValueError("zero syllable in a normal form")
            if f == prev:
                raise ValueError("adjacent syllables in the same factor")
            prev = f

    def __len__(self) -> int:
        return len(self.syllables)

    @property
    def is_identity(self) -> bool:
        return not self.syllables

    def __mul__(self, other: "Word") -> "Word":
        return normal_form(self.syllables + other.syllables)

    def inverse(self) -> "Word":
        return Word(tuple((f, tuple(-x for x in e)) for f, e in reversed(self.syllables)))

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        out = IDENTITY_WORD
        for _ in range(abs(n)):
            out = out * base
        return out

    def l1_norm(self) -> int:
        return sum(abs(x) for _, e in self.syllables for x in e)

    def __str__(self) -> str:
        if not self.syllables:
            return "1"
        return "".join(f"{f}({','.join(str(x) for x in e)})" for f, e in self.syllables)

    @classmethod
    def parse(cls, text: str) -> "Word":
        return normal_form(parse_syllables(text))

    @classmethod
    def of(cls, *syllables) -> "Word":
        """Word.of(('A', 2), ('B', (1, -1))) with integers promoted to 1-vectors."""
        raw = [(f, (e,) if isinstance(e, int) else tuple(e)) for f, e in syllables]
        return normal_form(raw)


IDENTITY_WORD = Word(())


def parse_syllables(text: str) -> List[Syllable]:
    text = text.strip()
    if text in ("", "1"):
        return []
    out = []
    pos = 0
    for m in re.finditer(r"\s*([AB])\(\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*\)\s*", text):
        if m.start() != pos:
            raise ValueError(f"cannot parse word {text!r}")
        out.append((m.group(1), tuple(int(x) for x in m.group(2).split(","))))
        pos = m.end()
    if pos != len(text):
        raise ValueError(f"cannot parse word {text!r}")
    return out


def normal_form(raw: Sequence[Syllable], pres: Optional[Presentation] = None) -> Word:
    """Merge adjacent same-factor syllables and drop zero ones until stable."""
    stack: List[Syllable] = []
    for f, e in raw:
        e = tuple(e)
        if pres is not None and len(e) != pres.rank(f):
            raise ValueError(f"syllable {f}{e} does not match rank {pres.rank(f)}")
        if not any(e):
            continue
        if stack and stack[-1][0] == f:
            g, prev = stack.pop()
            if len(prev) != len(e):
                raise ValueError("exponent vectors of different lengths in one factor")
            merged = tuple(x + y for x, y in zip(prev, e))
            if any(merged):
                stack.append((f, merged))
        else:
            stack.append((f, e))
    return Word(tuple(stack))


def cyclic_reduce(w: Word) -> Tuple[Word, Word]:
    """(r, c) with w = c r c^-1 and r cyclically reduced."""
    conj = IDENTITY_WORD
    cur = w
    while len(cur) >= 2 and cur.syllables[0][0] == cur.syllables[-1][0]:
        first = Word((cur.syllables[0],))
        conj = conj * first
        cur = first.inverse() * cur * first
    return cur, conj


def is_conjugate_into_factor(w: Word) -> bool:
    return len(cyclic_reduce(w)[0]) <= 1


# ---------------------------------------------------------------------------
# tree points


@dataclass(frozen=True, order=True)
class TreePoint:
    """V(g) (kind 'V', side '') or the coset vertex g H_side (kind 'W')."""

    kind: str
    side: str
    word: Word

    def __post_init__(self):
        if self.kind == "V":
            if self.side:
                raise ValueError("V points carry no side")
        elif self.kind == "W":
            if self.side not in FACTORS:
                raise ValueError("W points need side A or B")
            if self.word.syllables and self.word.syllables[-1][0] == self.side:
                raise ValueError("coset word is not the shortest representative")
        else:
            raise ValueError(f"unknown tree point kind {self.kind!r}")

    @classmethod
    def V(cls, g: Word = IDENTITY_WORD) -> "TreePoint":
        return cls("V", "", g)

    @classmethod
    def W(cls, side: str, g: Word = IDENTITY_WORD) -> "TreePoint":
        syl = g.syllables
        if syl and syl[-1][0] == side:
            g = Word(syl[:-1])
        return cls("W", side, g)

    def translate(self, g: Word) -> "TreePoint":
        if self.kind == "V":
            return TreePoint.V(g * self.word)
        return TreePoint.W(self.side, g * self.word)

    @property
    def element(self) -> Word:
        """Group element used as the point's base: g for V(g), the coset
        representative for W points."""
        return self.word

    def __str__(self) -> str:
        if self.kind == "V":
            return f"v[{self.word}]"
        return f"{self.side.lower()}[{self.word}]"


V0 = TreePoint.V()


def _norm(e: Sequence[int]) -> int:
    return sum(abs(x) for x in e)


def _split(p1: TreePoint, p2: TreePoint):
    s1, s2 = p1.word.syllables, p2.word.syllables
    i = 0
    n = min(len(s1), len(s2))
    while i < n and s1[i] == s2[i]:
        i += 1
    return s1[i:], s2[i:], (p1.side if p1.kind == "W" else None), (p2.side if p2.kind == "W" else None)


def _first_flat(rest, end_side):
    if rest:
        return rest[0][0]
    return end_side


def tree_distance(p1: TreePoint, p2: TreePoint) -> Fraction:
    """Distance in T.  After cancelling the common syllable prefix c, each
    point lies 2*len(rest) (+1 for a coset vertex) half-edges beyond V(c);
    the two branches share their first half-edge when they enter the same
    flat at c."""
    r1, r2, e1, e2 = _split(p1, p2)
    h1 = 2 * len(r1) + (1 if e1 else 0)
    h2 = 2 * len(r2) + (1 if e2 else 0)
    f1, f2 = _first_flat(r1, e1), _first_flat(r2, e2)
    shared = f1 is not None and f1 == f2
    return Fraction(h1 + h2 - (2 if shared else 0), 2)


def flats_on_geodesic(p1: TreePoint, p2: TreePoint) -> List[TreePoint]:
    """Coset vertices on the tree geodesic from p1 to p2.  Each branch beyond
    the common prefix c crosses one flat per remaining syllable and ends in
    a flat when its point is a coset vertex; the branches share at most the
    first one."""
    s1 = p1.word.syllables
    r1, r2, e1, e2 = _split(p1, p2)
    c = s1[: len(s1) - len(r1)]
    out = set()
    for rest, end in ((r1, e1), (r2, e2)):
        for j, syl in enumerate(rest):
            out.add(TreePoint.W(syl[0], Word(c + rest[:j])))
        if end is not None:
            out.add(TreePoint.W(end, Word(c + rest)))
    return sorted(out)


def gate(w: TreePoint, p: TreePoint) -> Tuple[int, ...]:
    """Exponent vector of the point where the tree geodesic from p enters
    the flat of w (the flat's base point c is the origin)."""
    if w.kind != "W":
        raise ValueError("gates are defined for coset vertices")
    u = w.word.inverse() * p.element
    if u.syllables and u.syllables[0][0] == w.side:
        return u.syllables[0][1]
    return ()


def _l1_diff(u: Tuple[int, ...], v: Tuple[int, ...]) -> int:
    n = max(len(u), len(v))
    u = u + (0,) * (n - len(u))
    v = v + (0,) * (n - len(v))
    return sum(abs(x - y) for x, y in zip(u, v))


def flat_term(w: TreePoint, p1: TreePoint, p2: TreePoint) -> int:
    """L1 length of the passage of the p1-p2 geodesic through the flat of w."""
    return _l1_diff(gate(w, p1), gate(w, p2))


def total_distance(p1: TreePoint, p2: TreePoint) -> Fraction:
    """d_T plus the L1 flat terms, computed from the common prefix.

    The point p enters each flat on its own branch through the flat's base
    point and leaves through its next syllable, so a branch flat costs the
    norm of that syllable; a flat shared by both branches costs the L1
    distance between their two exit syllables.
    """
    r1, r2, e1, e2 = _split(p1, p2)
    f1, f2 = _first_flat(r1, e1), _first_flat(r2, e2)
    shared = f1 is not None and f1 == f2
    flats = sum(_norm(e) for _, e in r1) + sum(_norm(e) for _, e in r2)
    if shared:
        x1 = r1[0][1] if r1 else ()
        x2 = r2[0][1] if r2 else ()
        flats += _l1_diff(x1, x2) - _norm(x1) - _norm(x2)
    return tree_distance(p1, p2) + flats


def total_distance_via_flats(p1: TreePoint, p2: TreePoint) -> Fraction:
    """Same quantity, summing flat_term over the flats on the tree geodesic."""
    return tree_distance(p1, p2) + sum(flat_term(w, p1, p2) for w in flats_on_geodesic(p1, p2))


def check_lemma52(p1: TreePoint, p2: TreePoint, kappa) -> bool:
    """Truncated and untruncated decompositions are (kappa+1, kappa^2+2kappa)-comparable."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    kappa = Fraction(kappa) if not isinstance(kappa, float) else kappa
    dT = tree_distance(p1, p2)
    terms = [flat_term(w, p1, p2) for w in flats_on_geodesic(p1, p2)]
    trunc = truncate(dT, kappa) + sum(truncate(t, kappa) for t in terms)
    full = dT + sum(terms)
    return check_comparable(trunc, full, ComparabilityBound(kappa + 1, kappa * kappa + 2 * kappa))


def coned_distance(g1: Word, g2: Word) -> int:
    """Distance in the coned-off Cayley graph: one unit per syllable of g1^-1 g2."""
    return len(g1.inverse() * g2)


# ---------------------------------------------------------------------------
# enumeration


def _nonzero_vectors(rank: int, max_exp: int) -> List[Tuple[int, ...]]:
    rng = range(-max_exp, max_exp + 1)
    return [v for v in itertools.product(rng, repeat=rank) if any(v)]


def enumerate_words(max_syllables: int, max_exp: int, pres: Presentation = Presentation(), include_identity: bool = False) -> Iterator[Word]:
    """All normal forms with 1..max_syllables syllables and exponent entries
    in [-max_exp, max_exp], ordered by length, then first factor, then
    exponents.  Each word appears once."""
    if max_syllables < 1 or max_exp < 1:
        raise ValueError("bounds must be at least 1")
    vecs = {f: _nonzero_vectors(pres.rank(f), max_exp) for f in FACTORS}
    if include_identity:
        yield IDENTITY_WORD
    for n in range(1, max_syllables + 1):
        for start in FACTORS:
            factors = [start if i % 2 == 0 else _other(start) for i in range(n)]
            for exps in itertools.product(*(vecs[f] for f in factors)):
                yield Word(tuple(zip(factors, exps)))


def random_word(rng: np.random.Generator, max_syllables: int, max_exp: int, pres: Presentation = Presentation()) -> Word:
    """A word with a uniform number of syllables in [0, max_syllables] and
    uniform nonzero exponent vectors with entries in [-max_exp, max_exp]."""
    n = int(rng.integers(0, max_syllables + 1))
    f = "A" if rng.integers(0, 2) == 0 else "B"
    syl = []
    for _ in range(n):
        while True:
            e = tuple(int(x) for x in rng.integers(-max_exp, max_exp + 1, pres.rank(f)))
            if any(e):
                break
        syl.append((f, e))
        f = _other(f)
    return Word(tuple(syl))


def count_words(syllables: int, max_exp: int, pres: Presentation = Presentation()) -> int:
    """Number of normal forms with exactly ``syllables`` syllables."""
    if syllables == 0:
        return 1
    na = (2 * max_exp + 1) ** pres.rank_A - 1
    nb = (2 * max_exp + 1) ** pres.rank_B - 1
    total = 0
    for first, second in ((na, nb), (nb, na)):
        total += first ** ((syllables + 1) // 2) * second ** (syllables // 2)
    return total


# ---------------------------------------------------------------------------
# explicit tree balls


class ResourceCapExceeded(RuntimeError):
    pass


def _tree_neighbors(p: TreePoint, pres: Presentation, max_exp: int) -> List[TreePoint]:
    if p.kind == "V":
        return [TreePoint.W("A", p.word), TreePoint.W("B", p.word)]
    out = [TreePoint.V(p.word)]
    for e in _nonzero_vectors(pres.rank(p.side), max_exp):
        out.append(TreePoint.V(p.word * Word(((p.side, e),))))
    return out


def build_tree(radius: int, pres: Presentation = Presentation(), max_exp: int = 1, cap: int = 200_000) -> FiniteGraph:
    """Ball of T around V(1), with ``radius`` counted in half-edges and flats
    truncated to exponent entries in [-max_exp, max_exp].  Graph edges are
    half-edges, so graph distance is twice the tree distance."""
    if radius < 1:
        raise ValueError("radius must be at least 1")
    dist = {V0: 0}
    frontier = [V0]
    edges = []
    for r in range(radius):
        nxt = []
        for p in frontier:
            for q in _tree_neighbors(p, pres, max_exp):
                if q not in dist:
                    dist[q] = r + 1
                    nxt.append(q)
                    edges.append((p, q))
                    if len(dist) > cap:
                        raise ResourceCapExceeded(f"tree ball exceeds {cap} points")
        frontier = nxt
    return FiniteGraph(dist.keys(), edges)


def tree_ball_size(radius: int, max_exp: int, pres: Presentation = Presentation()) -> int:
    """Closed-form point count of build_tree(radius, pres, max_exp)."""
    total = 0
    for k in range(radius // 2 + 1):
        total += count_words(k, max_exp, pres)
    for k in range((radius - 1) // 2 + 1):
        total += 2 if k == 0 else count_words(k, max_exp, pres)
    return total


@dataclass(frozen=True, order=True)
class ScaledPoint:
    """A point of T_D: a coset vertex (step 0) or the ``step``-th of the D-1
    interior points of the edge of g, counted from its A end."""

    kind: str
    side: str
    word: Word
    step: int = 0

    def __str__(self) -> str:
        if self.kind == "W":
            return f"{self.side.lower()}[{self.word}]"
        return f"e[{self.word}]#{self.step}"


def build_scaled_tree(radius: int, D: int, pres: Presentation = Presentation(), max_exp: int = 1) -> FiniteGraph:
    """T_D over the edges of build_tree(radius): each edge of T becomes a path
    of D unit edges with D - 1 interior points."""
    if D < 1:
        raise ValueError("D must be at least 1")
    ball = build_tree(radius, pres, max_exp)
    verts = set()
    edges = []
    for p in ball.vertices:
        if p.kind != "V":
            continue
        a, b = TreePoint.W("A", p.word), TreePoint.W("B", p.word)
        if a not in ball or b not in ball:
            continue
        chain = [ScaledPoint("W", "A", a.word)]
        chain += [ScaledPoint("E", "", p.word, j) for j in range(1, D)]
        chain.append(ScaledPoint("W", "B", b.word))
        verts.update(chain)
        edges.extend(zip(chain, chain[1:]))
    return FiniteGraph(verts, edges)


# ---------------------------------------------------------------------------
# batch evaluation for exhaustive scans


class WordTable:
    """Padded numpy view of a list of words for vectorised distance formulas."""

    def __init__(self, words: Sequence[Word], pres: Presentation = Presentation()):
        self.words = list(words)
        L = max((len(w) for w in self.words), default=0)
        R = max(pres.rank_A, pres.rank_B)
        n = len(self.words)
        self.length = np.array([len(w) for w in self.words], dtype=np.int64)
        self.factor = np.full((n, L), -1, dtype=np.int8)
        self.exps = np.zeros((n, L, R), dtype=np.int64)
        for i, w in enumerate(self.words):
            for j, (f, e) in enumerate(w.syllables):
                self.factor[i, j] = 0 if f == "A" else 1
                self.exps[i, j, : len(e)] = e
        self.norms = np.abs(self.exps).sum(axis=2)
        # suffix sums of syllable norms: suffix[i, j] = sum_{k >= j} norms[i, k]
        self.suffix = np.concatenate(
            [np.cumsum(self.norms[:, ::-1], axis=1)[:, ::-1], np.zeros((n, 1), dtype=np.int64)], axis=1
        )
        self.L = L


def batch_total_distance(table: WordTable, i: int, targets: Optional[np.ndarray] = None) -> np.ndarray:
    """total_distance(V(w_i), V(w_j)) for all j (or the given targets), as
    twice the value (an integer array), by the same common-prefix rule."""
    idx = np.arange(len(table.words)) if targets is None else np.asarray(targets)
    L = table.L
    if L == 0:
        return np.zeros(len(idx), dtype=np.int64)
    fa, fb = table.factor[i][None, :], table.factor[idx]
    ea, eb = table.exps[i][None, :, :], table.exps[idx]
    same = (fa == fb) & (ea == eb).all(axis=2) & (fa >= 0)
    common = np.cumprod(same, axis=1).sum(axis=1)
    r1 = table.length[i] - common
    r2 = table.length[idx] - common
    rows = np.arange(len(idx))
    cpos = np.minimum(common, L - 1)
    f1 = np.where(r1 > 0, table.factor[i][cpos], -1)
    f2 = np.where(r2 > 0, fb[rows, cpos], -1)
    shared = (f1 >= 0) & (f1 == f2)
    halves = 2 * r1 + 2 * r2 - 2 * shared
    flats = table.suffix[i][common] + table.suffix[idx][rows, common]
    x1 = np.where((r1 > 0)[:, None], table.exps[i][cpos], 0)
    x2 = np.where((r2 > 0)[:, None], eb[rows, cpos], 0)
    corr = np.abs(x1 - x2).sum(axis=1) - np.abs(x1).sum(axis=1) - np.abs(x2).sum(axis=1)
    flats = flats + np.where(shared, corr, 0)
    return halves + 2 * flats


# ---------------------------------------------------------------------------
# explicit flat-expanded complex


class FlatComplex:
    """The flat-expanded complex restricted to a finite word set.

    Nodes are ('A', g) and ('B', g), the lattice point g of the flat gH_A or
    gH_B, and ('V', g), the midpoint of the edge joining them.  Lattice unit
    steps inside a flat have length 1 and the two halves of each edge have
    length 1/2.  Weights are stored doubled so that they are integers.
    """

    def __init__(self, words: Sequence[Word], pres: Presentation = Presentation()):
        from scipy.sparse import csr_matrix

        self.words = list(words)
        self.pres = pres
        n = len(self.words)
        self.word_index = {w: i for i, w in enumerate(self.words)}
        if len(self.word_index) != n:
            raise ValueError("duplicate words")
        # node ids: A at i, B at n + i, V at 2n + i
        rows, cols, wts = [], [], []
        units = {f: [tuple(int(j == k) for j in range(pres.rank(f))) for k in range(pres.rank(f))] for f in FACTORS}
        for i, g in enumerate(self.words):
            for off in (0, n):
                rows.append(2 * n + i)
                cols.append(off + i)
                wts.append(1)
            for fi, f in enumerate(FACTORS):
                for e in units[f]:
                    j = self.word_index.get(g * Word(((f, e),)))
                    if j is not None:
                        rows.append(fi * n + i)
                        cols.append(fi * n + j)
                        wts.append(2)
        m = csr_matrix((wts, (rows, cols)), shape=(3 * n, 3 * n))
        self.matrix = m + m.T
        self.n = n

    def node(self, p: TreePoint) -> int:
        i = self.word_index[p.element]
        if p.kind == "V":
            return 2 * self.n + i
        return (0 if p.side == "A" else self.n) + i

    def doubled_distances_from(self, sources: Sequence[int]) -> np.ndarray:
        """Doubled distances from the V points of the given word indices to
        the V points of all words, one row per source."""
        from scipy.sparse.csgraph import dijkstra

        n = self.n
        d = dijkstra(self.matrix, directed=False, indices=[2 * n + i for i in sources])
        return d[:, 2 * n :]

    def distance(self, p1: TreePoint, p2: TreePoint) -> Fraction:
        from scipy.sparse.csgraph import dijkstra

        d = dijkstra(self.matrix, directed=False, indices=self.node(p1))[self.node(p2)]
        if not np.isfinite(d):
            raise ValueError("points are not connected inside the word set")
        return Fraction(int(round(d)), 2)


def word_ball(max_syllables: int, max_exp: int, pres: Presentation = Presentation()) -> List[Word]:
    """Identity plus enumerate_words(max_syllables, max_exp): a set that
    contains every tree-and-flat geodesic between its V points."""
    return list(enumerate_words(max_syllables, max_exp, pres, include_identity=True))
