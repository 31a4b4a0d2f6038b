"""Exact enumeration and exact sampling of Lipschitz functions on finite trees.

Levels are numbered from the root (level 0) to the leaves (level n).  The
unnormalized level-k law is ``A_k(i) = (sum_{|j-i|<=M} A_{k+1}(j))^d`` with
``A_n`` the boundary weights, so exact samples come from drawing the root from
``A_0`` and then each child independently given its parent, with probabilities
proportional to ``A_{k+1}`` on the parent's M-neighborhood.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .recursion import apply_F, lattice_F
from .report import CertificateReport, fmt_number
from .seqspace import DEFAULT_LENGTH, ProbDist, WeightSeq, as_exact

ENUM_BUDGET = 10 ** 6
SAMPLE_CELL_BUDGET = 5 * 10 ** 7
CHUNK = 4096


class BudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# distributions on Z with an offset
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IntDist:
    """Distribution on ``offset, offset+1, ...``; used when no symmetry is assumed."""

    offset: int
    probs: np.ndarray
    exact: bool = False

    def __post_init__(self):
        p = np.array([as_exact(v) for v in self.probs], dtype=object) if self.exact \
            else np.asarray(self.probs, dtype=np.float64)
        nz = np.nonzero(p != 0)[0]
        if nz.size == 0:
            raise ValueError("distribution has no mass")
        p = p[nz[0]: nz[-1] + 1]
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "offset", int(self.offset) + int(nz[0]))

    @property
    def support(self):
        return range(self.offset, self.offset + self.probs.shape[0])

    def value(self, i):
        k = int(i) - self.offset
        if 0 <= k < self.probs.shape[0]:
            return self.probs[k]
        return Fraction(0) if self.exact else 0.0

    def cdf(self, i):
        k = int(i) - self.offset
        if k < 0:
            return Fraction(0) if self.exact else 0.0
        return self.probs[: k + 1].sum()

    def total(self):
        return self.probs.sum()

    def tv(self, other):
        lo = min(self.offset, other.offset)
        hi = max(self.support[-1], other.support[-1])
        return sum(abs(self.value(i) - other.value(i)) for i in range(lo, hi + 1)) / 2

    def is_symmetric(self, center2=0):
        """Symmetric about center2 / 2."""
        return all(self.value(i) == self.value(center2 - i) for i in self.support)

    def to_probdist(self):
        if not self.is_symmetric():
            raise ValueError("not symmetric about 0")
        return ProbDist(self.probs[-self.offset:], self.exact)

    @classmethod
    def from_probdist(cls, z: ProbDist):
        return cls(-(z.values.shape[0] - 1), z.full(), z.exact)

    def __eq__(self, other):
        if isinstance(other, ProbDist):
            other = IntDist.from_probdist(other)
        if not isinstance(other, IntDist):
            return NotImplemented
        return self.offset == other.offset and self.probs.shape == other.probs.shape \
            and bool((self.probs == other.probs).all())

    __hash__ = None

    def to_dict(self):
        return {"offset": self.offset, "probs": [fmt_number(v) for v in self.probs]}


def _symmetric_or_int(offset, probs, exact):
    dist = IntDist(offset, probs, exact)
    if dist.offset == -dist.support[-1] and (exact and dist.is_symmetric()):
        return dist.to_probdist()
    return dist


# ---------------------------------------------------------------------------
# boundary weights
# ---------------------------------------------------------------------------

def boundary_weights(boundary, exact=False):
    """(offset, weights) for a WeightSeq, a set of heights, a dict or a distribution."""
    if isinstance(boundary, WeightSeq):
        half = list(boundary.values(exact))
        full = half[:0:-1] + half
        return -(len(half) - 1), full
    if isinstance(boundary, ProbDist):
        return -(boundary.values.shape[0] - 1), list(boundary.full())
    if isinstance(boundary, IntDist):
        return boundary.offset, list(boundary.probs)
    if isinstance(boundary, dict):
        keys = sorted(int(k) for k in boundary)
        lo, hi = keys[0], keys[-1]
        one = (lambda v: as_exact(v)) if exact else float
        return lo, [one(boundary.get(i, 0)) for i in range(lo, hi + 1)]
    heights = sorted({int(h) for h in boundary})
    if not heights:
        raise ValueError("empty boundary set")
    lo, hi = heights[0], heights[-1]
    s = set(heights)
    one, zero = (1, 0) if exact else (1.0, 0.0)
    return lo, [one if i in s else zero for i in range(lo, hi + 1)]


def _int_step(vals, d, M):
    padded = [0] * (2 * M) + list(vals) + [0] * (2 * M)
    n = len(vals) + 2 * M
    return [sum(padded[i:i + 2 * M + 1]) ** d for i in range(n)]


def lipschitz_count(n, d, boundary, regular=False, M=1):
    """Unnormalized root weights ``A_0`` as exact integers (or Fractions for weights).

    Returns (offset, list); ``sum(list)`` is the weighted number of
    M-Lipschitz functions on the depth-n tree with the given leaf weights.
    """
    off, vals = boundary_weights(boundary, exact=True)
    vals = [int(v) if as_exact(v).denominator == 1 else as_exact(v) for v in vals]
    for k in range(n):
        deg = d + 1 if (regular and k == n - 1) else d
        vals = _int_step(vals, deg, M)
        off -= M
    return off, vals


def root_marginal(n, d, boundary=frozenset({0}), regular=False, exact=False, M=1,
                  max_radius=DEFAULT_LENGTH):
    """Law of the root height on the depth-n d-ary tree (or (d+1)-regular tree).

    Returns a ProbDist when the law is symmetric about 0, else an IntDist.
    Float mode caps the support at ``max_radius`` around the centre of the
    window, dropping mass that is below double resolution.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if exact:
        off, vals = lipschitz_count(n, d, boundary, regular, M)
        total = sum(vals)
        return _symmetric_or_int(off, [Fraction(v) / total for v in vals], True)
    off, vals = boundary_weights(boundary, exact=False)
    if M == 1 and off == -(len(vals) - 1) and np.allclose(vals, vals[::-1], rtol=0, atol=0):
        z = ProbDist.from_weights(vals[-off:])
        for k in range(n):
            z = apply_F(z, d + 1 if (regular and k == n - 1) else d, max_radius)
        return z
    p = np.asarray(vals, dtype=float)
    p = p / p.sum()
    for k in range(n):
        p = lattice_F(p, d + 1 if (regular and k == n - 1) else d, M)
        off -= M
        p, off = _trim_float(p, off, max_radius)
    return IntDist(off, p)


def _trim_float(p, off, max_radius):
    p = p.copy()
    p[p < _kernels.UNDERFLOW] = 0.0
    nz = np.nonzero(p)[0]
    p, off = p[nz[0]: nz[-1] + 1], off + int(nz[0])
    if p.shape[0] > 2 * max_radius + 1:
        centre = int(np.argmax(p))
        lo = max(0, centre - max_radius)
        p, off = p[lo: lo + 2 * max_radius + 1], off + lo
    return p / p.sum(), off


def marginal_sequence(d, n_max, boundary=frozenset({0}), max_radius=DEFAULT_LENGTH):
    """Root marginals for n = 0..n_max (n = 0 is the boundary law itself)."""
    off, vals = boundary_weights(boundary)
    z = ProbDist.from_weights(vals[-off:])
    out = [z]
    for _ in range(n_max):
        z = apply_F(z, d, max_radius)
        out.append(z)
    return out


def parity_gaps(d, n_max, boundary=frozenset({0})):
    """Arrays TV(marg_n, marg_{n+1}) and TV(marg_n, marg_{n+2}) for n = 0..n_max."""
    seq = marginal_sequence(d, n_max + 2, boundary)
    one = np.array([float(seq[k].tv(seq[k + 1])) for k in range(n_max + 1)])
    two = np.array([float(seq[k].tv(seq[k + 2])) for k in range(n_max + 1)])
    return one, two


# ---------------------------------------------------------------------------
# brute-force enumeration
# ---------------------------------------------------------------------------

def _tree_parents(n, d, regular=False):
    """Parent index of every vertex in BFS order, and each vertex's level."""
    parents, levels = [-1], [0]
    frontier = [0]
    for k in range(1, n + 1):
        width = d + 1 if (regular and k == 1) else d
        nxt = []
        for p in frontier:
            for _ in range(width):
                parents.append(p)
                levels.append(k)
                nxt.append(len(parents) - 1)
        frontier = nxt
    return parents, levels


def enumerate_lipschitz(n, d, boundary=frozenset({0}), budget=ENUM_BUDGET, M=1, regular=False):
    """Exhaustive enumeration of M-Lipschitz functions with leaf values in ``boundary``.

    Returns (count, root marginal) with an exact rational marginal.  ``budget``
    bounds the number of partial assignments visited.
    """
    off, vals = boundary_weights(boundary, exact=True)
    allowed = [off + i for i, v in enumerate(vals) if v != 0]
    lo_s, hi_s = allowed[0], allowed[-1]
    parents, levels = _tree_parents(n, d, regular)
    V = len(parents)
    if V > budget:
        raise BudgetExceeded(f"{V} vertices exceed the enumeration budget")
    allowed_set = set(allowed)

    def dist_to_s(h):
        if lo_s <= h <= hi_s:
            return min(abs(h - s) for s in allowed)
        return lo_s - h if h < lo_s else h - hi_s

    roots = {}
    heights = [0] * V
    visited = 0

    def rec(v):
        nonlocal visited
        visited += 1
        if visited > budget:
            raise BudgetExceeded(f"more than {budget} partial assignments")
        if v == V:
            roots[heights[0]] = roots.get(heights[0], 0) + 1
            return
        k = levels[v]
        if k == n:
            choices = [h for h in range(heights[parents[v]] - M, heights[parents[v]] + M + 1)
                       if h in allowed_set]
        else:
            base = heights[parents[v]]
            choices = [h for h in range(base - M, base + M + 1)
                       if dist_to_s(h) <= M * (n - k)]
        for h in choices:
            heights[v] = h
            rec(v + 1)

    for r in range(lo_s - M * n, hi_s + M * n + 1):
        if dist_to_s(r) <= M * n:
            heights[0] = r
            if n == 0:
                if r in allowed_set:
                    roots[r] = roots.get(r, 0) + 1
                continue
            rec(1)
    count = sum(roots.values())
    if count == 0:
        raise ValueError("no Lipschitz function satisfies the boundary")
    lo, hi = min(roots), max(roots)
    return count, _symmetric_or_int(lo, [Fraction(roots.get(i, 0), count)
                                         for i in range(lo, hi + 1)], True)


# ---------------------------------------------------------------------------
# exact sampling
# ---------------------------------------------------------------------------

@dataclass
class TreeLipschitzSample:
    height_by_vertex: dict
    n: int
    d: int
    boundary: object = None

    def check(self, M=1, boundary_support=None):
        for (k, i), h in self.height_by_vertex.items():
            if k > 0:
                if abs(h - self.height_by_vertex[(k - 1, i // self.d)]) > M:
                    return False
            if k == self.n and boundary_support is not None and h not in boundary_support:
                return False
        return True


@dataclass
class LevelTables:
    """Per-level laws on one common height window, plus child-draw tables."""

    n: int
    d: int
    M: int
    offset: int
    marginals: list      # marginals[k][h]: normalized level-k law on the window
    cum: list            # cum[k][h, j]: child of a level-k vertex at h, P(offset <= j - M)
    root_cdf: np.ndarray
    support: frozenset = field(default_factory=frozenset)


def level_tables(n, d, boundary=frozenset({0}), M=1, max_radius=DEFAULT_LENGTH) -> LevelTables:
    off, vals = boundary_weights(boundary)
    p = np.asarray(vals, dtype=float)
    support = frozenset(off + i for i, v in enumerate(vals) if v > 0)
    p = p / p.sum()
    levels = [(off, p)]
    for _ in range(n):
        p = lattice_F(p, d, M)
        off -= M
        p, off = _trim_float(p, off, max_radius)
        levels.append((off, p))
    levels.reverse()
    lo = min(o for o, _ in levels)
    hi = max(o + q.shape[0] for o, q in levels)
    W = hi - lo
    marg = []
    for o, q in levels:
        arr = np.zeros(W)
        arr[o - lo: o - lo + q.shape[0]] = q
        marg.append(arr)
    cum = []
    for k in range(n):
        child = np.concatenate([np.zeros(M), marg[k + 1], np.zeros(M)])
        table = np.full((W, 2 * M), 2.0)
        for h in range(W):
            w = child[h: h + 2 * M + 1]
            tot = w.sum()
            if tot <= 0:
                continue
            c = np.cumsum(w)[: 2 * M] / tot
            rest = np.cumsum(w[::-1])[::-1][1:]   # mass strictly above each cut
            table[h] = np.where(rest > 0, c, 2.0)
        cum.append(table)
    root_cdf = np.cumsum(marg[0]) / marg[0].sum()
    last = np.nonzero(marg[0])[0][-1]
    root_cdf[last:] = np.inf
    return LevelTables(n, d, M, lo, marg, cum, root_cdf, support)


def _sample_chunk(tab: LevelTables, count, seed_seq, use_numba, max_level):
    rng = np.random.default_rng(seed_seq)
    root = np.searchsorted(tab.root_cdf, rng.random(count), side="right")
    out = [root.reshape(count, 1).astype(np.int64)]
    for k in range(max_level):
        u = rng.random((count, out[-1].shape[1] * tab.d))
        out.append(_kernels.expand_level(out[-1], tab.cum[k], u, tab.d, tab.M, use_numba))
    return [a + tab.offset for a in out]


def sample_tree_arrays(n, d, boundary=frozenset({0}), count=1, seed=None, M=1, threads=1,
                       max_level=None, use_numba=None, tables=None):
    """Exact samples as per-level arrays ``heights[k]`` of shape (count, d**k).

    Samples are drawn in fixed chunks, each with its own stream spawned from
    ``seed``, so results do not depend on ``threads``.
    """
    if seed is None:
        raise ValueError("a seed is required for reproducible sampling")
    max_level = n if max_level is None else max_level
    if count * d ** max_level > SAMPLE_CELL_BUDGET:
        raise BudgetExceeded("materialized samples exceed the memory budget; lower max_level")
    tab = tables if tables is not None else level_tables(n, d, boundary, M)
    sizes = [min(CHUNK, count - s) for s in range(0, count, CHUNK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))

    def run(job):
        return _sample_chunk(tab, job[0], job[1], use_numba, max_level)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return [np.concatenate([p[k] for p in parts]) for k in range(max_level + 1)]


def sample_tree(n, d, boundary=frozenset({0}), count=1, seed=None, M=1, threads=1):
    """Exact samples as TreeLipschitzSample objects (full configurations)."""
    arrays = sample_tree_arrays(n, d, boundary, count, seed, M, threads)
    out = []
    for s in range(count):
        hv = {(k, i): int(arrays[k][s, i]) for k in range(n + 1) for i in range(d ** k)}
        out.append(TreeLipschitzSample(hv, n, d, boundary))
    return out


class LazyTree:
    """One exact sample on a deep or wide tree, generated only where it is looked at.

    Children of a vertex are drawn together the first time they are requested.
    Vertex ids are (level, index); children of (k, i) are (k+1, d*i + j).
    """

    def __init__(self, n, d, boundary=frozenset({0}), rng=None, M=1, tables=None):
        self.n, self.d, self.M = n, d, M
        self.tab = tables if tables is not None else level_tables(n, d, boundary, M)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        root = int(np.searchsorted(self.tab.root_cdf, self.rng.random(), side="right"))
        self.heights = {(0, 0): root + self.tab.offset}

    @property
    def root(self):
        return (0, 0)

    def height(self, v):
        return self.heights[v]

    def parent(self, v):
        k, i = v
        return None if k == 0 else (k - 1, i // self.d)

    def children(self, v):
        k, i = v
        if k >= self.n:
            return []
        first = (k + 1, i * self.d)
        if first not in self.heights:
            h = self.heights[v] - self.tab.offset
            u = self.rng.random(self.d)
            cum = self.tab.cum[k][h]
            for j in range(self.d):
                step = int(np.sum(u[j] >= cum))
                self.heights[(k + 1, i * self.d + j)] = h + step - self.M + self.tab.offset
        return [(k + 1, i * self.d + j) for j in range(self.d)]

    def neighbors(self, v):
        p = self.parent(v)
        return ([p] if p is not None else []) + self.children(v)

    def parity(self, v):
        return v[0] % 2

    def is_boundary(self, v):
        return v[0] == self.n


# ---------------------------------------------------------------------------
# limiting chain and domination
# ---------------------------------------------------------------------------

@dataclass
class LimitChain:
    pi: object
    P: np.ndarray          # P[k, o + 1] = P(i -> i + o), i = offset + k
    offset: int
    stationary: object
    row_sums: list
    stationarity_residual: float
    reversibility_residual: float
    report: CertificateReport = None


def limit_chain(pi, d, stat_tol=1e-10, rev_tol=1e-12) -> LimitChain:
    """Tree-indexed chain with root law ``pi`` and kernel pi(j) / (pi(i-1)+pi(i)+pi(i+1)).

    Rows and residuals are computed in rational arithmetic from the float
    input, so row sums are exactly 1 and the residuals measure only how far
    ``pi`` is from a fixed point.
    """
    dist = IntDist.from_probdist(pi) if isinstance(pi, ProbDist) else pi
    off = dist.offset
    p = [Fraction(float(v)) if not isinstance(v, Fraction) else v for v in dist.probs]
    K = len(p)
    pp = [Fraction(0)] + p + [Fraction(0)]
    s = [pp[k] + pp[k + 1] + pp[k + 2] for k in range(K)]
    P = [[(pp[k + o] / s[k]) for o in range(3)] for k in range(K)]
    a = [v ** (d + 1) for v in s]
    Z = sum(a)
    stat = [v / Z for v in a]
    rows = [sum(r) for r in P]
    st = [Fraction(0)] + stat + [Fraction(0)]
    flow = [sum(st[k + 2 - o] * (P[k + 1 - o][o] if 0 <= k + 1 - o < K else 0) for o in range(3))
            for k in range(K)]
    stat_res = max(abs(float(flow[k] - stat[k])) for k in range(K))
    rev = 0.0
    for k in range(K - 1):
        rev = max(rev, abs(float(stat[k] * P[k][2] - stat[k + 1] * P[k + 1][0])))
    rep = CertificateReport(f"limit chain d={d}")
    rep.check("rows sum to 1 (count of failures)", sum(r != 1 for r in rows), "==", 0)
    rep.check("stationarity residual", stat_res, "<", stat_tol)
    rep.check("reversibility residual", rev, "<", rev_tol)
    if not rep.passed:
        rep.meta["diagnosis"] = "pi is not converged" if stat_res >= stat_tol else ""
    P_arr = np.array([[float(v) for v in r] for r in P])
    return LimitChain(pi, P_arr, off, IntDist(off, stat, True), rows, stat_res, rev, rep)


def domination_check(n, d, w_low, w_high, exact=None) -> CertificateReport:
    """Root law under ``w_high`` stochastically dominates the one under ``w_low``."""
    if exact is None:
        exact = d ** n <= 4 ** 8
    lo = root_marginal(n, d, w_low, exact=exact)
    hi = root_marginal(n, d, w_high, exact=exact)
    lo = IntDist.from_probdist(lo) if isinstance(lo, ProbDist) else lo
    hi = IntDist.from_probdist(hi) if isinstance(hi, ProbDist) else hi
    rep = CertificateReport(f"domination n={n} d={d}")
    tol = 0 if exact else 1e-12
    first = min(lo.offset, hi.offset)
    last = max(lo.support[-1], hi.support[-1])
    crossing = None
    for x in range(first, last + 1):
        if hi.cdf(x) > lo.cdf(x) + tol:
            crossing = x
            break
    rep.flag("CDFs do not cross", crossing is None,
             note="" if crossing is None else f"crossing at height {crossing}", exact=exact)
    rep.meta["crossing"] = crossing
    return rep
