"""Finite bipartite graphs: heat-bath Glauber dynamics, atypical clusters and FKG checks.

Parity convention: color 0 ("even") takes the boundary set {a..b}, color 1
("odd") takes {b-M..a+M}.  On trees the root is even.
"""
import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import _kernels
from .report import CertificateReport
from .treesampler import LazyTree, level_tables

BIG = 10 ** 6


class InadmissibleBoundary(ValueError):
    pass


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

def _two_color(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    color = [-1] * n
    for s in range(n):
        if color[s] >= 0:
            continue
        color[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    q.append(v)
                elif color[v] == color[u]:
                    return None
    return color


@dataclass
class GraphSpec:
    """Finite graph with a boundary ``kappa`` (vertex -> sorted tuple of allowed heights)."""

    n: int
    edges: list
    colors: list = None
    kappa: dict = field(default_factory=dict)
    boundary: frozenset = None
    cheeger: float = None

    def __post_init__(self):
        self.edges = [(int(u), int(v)) for u, v in self.edges]
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
        if self.colors is None:
            self.colors = _two_color(self.n, self.edges)
            if self.colors is None:
                raise ValueError("graph is not bipartite")
        self.colors = [int(c) for c in self.colors]
        if any(self.colors[u] == self.colors[v] for u, v in self.edges):
            raise ValueError("an edge joins two vertices of the same color")
        self.kappa = {int(v): tuple(sorted(set(int(h) for h in s))) for v, s in self.kappa.items()}
        if any(len(s) == 0 for s in self.kappa.values()):
            raise InadmissibleBoundary("empty boundary set")
        if self.boundary is None:
            self.boundary = frozenset(self.kappa)
        self.boundary = frozenset(int(v) for v in self.boundary)
        self._adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            self._adj[u].append(v)
            self._adj[v].append(u)

    def neighbors(self, v):
        return self._adj[v]

    def parity(self, v):
        return self.colors[v]

    def is_boundary(self, v):
        return v in self.boundary

    def csr(self):
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for v in range(self.n):
            indptr[v + 1] = indptr[v] + len(self._adj[v])
        indices = np.array([u for v in range(self.n) for u in self._adj[v]], dtype=np.int64)
        return indptr, indices

    def with_kappa(self, kappa):
        return GraphSpec(self.n, self.edges, self.colors, kappa, self.boundary, self.cheeger)

    def with_ab(self, a, b, M=1):
        if not 0 <= b - a <= 2 * M:
            raise InadmissibleBoundary("need 0 <= b - a <= 2M")
        even, odd = tuple(range(a, b + 1)), tuple(range(b - M, a + M + 1))
        return self.with_kappa({v: even if self.colors[v] == 0 else odd for v in self.boundary})

    def intervals(self):
        """(lo, hi) arrays of interval hulls of kappa; unconstrained vertices get +-BIG."""
        lo = np.full(self.n, -BIG, dtype=np.int64)
        hi = np.full(self.n, BIG, dtype=np.int64)
        for v, s in self.kappa.items():
            lo[v], hi[v] = s[0], s[-1]
        return lo, hi

    def kappa_is_interval(self):
        return all(s[-1] - s[0] + 1 == len(s) for s in self.kappa.values())

    def propagate(self, M=1):
        """Tightest bounds implied by kappa hulls and the Lipschitz constraint."""
        lo, hi = self.intervals()
        changed = True
        while changed:
            changed = False
            for u, v in self.edges:
                for x, y in ((u, v), (v, u)):
                    if lo[y] - M > lo[x]:
                        lo[x] = lo[y] - M
                        changed = True
                    if hi[y] + M < hi[x]:
                        hi[x] = hi[y] + M
                        changed = True
            if (lo > hi).any():
                raise InadmissibleBoundary("no Lipschitz extension of the boundary exists")
        return lo, hi

    def to_json(self):
        verts = []
        for v in range(self.n):
            rec = {"color": "even" if self.colors[v] == 0 else "odd"}
            if v in self.kappa:
                rec["kappa"] = list(self.kappa[v])
            elif v in self.boundary:
                rec["boundary"] = True
            verts.append(rec)
        return json.dumps({"vertices": verts, "edges": [list(e) for e in self.edges]})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        verts = data["vertices"]
        colors = [0 if v.get("color", "even") in ("even", "white", 0) else 1 for v in verts]
        kappa = {i: v["kappa"] for i, v in enumerate(verts) if "kappa" in v}
        boundary = {i for i, v in enumerate(verts) if "kappa" in v or v.get("boundary")}
        return cls(len(verts), data["edges"], colors, kappa, boundary, data.get("cheeger"))


def tree_graph(d, depth):
    """d-ary tree of the given depth; leaves form the boundary."""
    edges, level = [], [0]
    frontier = [0]
    n = 1
    for k in range(1, depth + 1):
        nxt = []
        for p in frontier:
            for _ in range(d):
                edges.append((p, n))
                level.append(k)
                nxt.append(n)
                n += 1
        frontier = nxt
    colors = [k % 2 for k in level]
    return GraphSpec(n, edges, colors, boundary=frozenset(frontier), cheeger=d - 1)


def grid_graph(w, h):
    """w x h grid; the outer frame is the boundary."""
    idx = lambda x, y: y * w + x
    edges = []
    for y in range(h):
        for x in range(w):
            if x + 1 < w:
                edges.append((idx(x, y), idx(x + 1, y)))
            if y + 1 < h:
                edges.append((idx(x, y), idx(x, y + 1)))
    colors = [(x + y) % 2 for y in range(h) for x in range(w)]
    frame = {idx(x, y) for y in range(h) for x in range(w) if x in (0, w - 1) or y in (0, h - 1)}
    return GraphSpec(w * h, edges, colors, boundary=frozenset(frame))


def path_graph(n):
    return GraphSpec(n, [(i, i + 1) for i in range(n - 1)])


def parse_graph(spec):
    """``tree:d,n``, ``grid:w,h``, ``path:n`` or a JSON file path."""
    if spec.startswith("tree:"):
        d, n = (int(t) for t in spec[5:].split(","))
        return tree_graph(d, n)
    if spec.startswith("grid:"):
        w, h = (int(t) for t in spec[5:].split(","))
        return grid_graph(w, h)
    if spec.startswith("path:"):
        g = path_graph(int(spec[5:]))
        return GraphSpec(g.n, g.edges, g.colors, boundary=frozenset({0, g.n - 1}))
    with open(spec) as fh:
        return GraphSpec.from_json(fh.read())


# ---------------------------------------------------------------------------
# Glauber dynamics
# ---------------------------------------------------------------------------

@dataclass
class MLipschitzState:
    values: np.ndarray
    M: int = 1

    def is_valid(self, g: GraphSpec):
        v = self.values
        if any(abs(int(v[a]) - int(v[b])) > self.M for a, b in g.edges):
            return False
        return all(int(v[u]) in set(s) for u, s in g.kappa.items())


def _interval_bounds(g, M):
    if not g.kappa_is_interval():
        raise InadmissibleBoundary("heat-bath sampling needs interval boundary sets")
    lo, hi = g.propagate(M)
    klo, khi = g.intervals()
    return lo, klo, khi


def glauber_chains(g: GraphSpec, M=1, sweeps=1000, chains=1, seed=None, record_from=None,
                   debug=False, use_numba=None):
    """Run independent heat-bath chains started from the lowest valid state.

    Returns (final values of shape (chains, n), Counter of visited joint
    states after sweep ``record_from``, or None when not recording).
    """
    if seed is None:
        raise ValueError("a seed is required")
    init, klo, khi = _interval_bounds(g, M)
    vals = np.tile(init, (chains, 1)).astype(np.int64)
    indptr, indices = g.csr()
    rng = np.random.default_rng(seed)
    occ = Counter() if record_from is not None else None
    for s in range(sweeps):
        u = rng.random((chains, g.n))
        _kernels.heat_bath_sweep(vals, indptr, indices, klo, khi, M, u, use_numba)
        if debug:
            for row in vals:
                assert MLipschitzState(row, M).is_valid(g)
        if occ is not None and s >= record_from:
            occ.update(map(tuple, vals.tolist()))
    return vals, occ


def glauber_run(g: GraphSpec, M=1, ab=(0, 0), sweeps=1000, seed=None, debug=False):
    """State after ``sweeps`` sweeps of one chain targeting the (a, b) boundary measure."""
    gab = g.with_ab(ab[0], ab[1], M) if ab is not None else g
    vals, _ = glauber_chains(gab, M, sweeps, 1, seed, debug=debug)
    return MLipschitzState(vals[0], M)


def split_chain_tv(vals, probes):
    """Largest TV distance between the probe marginals of the two halves of the chains."""
    half = vals.shape[0] // 2
    worst = 0.0
    for v in probes:
        a = Counter(vals[:half, v].tolist())
        b = Counter(vals[half:, v].tolist())
        keys = set(a) | set(b)
        tv = sum(abs(a[k] / half - b[k] / (vals.shape[0] - half)) for k in keys) / 2
        worst = max(worst, tv)
    return worst


# ---------------------------------------------------------------------------
# atypical clusters
# ---------------------------------------------------------------------------

@dataclass
class ClusterStats:
    atypical_even: set
    atypical_odd: set
    component_sizes: Counter
    components: dict = field(default_factory=dict)


def _height_fn(f, g):
    if isinstance(g, LazyTree):
        return g.height
    vals = f.values if isinstance(f, MLipschitzState) else f
    return lambda v: int(vals[v])


def is_atypical(g, height, v, a, b, M):
    if g.is_boundary(v):
        return False
    h = height(v)
    if g.parity(v) == 0:
        return not a <= h <= b
    return not b - M <= h <= a + M


def _ball2(g, v):
    out = set()
    for u in g.neighbors(v):
        out.add(u)
        for w in g.neighbors(u):
            if w != v:
                out.add(w)
    return out


def _component(g, height, start, a, b, M):
    if not is_atypical(g, height, start, a, b, M):
        return set()
    comp = {start}
    q = deque([start])
    while q:
        v = q.popleft()
        for w in _ball2(g, v):
            if w not in comp and is_atypical(g, height, w, a, b, M):
                comp.add(w)
                q.append(w)
    return comp


def cluster_stats(f, g, ab=(0, 0), probes=(0,), M=1) -> ClusterStats:
    """Atypical sets and the distance-2 components of B(f) at each probe.

    On a GraphSpec the whole of B(f) is computed; on a LazyTree only the
    components reached from the probes are explored.
    """
    a, b = ab
    height = _height_fn(f, g)
    comps = {}
    if isinstance(g, LazyTree):
        verts = set()
        for p in probes:
            comps[p] = _component(g, height, p, a, b, M)
            verts |= comps[p]
    else:
        verts = {v for v in range(g.n) if is_atypical(g, height, v, a, b, M)}
        for p in probes:
            comps[p] = _component(g, height, p, a, b, M)
    even = {v for v in verts if g.parity(v) == 0}
    odd = verts - even
    sizes = Counter(len(comps[p]) for p in probes)
    return ClusterStats(even, odd, sizes, comps)


def all_components(f, g: GraphSpec, ab=(0, 0), M=1):
    """Partition of B(f) into distance-2 components."""
    a, b = ab
    height = _height_fn(f, g)
    left = {v for v in range(g.n) if is_atypical(g, height, v, a, b, M)}
    out = []
    while left:
        comp = _component(g, height, min(left), a, b, M)
        out.append(comp)
        left -= comp
    return out


def hypothesis_holds(h, d, M, factor=1):
    """h >= 4M log(factor * d^4 (4M + 1))."""
    return h >= 4 * M * math.log(factor * d ** 4 * (4 * M + 1))


def tail_check(d, n_depth, M=1, samples=1000, seed=0, ab=(0, 0), min_samples=100):
    """Root-cluster tail on the depth-2n d-ary tree against exp(-h n / 4M).

    Every empirical point P(|A| = n) and P(|A| >= n), n >= 1, must sit below
    the bound plus three binomial standard deviations.
    """
    if samples < min_samples:
        raise ValueError(f"at least {min_samples} samples are needed")
    a, b = ab
    h = d - 1
    depth = 2 * n_depth
    tables = level_tables(depth, d, set(range(a, b + 1)), M)
    seqs = np.random.SeedSequence(seed).spawn(samples)
    sizes = Counter()
    root_vals = Counter()
    for ss in seqs:
        tree = LazyTree(depth, d, rng=np.random.default_rng(ss), M=M, tables=tables)
        st = cluster_stats(None, tree, ab, probes=[tree.root], M=M)
        sizes[len(st.components[tree.root])] += 1
        root_vals[tree.height(tree.root)] += 1
    rep = CertificateReport(f"cluster tail d={d} depth={depth} M={M}")
    top = max(max(sizes), 1) + 1
    rate = h / (4 * M)
    for n in range(1, top + 1):
        bound = math.exp(-rate * n)
        p_eq = sizes[n] / samples
        slack = 3 * math.sqrt(bound * (1 - bound) / samples)
        rep.check(f"P(|A| = {n})", p_eq, "<=", bound + slack)
        tail_bound = min(1.0, bound / (1 - math.exp(-rate)))
        p_ge = sum(c for s, c in sizes.items() if s >= n) / samples
        slack = 3 * math.sqrt(tail_bound * (1 - tail_bound) / samples)
        rep.check(f"P(|A| >= {n})", p_ge, "<=", tail_bound + slack)
    met = hypothesis_holds(h, d, M)
    met_strict = hypothesis_holds(h, d, M, factor=3)
    rep.meta.update({
        "h": h, "samples": samples, "histogram": dict(sorted(sizes.items())),
        "root_values": dict(sorted(root_vals.items())),
        "root_typical_fraction": sum(c for v, c in root_vals.items() if a <= v <= b) / samples,
        "hypothesis_d4": met, "hypothesis_3d4": met_strict,
        "status": "quantitative" if met_strict else "qualitative only",
    })
    return rep


def distinctness_check(d, M, pairs, depth, samples, seed=0):
    """Modal interval {N-..N+} of the heights around an odd vertex, per (a, b)."""
    rep = CertificateReport(f"distinctness d={d} M={M}")
    modal = {}
    ss = np.random.SeedSequence(seed)
    for (a, b), child in zip(pairs, ss.spawn(len(pairs))):
        tables = level_tables(2 * depth, d, set(range(a, b + 1)), M)
        rng = np.random.default_rng(child)
        counts = Counter()
        for _ in range(samples):
            tree = LazyTree(2 * depth, d, rng=rng, M=M, tables=tables)
            u = tree.children(tree.root)[0]
            hs = [tree.height(w) for w in tree.neighbors(u)]
            counts[(min(hs), max(hs))] += 1
        mode, freq = counts.most_common(1)[0]
        modal[(a, b)] = mode
        rep.meta[f"{a},{b}"] = {"modal": list(mode), "frequency": freq / samples}
    keys = list(modal)
    for p, q in combinations(keys, 2):
        rep.flag(f"modal intervals differ for {p} and {q}", modal[p] != modal[q])
    rep.meta["hypothesis_3d4"] = hypothesis_holds(d - 1, d, M, factor=3)
    return rep, modal


# ---------------------------------------------------------------------------
# exhaustive enumeration and FKG
# ---------------------------------------------------------------------------

def enumerate_configs(g: GraphSpec, M=1, budget=10 ** 7):
    """All M-Lipschitz functions with f(v) in kappa_v on the boundary, as an (N, n) array."""
    lo, hi = g.propagate(M)
    if (lo <= -BIG // 2).any() or (hi >= BIG // 2).any():
        raise InadmissibleBoundary("some vertex is unbounded; enumeration is infinite")
    order, seen = [], set()
    for s in sorted(g.kappa) + list(range(g.n)):
        if s in seen:
            continue
        seen.add(s)
        q = deque([s])
        while q:
            v = q.popleft()
            order.append(v)
            for w in g.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    q.append(w)
    pos = {v: i for i, v in enumerate(order)}
    earlier = [[w for w in g.neighbors(v) if pos[w] < pos[v]] for v in order]
    allowed = [set(g.kappa[v]) if v in g.kappa else None for v in order]
    out = []
    cur = [0] * g.n

    def rec(i):
        if i == len(order):
            out.append(list(cur))
            if len(out) > budget:
                raise InadmissibleBoundary("enumeration budget exceeded")
            return
        v = order[i]
        a, b = int(lo[v]), int(hi[v])
        for w in earlier[i]:
            a, b = max(a, cur[w] - M), min(b, cur[w] + M)
        for x in range(a, b + 1):
            if allowed[i] is not None and x not in allowed[i]:
                continue
            cur[v] = x
            rec(i + 1)

    rec(0)
    if not out:
        raise InadmissibleBoundary("no Lipschitz function satisfies the boundary")
    return np.array(out, dtype=np.int64)


def shifted_abs(configs):
    """2|h + 0.5| = |2h + 1|, kept integer."""
    return np.abs(2 * configs + 1)


def modh_weights(g: GraphSpec, xi2, pos_vertices):
    """2^k(xi) per distinct xi configuration (xi stored doubled).

    Edges of g with max(xi_u, xi_v) > 0.5 join vertices; k counts the resulting
    components that avoid the positive boundary.
    """
    weights = {}
    for row in np.unique(xi2, axis=0):
        parent = list(range(g.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in g.edges:
            if max(row[u], row[v]) > 1:
                parent[find(u)] = find(v)
        roots = {find(v) for v in range(g.n)}
        pos_roots = {find(v) for v in pos_vertices}
        weights[tuple(row.tolist())] = 2 ** len(roots - pos_roots)
    return weights


def adapted_split(kappa):
    """(positive, symmetric) boundary vertices; raises if kappa is not |h|-adapted."""
    pos, sym = set(), set()
    for v, s in kappa.items():
        ss = set(s)
        if all(h >= 1 for h in ss):
            pos.add(v)
        elif ss == {-1 - h for h in ss}:
            sym.add(v)
        else:
            raise ValueError(f"kappa at {v} is neither symmetric nor positive")
    return pos, sym


def upset_library(lo, hi, n):
    """Named increasing indicator functions on small vertex subsets.

    ``lo``/``hi`` are per-vertex value ranges; returns list of (name, fn) where
    fn maps an (N, n) array to a boolean vector.
    """
    lib = []
    for v in range(n):
        for t in range(lo[v] + 1, hi[v] + 1):
            lib.append((f"h{v}>={t}", lambda X, v=v, t=t: X[:, v] >= t))
    singles = list(lib)
    for (na, fa), (nb, fb) in combinations(singles, 2):
        if na.split(">=")[0] == nb.split(">=")[0]:
            continue
        lib.append((f"{na}&{nb}", lambda X, fa=fa, fb=fb: fa(X) & fb(X)))
        lib.append((f"{na}|{nb}", lambda X, fa=fa, fb=fb: fa(X) | fb(X)))
    tot_lo, tot_hi = int(sum(lo)), int(sum(hi))
    for t in range(tot_lo + 1, tot_hi + 1):
        lib.append((f"sum>={t}", lambda X, t=t: X.sum(axis=1) >= t))
    return lib


def _indicators(lib, X):
    return np.array([fn(X) for _, fn in lib], dtype=np.int64).reshape(len(lib), X.shape[0])


def _fkg_check(rep, tag, lib, X, w):
    """Exact sum_w fg * sum_w 1 >= sum_w f * sum_w g for every pair in the library."""
    ind = _indicators(lib, X)
    N = int(w.sum())
    cf = ind @ w
    cfg = (ind * w) @ ind.T
    lhs = N * cfg
    rhs = np.outer(cf, cf)
    bad = np.argwhere(lhs < rhs)
    witness = ""
    if bad.size:
        i, j = bad[0]
        witness = f"{lib[i][0]} , {lib[j][0]}"
    rep.flag(f"{tag} FKG over {len(lib)} increasing functions", bad.size == 0, note=witness)
    return bad.size == 0


def _cbc_check(rep, tag, lib, X, w, Xp, wp):
    ind, indp = _indicators(lib, X), _indicators(lib, Xp)
    N, Np = int(w.sum()), int(wp.sum())
    lhs = (indp @ wp) * N
    rhs = (ind @ w) * Np
    bad = np.nonzero(lhs < rhs)[0]
    witness = f"{lib[bad[0]][0]}: {Fraction(int(lhs[bad[0]]), N * Np)} < " \
              f"{Fraction(int(rhs[bad[0]]), N * Np)}" if bad.size else ""
    rep.flag(f"{tag} CBC over {len(lib)} increasing functions", bad.size == 0, note=witness)
    return bad.size == 0


def _check_interval_order(k1, k2):
    if set(k1) != set(k2):
        raise ValueError("kappa pairs must share the boundary")
    for v in k1:
        s1, s2 = k1[v], k2[v]
        if s1[-1] - s1[0] + 1 != len(s1) or s2[-1] - s2[0] + 1 != len(s2):
            raise ValueError(f"kappa at {v} is not an interval")
        if not (s1[0] <= s2[0] and s1[-1] <= s2[-1]):
            raise ValueError(f"kappa pair not comparable at {v}")


def _check_abs_order(k1, k2):
    if set(k1) != set(k2):
        raise ValueError("kappa pairs must share the boundary")
    p1, _ = adapted_split(k1)
    p2, _ = adapted_split(k2)
    if not p1 <= p2:
        raise ValueError("positive boundary of the first kappa must lie in the second's")
    for v in k1:
        x1 = sorted({abs(2 * h + 1) for h in k1[v]})
        x2 = sorted({abs(2 * h + 1) for h in k2[v]})
        if not (x1[0] <= x2[0] and x1[-1] <= x2[-1]):
            raise ValueError(f"kappa pair not comparable at {v}")


def _law_abs(g, X, kappa, rep, tag):
    """Distinct xi configurations and their weights, checked against the 2^k formula."""
    pos, _ = adapted_split(kappa)
    xi = shifted_abs(X)
    uniq, counts = np.unique(xi, axis=0, return_counts=True)
    formula = modh_weights(g, xi, pos)
    direct = {tuple(r.tolist()): int(c) for r, c in zip(uniq, counts)}
    rep.flag(f"{tag} pushforward equals 2^k law", direct == formula)
    rep.check(f"{tag} sum of 2^k equals |L|", sum(formula.values()), "==", X.shape[0])
    w = np.array([formula[tuple(r.tolist())] for r in uniq], dtype=np.int64)
    return uniq, w


def holley_check(g, X, Xp, rep, tag):
    """Single-site Holley condition for every vertex and comparable pair of surroundings."""
    ok = True
    for v in range(g.n):
        keep = [u for u in range(g.n) if u != v]

        def cond(Y):
            laws = {}
            for row in Y:
                laws.setdefault(tuple(row[keep].tolist()), []).append(int(row[v]))
            return laws

        L1, L2 = cond(X), cond(Xp)
        R1 = np.array(list(L1), dtype=np.int64).reshape(len(L1), len(keep))
        R2 = np.array(list(L2), dtype=np.int64).reshape(len(L2), len(keep))
        comparable = (R1[:, None, :] <= R2[None, :, :]).all(axis=2)
        k1, k2 = list(L1.values()), list(L2.values())
        for i, j in np.argwhere(comparable):
            a, b = sorted(k1[i]), sorted(k2[j])
            for t in set(a) | set(b):
                if Fraction(sum(x >= t for x in a), len(a)) > Fraction(sum(x >= t for x in b), len(b)):
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            break
    rep.flag(f"{tag} Holley single-site condition", ok)
    return ok


def fkg_bruteforce(g: GraphSpec, kappa_pairs, mode="heights", holley=False) -> CertificateReport:
    """Exhaustive CBC and FKG checks for each (kappa, kappa') pair (kappa' may be None)."""
    if mode not in ("heights", "shifted_abs"):
        raise ValueError("mode must be heights or shifted_abs")
    rep = CertificateReport(f"fkg {mode} n={g.n}")
    for idx, (k1, k2) in enumerate(kappa_pairs):
        g1 = g.with_kappa(k1)
        X = enumerate_configs(g1)
        tag = f"pair {idx}:"
        if k2 is not None:
            g2 = g.with_kappa(k2)
            (_check_interval_order if mode == "heights" else _check_abs_order)(g1.kappa, g2.kappa)
            Xp = enumerate_configs(g2)
        if mode == "heights":
            w = np.ones(X.shape[0], dtype=np.int64)
            data = [(X, w)]
            if k2 is not None:
                data.append((Xp, np.ones(Xp.shape[0], dtype=np.int64)))
        else:
            data = [_law_abs(g, X, g1.kappa, rep, tag)]
            if k2 is not None:
                data.append(_law_abs(g, Xp, g2.kappa, rep, tag + "'"))
        allX = np.concatenate([d[0] for d in data])
        lib = upset_library(allX.min(axis=0), allX.max(axis=0), g.n)
        for j, (Y, w) in enumerate(data):
            _fkg_check(rep, tag + ("'" if j else ""), lib, Y, w)
        if k2 is not None:
            _cbc_check(rep, tag, lib, data[0][0], data[0][1], data[1][0], data[1][1])
            if holley and mode == "heights":
                holley_check(g, X, Xp, rep, tag)
    return rep


def abs_counterexample():
    """Law of |h_v| at the middle of a 3-vertex path under two boundary conditions.

    Both neighbours at 0 gives P(|h_v| = 1) = 2/3; one neighbour with |h| = 1
    and the other at 0 gives 1/2, so |h| is not monotone in its boundary.
    """
    g = GraphSpec(3, [(0, 1), (1, 2)])
    out = {}
    for name, kappa in (("zero", {0: (0,), 2: (0,)}), ("abs_one", {0: (-1, 1), 2: (0,)})):
        X = enumerate_configs(g.with_kappa(kappa))
        out[name] = Fraction(int((np.abs(X[:, 1]) == 1).sum()), X.shape[0])
    return out


# fixed library of small graphs with comparable boundary pairs
def fkg_library():
    """(name, graph, heights pairs, shifted_abs pairs) for graphs on at most 6 vertices."""
    path3 = GraphSpec(3, [(0, 1), (1, 2)])
    path4 = GraphSpec(4, [(0, 1), (1, 2), (2, 3)])
    star5 = GraphSpec(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    cycle4 = GraphSpec(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    cycle6 = GraphSpec(6, [(i, (i + 1) % 6) for i in range(6)])
    k23 = GraphSpec(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)])
    tree6 = GraphSpec(6, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)])
    z, zo, o, m = (0,), (0, 1), (1,), (-1, 0)
    sym1, sym2, pos1, pos2 = (-1, 0), (-2, -1, 0, 1), (1,), (1, 2)
    lib = [
        ("path3", path3, [({0: z, 2: z}, {0: zo, 2: z}), ({0: m, 2: z}, {0: o, 2: zo})],
         [({0: sym1, 2: sym1}, {0: pos1, 2: sym1}), ({0: sym1, 2: sym1}, {0: sym2, 2: sym2})]),
        ("path4", path4, [({0: z, 3: z}, {0: o, 3: zo}), ({0: m, 3: m}, {0: zo, 3: o})],
         [({0: sym1, 3: sym1}, {0: pos2, 3: sym1}), ({0: sym1, 3: pos1}, {0: pos1, 3: pos2})]),
        ("star5", star5, [({1: z, 2: z, 3: z, 4: z}, {1: o, 2: z, 3: zo, 4: z}),
                          ({1: m, 2: m, 3: z, 4: z}, {1: z, 2: zo, 3: o, 4: o})],
         [({1: sym1, 2: sym1, 3: sym1, 4: sym1}, {1: pos1, 2: sym1, 3: sym1, 4: sym1}),
          ({1: sym1, 2: sym1, 3: sym1, 4: sym1}, {1: sym2, 2: sym1, 3: sym2, 4: sym1})]),
        ("cycle4", cycle4, [({0: z}, {0: o}), ({0: z, 2: m}, {0: zo, 2: zo})],
         [({0: sym1}, {0: pos1}), ({0: sym1, 2: sym1}, {0: sym2, 2: pos1})]),
        ("cycle6", cycle6, [({0: z, 3: z}, {0: zo, 3: o})],
         [({0: sym1, 3: sym1}, {0: pos1, 3: sym2})]),
        ("k23", k23, [({0: z, 1: z}, {0: zo, 1: o})],
         [({0: sym1, 1: sym1}, {0: pos1, 1: sym1})]),
        ("tree6", tree6, [({3: z, 4: z, 5: z}, {3: o, 4: zo, 5: z})],
         [({3: sym1, 4: sym1, 5: sym1}, {3: pos1, 4: sym1, 5: sym2})]),
    ]
    return lib
