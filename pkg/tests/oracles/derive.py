"""Independent reference values, frozen into tests/frozen_values.py.

Nothing here imports liptree. Each quantity is computed by the most direct
route available: brute-force labelings, the weight recursion on full
distributions, mpmath at 30 digits, plain Fraction loops.

Run: python3 tests/oracles/derive.py > tests/frozen_values.py
"""
import itertools
import pprint
from fractions import Fraction

import mpmath

mpmath.mp.dps = 30


# --- brute-force Lipschitz labelings on the d-ary tree ----------------------

def tree_children(n, d):
    """Children lists of the depth-n d-ary tree in BFS order; leaves are the last d^n ids."""
    children, frontier, nxt = {0: []}, [0], 1
    for _ in range(n):
        new = []
        for v in frontier:
            for _ in range(d):
                children[v].append(nxt)
                children[nxt] = []
                new.append(nxt)
                nxt += 1
        frontier = new
    return children, frontier


def brute_force(n, d, boundary):
    children, leaves = tree_children(n, d)
    leaf_set = set(leaves)
    span = n + max(abs(b) for b in boundary) + 1
    counts = {}

    def ways(v, h):
        # number of labelings of the subtree below v given its height h
        if v in leaf_set:
            return 1 if h in boundary else 0
        total = 1
        for c in children[v]:
            total *= sum(ways(c, h + s) for s in (-1, 0, 1))
        return total

    for h in range(-span, span + 1):
        w = ways(0, h)
        if w:
            counts[h] = w
    total = sum(counts.values())
    return total, {h: Fraction(w, total) for h, w in counts.items()}


def literal_count(n, d, boundary):
    children, leaves = tree_children(n, d)
    verts = sorted(children)
    edges = [(v, c) for v in verts for c in children[v]]
    internal = [v for v in verts if v not in leaves]
    span = n + max(abs(b) for b in boundary)
    total, root = 0, {}
    for leaf_vals in itertools.product(sorted(boundary), repeat=len(leaves)):
        for int_vals in itertools.product(range(-span, span + 1), repeat=len(internal)):
            h = dict(zip(leaves, leaf_vals))
            h.update(zip(internal, int_vals))
            if all(abs(h[u] - h[v]) <= 1 for u, v in edges):
                total += 1
                root[h[0]] = root.get(h[0], 0) + 1
    return total, root


# --- the phi envelope map ----------------------------------------------------

def phi_fixed(d, steps=10 ** 4):
    a, b, c = mpmath.mpf(0), mpmath.mpf(1), mpmath.mpf("0.9")
    for _ in range(steps):
        a, b, c = (((1 + b) / (1 + 2 * b)) ** d,
                   ((1 + (1 + c) * a) / (1 + 2 * a)) ** d,
                   b ** d * ((1 + c + c * c) / (1 + b + b * c)) ** d)
    return a, b, c


# --- psi through the weight recursion ----------------------------------------

def psi_via_weights(x, d):
    """Apply the weight recursion to the symmetric sequence with ratios x, return new ratios."""
    L = len(x)
    z = [mpmath.mpf(1)]
    for v in x:
        z.append(z[-1] * v)
    full = z[:0:-1] + z + [mpmath.mpf(0)]
    # full[k] is the weight at height k - L; a zero pad on the right only
    new = []
    for i in range(L + 1):
        k = i + L
        left = full[k - 1]
        right = full[k + 1]
        new.append((left + full[k] + right) ** d)
    return [new[i] / new[i - 1] if new[i - 1] != 0 else mpmath.mpf(0) for i in range(1, L + 1)]


def psi_fixed(d, L=64, tol=mpmath.mpf("1e-26"), cap=20000):
    x = [mpmath.mpf(0)] * L
    for _ in range(cap):
        y = psi_via_weights(x, d)
        diff = max(abs(u - v) for u, v in zip(x, y))
        x = y
        if diff < tol:
            break
    return x


def psi_partial(x, d, n, j):
    """d psi_n / d x_j at x by mpmath numerical differentiation (1-based indices)."""
    def comp(t):
        y = list(x)
        y[j - 1] += t
        return psi_via_weights(y, d)[n - 1]
    return mpmath.diff(comp, 0)


# --- grid maxima of the partials on envelope boxes ---------------------------

TABLE2 = {2: (".5", ".7", ".27"), 3: (".4", ".6", ".2"), 4: (".3", ".5", ".1"),
          5: (".3", ".4", ".1"), 6: (".27", ".32", ".1"), 7: (".26", ".27", ".01")}


def psi_float(x, d):
    z = [1.0]
    for v in x:
        z.append(z[-1] * v)
    z = z[:0:-1] + z + [0.0]
    L = len(x)
    new = [(z[i + L - 1] + z[i + L] + z[i + L + 1]) ** d for i in range(L + 1)]
    return [new[i] / new[i - 1] if new[i - 1] else 0.0 for i in range(1, L + 1)]


def fd(x, d, n, j, h=1e-7):
    up, dn = list(x), list(x)
    up[j - 1] += h
    dn[j - 1] -= h
    return (psi_float(up, d)[n - 1] - psi_float(dn, d)[n - 1]) / (2 * h)


def grid(lo, hi, k):
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def box_partial_maxima(d, k=13):
    a, b, c = (float(v) for v in TABLE2[d])
    # keep the difference stencil inside the box
    eps = 1e-6
    g1, gc = grid(a + eps, b - eps, k), grid(eps, c - eps, k)
    p11 = p12 = 0.0
    for x1, x2 in itertools.product(g1, gc):
        x = [x1, x2, 0.0, 0.0, 0.0]
        p11 = max(p11, abs(fd(x, d, 1, 1)))
        p12 = max(p12, abs(fd(x, d, 1, 2)))
    pm = pn = pp = 0.0
    for x1, x2, x3 in itertools.product(g1, gc, gc):
        x = [x1, x2, x3, 0.0, 0.0]
        pm, pn, pp = max(pm, abs(fd(x, d, 2, 1))), max(pn, abs(fd(x, d, 2, 2))), max(pp, abs(fd(x, d, 2, 3)))
    for x2, x3, x4 in itertools.product(gc, gc, gc):
        x = [a, x2, x3, x4, 0.0]
        pm, pn, pp = max(pm, abs(fd(x, d, 3, 2))), max(pn, abs(fd(x, d, 3, 3))), max(pp, abs(fd(x, d, 3, 4)))
    return {"p11": p11, "p12": p12, "pn_prev": pm, "pn_self": pn, "pn_next": pp}


# --- partition products --------------------------------------------------------

PARTITION_POINTS = {
    2: "0 1",
    3: "0 .15 .65 1",
    4: "0 .08 .2 .41 1",
    5: "0 .05 .1 .16 .23 .33 .5 1",
    6: "0 .04 .08 .11 .13 .16 .19 .23 .27 .5 .9 1",
    7: "0 .03 .07 .1 .12 .14 .15 .16 .17 .18 .19 .2 .21 .22 .225 .23 .238 .245 .253 .262 "
       ".272 .28 .29 .3 .31 .325 .34 .365 .4 .45 .55 .85 1",
}
C_D = {2: ".47", 3: ".18", 4: ".08", 5: ".04", 6: ".02", 7: ".009"}


def worst_cells(d):
    cd = Fraction(C_D[d])
    pts = [Fraction(p) for p in PARTITION_POINTS[d].split()]

    def xi(x):
        return d * (1 + (1 + cd) * x) ** (d - 1) / (1 + 2 * x) ** (d + 1)

    def f1(x):
        return ((1 + x) / (1 + 2 * x)) ** d

    prods = [xi(f1(hi)) * xi(lo) for lo, hi in zip(pts, pts[1:])]
    failing = [(str(lo), str(hi)) for (lo, hi), p in zip(zip(pts, pts[1:]), prods) if p >= 1]
    return {"cells": len(prods), "max_product": float(max(prods)), "failing": failing}


# --- root marginals by the plain recursion -------------------------------------

def marginals(d, n_max):
    """Root law of the depth-n tree with zero leaves, as dict height -> prob, n = 0..n_max."""
    out = [{0: 1.0}]
    z = {0: 1.0}
    for _ in range(n_max):
        keys = range(min(z) - 1, max(z) + 2)
        w = {k: (z.get(k - 1, 0.0) + z.get(k, 0.0) + z.get(k + 1, 0.0)) ** d for k in keys}
        # the exact law is symmetric; float rounding alone would seed the unstable
        # antisymmetric mode, so symmetrize every step
        w = {k: (w[k] + w[-k]) / 2 for k in w}
        s = sum(w.values())
        z = {k: v / s for k, v in w.items()}
        out.append(z)
    return out


def tv(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def tv_summary():
    m8 = marginals(8, 102)
    m7 = marginals(7, 602)
    return {
        "d8_min_tv1_upto100": min(tv(m8[n], m8[n + 1]) for n in range(0, 101)),
        "d8_max_tv2_50_100": max(tv(m8[n], m8[n + 2]) for n in range(50, 101)),
        "d8_tv2_at_50": tv(m8[50], m8[52]),
        "d7_tv1_at_200": tv(m7[200], m7[201]),
        "d7_tv2_at_200": tv(m7[200], m7[202]),
        "d7_first_n_both_below_1e-6": next(n for n in range(600) if tv(m7[n], m7[n + 1]) < 1e-6
                                           and tv(m7[n], m7[n + 2]) < 1e-6),
    }


def exact_marginal(d, n):
    z = {0: Fraction(1)}
    for _ in range(n):
        keys = range(min(z) - 1, max(z) + 2)
        w = {k: (z.get(k - 1, 0) + z.get(k, 0) + z.get(k + 1, 0)) ** d for k in keys}
        s = sum(w.values())
        z = {k: v / s for k, v in w.items()}
    return z


# --- the oscillation constant -------------------------------------------------

def gamma(d):
    t = mpmath.mpf("0.78") ** d
    return ((1 + t) / (1 + 2 * t)) ** d


# --- the 3-vertex absolute-value example ----------------------------------------

def abs_example():
    # middle vertex of a path; neighbours fixed or restricted by absolute value
    def law(left_vals, right_vals):
        hits = total = 0
        for l in left_vals:
            for r in right_vals:
                for m in range(-3, 4):
                    if abs(m - l) <= 1 and abs(m - r) <= 1:
                        total += 1
                        hits += abs(m) == 1
        return Fraction(hits, total)
    return {"zero": law([0], [0]), "abs_one": law([-1, 1], [0])}


def main():
    cases = [(1, 2, (0,)), (2, 2, (0,)), (3, 2, (0,)), (2, 3, (0,)), (2, 2, (0, 1))]
    enum = {}
    for n, d, bd in cases:
        total, root = brute_force(n, d, set(bd))
        if n <= 2:
            lt, lroot = literal_count(n, d, set(bd))
            assert lt == total and {h: Fraction(c, lt) for h, c in lroot.items()} == root
        enum[(n, d, bd)] = (total, {h: str(p) for h, p in sorted(root.items())})

    phi = {d: tuple(mpmath.nstr(v, 12) for v in phi_fixed(d)) for d in range(2, 9)}

    psi = {}
    for d in range(2, 8):
        x = psi_fixed(d)
        psi[d] = {
            "x": tuple(mpmath.nstr(v, 12) for v in x[:4]),
            "d11": mpmath.nstr(psi_partial(x, d, 1, 1), 12),
            "d12": mpmath.nstr(psi_partial(x, d, 1, 2), 12),
            "d21": mpmath.nstr(psi_partial(x, d, 2, 1), 12),
            "d22": mpmath.nstr(psi_partial(x, d, 2, 2), 12),
        }

    values = {
        "ENUMERATION": enum,
        "PHI_FIXED": phi,
        "PSI_FIXED": psi,
        "BOX_PARTIAL_MAXIMA": {d: box_partial_maxima(d) for d in range(2, 8)},
        "PARTITION_PRODUCTS": {d: worst_cells(d) for d in range(2, 8)},
        "TV_GAPS": tv_summary(),
        "F6_D2": {h: str(p) for h, p in sorted(exact_marginal(2, 6).items())},
        "GAMMA": {d: mpmath.nstr(gamma(d), 12) for d in (8, 9)},
        "ABS_EXAMPLE": {k: str(v) for k, v in abs_example().items()},
    }
    print('"""Frozen outputs of tests/oracles/derive.py. Regenerate with that script."""')
    for name, val in values.items():
        print(f"{name} = " + pprint.pformat(val, width=100, sort_dicts=True))
        print()


if __name__ == "__main__":
    main()
