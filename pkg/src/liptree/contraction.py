"""Derivative bounds for psi on envelope boxes, and the resulting certificates.

The Jacobian of psi is tridiagonal, so three partials per row describe it.
``derivative_bounds`` turns a box (a, b, c) into uniform bounds on those
partials, ``opnorm_bound`` assembles them into an operator-norm bound in the
modified norm, and ``contraction_certificate`` checks that bound is below .99.
``partition_certificate`` separately shows the two-step scalar maps i and j
are contractions, which makes their fixed points unique.
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .envelope import C_D, CONTRACTION_BOXES, EnvelopeTriple, auto_bracket, f_map, contraction_box
from .report import CertificateReport, fmt_number
from .seqspace import as_exact, norm_modified

OPNORM_TARGET = Fraction(99, 100)


class SideConditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# closed-form partials
# ---------------------------------------------------------------------------

def _coord(e, n):
    """1-based coordinate with zero padding."""
    return e[n - 1] if 1 <= n <= len(e) else 0 * (e[0] if len(e) else 0)


def psi_partials(x, n, d):
    """(dpsi_n/dx_{n-1}, dpsi_n/dx_n, dpsi_n/dx_{n+1}); the first is 0 for n = 1."""
    e = x.entries if hasattr(x, "entries") else x
    if n == 1:
        x1, x2 = _coord(e, 1), _coord(e, 2)
        num = 1 + x1 + x1 * x2
        den = 1 + 2 * x1
        d11 = -d * (1 - x2) * num ** (d - 1) / den ** (d + 1)
        d12 = d * x1 * num ** (d - 1) / den ** d
        return 0 * d11, d11, d12
    u, v, w = _coord(e, n - 1), _coord(e, n), _coord(e, n + 1)
    p = 1 + v + v * w
    q = 1 + u + u * v
    dprev = d * u ** (d - 1) * p ** d / q ** (d + 1)
    dcur = d * u ** d * p ** (d - 1) * (1 + w + u * w) / q ** (d + 1)
    dnext = d * u ** d * v * p ** (d - 1) / q ** d
    return dprev, dcur, dnext


def jacobian_apply(x, y, d):
    """D psi_x applied to y, using only the tridiagonal entries."""
    e = np.asarray(x.entries if hasattr(x, "entries") else x, dtype=float)
    y = np.asarray(y, dtype=float)
    L = e.shape[0]
    out = np.zeros(L)
    yp = np.concatenate([[0.0], y, [0.0]])
    for n in range(1, L + 1):
        a, b, c = psi_partials(e, n, d)
        out[n - 1] = a * yp[n - 1] + b * yp[n] + c * yp[n + 1]
    return out


# ---------------------------------------------------------------------------
# uniform bounds on a box
# ---------------------------------------------------------------------------

@dataclass
class DerivativeBounds:
    dpsi1_dx1: object
    dpsi1_dx2: object
    dpsin_dxnm1: object
    dpsin_dxn: object
    dpsin_dxnp1: object
    opnorm: object = None
    # rows n >= 3, where x_{n-1} <= c instead of <= b
    tail_row: object = None
    notes: list = field(default_factory=list)

    def as_tuple(self):
        return (self.dpsi1_dx1, self.dpsi1_dx2, self.dpsin_dxnm1, self.dpsin_dxn, self.dpsin_dxnp1)

    def to_dict(self):
        keys = ("dpsi1_dx1", "dpsi1_dx2", "dpsin_dxnm1", "dpsin_dxn", "dpsin_dxnp1", "opnorm",
                "tail_row")
        out = {k: fmt_number(getattr(self, k)) for k in keys}
        out["notes"] = list(self.notes)
        return out


def side_conditions(t: EnvelopeTriple, d):
    """The box conditions under which the closed-form bounds are suprema.

    Returns a list of (name, holds, lhs, relation, rhs).
    """
    a, b, c = (as_exact(v) for v in t.astuple())
    out = [("c < 1/2", c < Fraction(1, 2), c, "<", Fraction(1, 2))]
    if d <= 5:
        lhs, rhs = (d - 2) * a, Fraction(1)
        out.append(("(d-2)a <= 1", lhs <= rhs, lhs, "<=", rhs))
    else:
        lhs, rhs = (d - 2) * a, 1 + d * a * c
        out.append(("(d-2)a >= 1 + dac", lhs >= rhs, lhs, ">=", rhs))
    if d <= 4:
        lhs = b * ((1 - c) * d - 2)
        out.append(("b((1-c)d - 2) <= 1", lhs <= 1, lhs, "<=", Fraction(1)))
    if d >= 3:
        lhs = 1 + 2 * b * (1 + c)
        out.append(("1 + 2b(1+c) <= d", lhs <= d, lhs, "<=", Fraction(d)))
    return out


def _first_col_bound(a, c, d, at):
    # d (1 - x2) (1 + a + a x2)^(d-1) / (1 + 2a)^(d+1) at x2 = at
    return d * (1 - at) * (1 + a + a * at) ** (d - 1) / (1 + 2 * a) ** (d + 1)


def _prev_bound_global(c, d):
    # sup over u of d u^(d-1) P^d / (1 + u(1+x_n))^(d+1), any d
    return (4 * d * Fraction(d - 1) ** (d - 1) * (1 + c + c * c) ** d
            / (Fraction(d + 1) ** (d + 1) * (1 + c) ** (d - 1)))


def _prev_bound_mono(u, c, d):
    # same quantity when it is increasing in u on [0, u]
    return d * u ** (d - 1) * (1 + c + c * c) ** d / ((1 + u) * (1 + u + u * c) ** d)


def _next_bound(u, c, d):
    return d * u ** d * c * (1 + c + c * c) ** (d - 1) / (1 + u + u * c) ** d


def _next_bound_crude(u, c, d):
    return d * u ** d * c * (1 + c + c * c) ** (d - 1) / (1 + u) ** d


def _row_bounds(u, c, d, notes, tag):
    """Bounds on (dpsi_n/dx_{n-1}, dpsi_n/dx_n, dpsi_n/dx_{n+1}) when x_{n-1} <= u."""
    if d == 2:
        prev = _prev_bound_global(c, d)
    elif 1 + 2 * u * (1 + c) <= d:
        prev = _prev_bound_mono(u, c, d)
    else:
        prev = _prev_bound_global(c, d)
        notes.append(f"{tag}: monotone range condition fails, used global maximum")
    cur = prev * u * (1 + c + u * c)
    if c * d < 2:
        nxt = _next_bound(u, c, d)
    else:
        nxt = _next_bound_crude(u, c, d)
        notes.append(f"{tag}: cd >= 2, used crude bound on dpsi_n/dx_(n+1)")
    return prev, cur, nxt


def derivative_bounds(t: EnvelopeTriple, d, strict=True) -> DerivativeBounds:
    """Uniform bounds on |partials of psi| over the box t.

    With ``strict`` a violated side condition raises SideConditionError.
    Otherwise each affected bound is replaced by the exact supremum of the
    same one-variable majorant, and a note records the substitution.
    """
    if not 2 <= d <= 7:
        raise ValueError("bounds are defined for 2 <= d <= 7")
    conds = side_conditions(t, d)
    failed = [name for name, ok, *_ in conds if not ok]
    if failed and strict:
        raise SideConditionError(f"d={d}: side conditions fail: {', '.join(failed)}")
    a, b, c = (as_exact(v) for v in t.astuple())
    notes = [f"side condition fails: {name}" for name in failed]
    if c >= Fraction(1, 2):
        raise SideConditionError("c must be below 1/2")

    # |dpsi_1/dx_1|: decreasing in x1, unimodal in x2 with peak at x_star
    x_star = ((d - 2) * a - 1) / (d * a) if a > 0 else Fraction(-1)
    peak = min(max(x_star, Fraction(0)), c)
    if d <= 5 and x_star <= 0:
        p11 = _first_col_bound(a, c, d, Fraction(0))
    elif d >= 6 and x_star >= c:
        p11 = _first_col_bound(a, c, d, c)
    else:
        p11 = _first_col_bound(a, c, d, peak)
        notes.append(f"dpsi1/dx1: interior maximum at x2 = {float(peak):.6g}")

    # |dpsi_1/dx_2|: increasing in x2; in x1 peaks at 1 / ((1-c)d - 2)
    slope = (1 - c) * d - 2
    h_b = d * b * (1 + b + b * c) ** (d - 1) / (1 + 2 * b) ** d
    h_max = Fraction(d - 1) ** (d - 1) / (Fraction(d) ** (d - 1) * (1 - c)) if slope > 0 else None
    if d <= 4:
        if slope <= 0 or b * slope <= 1:
            p12 = h_b
        else:
            p12 = h_max
            notes.append("dpsi1/dx2: used global maximum")
    else:
        p12 = h_max if h_max is not None else h_b

    pn1, pnn, pnp = _row_bounds(b, c, d, notes, "row 2")
    tail = sum(_row_bounds(c, c, d, notes, "rows >= 3"))
    db = DerivativeBounds(p11, p12, pn1, pnn, pnp, tail_row=tail, notes=notes)
    db.opnorm = opnorm_bound(db, d)
    return db


def opnorm_bound(db: DerivativeBounds, d):
    """Operator norm of D psi in the modified norm, from the uniform bounds.

    d = 2 (sup norm): largest absolute row sum.  3 <= d <= 7: the first column
    is charged to |x_1| and the remaining block to the sup of x_2, x_3, ...
    """
    p11, p12, pn1, pnn, pnp = db.as_tuple()
    if d == 2:
        return max(p11 + p12, pn1 + pnn + pnp, db.tail_row or 0)
    tail = db.tail_row if db.tail_row is not None else pn1 + pnn + pnp
    return max(p11 + pn1, p12 + max(pnn + pnp, tail))


# ---------------------------------------------------------------------------
# random members of a box
# ---------------------------------------------------------------------------

def random_member(t: EnvelopeTriple, rng, length=24):
    """x1 ~ U[a, b]; x_n = c * U * r^(n-2) with a random decay r, sometimes flat."""
    a, b, c = (float(v) for v in t.astuple())
    x = np.empty(length)
    x[0] = rng.uniform(a, b)
    r = 1.0 if rng.random() < 0.25 else rng.random()
    n = np.arange(length - 1)
    x[1:] = c * rng.random(length - 1) * r ** n
    if rng.random() < 0.25:
        x[1] = c
    return x


def random_unit(rng, length, d):
    y = rng.standard_normal(length)
    if rng.random() < 0.3:
        y = np.sign(y)
        if 3 <= d <= 7 and rng.random() < 0.5:
            y[0] = 0.0
    return y / norm_modified(y, d)


def contraction_certificate(d, triple=None, samples=200, directions=5, seed=0,
                            strict=True) -> CertificateReport:
    """Box -> side conditions -> bounds -> operator norm < .99, plus a random cross-check."""
    t = triple if triple is not None else contraction_box(d)
    t = EnvelopeTriple.exact(*t.astuple())
    rep = CertificateReport(f"contraction d={d}")
    conds = side_conditions(t, d)
    for name, ok, lhs, rel, rhs in conds:
        rep.check(f"side condition {name}", lhs, rel, rhs)
    try:
        db = derivative_bounds(t, d, strict=True)
    except SideConditionError as exc:
        rep.meta["strict_error"] = str(exc)
        try:
            db = derivative_bounds(t, d, strict=False)
        except SideConditionError as exc2:
            rep.flag("derivative bounds defined on the box", False, note=str(exc2))
            return rep
        rep.meta["repaired_bounds"] = db.to_dict()
        if strict:
            rep.flag("strict derivative bounds", False, note=str(exc))
    rep.meta["bounds"] = db.to_dict()
    rep.check("operator norm bound", db.opnorm, "<", OPNORM_TARGET)

    rng = np.random.default_rng(seed)
    bounds = [float(v) for v in db.as_tuple()]
    op = float(db.opnorm)
    worst_partial, worst_norm = 0.0, 0.0
    violations = 0
    for _ in range(samples):
        x = random_member(t.to_float(), rng)
        _, d11, d12 = psi_partials(x, 1, d)
        pa, pb, pc = psi_partials(x, 2, d)
        ratios = [abs(d11) / bounds[0], abs(d12) / bounds[1], abs(pa) / bounds[2],
                  abs(pb) / bounds[3], abs(pc) / bounds[4]]
        worst_partial = max(worst_partial, max(ratios))
        violations += sum(r > 1 + 1e-12 for r in ratios)
        for _ in range(directions):
            y = random_unit(rng, x.shape[0], d)
            worst_norm = max(worst_norm, float(norm_modified(jacobian_apply(x, y, d), d)))
    rep.check("sampled partials within bounds (violations)", violations, "==", 0)
    rep.check("sampled ||D psi y|| over unit y", worst_norm, "<=", op + 1e-12)
    rep.meta["worst_partial_ratio"] = worst_partial
    return rep


# ---------------------------------------------------------------------------
# partitions for the two-step scalar maps
# ---------------------------------------------------------------------------

def _cells_from_points(points):
    return [(points[k], points[k + 1]) for k in range(len(points) - 1)]


_D7_POINTS = ["0", ".03", ".07", ".1", ".12", ".14", ".15", ".16", ".17", ".18", ".19", ".2",
              ".21", ".22", ".225", ".23", ".238", ".245", ".253", ".262", ".272", ".28", ".29",
              ".3", ".31", ".325", ".34", ".365", ".4", ".45", ".55", ".85", "1"]

PARTITIONS = {
    2: ["0", "1"],
    3: ["0", ".15", ".65", "1"],
    4: ["0", ".08", ".2", ".41", "1"],
    5: ["0", ".05", ".1", ".16", ".23", ".33", ".5", "1"],
    6: ["0", ".04", ".08", ".11", ".13", ".16", ".19", ".23", ".27", ".5", ".9", "1"],
    7: _D7_POINTS,
}


@dataclass
class PartitionSpec:
    d: int
    c_d: Fraction
    cells: list

    @classmethod
    def builtin(cls, d):
        pts = [Fraction(p) for p in PARTITIONS[d]]
        return cls(d, Fraction(C_D[d]), _cells_from_points(pts))

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        cells = [(Fraction(lo), Fraction(hi)) for lo, hi in data["cells"]]
        return cls(int(data["d"]), Fraction(data["c_d"]), cells)

    def to_json(self):
        return json.dumps({"d": self.d, "c_d": fmt_number(self.c_d),
                           "cells": [[fmt_number(lo), fmt_number(hi)] for lo, hi in self.cells]})

    def tiles_unit_interval(self):
        cells = self.cells
        if not cells or cells[0][0] != 0 or cells[-1][1] != 1:
            return False
        if any(lo >= hi for lo, hi in cells):
            return False
        return all(cells[k][1] == cells[k + 1][0] for k in range(len(cells) - 1))


def xi(x, c_d, d):
    return d * (1 + (1 + c_d) * x) ** (d - 1) / (1 + 2 * x) ** (d + 1)


def cell_product(lo, hi, c_d, d):
    """Upper bound on max(i', j') over [lo, hi] for every c <= c_d."""
    return xi(f_map(1, hi, d), c_d, d) * xi(lo, c_d, d)


def _refine(lo, hi, c_d, d, depth, out):
    if cell_product(lo, hi, c_d, d) < 1:
        out.append((lo, hi))
        return True
    if depth == 0:
        out.append((lo, hi))
        return False
    mid = (lo + hi) / 2
    ok1 = _refine(lo, mid, c_d, d, depth - 1, out)
    ok2 = _refine(mid, hi, c_d, d, depth - 1, out)
    return ok1 and ok2


def partition_certificate(spec: PartitionSpec, adaptive=False, max_depth=12,
                          check_cg=True) -> CertificateReport:
    """Exact check of xi(f(1, hi)) * xi(lo) < 1 on every cell.

    With ``adaptive`` a failing cell is bisected until its pieces pass (or
    ``max_depth`` is reached); the refined partition is reported in ``meta``.
    """
    d, c_d = spec.d, spec.c_d
    rep = CertificateReport(f"partition d={d}")
    rep.flag("cells tile [0, 1]", spec.tiles_unit_interval())
    refined = []
    for lo, hi in spec.cells:
        prod = cell_product(lo, hi, c_d, d)
        name = f"cell [{fmt_number(lo)}, {fmt_number(hi)}]"
        if prod < 1 or not adaptive:
            rep.check(name, prod, "<", Fraction(1))
            refined.append((lo, hi))
            continue
        pieces = []
        ok = _refine(lo, hi, c_d, d, max_depth, pieces)
        worst = max(cell_product(p, q, c_d, d) for p, q in pieces)
        rep.check(name + f" refined into {len(pieces)}", worst, "<", Fraction(1))
        refined.extend(pieces)
        if not ok:
            break
    if adaptive:
        rep.meta["refined_cells"] = [[fmt_number(p), fmt_number(q)] for p, q in refined]
    rep.meta["cells"] = len(spec.cells)
    rep.meta["worst_product"] = float(max(cell_product(lo, hi, c_d, d) for lo, hi in spec.cells))
    if check_cg and d in CONTRACTION_BOXES:
        cg = auto_bracket("g", 1, d, cap=c_d)
        rep.check("c_d exceeds the certified upper bracket of c_g", c_d, ">", cg.hi)
    return rep
