"""Regenerate the numerical tables and the figure data as rows of plain values."""
from fractions import Fraction

import numpy as np

from .contraction import derivative_bounds, psi_partials, side_conditions
from .envelope import CONTRACTION_BOXES, f_map, iterate_phi, contraction_box, two_round_pipeline
from .recursion import iterate_psi
from .seqspace import RatioSeq

PHI_START = (0.0, 1.0, 0.9)
PHI_STEPS = 10 ** 4
PSI_STEPS = 10 ** 6

HEADERS = {
    1: ["d", "a", "b", "c"],
    2: ["d", "a", "b", "c", "certified_a", "certified_b", "certified_c", "dominated"],
    3: ["d", "x1", "x2", "x3", "x4", "-dpsi1/dx1", "dpsi1/dx2", "dpsi2/dx1", "dpsi2/dx2"],
    4: ["d", "dpsi1/dx1", "dpsi1/dx2", "dpsin/dxn-1", "dpsin/dxn", "dpsin/dxn+1", "opnorm",
        "side_conditions_hold"],
    5: ["d", "a", "b", "c"],
    6: ["d", "b_prime", "a", "b", "c"],
    7: ["d", "a", "b", "c"],
    8: ["d", "a", "b", "c"],
}


def phi_fixed_points():
    return [[d, *iterate_phi(PHI_START, d, PHI_STEPS)] for d in range(2, 9)]


def psi_fixed_point(d, steps=PSI_STEPS, length=64):
    return iterate_psi(RatioSeq.zero(length), d, steps).final


def psi_fixed_point_rows(steps=PSI_STEPS):
    rows = []
    for d in range(2, 8):
        x = psi_fixed_point(d, steps).entries
        _, d11, d12 = psi_partials(x, 1, d)
        d21, d22, _ = psi_partials(x, 2, d)
        rows.append([d, *x[:4].tolist(), -d11, d12, d21, d22])
    return rows


def derivative_bound_rows(exact=True):
    rows = []
    for d in range(2, 8):
        t = contraction_box(d)
        db = derivative_bounds(t, d, strict=False)
        vals = [*db.as_tuple(), db.opnorm]
        if not exact:
            vals = [float(v) for v in vals]
        rows.append([d, *vals, all(ok for _, ok, *_ in side_conditions(t, d))])
    return rows


def _pipelines(guesses):
    return {d: two_round_pipeline(d, guesses=guesses) for d in range(2, 8)}


def certified_boxes(guesses="handpicked"):
    rows = []
    for d, res in _pipelines(guesses).items():
        t = CONTRACTION_BOXES[d]
        box = res.final_box
        dominated = box.a >= Fraction(t[0]) and box.b <= Fraction(t[1]) and box.c <= Fraction(t[2])
        rows.append([d, *(Fraction(v) for v in t), box.a, box.b, box.c, dominated])
    return rows


def round1_boxes(guesses="handpicked"):
    return [[d, *res.boxes["round1"].astuple()] for d, res in _pipelines(guesses).items()]


def round2_boxes(guesses="handpicked"):
    rows = []
    for d in (2, 7):
        res = two_round_pipeline(d, rounds=2, guesses=guesses)
        rows.append([d, res.report.meta["b_prime_upper"], *res.boxes["round2"].astuple()])
    return rows


def odd_step_boxes(guesses="handpicked"):
    return [[d, *res.odd_step.astuple()] for d, res in _pipelines(guesses).items()]


def final_boxes(guesses="handpicked"):
    return [[d, *res.final_box.astuple()] for d, res in _pipelines(guesses).items()]


def reproduce_table(which, guesses="handpicked"):
    """(header, rows) for result table ``which`` in 1..8."""
    fn = {1: phi_fixed_points, 2: certified_boxes, 3: psi_fixed_point_rows,
          4: derivative_bound_rows, 5: round1_boxes, 6: round2_boxes, 7: odd_step_boxes,
          8: final_boxes}[which]
    rows = fn(guesses) if which in (2, 5, 6, 7, 8) else fn()
    return HEADERS[which], rows


def ff_map(x, d):
    return f_map(1.0, f_map(1.0, x, d), d)


def figure1_data(d_list=(2, 7, 8), points=1000):
    """Rows (d, x, f(1, x), f(f(x))) on an even grid of [0, 1]."""
    xs = np.linspace(0.0, 1.0, points)
    rows = []
    for d in d_list:
        fx = f_map(1.0, xs, d)
        ffx = f_map(1.0, fx, d)
        rows.extend([d, float(x), float(a), float(b)] for x, a, b in zip(xs, fx, ffx))
    return ["d", "x", "f", "ff"], rows


def sign_changes(d, points=1000):
    """Sign changes of f(f(x)) - x on the interior grid points of (0, 1)."""
    xs = np.linspace(0.0, 1.0, points + 2)[1:-1]
    s = np.sign(ff_map(xs, d) - xs)
    s = s[s != 0]
    return int((s[1:] != s[:-1]).sum())


def ff_slope_max(d, points=1000):
    """Largest |(f o f)'| on the grid, by the chain rule."""
    xs = np.linspace(0.0, 1.0, points)

    def fprime(x):
        return -d * (1 + x) ** (d - 1) / (1 + 2 * x) ** (d + 1)

    return float(np.max(np.abs(fprime(f_map(1.0, xs, d)) * fprime(xs))))
