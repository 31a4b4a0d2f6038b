"""Root-marginal recursion on d-ary trees and its ratio-coordinate form.

``apply_F`` pushes the root law of a depth-n tree to depth n+1.  In ratio
coordinates the same step is ``apply_psi``, which is what the convergence and
oscillation results are phrased in.
"""
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .report import CertificateReport
from .seqspace import DEFAULT_LENGTH, ProbDist, RatioSeq, norm_modified

UNDERFLOW = _kernels.UNDERFLOW


class AbsorptionError(ValueError):
    pass


def lattice_F(probs, d, M=1):
    """One root-marginal step on a full (not necessarily symmetric) array.

    ``probs`` is indexed by an offset window; the result is indexed by the same
    window widened by ``M`` on each side.  Works on float or Fraction arrays.
    """
    p = np.asarray(probs)
    exact = p.dtype == object
    zero = Fraction(0) if exact else 0.0
    pad = np.array([zero] * (2 * M), dtype=p.dtype)
    padded = np.concatenate([pad, p, pad])
    n = p.shape[0] + 2 * M
    s = padded[0:n].copy()
    for k in range(1, 2 * M + 1):
        s = s + padded[k:k + n]
    if exact:
        a = s ** d
        return a / a.sum()
    s = s / s.max()
    with np.errstate(under="ignore"):
        a = s ** d
    if not np.isfinite(a).all():
        raise FloatingPointError("overflow in root-marginal step")
    return a / a.sum()


def apply_F(z: ProbDist, d: int, max_radius=None) -> ProbDist:
    """Root law one level up: normalized ``(z_{i-1} + z_i + z_{i+1})^d``.

    Works on the stored half (z_0, z_1, ...), which keeps the float iterates
    exactly symmetric.  ``max_radius`` caps the stored support; mass beyond it
    is dropped (float mode only, where it is below double resolution anyway).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    h = z.values
    zero = Fraction(0) if z.exact else 0.0
    hp = np.concatenate([h[1:2] if h.shape[0] > 1 else np.array([zero], dtype=h.dtype),
                         h, np.array([zero, zero], dtype=h.dtype)])
    s = hp[:-2] + hp[1:-1] + hp[2:]
    if z.exact:
        a = s ** d
        return ProbDist(a / (a[0] + 2 * a[1:].sum()), True)
    s = s / s.max()
    with np.errstate(under="ignore"):
        a = s ** d
    a[a < UNDERFLOW] = 0.0
    if max_radius is not None:
        a = a[: max_radius + 1]
    end = np.nonzero(a)[0][-1] + 1
    a = a[:end]
    return ProbDist(a / (a[0] + 2 * a[1:].sum()), False)


def iterate_F(z: ProbDist, d: int, steps: int, max_radius=DEFAULT_LENGTH):
    """Yield ``F^{(1)}(z), ..., F^{(steps)}(z)``."""
    for _ in range(steps):
        z = apply_F(z, d, None if z.exact else max_radius)
        yield z


def apply_psi(x: RatioSeq, d: int) -> RatioSeq:
    """Ratio-coordinate step.

    psi_1 = ((1 + x1 + x1 x2) / (1 + 2 x1))^d and, for n >= 2,
    psi_n = x_{n-1}^d ((1 + x_n + x_n x_{n+1}) / (1 + x_{n-1} + x_{n-1} x_n))^d.
    The output keeps length L; ``truncated`` is set when coordinate L+1 would
    have been nonzero.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if not x.exact:
        out = np.empty(x.L)
        trunc = _kernels._psi_step_py(np.asarray(x.entries, dtype=np.float64), out, float(d))
        return RatioSeq(out, False, trunc)
    e = x.entries
    zero = Fraction(0)
    xp = np.concatenate([e, np.array([zero, zero], dtype=object)])
    x1, x2 = xp[0], xp[1]
    out = [((1 + x1 + x1 * x2) / (1 + 2 * x1)) ** d]
    for n in range(1, x.L + 1):
        prev, cur, nxt = xp[n - 1], xp[n], xp[n + 1]
        if prev == 0:
            out.append(zero)
        else:
            out.append(prev ** d * ((1 + cur + cur * nxt) / (1 + prev + prev * cur)) ** d)
    return RatioSeq(out[: x.L], True, out[x.L] != 0)


@dataclass
class IterationTrace:
    """Summaries of a psi orbit.

    ``states[j]`` holds the first coordinates after step ``stride*(j+1)``;
    ``norm_deltas[k]`` is the modified norm of x^(k+1) - x^(k).
    """

    d: int
    states: np.ndarray
    norm_deltas: np.ndarray
    truncation_events: list
    converged_at: object
    final: RatioSeq
    stride: int = 1
    tail_warnings: int = 0
    full_states: list = field(default_factory=list)

    @property
    def steps(self):
        return len(self.norm_deltas)


def iterate_psi(x0: RatioSeq, d: int, steps: int, tol=1e-13, window=10, stride=1,
                ncoords=8, keep_full=False, use_numba=None) -> IterationTrace:
    """Iterate psi ``steps`` times from ``x0``.

    Float mode runs in the compiled kernel; an exact fixed point or 2-cycle of
    the float map is detected and fast-forwarded.  ``converged_at`` is the first
    step of the first run of ``window`` consecutive deltas below ``tol``.
    Exact mode runs step by step in rational arithmetic.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    bounded = bool((x0.entries <= 1).all())
    if x0.exact or keep_full:
        return _iterate_slow(x0, d, steps, tol, window, stride, ncoords, keep_full, bounded)
    kind = _kernels.norm_kind(d)
    final, summ, deltas, trunc, conv = _kernels.psi_iterate(
        x0.entries, d, steps, kind, ncoords, stride, tol, window, use_numba)
    if bounded and (final > 1.0).any():
        raise AssertionError("iterate left [0, 1] from a start inside it")
    trace = IterationTrace(d, summ, deltas, np.nonzero(trunc)[0].tolist(),
                           None if conv < 0 else int(conv), RatioSeq(final, False), stride)
    _tail_diagnostic(trace, summ)
    return trace


def _iterate_slow(x0, d, steps, tol, window, stride, ncoords, keep_full, bounded):
    x = x0
    rows, deltas, trunc, full = [], [], [], []
    streak, conv = 0, None
    for k in range(steps):
        y = apply_psi(x, d)
        if bounded and (y.entries > 1).any():
            raise AssertionError("iterate left [0, 1] from a start inside it")
        delta = norm_modified(y.entries - x.entries, d)
        deltas.append(delta)
        if y.truncated:
            trunc.append(k)
        if (k + 1) % stride == 0:
            rows.append(y.entries[:ncoords])
            if keep_full:
                full.append(y)
        if conv is None:
            streak = streak + 1 if delta < tol else 0
            if streak == window:
                conv = k - window + 1
        x = y
    states = np.array(rows, dtype=object if x0.exact else np.float64)
    dtype = object if x0.exact else np.float64
    trace = IterationTrace(d, states, np.array(deltas, dtype=dtype), trunc, conv, x, stride,
                           full_states=full)
    _tail_diagnostic(trace, states)
    return trace


def _tail_diagnostic(trace, states):
    if states.shape[0] == 0 or states.shape[1] < 3:
        return
    tail = states[:, 1:].astype(np.float64)
    bad = int((np.diff(tail, axis=1) > 0).any(axis=1).sum())
    trace.tail_warnings = bad
    if bad:
        warnings.warn(f"{bad} recorded iterates have a non-monotone tail", RuntimeWarning,
                      stacklevel=3)


def absorption_class(x: RatioSeq):
    """k such that x_i = 1 for i <= k and sup_{i>k} x_i < 1, or None."""
    e = x.entries
    k = 0
    while k < x.L and e[k] == 1:
        k += 1
    rest = e[k:]
    if rest.shape[0] and not (rest < 1).all():
        return None
    return k


def absorption_step(x: RatioSeq, d: int):
    """Apply psi to x in class k and verify it lands in class k-1 (k >= 2).

    With c the sup of x beyond the flat part, also checks
    psi_k(x) <= ((2 + c) / 3)^d and psi_i(x) <= ((1 + c + c^2) / (2 + c))^d for
    i > k.  The second bound alone fails at i = k, where x_{k-1} = x_k = 1.
    """
    k = absorption_class(x)
    if k is None:
        raise AbsorptionError("input is not in any absorption class")
    y = apply_psi(x, d)
    k2 = absorption_class(y)
    if k >= 2:
        rest = x.entries[k:]
        c = rest.max() if rest.shape[0] else (Fraction(0) if x.exact else 0.0)
        edge_bound = ((2 + c) / 3) ** d
        bound = ((1 + c + c * c) / (2 + c)) ** d
        if k2 != k - 1:
            raise AbsorptionError(f"class {k} mapped to {k2}, expected {k - 1}")
        if k - 1 < y.L and y.entries[k - 1] > edge_bound:
            raise AbsorptionError(f"coordinate {k} above ((2 + c) / 3)^d")
        tail = y.entries[k:]
        if tail.shape[0] and (tail > bound).any():
            raise AbsorptionError("tail bound violated")
    elif k2 is None:
        raise AbsorptionError("image left the absorption classes")
    return y, k2


# ---------------------------------------------------------------------------
# oscillation for d >= 8
# ---------------------------------------------------------------------------

_A = Fraction(2, 5)
_C = Fraction(1, 100)
_RATIO = Fraction(39, 50)


def _exp_upper(y, terms=30):
    """Rational upper bound on exp(y) for 0 <= y < 1."""
    s, t = Fraction(0), Fraction(1)
    for k in range(terms):
        s += t
        t = t * y / (k + 1)
    # remainder <= t / (1 - y / (terms + 1))
    return s + t / (1 - y / (terms + 1))


def gamma(d, exact=True):
    t = _RATIO ** d if exact else 0.78 ** d
    return ((1 + t) / (1 + 2 * t)) ** d


def nonconvergence_certificate(d: int, horizon=200, length=DEFAULT_LENGTH) -> CertificateReport:
    """Certify the period-two oscillation of psi from the zero sequence for d >= 8.

    With a = 2/5, c = 1/100 the box {x1 in [a, 1], x_n <= c} maps after two
    steps into itself while the intermediate first coordinate stays <= .78^d.
    """
    if d < 8:
        raise ValueError("the oscillation certificate needs d >= 8")
    rep = CertificateReport(f"nonconvergence d={d}")
    a, c = _A, _C
    t = _RATIO ** d
    c_next = ((1 + c + c * c) / (2 + c)) ** d
    rep.check("tail coordinate stays below c", c_next, "<", c)
    rep.check("first-coordinate ratio equals .78", (1 + (1 + c) * a) / (1 + 2 * a), "==", _RATIO)
    rep.check("odd first coordinate a' <= .14", t, "<=", Fraction(14, 100))
    g = gamma(d)
    rep.check("gamma(d) > a (direct)", g, ">", a)
    rep.meta.update({"gamma": float(g), "c_prime": float(c_next), "a_prime": float(t)})
    if d >= 10:
        # d * .78^d is decreasing for d >= 5, so the d = 10 value bounds the exponent
        y = 10 * _RATIO ** 10
        rep.check("d*.78^d <= 10*.78^10", d * t, "<=", y)
        rep.check("exp(10*.78^10) < 1/a", _exp_upper(y), "<", 1 / a)
    # the oscillation, read off the orbit of the zero sequence
    steps = 2 * horizon + 2
    trace = iterate_psi(RatioSeq.zero(length), d, steps, ncoords=2)
    first = trace.states[:, 0]
    high = first[0::2]   # psi^(1), psi^(3), ...
    low = first[1::2]    # psi^(2), psi^(4), ...
    rep.check("min over k of psi^(2k+1)(0)_1", float(high.min()), ">=", 0.4,
              note="orbit in float mode")
    rep.check("max over k of psi^(2k+2)(0)_1", float(low.max()), "<=", 0.14,
              note="orbit in float mode")
    rep.check("max tail coordinate on the orbit", float(trace.states[:, 1].max()), "<=", 0.01,
              note="orbit in float mode")
    rep.meta["converged_at"] = trace.converged_at
    return rep


def first_coordinate_orbit(d, steps, length=DEFAULT_LENGTH):
    """``psi^(k)(0)_1`` for k = 0..steps."""
    trace = iterate_psi(RatioSeq.zero(length), d, steps, ncoords=1)
    return np.concatenate([[0.0], trace.states[:, 0]])


__all__ = [
    "AbsorptionError", "IterationTrace", "absorption_class", "absorption_step", "apply_F",
    "apply_psi", "first_coordinate_orbit", "gamma", "iterate_F", "iterate_psi", "lattice_F",
    "nonconvergence_certificate",
]

