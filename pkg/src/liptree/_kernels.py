"""Hot loops, compiled with numba when available.

Set ``LIPTREE_NUMBA=0`` to force the pure numpy/python implementations.
Both paths consume the same pre-drawn uniforms, so for a fixed seed they
return identical samples.
"""
import os

import numpy as np

UNDERFLOW = 1e-300

NORM_SUP = 0
NORM_FIRST_PLUS_SUP = 1


def _numba_requested():
    flag = os.environ.get("LIPTREE_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by LIPTREE_NUMBA")
    from numba import njit
    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


def norm_kind(d):
    return NORM_FIRST_PLUS_SUP if 3 <= d <= 7 else NORM_SUP


# ---------------------------------------------------------------------------
# psi iteration
# ---------------------------------------------------------------------------

def _psi_step_py(x, out, dd):
    L = x.shape[0]
    x1 = x[0]
    x2 = x[1] if L > 1 else 0.0
    v = ((1.0 + x1 + x1 * x2) / (1.0 + 2.0 * x1)) ** dd
    out[0] = v if v >= UNDERFLOW else 0.0
    if L > 1:
        prev = x[:-1]
        cur = x[1:]
        nxt = np.empty_like(cur)
        nxt[:-1] = x[2:]
        nxt[-1] = 0.0
        with np.errstate(under="ignore"):
            y = prev ** dd * ((1.0 + cur + cur * nxt) / (1.0 + prev + prev * cur)) ** dd
        y[y < UNDERFLOW] = 0.0
        out[1:] = y
    last = x[L - 1]
    if last == 0.0:
        return False
    with np.errstate(under="ignore"):
        dropped = last ** dd / (1.0 + last) ** dd
    return bool(dropped >= UNDERFLOW)


def _delta_norm_py(x, y, kind):
    diff = np.abs(y - x)
    if kind == NORM_FIRST_PLUS_SUP:
        rest = diff[1:].max() if diff.shape[0] > 1 else 0.0
        return float(diff[0] + rest)
    return float(diff.max())


def _psi_iterate_py(x0, d, steps, kind, ncoords, stride, tol, window):
    dd = float(d)
    L = x0.shape[0]
    nrec = steps // stride
    summ = np.zeros((nrec, ncoords))
    deltas = np.zeros(steps)
    trunc = np.zeros(steps, dtype=np.bool_)
    x = x0.astype(np.float64).copy()
    y = np.empty(L)
    back = np.full(L, -1.0)
    streak = 0
    conv = -1
    k = 0
    while k < steps:
        trunc[k] = _psi_step_py(x, y, dd)
        deltas[k] = _delta_norm_py(x, y, kind)
        if (k + 1) % stride == 0:
            summ[(k + 1) // stride - 1, :] = y[:ncoords]
        if conv < 0:
            if deltas[k] < tol:
                streak += 1
                if streak == window:
                    conv = k - window + 1
            else:
                streak = 0
        if np.array_equal(y, x) or np.array_equal(y, back):
            # exact fixed point or exact 2-cycle: the rest of the orbit is known
            _fast_forward(x, y, k, steps, stride, ncoords, summ, deltas, trunc)
            if conv < 0 and deltas[k] < tol:
                need = window - streak
                if k + need < steps:
                    conv = k - streak + 1
            if np.array_equal(y, x):
                x = y.copy()
            elif (steps - k - 1) % 2 == 1:
                x = x.copy()
            else:
                x = y.copy()
            return x, summ, deltas, trunc, conv
        back[:] = x
        x, y = y, x
        k += 1
    return x, summ, deltas, trunc, conv


@njit(cache=True)
def _psi_step_nb(x, out, dd):
    L = x.shape[0]
    x1 = x[0]
    x2 = x[1] if L > 1 else 0.0
    v = ((1.0 + x1 + x1 * x2) / (1.0 + 2.0 * x1)) ** dd
    out[0] = v if v >= UNDERFLOW else 0.0
    for n in range(1, L):
        prev = x[n - 1]
        cur = x[n]
        nxt = x[n + 1] if n + 1 < L else 0.0
        v = prev ** dd * ((1.0 + cur + cur * nxt) / (1.0 + prev + prev * cur)) ** dd
        out[n] = v if v >= UNDERFLOW else 0.0
    last = x[L - 1]
    if last == 0.0:
        return False
    dropped = last ** dd / (1.0 + last) ** dd
    return dropped >= UNDERFLOW


@njit(cache=True)
def _delta_norm_nb(x, y, kind):
    first = abs(y[0] - x[0])
    rest = 0.0
    for i in range(1, x.shape[0]):
        v = abs(y[i] - x[i])
        if v > rest:
            rest = v
    if kind == 1:
        return first + rest
    return first if first > rest else rest


@njit(cache=True)
def _equal_nb(a, b):
    for i in range(a.shape[0]):
        if a[i] != b[i]:
            return False
    return True


@njit(cache=True)
def _psi_iterate_nb(x0, d, steps, kind, ncoords, stride, tol, window):
    dd = float(d)
    L = x0.shape[0]
    nrec = steps // stride
    summ = np.zeros((nrec, ncoords))
    deltas = np.zeros(steps)
    trunc = np.zeros(steps, dtype=np.bool_)
    x = x0.copy()
    y = np.empty(L)
    back = np.full(L, -1.0)
    streak = 0
    conv = -1
    for k in range(steps):
        trunc[k] = _psi_step_nb(x, y, dd)
        deltas[k] = _delta_norm_nb(x, y, kind)
        if (k + 1) % stride == 0:
            summ[(k + 1) // stride - 1, :] = y[:ncoords]
        if conv < 0:
            if deltas[k] < tol:
                streak += 1
                if streak == window:
                    conv = k - window + 1
            else:
                streak = 0
        fixed = _equal_nb(y, x)
        if fixed or _equal_nb(y, back):
            for j in range(k + 1, steps):
                # period 1 or 2 from here on
                deltas[j] = deltas[k]
                trunc[j] = trunc[k] if (j - k) % 2 == 0 or fixed else trunc[k - 1]
                if (j + 1) % stride == 0:
                    if fixed or (j - k) % 2 == 0:
                        summ[(j + 1) // stride - 1, :] = y[:ncoords]
                    else:
                        summ[(j + 1) // stride - 1, :] = x[:ncoords]
            if conv < 0 and deltas[k] < tol and k + window - streak < steps:
                conv = k - streak + 1
            if fixed or (steps - k - 1) % 2 == 0:
                return y.copy(), summ, deltas, trunc, conv
            return x.copy(), summ, deltas, trunc, conv
        for i in range(L):
            back[i] = x[i]
        tmp = x
        x = y
        y = tmp
    return x.copy(), summ, deltas, trunc, conv


def _fast_forward(x, y, k, steps, stride, ncoords, summ, deltas, trunc):
    fixed = np.array_equal(y, x)
    for j in range(k + 1, steps):
        deltas[j] = deltas[k]
        trunc[j] = trunc[k] if (fixed or (j - k) % 2 == 0) else trunc[k - 1]
        if (j + 1) % stride == 0:
            src = y if (fixed or (j - k) % 2 == 0) else x
            summ[(j + 1) // stride - 1, :] = src[:ncoords]


def psi_iterate(x0, d, steps, kind, ncoords=8, stride=1, tol=1e-13, window=10, use_numba=None):
    """Iterate the ratio map in float64.

    Returns ``(final, summaries, deltas, truncated, converged_at)``; summary row
    ``j`` holds the first ``ncoords`` coordinates after step ``stride*(j+1)``.
    ``converged_at`` is -1 when the detector never fired.
    """
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    ncoords = min(ncoords, x0.shape[0])
    fn = _psi_iterate_nb if use_numba else _psi_iterate_py
    return fn(x0, int(d), int(steps), int(kind), int(ncoords), int(stride), float(tol), int(window))


# ---------------------------------------------------------------------------
# top-down tree sampling
# ---------------------------------------------------------------------------

@njit(cache=True)
def _expand_level_nb(parent, cum, u, d, M):
    count, P = parent.shape
    out = np.empty((count, P * d), dtype=np.int64)
    width = 2 * M
    for s in range(count):
        for p in range(P):
            h = parent[s, p]
            for c in range(d):
                uu = u[s, p * d + c]
                k = 0
                while k < width and uu >= cum[h, k]:
                    k += 1
                out[s, p * d + c] = h + k - M
    return out


def _expand_level_py(parent, cum, u, d, M):
    count, P = parent.shape
    rep = np.repeat(parent, d, axis=1)
    table = cum[rep][..., : 2 * M]
    k = (u[..., None] >= table).sum(axis=-1)
    return rep + k - M


def expand_level(parent, cum, u, d, M=1, use_numba=None):
    """Draw the children of every vertex in ``parent`` (window indices).

    ``cum[h, k]`` is P(child offset <= k - M | parent index h); entries past the
    last reachable offset must be set above 1 so they are never selected.
    """
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    fn = _expand_level_nb if use_numba else _expand_level_py
    return fn(np.ascontiguousarray(parent, dtype=np.int64), np.ascontiguousarray(cum),
              np.ascontiguousarray(u), int(d), int(M))


# ---------------------------------------------------------------------------
# heat-bath Glauber sweep
# ---------------------------------------------------------------------------

@njit(cache=True)
def _heat_bath_sweep_nb(vals, indptr, indices, klo, khi, M, u):
    chains, n = vals.shape
    for ch in range(chains):
        for v in range(n):
            lo = klo[v]
            hi = khi[v]
            for e in range(indptr[v], indptr[v + 1]):
                w = vals[ch, indices[e]]
                if w - M > lo:
                    lo = w - M
                if w + M < hi:
                    hi = w + M
            step = int(u[ch, v] * (hi - lo + 1))
            if step > hi - lo:
                step = hi - lo
            vals[ch, v] = lo + step


def _heat_bath_sweep_py(vals, indptr, indices, klo, khi, M, u):
    n = vals.shape[1]
    for v in range(n):
        lo = np.full(vals.shape[0], klo[v])
        hi = np.full(vals.shape[0], khi[v])
        nb = indices[indptr[v]:indptr[v + 1]]
        if nb.size:
            lo = np.maximum(lo, vals[:, nb].max(axis=1) - M)
            hi = np.minimum(hi, vals[:, nb].min(axis=1) + M)
        step = np.minimum((u[:, v] * (hi - lo + 1)).astype(np.int64), hi - lo)
        vals[:, v] = lo + step


def heat_bath_sweep(vals, indptr, indices, klo, khi, M, u, use_numba=None):
    """One systematic-scan heat-bath sweep over all vertices, in place."""
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    fn = _heat_bath_sweep_nb if use_numba else _heat_bath_sweep_py
    fn(vals, indptr, indices, klo, khi, int(M), u)
