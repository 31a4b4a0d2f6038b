"""State types: symmetric distributions, ratio sequences and weight sequences.

Every type works in two arithmetic modes.  Float mode stores ``float64``
arrays; exact mode stores object arrays of ``Fraction`` so the same numpy
expressions evaluate in rational arithmetic.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .report import fmt_number

DEFAULT_LENGTH = 64


class InvalidDistribution(ValueError):
    pass


class NonNormalizable(ValueError):
    pass


def as_exact(v):
    """Exact rational for ``v``; floats go through their shortest decimal repr."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(repr(float(v)))


def to_array(values, exact):
    if exact:
        arr = np.array([as_exact(v) for v in values], dtype=object)
    else:
        arr = np.array([float(v) for v in values], dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _parse(s, exact):
    if exact:
        return Fraction(s)
    if isinstance(s, str) and "/" in s:
        return float(Fraction(s))
    return float(s)


@dataclass(frozen=True, eq=False)
class ProbDist:
    """Symmetric distribution on the integers, stored as ``values[i] = z_i`` for i >= 0."""

    values: np.ndarray
    exact: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", to_array(self.values, self.exact))
        if self.values.shape[0] == 0:
            raise InvalidDistribution("empty distribution")

    @property
    def center_mass(self):
        return self.values[0]

    @property
    def half(self):
        return self.values[1:]

    @property
    def support_radius(self):
        nz = np.nonzero(self.values != 0)[0]
        return int(nz[-1]) if nz.size else -1

    @classmethod
    def point_mass(cls, exact=False):
        return cls([1], exact)

    @classmethod
    def uniform(cls, k, exact=False):
        p = Fraction(1, 2 * k + 1) if exact else 1.0 / (2 * k + 1)
        return cls([p] * (k + 1), exact)

    @classmethod
    def from_weights(cls, weights, exact=False):
        """Normalize nonnegative half-weights ``w(0), w(1), ...``."""
        w = to_array(weights, exact)
        total = w[0] + 2 * w[1:].sum()
        if total <= 0:
            raise InvalidDistribution("weights have zero mass")
        return cls(w / total, exact)

    @classmethod
    def from_full(cls, values, exact=False, tol=1e-12):
        """Build from a full array indexed -K..K; rejects asymmetric input."""
        full = to_array(values, exact)
        n = full.shape[0]
        if n % 2 != 1:
            raise InvalidDistribution("full array must have odd length 2K+1")
        K = n // 2
        for i in range(1, K + 1):
            a, b = full[K + i], full[K - i]
            if (a != b) if exact else abs(a - b) > tol:
                raise InvalidDistribution(f"asymmetric at {i}: {a} vs {b}")
        return cls(full[K:], exact)

    def value(self, i):
        i = abs(int(i))
        if i >= self.values.shape[0]:
            return Fraction(0) if self.exact else 0.0
        return self.values[i]

    def total(self):
        return self.values[0] + 2 * self.values[1:].sum()

    def full(self):
        """Values on -K..K as one array (K = stored length - 1)."""
        return np.concatenate([self.values[:0:-1], self.values])

    def validate(self, tol=1e-12):
        v = self.values
        if (v < 0).any():
            raise InvalidDistribution("negative mass")
        if not v[0] > 0:
            raise InvalidDistribution("value(0) must be positive")
        total = self.total()
        if (total != 1) if self.exact else abs(total - 1.0) > tol:
            raise InvalidDistribution(f"not normalized: total {total}")
        zero = np.nonzero(v == 0)[0]
        if zero.size and (v[zero[0]:] != 0).any():
            raise InvalidDistribution("support is not an interval")
        return self

    def trimmed(self):
        r = max(self.support_radius, 0)
        return ProbDist(self.values[: r + 1], self.exact)

    def to_float(self):
        return ProbDist(self.values.astype(np.float64), False)

    def to_exact(self):
        return ProbDist([Fraction(float(v)) if not isinstance(v, Fraction) else v for v in self.values], True)

    def tv(self, other):
        """Total variation distance between two symmetric distributions."""
        n = max(self.values.shape[0], other.values.shape[0])
        p = _pad(self.values, n)
        q = _pad(other.values, n)
        diff = abs(p - q)
        return (diff[0] + 2 * diff[1:].sum()) / 2

    def __eq__(self, other):
        if not isinstance(other, ProbDist):
            return NotImplemented
        a, b = self.trimmed().values, other.trimmed().values
        return a.shape == b.shape and bool((a == b).all())

    def __hash__(self):
        return hash(tuple(self.trimmed().values.tolist()))

    def to_json(self):
        return [fmt_number(v) for v in self.values]

    @classmethod
    def from_json(cls, data, exact=False):
        return cls([_parse(s, exact) for s in data], exact)

    def __repr__(self):
        return f"ProbDist({[fmt_number(v) for v in self.values[:8]]}{'...' if len(self.values) > 8 else ''})"


def _pad(arr, n):
    if arr.shape[0] >= n:
        return arr
    fill = np.array([Fraction(0)] * (n - arr.shape[0]), dtype=object) if arr.dtype == object \
        else np.zeros(n - arr.shape[0])
    return np.concatenate([arr, fill])


@dataclass(frozen=True, eq=False)
class RatioSeq:
    """Truncated ratio sequence ``(x_1, ..., x_L)`` with an implicit zero tail."""

    entries: np.ndarray
    exact: bool = False
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entries", to_array(self.entries, self.exact))
        if (self.entries < 0).any():
            raise ValueError("ratio sequences are nonnegative")

    @classmethod
    def zero(cls, length=DEFAULT_LENGTH, exact=False):
        return cls([0] * length, exact)

    @property
    def L(self):
        return self.entries.shape[0]

    def __getitem__(self, n):
        """1-based coordinate access; indices past L read as 0."""
        if n < 1:
            raise IndexError("ratio sequences are 1-indexed")
        if n > self.L:
            return Fraction(0) if self.exact else 0.0
        return self.entries[n - 1]

    def resized(self, length):
        if length <= self.L:
            return RatioSeq(self.entries[:length], self.exact)
        return RatioSeq(_pad(self.entries, length), self.exact)

    def to_float(self):
        return RatioSeq(self.entries.astype(np.float64), False, self.truncated)

    def to_exact(self):
        return RatioSeq([Fraction(float(v)) if not isinstance(v, Fraction) else v
                         for v in self.entries], True, self.truncated)

    def __eq__(self, other):
        if not isinstance(other, RatioSeq):
            return NotImplemented
        n = max(self.L, other.L)
        return bool((_pad(self.entries, n) == _pad(other.entries, n)).all())

    def __hash__(self):
        return hash(tuple(np.trim_zeros(self.entries, "b").tolist()))

    def to_json(self):
        return [fmt_number(v) for v in self.entries]

    @classmethod
    def from_json(cls, data, exact=False):
        return cls([_parse(s, exact) for s in data], exact)

    def __repr__(self):
        return f"RatioSeq({[fmt_number(v) for v in self.entries[:6]]}, L={self.L})"


def ratio_transform(z: ProbDist, length=None, tol=1e-12) -> RatioSeq:
    """Consecutive ratios ``x_i = z_i / z_{i-1}``, zero once the support ends."""
    z.validate(tol)
    v = z.values
    K = z.support_radius
    n = K + 1 if length is None else length
    zero = Fraction(0) if z.exact else 0.0
    out = []
    for i in range(1, n + 1):
        if i <= K:
            out.append(v[i] / v[i - 1])
        else:
            out.append(zero)
    return RatioSeq(out, z.exact)


def inverse_ratio_transform(x: RatioSeq, tail_tol=1e-12) -> ProbDist:
    """Unique symmetric distribution with ratio sequence ``x``.

    Raises ``NonNormalizable`` when the truncation cuts off non-negligible mass,
    i.e. the partial products have not died out by coordinate L.
    """
    one = Fraction(1) if x.exact else 1.0
    prods = [one]
    for xi in x.entries:
        nxt = prods[-1] * xi
        if nxt == 0:
            break
        prods.append(nxt)
    prods = to_array(prods, x.exact) if x.exact else np.array(prods)
    total = prods[0] + 2 * prods[1:].sum()
    if not np.isfinite(float(total)):
        raise NonNormalizable("partial products diverge")
    if len(prods) == x.L + 1 and float(prods[-1] / total) > tail_tol:
        raise NonNormalizable(
            f"last partial product {float(prods[-1]):.3g} is not negligible at L={x.L}")
    return ProbDist(prods / total, x.exact)


def norm_modified(x, d):
    """Norm used for the contraction argument.

    Sup norm for d = 2 and d >= 8, ``|x_1| + sup_{i>=2} |x_i|`` for 3 <= d <= 7.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    e = x.entries if isinstance(x, RatioSeq) else np.asarray(x)
    if e.shape[0] == 0:
        return 0
    a = abs(e)
    if 3 <= d <= 7:
        return a[0] + (a[1:].max() if a.shape[0] > 1 else 0)
    return a.max()


@dataclass(frozen=True)
class WeightSeq:
    """Symmetric leaf weights: ``level`` on {-k..k}, then the explicit ``tail``.

    ``decay_rate`` is the declared geometric rate c; values past the tail are zero.
    """

    flat_radius: int = 0
    decay_rate: float = 0.0
    tail: tuple = field(default_factory=tuple)
    level: float = 1.0

    @classmethod
    def interval(cls, k):
        return cls(flat_radius=k)

    @classmethod
    def geometric(cls, c, length=DEFAULT_LENGTH):
        c = as_exact(c)
        return cls(flat_radius=0, decay_rate=c, tail=tuple(c ** i for i in range(1, length)))

    def values(self, exact=False):
        vals = [self.level] * (self.flat_radius + 1) + list(self.tail)
        return to_array(vals, exact)


class GoodWeight(NamedTuple):
    ok: bool
    dist: object
    problems: list


def is_good_weight(w: WeightSeq, exact=False) -> GoodWeight:
    problems = []
    c = as_exact(w.decay_rate)
    if not as_exact(w.level) > 0:
        problems.append("w(0) must be positive")
    if w.flat_radius < 0:
        problems.append("flat radius must be nonnegative")
    if not 0 <= c < 1:
        problems.append(f"decay rate {w.decay_rate} not in [0, 1)")
    prev = as_exact(w.level)
    for i, t in enumerate(w.tail, start=w.flat_radius + 1):
        t = as_exact(t)
        if t < 0:
            problems.append(f"negative weight at {i}")
            break
        if t > c * prev:
            problems.append(f"tail not decaying at rate {w.decay_rate} at {i}")
            break
        prev = t
    if problems:
        return GoodWeight(False, None, problems)
    return GoodWeight(True, ProbDist.from_weights(w.values(exact), exact), [])
