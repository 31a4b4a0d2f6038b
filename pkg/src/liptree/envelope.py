"""Three-parameter envelope dynamics and certified fixed-point boxes.

A triple (a, b, c) stands for the box of ratio sequences with x1 in [a, b]
and every later coordinate at most c.  One psi step maps such a box into the
box of ``phi_map(a, b, c)``.  The pipeline below brackets the fixed points of
the scalar maps driving phi by exact sign checks at rational points and
assembles a box that the psi orbit from zero eventually enters.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, log10

from .report import CertificateReport, fmt_number
from .seqspace import RatioSeq, as_exact

# boxes the contraction argument is run on
CONTRACTION_BOXES = {
    2: ("0.5", "0.7", "0.27"),
    3: ("0.4", "0.6", "0.2"),
    4: ("0.3", "0.5", "0.1"),
    5: ("0.3", "0.4", "0.1"),
    6: ("0.27", "0.32", "0.1"),
    7: ("0.26", "0.27", "0.01"),
}

# hand-picked round-one endpoints (a lower, b upper, c upper)
HANDPICKED_ROUND1 = {
    2: ("0.48", "0.754", "0.466"),
    3: ("0.4", "0.54", "0.17"),
    4: ("0.3495", "0.43", "0.074"),
    5: ("0.308", "0.362", "0.0342"),
    6: ("0.2734", "0.318", "0.0165"),
    7: ("0.2332", "0.3006", "0.0081"),
}

# hand-picked round-two endpoints (a lower, b upper, c upper)
HANDPICKED_ROUND2 = {
    2: ("0.51", "0.664", "0.267"),
    7: ("0.26435", "0.26475", "0.000036"),
}

# partition constants bounding the c-parameter of i and j
C_D = {2: "0.47", 3: "0.18", 4: "0.08", 5: "0.04", 6: "0.02", 7: "0.009"}


class BracketError(ValueError):
    pass


def f_map(alpha, x, d):
    return ((1 + alpha * x) / (1 + 2 * x)) ** d


def g_map(b, x, d):
    return b ** d * ((1 + x + x * x) / (1 + b + b * x)) ** d


def i_map(c, x, d):
    return f_map(1, f_map(1 + c, x, d), d)


def j_map(c, x, d):
    return f_map(1 + c, f_map(1, x, d), d)


_MAPS = {"g": g_map, "i": i_map, "j": j_map}


@dataclass(frozen=True)
class EnvelopeTriple:
    a: object
    b: object
    c: object

    def __post_init__(self):
        if not (0 <= self.a <= self.b <= 1 and 0 <= self.c <= self.b):
            raise ValueError(f"triple ({self.a}, {self.b}, {self.c}) is outside 0 <= a, c <= b <= 1")

    @classmethod
    def exact(cls, a, b, c):
        return cls(as_exact(a), as_exact(b), as_exact(c))

    def astuple(self):
        return (self.a, self.b, self.c)

    def to_float(self):
        return EnvelopeTriple(float(self.a), float(self.b), float(self.c))

    def to_dict(self):
        return {"a": fmt_number(self.a), "b": fmt_number(self.b), "c": fmt_number(self.c)}


def contraction_box(d) -> EnvelopeTriple:
    return EnvelopeTriple.exact(*CONTRACTION_BOXES[d])


def phi_map(t: EnvelopeTriple, d: int) -> EnvelopeTriple:
    """(a, b, c) -> (f(1, b), f(1 + c, a), g(b, c))."""
    a, b, c = t.a, t.b, t.c
    return EnvelopeTriple(f_map(1, b, d), f_map(1 + c, a, d), g_map(b, c, d))


def iterate_phi(t, d, steps):
    """Float iteration of phi; returns the final triple as a plain tuple."""
    a, b, c = (float(v) for v in (t.astuple() if isinstance(t, EnvelopeTriple) else t))
    for _ in range(steps):
        a, b, c = f_map(1.0, b, d), f_map(1.0 + c, a, d), g_map(b, c, d)
    return a, b, c


def envelope_contains(t: EnvelopeTriple, x: RatioSeq) -> bool:
    e = x.entries
    if e.shape[0] == 0:
        return t.a <= 0
    return bool(t.a <= e[0] <= t.b and (e[1:] <= t.c).all())


@dataclass(frozen=True)
class Bracket:
    """Certified enclosure [lo, hi] of the unique fixed point of ``map_id(param, .)``.

    Each scalar map lies above the diagonal left of its fixed point and below
    it to the right, so ``map(lo) > lo`` and ``map(hi) < hi`` pin it down.
    """

    map_id: str
    param: Fraction
    lo: Fraction
    hi: Fraction
    d: int
    lo_image: Fraction
    hi_image: Fraction

    def to_dict(self):
        return {k: fmt_number(getattr(self, k)) if k not in ("map_id", "d") else getattr(self, k)
                for k in ("map_id", "param", "lo", "hi", "d", "lo_image", "hi_image")}


def bracket_fixed_point(map_id, param, lo, hi, d) -> Bracket:
    """Verify the sign conditions in exact arithmetic; raise BracketError otherwise."""
    param, lo, hi = as_exact(param), as_exact(lo), as_exact(hi)
    if not 0 <= lo < hi < 1:
        raise BracketError(f"need 0 <= lo < hi < 1, got [{lo}, {hi}]")
    fn = _MAPS[map_id]
    lo_img, hi_img = fn(param, lo, d), fn(param, hi, d)
    if not lo_img > lo:
        raise BracketError(f"{map_id}({fmt_number(param)}, lo) <= lo at lo = {fmt_number(lo)}")
    if not hi_img < hi:
        raise BracketError(f"{map_id}({fmt_number(param)}, hi) >= hi at hi = {fmt_number(hi)}")
    return Bracket(map_id, param, lo, hi, d, lo_img, hi_img)


def float_fixed_point(map_id, param, d, start=0.5, steps=100000, tol=1e-16):
    """Float estimate of the fixed point by plain iteration."""
    fn = _MAPS[map_id]
    p = float(param)
    x = start
    for _ in range(steps):
        y = fn(p, x, d)
        if abs(y - x) <= tol:
            return y
        x = y
    return x


def _snap_down(x, digits):
    q = 10 ** digits
    return Fraction(floor(Fraction(x) * q), q)


def _snap_up(x, digits):
    q = 10 ** digits
    return Fraction(ceil(Fraction(x) * q), q)


def auto_bracket(map_id, param, d, delta=1e-3, cap=None, min_delta=1e-14):
    """Guess a bracket from a float estimate +- delta, shrinking delta on failure.

    Endpoints are snapped outward to the decimal grid one digit finer than
    delta; ``cap`` is an exclusive upper limit on ``hi``.
    """
    est = float_fixed_point(map_id, param, d)
    err = None
    while delta >= min_delta:
        digits = max(1, -floor(log10(delta)) + 1)
        lo = max(Fraction(0), _snap_down(est - delta, digits))
        hi = _snap_up(est + delta, digits)
        if cap is not None and hi >= cap:
            err = BracketError(f"hi {fmt_number(hi)} not below cap {fmt_number(cap)}")
        else:
            try:
                return bracket_fixed_point(map_id, param, lo, hi, d)
            except BracketError as exc:
                err = exc
        delta /= 10
    raise BracketError(f"no bracket for {map_id}({param}) at d={d}: {err}")


@dataclass
class PipelineResult:
    d: int
    round1: dict
    round2: dict
    odd_step: EnvelopeTriple
    final_box: EnvelopeTriple
    boxes: dict = field(default_factory=dict)
    report: CertificateReport = None

    def to_dict(self):
        return {
            "d": self.d,
            "round1": {k: v.to_dict() for k, v in self.round1.items()},
            "round2": {k: v.to_dict() for k, v in self.round2.items()},
            "boxes": {k: v.to_dict() for k, v in self.boxes.items()},
            "odd_step": self.odd_step.to_dict(),
            "final_box": self.final_box.to_dict(),
            "report": self.report.to_dict() if self.report else None,
        }


def _round(d, b_param, rep, tag, delta, guesses, cap):
    """Bracket the c-fixed point of g(b, .) for two values of b, then a and b.

    ``b_param`` is (b_low, b_high); the upper c-bracket uses b_high since g is
    increasing in b, and i/j are evaluated at the c endpoint that makes each
    bound valid.
    """
    b_low, b_high = b_param
    out = {}
    c_guess = guesses.get("c") if guesses else None
    if c_guess is not None:
        hi_c = bracket_fixed_point("g", b_high, 0, c_guess, d)
    else:
        hi_c = auto_bracket("g", b_high, d, delta, cap=cap)
    lo_c = auto_bracket("g", b_low, d, delta, cap=cap) if b_low != b_high else hi_c
    out["c_upper"] = hi_c
    out["c_lower"] = lo_c
    c2, c1 = hi_c.hi, lo_c.lo
    rep.check(f"{tag}: c upper bracket below c_d", c2, "<", cap)
    a_guess = guesses.get("a") if guesses else None
    b_guess = guesses.get("b") if guesses else None
    # a_c decreases and b_c increases in c, so both one-sided bounds use c2
    if a_guess is not None:
        a_lo = bracket_fixed_point("i", c2, a_guess, Fraction(999, 1000), d)
    else:
        a_lo = auto_bracket("i", c2, d, delta)
    if b_guess is not None:
        b_hi = bracket_fixed_point("j", c2, 0, b_guess, d)
    else:
        b_hi = auto_bracket("j", c2, d, delta)
    out["a_at_c_upper"] = a_lo
    out["b_at_c_upper"] = b_hi
    out["a_at_c_lower"] = auto_bracket("i", c1, d, delta)
    out["b_at_c_lower"] = auto_bracket("j", c1, d, delta)
    for k, br in out.items():
        rep.check(f"{tag}: {k} sign at lo", br.lo_image, ">", br.lo)
        rep.check(f"{tag}: {k} sign at hi", br.hi_image, "<", br.hi)
    return out


def two_round_pipeline(d, rounds="auto", delta=1e-3, guesses="auto", target_box=True,
                       min_delta=1e-12) -> PipelineResult:
    """Certified box around the even-step fixed point of phi.

    ``rounds`` is 1, 2 or "auto" (two rounds for d in {2, 7}).  ``guesses`` is
    "auto" (float estimate +- delta) or "handpicked" (the hand-picked endpoints,
    verified exactly).  In auto mode a failed bracket, or a final box that does
    not fit inside the contraction box when ``target_box`` is set, shrinks
    delta tenfold and reruns.
    """
    if not 2 <= d <= 7:
        raise ValueError("pipeline is defined for 2 <= d <= 7")
    if rounds == "auto":
        rounds = 2 if d in (2, 7) else 1
    rounds = int(rounds)
    if guesses == "handpicked":
        return _pipeline_once(d, rounds, float(delta), guesses)
    delta = float(delta)
    tried = []
    err = None
    while delta >= min_delta:
        tried.append(delta)
        try:
            res = _pipeline_once(d, rounds, delta, guesses)
        except BracketError as exc:
            err = exc
        else:
            if not target_box or verify_box_domination(d, res.final_box).passed:
                res.report.meta["deltas_tried"] = tried
                return res
            err = BracketError(f"final box too wide at delta={delta:g}")
        delta /= 10
    raise BracketError(f"pipeline failed for d={d}: {err}")


def _pipeline_once(d, rounds, delta, guesses):
    cap = as_exact(C_D[d])
    rep = CertificateReport(f"pipeline d={d}")
    g1 = g2 = None
    if guesses == "handpicked":
        g1 = dict(zip("abc", (as_exact(v) for v in HANDPICKED_ROUND1[d])))
        if d in HANDPICKED_ROUND2:
            g2 = dict(zip("abc", (as_exact(v) for v in HANDPICKED_ROUND2[d])))
    one = Fraction(1)
    r1 = _round(d, (one, one), rep, "round1", delta, g1, cap)
    boxes = {"round1": EnvelopeTriple(r1["a_at_c_upper"].lo, r1["b_at_c_upper"].hi,
                                       r1["c_upper"].hi)}
    r2 = {}
    last = boxes["round1"]
    if rounds >= 2:
        c2, c1 = r1["c_upper"].hi, r1["c_lower"].lo
        # largest/smallest b the even iterates can reach after the first round
        b_high = max(f_map(1 + c2, r1["a_at_c_upper"].lo, d), r1["b_at_c_upper"].hi)
        b_low = max(f_map(1 + c1, r1["a_at_c_lower"].hi, d), r1["b_at_c_lower"].lo)
        rep.meta["b_prime_upper"] = b_high
        rep.meta["b_prime_lower"] = b_low
        rep.check("round2: b' ordering", b_low, "<=", b_high)
        r2 = _round(d, (b_low, b_high), rep, "round2", delta, g2, cap)
        boxes["round2"] = EnvelopeTriple(r2["a_at_c_upper"].lo, r2["b_at_c_upper"].hi,
                                         r2["c_upper"].hi)
        last = boxes["round2"]
    odd = phi_map(last, d)
    final = EnvelopeTriple(min(last.a, odd.a), max(last.b, odd.b), max(last.c, odd.c))
    rep.meta.update({"rounds": rounds, "guesses": guesses, "delta": delta})
    return PipelineResult(d, r1, r2, odd, final, boxes, rep)


def verify_box_domination(d, box: EnvelopeTriple) -> CertificateReport:
    """The certified box must sit inside the box the contraction bound uses."""
    t = contraction_box(d)
    rep = CertificateReport(f"contraction box domination d={d}")
    rep.check("a lower bound", as_exact(box.a), ">=", t.a)
    rep.check("b upper bound", as_exact(box.b), "<=", t.b)
    rep.check("c upper bound", as_exact(box.c), "<=", t.c)
    return rep
