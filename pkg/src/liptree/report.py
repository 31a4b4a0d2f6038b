"""Structured pass/fail records for certificates."""
import json
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

_RELATIONS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
}


def fmt_number(v):
    """Fractions as ``p/q``, floats with 17 significant digits."""
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return jsonable(obj.tolist())
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, (bool, int, type(None))) and not isinstance(obj, Fraction):
        return obj
    return fmt_number(obj)


@dataclass
class Check:
    name: str
    passed: bool
    lhs: Any = None
    relation: str = ""
    rhs: Any = None
    margin: Any = None
    exact: bool = True
    note: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "lhs": jsonable(self.lhs),
            "relation": self.relation,
            "rhs": jsonable(self.rhs),
            "margin": jsonable(self.margin),
            "mode": "rational" if self.exact else "float",
            "note": self.note,
        }


@dataclass
class CertificateReport:
    title: str
    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def check(self, name, lhs, relation, rhs, note=""):
        """Record ``lhs relation rhs``; the margin is positive when it holds strictly."""
        ok = bool(_RELATIONS[relation](lhs, rhs))
        margin = (rhs - lhs) if relation in ("<", "<=") else (lhs - rhs)
        exact = isinstance(lhs, (Fraction, int)) and isinstance(rhs, (Fraction, int))
        self.checks.append(Check(name, ok, lhs, relation, rhs, margin, exact, note))
        return ok

    def flag(self, name, ok, note="", exact=True):
        self.checks.append(Check(name, bool(ok), exact=exact, note=note))
        return bool(ok)

    def extend(self, other, prefix=""):
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.lhs, c.relation, c.rhs,
                                     c.margin, c.exact, c.note))

    def to_dict(self):
        return {
            "title": self.title,
            "status": "PASS" if self.passed else "FAIL",
            "checks": [c.to_dict() for c in self.checks],
            "meta": jsonable(self.meta),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self):
        bad = self.failures()
        head = f"{self.title}: {'PASS' if self.passed else 'FAIL'} ({len(self.checks)} checks)"
        if not bad:
            return head
        return head + "; failing: " + ", ".join(c.name for c in bad[:5])
