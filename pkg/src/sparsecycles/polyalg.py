"""Sparse bivariate polynomials with exact coefficients, plus log-domain scalars.

Polynomials in two variables are kept as sorted tuples of monomials.  A
coefficient is a Fraction whenever it entered as an int/Fraction (or as a
float converted exactly), so term counting and formal calculus never suffer
rounding: a coefficient is zero iff it is exactly zero.

Evaluation has three routes:

* ``evaluate``        compensated float summation (math.fsum),
* ``evaluate_exact``  all-rational, for identities at rational points,
* ``evaluate_log``    one term at a time in sign/log-magnitude form, for
                      terms like (y/a)**(2m) whose value leaves the double
                      range long before the quantities built from it do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

Coeff = Union[Fraction, float]

__all__ = [
    "EvaluationOverflow",
    "LogValue",
    "Monomial2",
    "SparsePoly2",
    "antiderivative",
    "differentiate",
    "evaluate",
    "evaluate_array",
    "evaluate_exact",
    "evaluate_log",
    "log_abs",
    "signed_log_sum",
    "term_strings",
]


class EvaluationOverflow(ArithmeticError):
    """A float evaluation produced a non-finite aggregate."""


def _canon_coeff(c) -> Coeff:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        return c
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def log_abs(c: Coeff) -> float:
    """log|c|, exact-int aware so huge rational coefficients are safe."""
    if isinstance(c, Fraction):
        if c == 0:
            return float("-inf")
        # math.log accepts arbitrarily large ints.
        return math.log(abs(c.numerator)) - math.log(c.denominator)
    if c == 0.0:
        return float("-inf")
    return math.log(abs(c))


@dataclass(frozen=True)
class LogValue:
    """A real number as (sign, log magnitude): sign * exp(logmag).

    sign is -1, 0, or +1; zero carries logmag == -inf.  The representation
    covers magnitudes far outside double range, which the inner-oval bounds
    of the nested construction need routinely.
    """

    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.sign == 0 and self.logmag != float("-inf"):
            object.__setattr__(self, "logmag", float("-inf"))

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(0, float("-inf"))

    @classmethod
    def from_number(cls, v) -> "LogValue":
        if isinstance(v, LogValue):
            return v
        if isinstance(v, (int, Fraction)):
            f = Fraction(v)
            if f == 0:
                return cls.zero()
            return cls(1 if f > 0 else -1, log_abs(f))
        v = float(v)
        if v == 0.0:
            return cls.zero()
        return cls(1 if v > 0 else -1, math.log(abs(v)))

    def to_float(self) -> float:
        """Best-effort float rendering; overflows to +-inf, underflows to 0."""
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.logmag)
        except OverflowError:
            return self.sign * float("inf")

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.logmag + other.logmag)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.sign == 0:
            raise ZeroDivisionError("LogValue division by zero")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.logmag - other.logmag)

    def __neg__(self) -> "LogValue":
        return LogValue(-self.sign, self.logmag)

    def __pow__(self, k: int) -> "LogValue":
        if not isinstance(k, int):
            raise TypeError("LogValue powers must be integers")
        if self.sign == 0:
            if k == 0:
                return LogValue(1, 0.0)
            if k < 0:
                raise ZeroDivisionError("0 to a negative power")
            return LogValue.zero()
        return LogValue(self.sign if k % 2 else 1, self.logmag * k)

    def scaled(self, c: float) -> "LogValue":
        return self * LogValue.from_number(c)

    def mag_lt(self, other: "LogValue") -> bool:
        return self.logmag < other.logmag

    def __lt__(self, other: "LogValue") -> bool:
        # Total order consistent with the represented reals.
        if self.sign != other.sign:
            return self.sign < other.sign
        if self.sign == 0:
            return False
        if self.sign > 0:
            return self.logmag < other.logmag
        return self.logmag > other.logmag


def signed_log_sum(values: Iterable[LogValue]) -> tuple[LogValue, float, float]:
    """Sum LogValues with two sign-grouped compensated accumulators.

    Returns (total, pos_logmag, neg_logmag) where the latter two are the
    log-magnitudes of the positive and negative groups; callers use them to
    judge how much cancellation the subtraction performed.
    """
    vals = [v for v in values if v.sign != 0]
    if not vals:
        return LogValue.zero(), float("-inf"), float("-inf")
    scale = max(v.logmag for v in vals)
    pos = math.fsum(math.exp(v.logmag - scale) for v in vals if v.sign > 0)
    neg = math.fsum(math.exp(v.logmag - scale) for v in vals if v.sign < 0)
    diff = pos - neg
    pos_log = scale + math.log(pos) if pos > 0 else float("-inf")
    neg_log = scale + math.log(neg) if neg > 0 else float("-inf")
    if diff == 0.0:
        return LogValue.zero(), pos_log, neg_log
    total = LogValue(1 if diff > 0 else -1, scale + math.log(abs(diff)))
    return total, pos_log, neg_log


@dataclass(frozen=True)
class Monomial2:
    """coeff * x**ex * y**ey with nonnegative integer exponents."""

    coeff: Coeff
    ex: int
    ey: int

    def __post_init__(self):
        object.__setattr__(self, "coeff", _canon_coeff(self.coeff))
        if self.ex < 0 or self.ey < 0:
            raise ValueError("exponents must be nonnegative")

    def float_coeff(self) -> float:
        c = self.coeff
        if isinstance(c, float):
            return c
        try:
            return float(c)
        except OverflowError:
            lv = LogValue.from_number(c)
            return lv.to_float()

    def __str__(self) -> str:
        return f"{self.coeff} x^{self.ex} y^{self.ey}"


def _merge(terms: Iterable[Monomial2]) -> tuple[Monomial2, ...]:
    acc: dict[tuple[int, int], Coeff] = {}
    for t in terms:
        key = (t.ex, t.ey)
        if key in acc:
            acc[key] = acc[key] + t.coeff
        else:
            acc[key] = t.coeff
    out = []
    for (ex, ey) in sorted(acc):
        c = acc[(ex, ey)]
        if c == 0:
            continue
        out.append(Monomial2(c, ex, ey))
    return tuple(out)


@dataclass(frozen=True)
class SparsePoly2:
    """Canonical sparse polynomial: terms sorted by (ex, ey), no zeros."""

    terms: tuple[Monomial2, ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable) -> "SparsePoly2":
        mono = []
        for t in terms:
            if isinstance(t, Monomial2):
                mono.append(t)
            else:
                c, ex, ey = t
                mono.append(Monomial2(c, ex, ey))
        return cls(_merge(mono))

    @classmethod
    def zero(cls) -> "SparsePoly2":
        return cls(())

    @classmethod
    def constant(cls, c) -> "SparsePoly2":
        return cls.from_terms([(c, 0, 0)])

    @classmethod
    def variable(cls, name: str) -> "SparsePoly2":
        if name == "x":
            return cls.from_terms([(1, 1, 0)])
        if name == "y":
            return cls.from_terms([(1, 0, 1)])
        raise ValueError("variable must be 'x' or 'y'")

    # ----- ring operations (exact when all coefficients are rational) -----

    def __add__(self, other: "SparsePoly2") -> "SparsePoly2":
        return SparsePoly2(_merge(self.terms + other.terms))

    def __sub__(self, other: "SparsePoly2") -> "SparsePoly2":
        return self + (-other)

    def __neg__(self) -> "SparsePoly2":
        return SparsePoly2(tuple(Monomial2(-t.coeff, t.ex, t.ey) for t in self.terms))

    def __mul__(self, other: "SparsePoly2") -> "SparsePoly2":
        prods = [
            Monomial2(a.coeff * b.coeff, a.ex + b.ex, a.ey + b.ey)
            for a in self.terms
            for b in other.terms
        ]
        return SparsePoly2(_merge(prods))

    def scale(self, c) -> "SparsePoly2":
        c = _canon_coeff(c)
        if c == 0:
            return SparsePoly2.zero()
        return SparsePoly2(tuple(Monomial2(t.coeff * c, t.ex, t.ey) for t in self.terms))

    def shift_exponents(self, dx: int, dy: int) -> "SparsePoly2":
        return SparsePoly2(tuple(Monomial2(t.coeff, t.ex + dx, t.ey + dy) for t in self.terms))

    def is_zero(self) -> bool:
        return not self.terms

    def restrict_x0(self) -> "SparsePoly2":
        """The polynomial with x set to 0 (keeps only ex == 0 terms)."""
        return SparsePoly2(tuple(t for t in self.terms if t.ex == 0))

    def term_count(self) -> int:
        return len(self.terms)

    def degree(self) -> int:
        return max((t.ex + t.ey for t in self.terms), default=-1)

    def float_coeff_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cs = np.array([t.float_coeff() for t in self.terms], dtype=float)
        exs = np.array([t.ex for t in self.terms], dtype=int)
        eys = np.array([t.ey for t in self.terms], dtype=int)
        return cs, exs, eys

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(str(t) for t in self.terms)


# ----- calculus -----


def differentiate(p: SparsePoly2, var: str) -> SparsePoly2:
    """Formal partial derivative; exact on rational coefficients."""
    out = []
    for t in p.terms:
        if var == "x":
            if t.ex == 0:
                continue
            out.append(Monomial2(t.coeff * t.ex, t.ex - 1, t.ey))
        elif var == "y":
            if t.ey == 0:
                continue
            out.append(Monomial2(t.coeff * t.ey, t.ex, t.ey - 1))
        else:
            raise ValueError("var must be 'x' or 'y'")
    return SparsePoly2(_merge(out))


def antiderivative(p: SparsePoly2, var: str) -> SparsePoly2:
    """Formal antiderivative with zero constant; rational stays rational."""
    out = []
    for t in p.terms:
        if var == "x":
            out.append(Monomial2(t.coeff * Fraction(1, t.ex + 1), t.ex + 1, t.ey))
        elif var == "y":
            out.append(Monomial2(t.coeff * Fraction(1, t.ey + 1), t.ex, t.ey + 1))
        else:
            raise ValueError("var must be 'x' or 'y'")
    return SparsePoly2(_merge(out))


# ----- evaluation -----


def evaluate(p: SparsePoly2, x: float, y: float) -> float:
    """Compensated float evaluation; raises EvaluationOverflow on non-finite."""
    vals = []
    for t in p.terms:
        v = t.float_coeff() * (x ** t.ex) * (y ** t.ey)
        if not math.isfinite(v):
            raise EvaluationOverflow(f"term {t} overflowed at ({x}, {y})")
        vals.append(v)
    try:
        s = math.fsum(vals)
    except (OverflowError, ValueError) as exc:  # intermediate overflow in fsum
        raise EvaluationOverflow(str(exc)) from exc
    if not math.isfinite(s):
        raise EvaluationOverflow(f"sum overflowed at ({x}, {y})")
    return s


def evaluate_exact(p: SparsePoly2, x, y) -> Fraction:
    """Exact rational evaluation.  Float coefficients convert exactly."""
    xq, yq = Fraction(x), Fraction(y)
    total = Fraction(0)
    for t in p.terms:
        total += Fraction(t.coeff) * xq**t.ex * yq**t.ey
    return total


def evaluate_array(p: SparsePoly2, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized float evaluation over numpy arrays (no overflow guard)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    total = np.zeros(np.broadcast(xs, ys).shape, dtype=float)
    for t in p.terms:
        total += t.float_coeff() * xs**t.ex * ys**t.ey
    return total


def evaluate_log(term: Monomial2, x: float, y: float) -> LogValue:
    """One monomial at a point, in sign/log-magnitude form.

    Zero-exponent factors are skipped, so x = 0 with ex = 0 contributes
    nothing (the 0**0 == 1 convention), while x = 0 with ex > 0 yields the
    exact zero LogValue.
    """
    sign = 1
    c = term.coeff
    if c == 0:
        return LogValue.zero()
    if (isinstance(c, Fraction) and c < 0) or (isinstance(c, float) and c < 0):
        sign = -1
    logmag = log_abs(c)
    if term.ex:
        if x == 0.0:
            return LogValue.zero()
        if x < 0 and term.ex % 2:
            sign = -sign
        logmag += term.ex * math.log(abs(x))
    if term.ey:
        if y == 0.0:
            return LogValue.zero()
        if y < 0 and term.ey % 2:
            sign = -sign
        logmag += term.ey * math.log(abs(y))
    return LogValue(sign, logmag)


def term_strings(p: SparsePoly2) -> list[str]:
    """Sorted "coeff x^i y^j" rendering used by report serialization."""
    return [str(t) for t in p.terms]
