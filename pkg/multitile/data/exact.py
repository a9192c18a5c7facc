"""Exact rationals and log-linear values.

A :class:`LogLinearValue` is a finite sum ``sum_p c_p * ln(p)`` over primes ``p``
with rational coefficients. Logs of distinct primes are linearly independent
over the rationals, so the prime-coefficient map is a canonical form: equality
is structural and the sign of any value is decided exactly by comparing a
rational power product with 1.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Dict, Iterable, Mapping, Tuple

import mpmath
from sympy import factorint

from ..core.errors import ExactnessError

Number = int | Fraction

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text: str | int) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` exactly. Decimal notation is rejected."""
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"rational must be a 'p/q' string, got {text!r}")
    match = _RATIONAL_RE.match(text)
    if not match:
        raise ValueError(f"not a rational literal: {text!r}")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) else 1
    if denominator == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(numerator, denominator)


def format_rational(value: Fraction | int) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@lru_cache(maxsize=4096)
def _factor(n: int) -> Tuple[Tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


def prime_exponents(r: Fraction) -> Dict[int, int]:
    """Exponent vector of a positive rational in the prime basis."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError(f"logarithm of non-positive rational {r}")
    exponents: Dict[int, int] = {}
    for p, e in _factor(r.numerator):
        exponents[p] = exponents.get(p, 0) + e
    for p, e in _factor(r.denominator):
        exponents[p] = exponents.get(p, 0) - e
    return {p: e for p, e in exponents.items() if e}


@total_ordering
@dataclass(frozen=True)
class LogLinearValue:
    terms: Tuple[Tuple[int, Fraction], ...] = ()

    @classmethod
    def zero(cls) -> "LogLinearValue":
        return cls(())

    @classmethod
    def log(cls, r: Number | str) -> "LogLinearValue":
        if isinstance(r, str):
            r = parse_rational(r)
        return cls.from_map({p: Fraction(e) for p, e in prime_exponents(Fraction(r)).items()})

    @classmethod
    def from_map(cls, coefficients: Mapping[int, Number]) -> "LogLinearValue":
        return cls(tuple(sorted((p, Fraction(c)) for p, c in coefficients.items() if c)))

    @classmethod
    def combination(cls, pairs: Iterable[Tuple[Number, "LogLinearValue"]]) -> "LogLinearValue":
        """Sum of ``weight * value`` pairs."""
        acc: Dict[int, Fraction] = {}
        for weight, value in pairs:
            for p, c in value.terms:
                acc[p] = acc.get(p, Fraction(0)) + Fraction(weight) * c
        return cls.from_map(acc)

    @property
    def coefficients(self) -> Dict[int, Fraction]:
        return dict(self.terms)

    @property
    def primes(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_log_of_rational(self) -> bool:
        return all(c.denominator == 1 for _, c in self.terms)

    def exp_rational(self) -> Fraction:
        """The rational ``u`` with ``self == ln(u)``."""
        if not self.is_log_of_rational:
            raise ExactnessError(f"{self} is not the logarithm of a rational")
        u = Fraction(1)
        for p, c in self.terms:
            u *= Fraction(p) ** int(c)
        return u

    def sign(self) -> int:
        if not self.terms:
            return 0
        approx = self.evaluate(60)
        if abs(approx) > mpmath.mpf(10) ** -40:
            return 1 if approx > 0 else -1
        scale = math.lcm(*(c.denominator for _, c in self.terms))
        w = Fraction(1)
        for p, c in self.terms:
            w *= Fraction(p) ** int(c * scale)
        return (w > 1) - (w < 1)

    def ratio(self, other: "LogLinearValue") -> Fraction | None:
        """``self / other`` when the two are rationally proportional, else None."""
        if other.is_zero():
            raise ZeroDivisionError("ratio to a zero log-linear value")
        if self.is_zero():
            return Fraction(0)
        if self.primes != other.primes:
            return None
        mine, theirs = self.coefficients, other.coefficients
        candidate = mine[self.primes[0]] / theirs[self.primes[0]]
        if all(mine[p] == candidate * theirs[p] for p in self.primes):
            return candidate
        return None

    def vector(self, basis: Iterable[int]) -> Tuple[Fraction, ...]:
        coefficients = self.coefficients
        return tuple(coefficients.get(p, Fraction(0)) for p in basis)

    def evaluate(self, digits: int = 50) -> mpmath.mpf:
        with mpmath.workdps(digits + 10):
            total = mpmath.mpf(0)
            for p, c in self.terms:
                total += mpmath.mpf(c.numerator) / c.denominator * mpmath.log(p)
            return +total

    def __float__(self) -> float:
        return float(self.evaluate(20))

    def __add__(self, other: "LogLinearValue") -> "LogLinearValue":
        if not isinstance(other, LogLinearValue):
            return NotImplemented
        return LogLinearValue.combination(((1, self), (1, other)))

    def __sub__(self, other: "LogLinearValue") -> "LogLinearValue":
        if not isinstance(other, LogLinearValue):
            return NotImplemented
        return LogLinearValue.combination(((1, self), (-1, other)))

    def __neg__(self) -> "LogLinearValue":
        return LogLinearValue(tuple((p, -c) for p, c in self.terms))

    def __mul__(self, weight: Number) -> "LogLinearValue":
        if not isinstance(weight, (int, Fraction)):
            return NotImplemented
        return LogLinearValue.from_map({p: c * weight for p, c in self.terms})

    __rmul__ = __mul__

    def __truediv__(self, weight: Number) -> "LogLinearValue":
        if not isinstance(weight, (int, Fraction)):
            return NotImplemented
        return self * (1 / Fraction(weight))

    def __lt__(self, other: "LogLinearValue") -> bool:
        if not isinstance(other, LogLinearValue):
            return NotImplemented
        return (self - other).sign() < 0

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        if self.is_log_of_rational:
            u = self.exp_rational()
            if u.denominator == 1:
                return f"ln{u.numerator}"
            return f"ln({format_rational(u)})"
        parts = []
        for index, (p, c) in enumerate(self.terms):
            magnitude = abs(c)
            if magnitude == 1:
                body = f"ln{p}"
            elif magnitude.denominator == 1:
                body = f"{magnitude.numerator}ln{p}"
            else:
                body = f"({format_rational(magnitude)})ln{p}"
            if index == 0:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(parts)


@dataclass(frozen=True)
class FreqValue:
    """Exact asymptotic density ``numerator / denominator``."""

    numerator: Fraction
    denominator: LogLinearValue

    def __post_init__(self) -> None:
        if self.denominator.sign() <= 0:
            raise ValueError("density denominator must be positive")

    def evaluate(self, digits: int = 50) -> mpmath.mpf:
        with mpmath.workdps(digits + 10):
            num = mpmath.mpf(self.numerator.numerator) / self.numerator.denominator
            return +(num / self.denominator.evaluate(digits))

    def __float__(self) -> float:
        return float(self.evaluate(20))

    def _same_scale(self, other: "FreqValue") -> None:
        if self.denominator != other.denominator:
            raise ValueError("densities with different denominators")

    def __add__(self, other: "FreqValue") -> "FreqValue":
        self._same_scale(other)
        return FreqValue(self.numerator + other.numerator, self.denominator)

    def __sub__(self, other: "FreqValue") -> "FreqValue":
        self._same_scale(other)
        return FreqValue(self.numerator - other.numerator, self.denominator)

    def __mul__(self, weight: Number) -> "FreqValue":
        return FreqValue(self.numerator * Fraction(weight), self.denominator)

    __rmul__ = __mul__

    def ratio(self, other: "FreqValue") -> Fraction:
        self._same_scale(other)
        return self.numerator / other.numerator

    def symbolic(self) -> str:
        return f"({format_rational(self.numerator)})/Z"

    def __str__(self) -> str:
        return f"({format_rational(self.numerator)})/({self.denominator})"


@dataclass(frozen=True)
class VolumeFraction:
    """Log-linear numerator over the log-linear path-count denominator."""

    numerator: LogLinearValue
    denominator: LogLinearValue

    def evaluate(self, digits: int = 50) -> mpmath.mpf:
        with mpmath.workdps(digits + 10):
            return +(self.numerator.evaluate(digits) / self.denominator.evaluate(digits))

    def exact_ratio(self) -> Fraction | None:
        return self.numerator.ratio(self.denominator)

    def __float__(self) -> float:
        return float(self.evaluate(20))

    def __add__(self, other: "VolumeFraction") -> "VolumeFraction":
        if self.denominator != other.denominator:
            raise ValueError("volume fractions with different denominators")
        return VolumeFraction(self.numerator + other.numerator, self.denominator)

    def __str__(self) -> str:
        return f"({self.numerator})/({self.denominator})"
