"""Exact scalar arithmetic for rule evaluation.

Values produced by the expression evaluator are one of

* ``Fraction`` -- exact rational,
* ``Surd`` -- exact ``c * sqrt(k)`` with rational ``c`` and squarefree ``k >= 2``,
* ``float`` / ``complex`` -- inexact fallback,
* ``Polar`` -- a complex number with exactly known modulus and a floating
  phase (used by the oracle for unit-circle test functions).

Products, quotients and integer powers of exact values stay exact, as do
sums of surds with a common radicand.  Anything else degrades to floating
point, and :func:`is_exact` reports which case a value is in.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Union

INF = math.inf
ZERO_TOL = 1e-12


@lru_cache(maxsize=4096)
def _square_split(k: int) -> tuple[int, int]:
    """Write ``k = s**2 * r`` with ``r`` squarefree; return ``(s, r)``."""
    s, r = 1, k
    p = 2
    while p * p <= r:
        while r % (p * p) == 0:
            r //= p * p
            s *= p
        p += 1 if p == 2 else 2
    return s, r


@dataclass(frozen=True)
class Surd:
    """The exact real number ``coef * sqrt(rad)``; build with :func:`surd`."""

    coef: Fraction
    rad: int

    def __float__(self) -> float:
        return float(self.coef) * math.sqrt(self.rad)

    def __repr__(self) -> str:
        return f"Surd({self.coef}, {self.rad})"


@dataclass(frozen=True)
class Polar:
    """Complex number ``mag * exp(i*phase)`` with an exact (or float) modulus."""

    mag: object
    phase: float

    def __complex__(self) -> complex:
        return to_float(self.mag) * cmath.exp(1j * self.phase)


Exact = Union[Fraction, Surd]
Value = Union[Fraction, Surd, float, complex, Polar]


def surd(coef, rad: int) -> Exact:
    """Normalized ``coef * sqrt(rad)``; collapses to a ``Fraction`` when possible."""
    coef = Fraction(coef)
    if rad < 0:
        raise ValueError("negative radicand")
    if coef == 0 or rad == 0:
        return Fraction(0)
    s, r = _square_split(rad)
    coef *= s
    if r == 1:
        return coef
    return Surd(coef, r)


def sqrt_exact(x) -> Value:
    """Square root; exact for nonnegative rationals, float otherwise."""
    if isinstance(x, int):
        x = Fraction(x)
    if isinstance(x, Fraction):
        if x < 0:
            raise ArithmeticError("square root of a negative number")
        return surd(Fraction(1, x.denominator), x.numerator * x.denominator)
    if isinstance(x, Surd):
        if x.coef < 0:
            raise ArithmeticError("square root of a negative number")
        return math.sqrt(float(x))
    if isinstance(x, complex):
        return cmath.sqrt(x)
    if isinstance(x, Polar):
        return cmath.sqrt(complex(x))
    if x < 0:
        raise ArithmeticError("square root of a negative number")
    return math.sqrt(x)


def is_exact(x) -> bool:
    if type(x) is Fraction:
        return True
    return isinstance(x, (Fraction, Surd, int)) and not isinstance(x, bool)


def _parts(x) -> tuple[Fraction, int]:
    if isinstance(x, Surd):
        return x.coef, x.rad
    return Fraction(x), 1


def to_float(x) -> float | complex:
    if isinstance(x, complex):
        return x
    if isinstance(x, Polar):
        return complex(x)
    return float(x)


def _inexact(x):
    if isinstance(x, (complex, Polar)):
        return complex(x)
    return float(x)


def add(a, b) -> Value:
    if type(a) is Fraction and type(b) is Fraction:
        return a + b
    if is_exact(a) and is_exact(b):
        ca, ra = _parts(a)
        cb, rb = _parts(b)
        if ca == 0:
            return b if not isinstance(b, int) else Fraction(b)
        if cb == 0:
            return a if not isinstance(a, int) else Fraction(a)
        if ra == rb:
            return surd(ca + cb, ra)
        return float(a) + float(b)
    return _inexact(a) + _inexact(b)


def neg(a) -> Value:
    if isinstance(a, Surd):
        return Surd(-a.coef, a.rad)
    if isinstance(a, Polar):
        return Polar(a.mag, a.phase + math.pi)
    return -a


def sub(a, b) -> Value:
    return add(a, neg(b))


def mul(a, b) -> Value:
    if type(a) is Fraction and type(b) is Fraction:
        return a * b
    if isinstance(a, Polar) or isinstance(b, Polar):
        if isinstance(b, Polar):
            a, b = b, a
        if isinstance(b, Polar):
            return Polar(mul(a.mag, b.mag), a.phase + b.phase)
        if isinstance(b, complex):
            return Polar(mul(a.mag, abs(b)), a.phase + cmath.phase(b))
        m = absval(b)
        phase = a.phase + (math.pi if is_negative(b) else 0.0)
        return Polar(mul(a.mag, m), phase)
    if is_exact(a) and is_exact(b):
        ca, ra = _parts(a)
        cb, rb = _parts(b)
        return surd(ca * cb, ra * rb)
    return _inexact(a) * _inexact(b)


def div(a, b) -> Value:
    if type(a) is Fraction and type(b) is Fraction and b:
        return a / b
    if is_zero(b, exact_only=True):
        raise ZeroDivisionError("division by zero")
    if is_exact(b):
        cb, rb = _parts(b)
        inv = surd(1 / (cb * rb), rb)
        return mul(a, inv)
    if isinstance(b, Polar):
        return mul(a, Polar(div(Fraction(1), b.mag), -b.phase))
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return mul(a, 1 / _inexact(b))


def power(a, e) -> Value:
    """``a ** e``; exact for exact ``a`` with integer ``e`` or ``e`` = half-integer."""
    if is_exact(e):
        e = Fraction(e) if not isinstance(e, Surd) else e
    if isinstance(e, Fraction) and is_exact(a):
        if e.denominator == 1:
            n = e.numerator
            if n < 0:
                return div(Fraction(1), power(a, -n))
            ca, ra = _parts(a)
            return surd(ca**n * ra ** (n // 2), ra if n % 2 else 1)
        if e.denominator == 2:
            return power(sqrt_exact(a), e.numerator) if not is_negative(a) else complex(to_float(a)) ** float(e)
    base = _inexact(a)
    ex = _inexact(e)
    if isinstance(base, float) and base < 0 and not float(ex).is_integer():
        return complex(base) ** ex
    if base == 0 and ex < 0:
        raise ZeroDivisionError("zero to a negative power")
    return base**ex


def floor_exact(x) -> Value:
    if isinstance(x, (complex, Polar)):
        raise ArithmeticError("floor of a complex number")
    if isinstance(x, Fraction):
        return Fraction(math.floor(x))
    if isinstance(x, Surd):
        c, k = x.coef, x.rad
        sq = c * c * k
        fl = isqrt(sq.numerator // sq.denominator)
        # c*sqrt(k) is irrational, so it is never an integer
        return Fraction(fl) if c > 0 else Fraction(-fl - 1)
    return Fraction(math.floor(x))


def absval(x) -> Value:
    if type(x) is Fraction:
        return x if x >= 0 else -x
    if isinstance(x, Surd):
        return Surd(abs(x.coef), x.rad)
    if isinstance(x, Polar):
        return x.mag
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(abs(x))
    return abs(x)


def is_negative(x) -> bool:
    if isinstance(x, Surd):
        return x.coef < 0
    if isinstance(x, (complex, Polar)):
        raise ArithmeticError("sign of a complex number")
    return x < 0


def is_zero(x, exact_only: bool = False) -> bool:
    """Exact zero test for exact values, tolerance test otherwise."""
    if type(x) is Fraction:
        return x == 0
    if is_exact(x):
        return _parts(x)[0] == 0
    if isinstance(x, Polar):
        return is_zero(x.mag, exact_only)
    if exact_only:
        return x == 0
    return abs(x) <= ZERO_TOL


def compare(a, b) -> int:
    """Sign of ``a - b`` for real values; exact when both are exact.

    ``math.inf`` is accepted on either side.
    """
    if type(a) is Fraction and type(b) is Fraction:
        return (a > b) - (a < b)
    if is_exact(a) and is_exact(b):
        ca, ra = _parts(a)
        cb, rb = _parts(b)
        if ra == rb:
            return (ca > cb) - (ca < cb)
        sa = (ca > 0) - (ca < 0)
        sb = (cb > 0) - (cb < 0)
        if sa != sb:
            return (sa > sb) - (sa < sb)
        qa, qb = ca * ca * ra, cb * cb * rb
        if sa >= 0:
            return (qa > qb) - (qa < qb)
        return (qa < qb) - (qa > qb)
    fa, fb = float(a), float(b)
    return (fa > fb) - (fa < fb)


def lt(a, b) -> bool:
    return compare(a, b) < 0


def le(a, b) -> bool:
    return compare(a, b) <= 0


def eq(a, b) -> bool:
    return compare(a, b) == 0


def close(a, b, tol: float = ZERO_TOL) -> bool:
    """Exact equality for exact inputs, relative/absolute tolerance otherwise."""
    if is_exact(a) and is_exact(b):
        return eq(a, b)
    fa, fb = float(a), float(b)
    if math.isinf(fa) or math.isinf(fb):
        return fa == fb
    return abs(fa - fb) <= tol * max(1.0, abs(fa), abs(fb))


def vmax(a, b):
    return a if compare(a, b) >= 0 else b


def vmin(a, b):
    return a if compare(a, b) <= 0 else b


def is_integer(x) -> bool:
    return isinstance(x, Fraction) and x.denominator == 1


def parse_number(text: str) -> Value:
    """Parse ``3``, ``-1/2``, ``0.25``, ``2*sqrt(3)``, ``inf`` or a float literal."""
    t = text.strip()
    if t in ("inf", "+inf", "infinity"):
        return INF
    if t.endswith(")") and "sqrt(" in t:
        head, _, rad = t[:-1].partition("sqrt(")
        head = head.rstrip("*").strip()
        coef = Fraction(head) if head not in ("", "+") else Fraction(1)
        if head == "-":
            coef = Fraction(-1)
        return surd(coef, int(rad))
    try:
        return Fraction(t)
    except ValueError:
        return float(t)


def fmt(x) -> str:
    """Canonical text form; inverse of :func:`parse_number` for real values."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Surd):
        if x.coef == 1:
            return f"sqrt({x.rad})"
        if x.coef == -1:
            return f"-sqrt({x.rad})"
        return f"{x.coef}*sqrt({x.rad})"
    if isinstance(x, Polar):
        return fmt(complex(x))
    if isinstance(x, complex):
        return repr(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))
