"""Finite-precision p-adic numbers and the Haar geometry of balls and circles.

A :class:`PAdic` is an exact finite expansion ``sum(digits[i] * p**(valuation + i))``
together with an absolute precision bound: every digit at a position below
``valuation + precision`` is known, nothing above it is.  Arithmetic follows
the usual capped-absolute rule, so the result of ``x + y`` is exact below
``min(x.abs_precision, y.abs_precision)`` and truncated there.

Radii are always integer exponents: a ball ``B_a(c)`` is ``{y : |y - c| <= p**a}``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Optional, Sequence

DEFAULT_PRECISION = 32

_DIGIT_CHARS = "0123456789abcdefghijklmnopqrstuvwxyz"


class PrimeMismatchError(ValueError):
    """Raised when two p-adic values with different primes are combined."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class PAdic:
    """Immutable p-adic number with a finite digit window.

    Zero is a distinguished value (``is_zero``) with no valuation; all other
    values are normalized so that the leading digit is nonzero.
    """

    __slots__ = ("prime", "valuation", "unit", "precision")

    def __init__(self, prime: int, valuation: Optional[int], unit: int, precision: int):
        # Internal constructor; use the classmethods for anything user facing.
        object.__setattr__(self, "prime", prime)
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "precision", precision)

    def __setattr__(self, name, value):
        raise AttributeError("PAdic values are immutable")

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, prime: int) -> "PAdic":
        return cls(prime, None, 0, 0)

    @classmethod
    def _normalized(cls, prime: int, valuation: int, unit: int, precision: int) -> "PAdic":
        """Build from ``unit * p**valuation`` known to ``precision`` digits,
        stripping leading zero digits and truncating to the window."""
        if precision <= 0:
            return cls.zero(prime)
        unit %= prime ** precision
        if unit == 0:
            return cls.zero(prime)
        shift = _int_valuation(unit, prime)
        return cls(prime, valuation + shift, unit // prime ** shift, precision - shift)

    @classmethod
    def from_digits(cls, prime: int, valuation: int, digits: Sequence[int]) -> "PAdic":
        if not is_prime(prime):
            raise ValueError(f"{prime} is not prime")
        unit = 0
        for i, d in enumerate(digits):
            if not 0 <= d < prime:
                raise ValueError(f"digit {d} out of range for p={prime}")
            unit += d * prime ** i
        return cls._normalized(prime, valuation, unit, len(digits))

    @classmethod
    def from_int(cls, n: int, prime: int, precision: int = DEFAULT_PRECISION) -> "PAdic":
        return cls.from_fraction(Fraction(n), prime, precision)

    @classmethod
    def from_fraction(cls, q, prime: int, precision: int = DEFAULT_PRECISION) -> "PAdic":
        """Expand a rational number to ``precision`` significant digits."""
        if not is_prime(prime):
            raise ValueError(f"{prime} is not prime")
        if precision < 1:
            raise ValueError("precision must be positive")
        q = Fraction(q)
        if q == 0:
            return cls.zero(prime)
        num, den = q.numerator, q.denominator
        vn, vd = _int_valuation(num, prime), _int_valuation(den, prime)
        num //= prime ** vn
        den //= prime ** vd
        mod = prime ** precision
        unit = num * pow(den, -1, mod) % mod
        return cls(prime, vn - vd, unit, precision)

    @classmethod
    def from_unit_integer(cls, prime: int, valuation: int, unit: int, precision: int) -> "PAdic":
        """``unit * p**valuation`` truncated to ``precision`` digits (leading zeros allowed)."""
        return cls._normalized(prime, valuation, unit, precision)

    # -- basic accessors ---------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.valuation is None

    @property
    def digits(self) -> tuple:
        if self.is_zero:
            return ()
        out = []
        u = self.unit
        for _ in range(self.precision):
            u, d = divmod(u, self.prime)
            out.append(d)
        return tuple(out)

    @property
    def abs_precision(self) -> float:
        """Position below which every digit is known (``inf`` for zero)."""
        if self.is_zero:
            return math.inf
        return self.valuation + self.precision

    def digit(self, k: int) -> int:
        """The digit ``a_x(k)`` at position ``k`` (0 outside the stored window)."""
        if self.is_zero or k < self.valuation or k >= self.valuation + self.precision:
            return 0
        return (self.unit // self.prime ** (k - self.valuation)) % self.prime

    def radius_exponent(self) -> Optional[int]:
        """``r`` with ``|x| = p**r``; ``None`` for zero."""
        return None if self.is_zero else -self.valuation

    def to_fraction(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.prime) ** self.valuation

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "PAdic") -> None:
        if not isinstance(other, PAdic):
            raise TypeError(f"expected PAdic, got {type(other).__name__}")
        if other.prime != self.prime:
            raise PrimeMismatchError(f"primes differ: {self.prime} vs {other.prime}")

    def _addsub(self, other: "PAdic", sign: int) -> "PAdic":
        self._check(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other if sign > 0 else other._neg()
        p = self.prime
        v = min(self.valuation, other.valuation)
        n = min(self.abs_precision, other.abs_precision)
        u = self.unit * p ** (self.valuation - v) + sign * other.unit * p ** (other.valuation - v)
        return PAdic._normalized(p, v, u, int(n) - v)

    def _neg(self) -> "PAdic":
        if self.is_zero:
            return self
        return PAdic._normalized(self.prime, self.valuation, -self.unit, self.precision)

    def __add__(self, other: "PAdic") -> "PAdic":
        return self._addsub(other, 1)

    def __sub__(self, other: "PAdic") -> "PAdic":
        return self._addsub(other, -1)

    def __neg__(self) -> "PAdic":
        return self._neg()

    def __mul__(self, other: "PAdic") -> "PAdic":
        self._check(other)
        if self.is_zero or other.is_zero:
            return PAdic.zero(self.prime)
        d = min(self.precision, other.precision)
        return PAdic._normalized(self.prime, self.valuation + other.valuation, self.unit * other.unit, d)

    def __abs__(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.prime) ** (-self.valuation)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PAdic):
            return NotImplemented
        return (self.prime, self.valuation, self.unit, self.precision) == (
            other.prime, other.valuation, other.unit, other.precision)

    def __hash__(self) -> int:
        return hash((self.prime, self.valuation, self.unit, self.precision))

    def __repr__(self) -> str:
        return f"PAdic({format_padic(self)!r})"


def valuation(x: PAdic) -> float:
    """``v(x)``, with ``math.inf`` for zero."""
    return math.inf if x.is_zero else x.valuation


def arithmetic(op: Literal["add", "sub", "mul"], x: PAdic, y: PAdic) -> PAdic:
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    raise ValueError(f"unknown op {op!r}")


def fractional_part(x: PAdic) -> Fraction:
    """``{x}``: the part of the expansion at negative positions, in ``[0, 1)``."""
    if x.is_zero or x.valuation >= 0:
        return Fraction(0)
    k = -x.valuation
    return Fraction(x.unit % x.prime ** k, x.prime ** k)


def character(x: PAdic) -> complex:
    """The rank-0 additive character ``exp(2 pi i {x})``."""
    q = fractional_part(x)
    if q == 0:
        return complex(1.0, 0.0)
    # reduce to (-1/2, 1/2] before going to floating point
    if q > Fraction(1, 2):
        q -= 1
    return cmath.exp(2j * math.pi * float(q))


# -- regions -----------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    kind: Literal["ball", "circle"]
    center: PAdic
    exponent: int

    def __post_init__(self):
        if self.kind not in ("ball", "circle"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if not isinstance(self.exponent, int):
            raise TypeError("radius exponent must be an integer")


def ball(a: int, center: PAdic) -> Region:
    return Region("ball", center, a)


def circle(r: int, center: PAdic) -> Region:
    return Region("circle", center, r)


def region_contains(region: Region, x: PAdic) -> bool:
    d = x - region.center
    if d.is_zero:
        return region.kind == "ball"
    r = -d.valuation
    if region.kind == "ball":
        return r <= region.exponent
    return r == region.exponent


def haar_measure(region: Region) -> Fraction:
    p = region.center.prime
    m = Fraction(p) ** region.exponent
    if region.kind == "circle":
        m *= 1 - Fraction(1, p)
    return m


def ball_measure(p: int, a: int) -> Fraction:
    return Fraction(p) ** a


def circle_measure(p: int, r: int) -> Fraction:
    return Fraction(p) ** r * (1 - Fraction(1, p))


# -- sampling ----------------------------------------------------------------

def uniform_ball_sample(a: int, center: PAdic, depth: int, rng) -> PAdic:
    """Haar-uniform point of ``B_a(center)`` resolved to ``depth`` digits below the radius."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    p = center.prime
    gen = rng.generator
    ds = gen.integers(0, p, size=depth)
    unit = 0
    for d in reversed(ds.tolist()):
        unit = unit * p + d
    delta = PAdic._normalized(p, -a, unit, depth)
    if delta.is_zero:
        # keep the known window so the result still carries precision -a + depth
        return center if center.abs_precision <= -a + depth else _truncate(center, -a + depth)
    return center + delta


def uniform_circle_sample(r: int, center: PAdic, depth: int, rng) -> PAdic:
    """Uniform point of ``S_r(center)``: nonzero leading digit, then ``depth - 1`` free digits."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    p = center.prime
    gen = rng.generator
    lead = int(gen.integers(1, p))
    unit = lead
    if depth > 1:
        rest = gen.integers(0, p, size=depth - 1).tolist()
        scale = p
        for d in rest:
            unit += d * scale
            scale *= p
    delta = PAdic(p, -r, unit, depth)
    return center + delta


def _truncate(x: PAdic, abs_prec: int) -> PAdic:
    if x.is_zero:
        return x
    return PAdic._normalized(x.prime, x.valuation, x.unit, abs_prec - x.valuation)


# -- text format -------------------------------------------------------------

def format_padic(x: PAdic) -> str:
    """``p:v:d0d1...`` with digits little-endian from the valuation; ``p:zero`` for zero."""
    if x.is_zero:
        return f"{x.prime}:zero"
    ds = x.digits
    if x.prime <= len(_DIGIT_CHARS):
        body = "".join(_DIGIT_CHARS[d] for d in ds)
    else:
        body = ".".join(str(d) for d in ds)
    return f"{x.prime}:{x.valuation}:{body}"


def parse_padic(text: str) -> PAdic:
    parts = text.strip().split(":")
    try:
        p = int(parts[0])
    except ValueError:
        raise ValueError(f"bad p-adic literal {text!r}") from None
    if not is_prime(p):
        raise ValueError(f"bad p-adic literal {text!r}: {p} is not prime")
    if len(parts) == 2 and parts[1] == "zero":
        return PAdic.zero(p)
    if len(parts) != 3 or not parts[2]:
        raise ValueError(f"bad p-adic literal {text!r}")
    v = int(parts[1])
    if p <= len(_DIGIT_CHARS):
        try:
            ds = [_DIGIT_CHARS.index(c) for c in parts[2].lower()]
        except ValueError:
            raise ValueError(f"bad digit in {text!r}") from None
    else:
        ds = [int(c) for c in parts[2].split(".")]
    return PAdic.from_digits(p, v, ds)
