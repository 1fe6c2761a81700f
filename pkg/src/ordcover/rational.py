"""Small helpers for exact rational values."""

from __future__ import annotations

from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction, str]


def to_fraction(value: Rational) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings. Floats are rejected."""
    if isinstance(value, float):
        raise TypeError(f"floating point value {value!r} not accepted; use 'p/q'")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "." in text or "e" in text.lower():
            raise ValueError(f"rational string must be decimal-free: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fmt(value: Fraction | int) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def floor_log2_inv(s: Fraction) -> int:
    """Largest integer l with 2**l <= 1/s, for 0 < s <= 1."""
    if s <= 0:
        raise ValueError("size must be positive")
    inv = 1 / Fraction(s)
    # floor(inv) has the same floor(log2) as inv because powers of two are integers
    return int(inv.numerator // inv.denominator).bit_length() - 1


def ceil_log2(n: int) -> int:
    if n <= 1:
        return 0
    return (n - 1).bit_length()


def harmonic(k: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)
