"""Exact rational helpers shared across the package.

All quantities (clock values, parameters, execution times) are
``fractions.Fraction``; nothing in the package ever rounds.  The helpers here
cover the wire formats: JSON carries rationals as integers, decimal strings,
or ``"p/q"`` strings so that exactness survives serialization.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

RationalLike = Union[int, str, Fraction]

_DECIMAL_RE = re.compile(r"^-?\d+(\.\d+)?$")
_RATIO_RE = re.compile(r"^(-?\d+)\s*/\s*(\d+)$")


def to_fraction(value: RationalLike) -> Fraction:
    """Parse an exact rational from an int, Fraction, ``"p/q"`` or decimal string.

    Floats are rejected on purpose: a float argument means some caller already
    lost exactness.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise TypeError(f"refusing inexact float {value!r}; pass a string or int")
    if isinstance(value, str):
        text = value.strip()
        m = _RATIO_RE.match(text)
        if m:
            num, den = int(m.group(1)), int(m.group(2))
            if den == 0:
                raise ValueError(f"zero denominator in {value!r}")
            return Fraction(num, den)
        if _DECIMAL_RE.match(text):
            return Fraction(text)
        raise ValueError(f"cannot parse rational from {value!r}")
    raise TypeError(f"cannot parse rational from {type(value).__name__}")


def format_fraction(value: Fraction) -> str:
    """Render a Fraction in the compact wire form (``"3"`` or ``"7/2"``)."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def json_number(value: Fraction) -> Union[int, str]:
    """JSON form: plain int when integral, ``"p/q"`` string otherwise."""
    if value.denominator == 1:
        return value.numerator
    return format_fraction(value)


def rational_lcm(*values: Fraction) -> Fraction:
    """Least common multiple of positive rationals.

    For fractions in lowest terms, lcm(a/b, c/d) = lcm(a, c) / gcd(b, d).
    """
    if not values:
        raise ValueError("lcm of no values")
    nums = 1
    dens = 0
    for v in values:
        if v <= 0:
            raise ValueError("lcm requires positive values")
        nums = math.lcm(nums, v.numerator)
        dens = math.gcd(dens, v.denominator)
    return Fraction(nums, dens)


def ceil_div(value: Fraction, unit: Fraction) -> int:
    """ceil(value / unit) as an int, exact."""
    q = value / unit
    return math.ceil(q)


def floor_div(value: Fraction, unit: Fraction) -> int:
    """floor(value / unit) as an int, exact."""
    q = value / unit
    return math.floor(q)
