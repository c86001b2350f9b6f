"""Exact rational CSS values.

Lengths and multipliers are held as :class:`fractions.Fraction` end to end;
nothing is rounded before paint time. The textual forms round-trip exactly:
values with a terminating decimal expansion print as the shortest exact
decimal ("12px", "12.5px", "1.2"); everything else prints as a calc()
quotient ("calc(25px/3)", "calc(4/3)"), which browsers evaluate natively.
"""

from __future__ import annotations

import re
from fractions import Fraction

_DECIMAL_RE = re.compile(r"^-?\d+(\.\d+)?$")
_CALC_LENGTH_RE = re.compile(r"^calc\((-?\d+)px/(\d+)\)$")
_CALC_NUMBER_RE = re.compile(r"^calc\((-?\d+)/(\d+)\)$")


def _decimal_digits(denominator: int) -> int | None:
    """Smallest k with denominator | 10^k, or None if no power of ten works."""
    d = denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    return max(twos, fives) if d == 1 else None


def format_fraction(x: Fraction) -> str | None:
    """Shortest exact decimal, or None when the value has none."""
    if x.denominator == 1:
        return str(x.numerator)
    k = _decimal_digits(x.denominator)
    if k is None:
        return None
    scaled = abs(x.numerator) * 10**k // x.denominator
    digits = str(scaled).rjust(k + 1, "0")
    sign = "-" if x.numerator < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def format_length(x: Fraction) -> str:
    dec = format_fraction(x)
    if dec is not None:
        return f"{dec}px"
    return f"calc({x.numerator}px/{x.denominator})"


def format_number(x: Fraction) -> str:
    dec = format_fraction(x)
    if dec is not None:
        return dec
    return f"calc({x.numerator}/{x.denominator})"


def parse_length(text: str) -> Fraction:
    """Parse "12px", "-3.5px" or "calc(25px/3)" to an exact Fraction."""
    s = text.strip()
    m = _CALC_LENGTH_RE.match(s)
    if m:
        return Fraction(int(m.group(1)), int(m.group(2)))
    if s.endswith("px"):
        num = s[:-2].strip()
        if _DECIMAL_RE.match(num):
            return Fraction(num)
    raise ValueError(f"not a length: {text!r}")


def parse_number(text: str) -> Fraction:
    """Parse "1.2" or "calc(4/3)" to an exact Fraction."""
    s = text.strip()
    m = _CALC_NUMBER_RE.match(s)
    if m:
        return Fraction(int(m.group(1)), int(m.group(2)))
    if _DECIMAL_RE.match(s):
        return Fraction(s)
    raise ValueError(f"not a number: {text!r}")


def parse_rational(value: int | float | str) -> Fraction:
    """Lenient rational intake for JSON payloads.

    Accepts numbers, decimal strings, "p/q", and the CSS forms clients read
    straight out of PosterHTML ("12px", "calc(25px/3)", "calc(4/3)").
    """
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # Interpret the float through its shortest repr so 0.1 means 1/10.
        return Fraction(repr(value))
    if isinstance(value, str):
        s = value.strip()
        if "px" in s or s.startswith("calc("):
            try:
                return parse_length(s)
            except ValueError:
                return parse_number(s)
        if "/" in s:
            num, _, den = s.partition("/")
            return Fraction(int(num.strip()), int(den.strip()))
        if _DECIMAL_RE.match(s):
            return Fraction(s)
    raise ValueError(f"not a rational value: {value!r}")


def rational_to_json(x: Fraction) -> int | str:
    """Canonical JSON form: int when integral, else exact decimal or "p/q"."""
    if x.denominator == 1:
        return int(x)
    dec = format_fraction(x)
    return dec if dec is not None else f"{x.numerator}/{x.denominator}"


def round_half_up(x: Fraction) -> int:
    """Round to the nearest integer, halves toward positive infinity."""
    num, den = (x + Fraction(1, 2)).numerator, (x + Fraction(1, 2)).denominator
    return num // den


def ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)
