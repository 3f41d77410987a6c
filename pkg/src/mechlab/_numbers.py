"""Scalar coercion and formatting shared by the JSON readers and writers."""
from fractions import Fraction
import numbers

import numpy as np


def is_exact(x):
    return isinstance(x, (int, Fraction, np.integer)) and not isinstance(x, bool)


def to_fraction(x):
    """Convert ints, Fractions, and "p/q" or decimal strings to a Fraction.

    Floats go through their shortest repr, so 0.1 becomes 1/10.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    if isinstance(x, numbers.Rational):
        return Fraction(x.numerator, x.denominator)
    raise TypeError(f"cannot read {x!r} as a rational")


def parse_number(x):
    """JSON scalar -> Fraction (strings, ints) or float (JSON doubles)."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(x, float):
        return x
    return to_fraction(x)


def fmt(x):
    """Rationals print as "p/q" (or "n"); floats with 17 significant digits."""
    if isinstance(x, (Fraction, int, np.integer)) and not isinstance(x, bool):
        x = Fraction(x)
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    return format(float(x), ".17g")


def as_float(x):
    return float(x)
