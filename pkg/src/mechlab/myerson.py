"""Single-item posted pricing and the simple multi-item benchmarks.

For a finite-support value X the revenue curve ``p * P(X >= p)`` rises
linearly between atoms and drops just after each atom, so the supremum over
all ``p >= 0`` is attained at a support value. Only atoms are searched.
"""
from dataclasses import dataclass

import numpy as np

from . import dist as _dist
from ._numbers import is_exact, to_fraction
from .errors import InputError, SupportBelowFloor

# float-mode maximizers: revenue within this relative gap of the best
PRICE_RTOL = 1e-12


@dataclass(frozen=True)
class PriceResult:
    revenue: object
    optimal_prices: tuple
    chosen_price: object


def rev1(d):
    """Optimal take-it-or-leave-it price for one item."""
    tails = _dist.tails_at_support(d)
    if d.exact:
        revs = [v * t for v, t in zip(d.support, tails)]
        best = max(revs)
        prices = tuple(v for v, r in zip(d.support, revs) if r == best)
        return PriceResult(best, prices, prices[0])
    v = d.as_arrays()[0]
    revs = v * tails
    best = float(revs.max())
    prices = tuple(float(x) for x in v[revs >= best - PRICE_RTOL * abs(best)])
    return PriceResult(best, prices, prices[0])


def srev(p):
    """Revenue from pricing every item separately at its own optimal price."""
    total = rev1(p.items[0]).revenue
    for d in p.items[1:]:
        total = total + rev1(d).revenue
    return total


def brev(p, max_atoms=_dist.DEFAULT_MAX_ATOMS):
    """Optimal single price for the grand bundle."""
    return rev1(_dist.convolve_all(p.items, max_atoms))


def val(p):
    """Expected total value, an upper bound on any IR revenue."""
    total = _dist.expectation(p.items[0])
    for d in p.items[1:]:
        total = total + _dist.expectation(d)
    return total


def revenue_at(d, price):
    """Revenue of posting ``price``: ``price * P(X >= price)``."""
    return price * _dist.tail(d, price)


def constrained_rev1(d, x0, q0, b0):
    """Best revenue when every type keeps allocation >= q0 and utility >= b0.

    The support must lie in [x0, inf). Closed form
    ``(1 - q0) * rev1(d) + q0 * x0 - b0``.
    """
    exact = d.exact and all(is_exact(t) for t in (x0, q0, b0))
    if exact:
        x0, q0, b0 = to_fraction(x0), to_fraction(q0), to_fraction(b0)
    else:
        x0, q0, b0 = float(x0), float(q0), float(b0)
    if not 0 <= q0 <= 1:
        raise InputError("q0 must lie in [0, 1]")
    if b0 < 0 or x0 < 0:
        raise InputError("x0 and b0 must be nonnegative")
    lowest = d.support[0]
    if lowest < x0:
        raise SupportBelowFloor(f"atom {lowest} lies below the floor {x0}")
    r = rev1(d).revenue
    if not exact:
        r = float(r)
    return (1 - q0) * r + q0 * x0 - b0


def rev1_arrays(values, probs):
    """Float revenue and price for raw (unsorted, unmerged) atoms.

    Used where materializing a merged distribution would be wasteful, e.g.
    Monte Carlo sums.
    """
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=float)[order]
    q = np.asarray(probs, dtype=float)[order]
    tails = np.cumsum(q[::-1])[::-1]
    # ties: the tail at a repeated value counts every copy
    first = np.searchsorted(v, v, side="left")
    revs = v * tails[first]
    i = int(np.argmax(revs))
    return float(revs[i]), float(v[i])

