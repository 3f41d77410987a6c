"""Closed forms for the equal-revenue distribution ``P(X >= x) = 1/x`` on ``[1, inf)``.

Everything here is float64; the constants are transcendental.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import BadWeights, InputError, NoConvergence

MAX_NEWTON = 100


@dataclass(frozen=True)
class ERConstants:
    w: float              # root of w * e**w = 1/e
    brev_er2: float       # best bundle revenue for two i.i.d. ER items, 2(w + 1)
    sep_bun_ratio: float  # 1 + w
    iid_bound: float      # e / (e + 1)
    c57: float            # root of 1 - e**-c = 2(1 - (c + 1) e**-c)

    @property
    def optimal_bundle_price(self):
        return 1 + 1 / self.w

    def to_dict(self):
        return {"w": self.w, "brev_er2": self.brev_er2, "sep_bun_ratio": self.sep_bun_ratio,
                "iid_bound": self.iid_bound, "c57": self.c57,
                "optimal_bundle_price": self.optimal_bundle_price}


def er_sum2_tail(alpha, beta, z):
    """``P(alpha*X1 + beta*X2 >= z)`` for independent ER draws X1, X2."""
    if not (alpha > 0 and beta > 0) or not (math.isfinite(alpha) and math.isfinite(beta)):
        raise BadWeights(f"weights must be positive and finite, got {alpha}, {beta}")
    s = alpha + beta
    if z <= s:
        return 1.0
    ab = alpha * beta
    # log1p keeps precision just above the kink at z = alpha + beta
    val = ab / (z * z) * math.log1p((z * z - s * z) / ab) + s / z
    return min(1.0, max(0.0, val))


def er_sum2_tail_array(alpha, beta, z):
    """Vectorized :func:`er_sum2_tail` over an array of thresholds."""
    if not (alpha > 0 and beta > 0):
        raise BadWeights(f"weights must be positive, got {alpha}, {beta}")
    z = np.asarray(z, dtype=float)
    s, ab = alpha + beta, alpha * beta
    out = np.ones_like(z)
    m = z > s
    zm = z[m]
    out[m] = np.clip(ab / (zm * zm) * np.log1p((zm * zm - s * zm) / ab) + s / zm, 0.0, 1.0)
    return out


def _newton(g, dg, x0, lo, hi, tol):
    """Newton's method guarded by a bracketing interval ``[lo, hi]``.

    A step that leaves the bracket (or a flat derivative) is replaced by
    bisection. The bracket must satisfy ``g(lo) * g(hi) < 0``.
    """
    glo = g(lo)
    x = x0
    for _ in range(MAX_NEWTON):
        gx = g(x)
        if abs(gx) <= tol:
            return x
        if (gx < 0) == (glo < 0):
            lo, glo = x, gx
        else:
            hi = x
        d = dg(x)
        nxt = x - gx / d if d else math.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        x = nxt
    raise NoConvergence(f"root not within {tol} after {MAX_NEWTON} iterations")


def solve_w(tol=1e-12):
    return _newton(lambda w: w * math.exp(w) - math.exp(-1),
                   lambda w: (1 + w) * math.exp(w), 0.3, 0.0, 1.0, tol)


def solve_c57(tol=1e-12):
    # 1 - e^-c - 2(1 - (c+1)e^-c) = (2c + 1)e^-c - 1
    return _newton(lambda c: (2 * c + 1) * math.exp(-c) - 1,
                   lambda c: (1 - 2 * c) * math.exp(-c), 1.2, 0.6, 3.0, tol)


def solve_constants(tol=1e-12):
    if not tol > 0:
        raise InputError("tol must be positive")
    w = solve_w(tol)
    return ERConstants(w=w, brev_er2=2 * (w + 1), sep_bun_ratio=1 + w,
                       iid_bound=math.e / (math.e + 1), c57=solve_c57(tol))


def bundle_revenue_er2(p):
    """Revenue of pricing the bundle of two i.i.d. ER items at ``p``."""
    return p * er_sum2_tail(1.0, 1.0, p)


def brev_er2_via_price_sweep(grid_n=100_000, lo=2.0, hi=100.0):
    """Best bundle price for two ER items by grid search plus golden section.

    Returns ``(price, revenue)``.
    """
    if grid_n < 100:
        raise InputError("grid_n must be at least 100")
    grid = np.geomspace(lo, hi, grid_n)
    revs = grid * er_sum2_tail_array(1.0, 1.0, grid)
    i = int(np.argmax(revs))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid_n - 1)]
    inv_phi = (math.sqrt(5) - 1) / 2
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = bundle_revenue_er2(c), bundle_revenue_er2(d)
    for _ in range(200):
        if b - a <= 1e-13 * b:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = bundle_revenue_er2(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = bundle_revenue_er2(d)
    p = 0.5 * (a + b)
    return float(p), bundle_revenue_er2(float(p))


def equalization_dominance_check(alpha, beta, grid):
    """True when averaging the weights only raises the tail on ``grid``.

    Compares ``P(alpha X1 + beta X2 >= z)`` against the same tail with both
    weights replaced by their mean.
    """
    mean = (alpha + beta) / 2
    z = np.asarray(grid, dtype=float)
    if np.any(z < 0):
        raise InputError("grid points must be nonnegative")
    return bool(np.all(er_sum2_tail_array(alpha, beta, z) <= er_sum2_tail_array(mean, mean, z)))
