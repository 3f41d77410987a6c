"""Monte Carlo estimates of bundle revenue where no finite closed form exists.

Random streams come from numpy's Philox counter-based generator. A run with
seed ``s`` and ``shards`` substreams spawns one child ``SeedSequence`` per
shard; each shard draws a fixed slice of the samples, so results depend only
on ``(seed, shards)`` and not on how many threads execute the shards.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np

from . import kernels
from .dist import ProductDist
from .errors import InputError

DEFAULT_GRID_POINTS = 200
DEFAULT_SHARDS = 8
# uniforms per block handed to the summation kernel
_BLOCK = 1 << 22


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    samples: int = 1_000_000
    price_grid: tuple = None
    shards: int = DEFAULT_SHARDS

    def __post_init__(self):
        if self.samples < 1:
            raise InputError("samples must be at least 1")
        if self.shards < 1:
            raise InputError("shards must be at least 1")
        if self.price_grid is not None:
            g = np.asarray(self.price_grid, dtype=float)
            if g.size == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
                raise InputError("price grid must be positive and strictly increasing")


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def shard_rngs(seed, shards):
    return [np.random.Generator(np.random.Philox(s))
            for s in np.random.SeedSequence(seed).spawn(shards)]


def er_from_uniform(u):
    """Inverse cdf of ER; ``u`` is clamped below ``1 - 2**-53``."""
    u = np.minimum(np.asarray(u, dtype=float), 1.0 - kernels.ER_CLAMP)
    return 1.0 / (1.0 - u)


def er_sample(rng, k):
    """``k`` independent ER draws."""
    if k < 1:
        raise InputError("k must be at least 1")
    return er_from_uniform(rng.random(k))


def _split(n, parts):
    base, extra = divmod(n, parts)
    return [base + (i < extra) for i in range(parts)]


def _run_shards(fn, cfg):
    rngs = shard_rngs(cfg.seed, cfg.shards)
    sizes = _split(cfg.samples, cfg.shards)
    workers = min(cfg.shards, os.cpu_count() or 1)
    if workers == 1:
        parts = [fn(r, n) for r, n in zip(rngs, sizes)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(fn, rngs, sizes))
    return np.concatenate(parts)


def er_sum_samples(k, cfg):
    """``cfg.samples`` draws of the sum of ``k`` i.i.d. ER values."""
    rows_per_block = max(1, _BLOCK // k)

    def shard(rng, n):
        out = np.empty(n)
        for start in range(0, n, rows_per_block):
            m = min(rows_per_block, n - start)
            out[start:start + m] = kernels.er_block_sums(rng.random((m, k)))
        return out
    return _run_shards(shard, cfg)


def default_grid(k, points=DEFAULT_GRID_POINTS):
    hi = 4 * k * math.log(k) if k > 1 else 4.0
    return np.geomspace(k, max(hi, k * 1.0001), points)


def _revenue_curve(sorted_sums, prices):
    n = sorted_sums.size
    hits = n - np.searchsorted(sorted_sums, prices, side="left")
    q = hits / n
    return prices * q, prices * np.sqrt(q * (1 - q) / n)


def best_price(sums, grid, refine=True):
    """Maximize ``p * P_hat(S >= p)`` over ``grid``, then a finer grid around the best point.

    Returns ``(price, revenue, stderr)``.
    """
    s = np.sort(np.asarray(sums, dtype=float))
    grid = np.asarray(grid, dtype=float)
    rev, se = _revenue_curve(s, grid)
    i = int(np.argmax(rev))
    if refine and grid.size > 1:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        fine = np.linspace(lo, hi, 201)
        frev, fse = _revenue_curve(s, fine)
        j = int(np.argmax(frev))
        if frev[j] > rev[i]:
            return float(fine[j]), float(frev[j]), float(fse[j])
    return float(grid[i]), float(rev[i]), float(se[i])


def brev_lower_estimate(k, cfg=McConfig()):
    """Estimated best bundle price and revenue for ``k`` i.i.d. ER items.

    Returns ``(price, revenue, stderr)`` with a binomial standard error at
    the chosen price. The maximum over prices is biased slightly upward.
    """
    if k < 1:
        raise InputError("k must be at least 1")
    grid = default_grid(k) if cfg.price_grid is None else np.asarray(cfg.price_grid, float)
    return best_price(er_sum_samples(k, cfg), grid, refine=cfg.price_grid is None)


def growth_table(ks, cfg=McConfig()):
    """Rows ``(k, estimate, stderr, estimate / (k log k))``."""
    rows = []
    for k in ks:
        if k < 2:
            raise InputError("growth rows need k >= 2")
        _, rev, se = brev_lower_estimate(k, cfg)
        rows.append((k, rev, se, rev / (k * math.log(k))))
    return rows


def product_sum_samples(p, cfg):
    """Samples of the total value under a discrete product distribution."""
    if not isinstance(p, ProductDist):
        raise InputError("expected a ProductDist")
    arrays = [d.as_arrays() for d in p.items]

    def shard(rng, n):
        total = np.zeros(n)
        for v, q in arrays:
            cdf = np.cumsum(q)
            idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
            total += v[np.minimum(idx, v.size - 1)]
        return total
    return _run_shards(shard, cfg)


def revenue_at_price(p, price, cfg=McConfig()):
    """Estimated ``price * P(sum >= price)`` and its standard error."""
    s = np.sort(product_sum_samples(p, cfg))
    rev, se = _revenue_curve(s, np.array([float(price)]))
    return float(rev[0]), float(se[0])
