"""Hot inner loops, each with a numba version and a numpy version.

The public names dispatch on :data:`mechlab._accel.BACKEND`. Both variants are
importable directly (``*_numba`` / ``*_numpy``) for cross-checks and the
benchmark script.
"""
import numpy as np

from ._accel import USE_NUMBA, jit

# 2**-53: keeps 1/(1-u) finite for u drawn from [0, 1).
ER_CLAMP = 2.0 ** -53


# ---------------------------------------------------------------- ratio test

def _ratio_test_loop(w, dw, tol):
    best = np.inf
    n = w.shape[0]
    for i in range(n):
        d = dw[i]
        if d < -tol:
            r = w[i] / (-d)
            if r < 0.0:
                r = 0.0
            if r < best:
                best = r
    if best == np.inf:
        return best, -1
    for i in range(n):
        d = dw[i]
        if d < -tol:
            r = w[i] / (-d)
            if r < 0.0:
                r = 0.0
            if r <= best + tol:
                return r, i
    return best, -1


def ratio_test_numpy(w, dw, tol):
    """Smallest step ``t`` keeping ``w + t*dw >= 0``; ties go to the lowest index.

    Returns ``(inf, -1)`` when nothing blocks.
    """
    idx = np.flatnonzero(dw < -tol)
    if idx.size == 0:
        return np.inf, -1
    r = np.maximum(w[idx] / -dw[idx], 0.0)
    best = r.min()
    j = np.flatnonzero(r <= best + tol)[0]
    return float(r[j]), int(idx[j])


ratio_test_numba = jit(_ratio_test_loop)


# ---------------------------------------------------------------- atom merge

def _merge_atoms_loop(values, probs, rtol):
    n = values.shape[0]
    out_v = np.empty(n)
    out_p = np.empty(n)
    m = 0
    for i in range(n):
        v = values[i]
        if m > 0 and v - values[i - 1] <= rtol * abs(v):
            out_p[m - 1] += probs[i]
        else:
            out_v[m] = v
            out_p[m] = probs[i]
            m += 1
    return out_v[:m], out_p[:m]


def merge_atoms_numpy(values, probs, rtol):
    """Merge runs of sorted values whose consecutive gaps are within ``rtol``.

    A merged run keeps its smallest value and the summed probability.
    """
    if values.size == 0:
        return values.copy(), probs.copy()
    gap = np.diff(values)
    new = np.empty(values.size, dtype=bool)
    new[0] = True
    new[1:] = gap > rtol * np.abs(values[1:])
    starts = np.flatnonzero(new)
    return values[starts], np.add.reduceat(probs, starts)


merge_atoms_numba = jit(_merge_atoms_loop)


# ---------------------------------------------------------------- ER block sums

def _er_block_sums_loop(u):
    n, k = u.shape
    out = np.empty(n)
    lim = 1.0 - ER_CLAMP
    for i in range(n):
        acc = 0.0
        for j in range(k):
            x = u[i, j]
            if x > lim:
                x = lim
            acc += 1.0 / (1.0 - x)
        out[i] = acc
    return out


def er_block_sums_numpy(u):
    """Row sums of inverse-cdf ER draws ``1/(1-u)`` for a block of uniforms."""
    return (1.0 / (1.0 - np.minimum(u, 1.0 - ER_CLAMP))).sum(axis=1)


er_block_sums_numba = jit(_er_block_sums_loop)


# ---------------------------------------------------------------- pairwise gaps

def _pair_gaps_loop(values, alloc, pay):
    # max over (x, x') of u(x reports x') - u(x), and of -(x - x').(q(x) - q(x'))
    n, k = values.shape
    ic = 0.0
    mono = 0.0
    for a in range(n):
        own = -pay[a]
        for j in range(k):
            own += values[a, j] * alloc[a, j]
        for b in range(n):
            dev = -pay[b]
            cross = 0.0
            for j in range(k):
                dev += values[a, j] * alloc[b, j]
                cross += (values[a, j] - values[b, j]) * (alloc[a, j] - alloc[b, j])
            if dev - own > ic:
                ic = dev - own
            if -cross > mono:
                mono = -cross
    return ic, mono


def pair_gaps_numpy(values, alloc, pay):
    """Largest IC gain from misreporting and largest monotonicity violation."""
    util = values @ alloc.T - pay[None, :]
    own = np.diag(util)
    ic = max(0.0, float((util - own[:, None]).max()))
    dx = values[:, None, :] - values[None, :, :]
    dq = alloc[:, None, :] - alloc[None, :, :]
    mono = max(0.0, float(-(dx * dq).sum(axis=2).min()))
    return ic, mono


pair_gaps_numba = jit(_pair_gaps_loop)


# ---------------------------------------------------------------- menu choice

def _menu_revenues_loop(worth, prices, masses, tol):
    # worth[t, s]: value of option s to type t; prices[c, s]: price of option s
    # in candidate menu c (inf = not offered). The empty option is implicit.
    n_menu, n_opt = prices.shape
    n_type = worth.shape[0]
    out = np.zeros(n_menu)
    for c in range(n_menu):
        total = 0.0
        for t in range(n_type):
            best_u = 0.0
            for s in range(n_opt):
                if prices[c, s] != np.inf and worth[t, s] - prices[c, s] > best_u:
                    best_u = worth[t, s] - prices[c, s]
            best_p = 0.0
            for s in range(n_opt):
                p = prices[c, s]
                if p != np.inf and worth[t, s] - p >= best_u - tol and p > best_p:
                    best_p = p
            total += masses[t] * best_p
        out[c] = total
    return out


def menu_revenues_numpy(worth, prices, masses, tol):
    """Expected payment of each candidate menu, ties going to the higher price.

    ``worth`` is types x options, ``prices`` is menus x options with ``inf``
    marking options that are not offered.
    """
    u = worth[None, :, :] - prices[:, None, :]
    u = np.concatenate([u, np.zeros(u.shape[:2] + (1,))], axis=2)
    pr = np.concatenate([np.broadcast_to(prices[:, None, :], u.shape[:2] + (prices.shape[1],)),
                         np.zeros(u.shape[:2] + (1,))], axis=2)
    best = u.max(axis=2, keepdims=True)
    paid = np.where(u >= best - tol, pr, -np.inf).max(axis=2)
    return paid @ masses


menu_revenues_numba = jit(_menu_revenues_loop)


if USE_NUMBA:
    ratio_test = ratio_test_numba
    merge_atoms = merge_atoms_numba
    er_block_sums = er_block_sums_numba
    pair_gaps = pair_gaps_numba
    menu_revenues = menu_revenues_numba
else:
    ratio_test = ratio_test_numpy
    merge_atoms = merge_atoms_numpy
    er_block_sums = er_block_sums_numpy
    pair_gaps = pair_gaps_numpy
    menu_revenues = menu_revenues_numpy
