"""One-dimensional finite-support value distributions.

Two representations share one type. In exact mode the support and the
probabilities are tuples of :class:`fractions.Fraction`; in float mode they
are read-only float64 arrays. Operations on two distributions stay exact only
when both inputs are exact.
"""
from dataclasses import dataclass
from fractions import Fraction
import heapq
import json

import numpy as np

from . import kernels
from ._numbers import fmt, is_exact, parse_number, to_fraction
from .errors import (BadGrid, BadProbability, BadScale, Empty, InputError,
                     NegativeValue, SizeCap)

DEFAULT_MAX_ATOMS = 100_000
FLOAT_SUM_TOL = 1e-12
MERGE_RTOL = 1e-12
# dense lattice convolution is used for integer supports up to this span
_LATTICE_SPAN = 5_000_000
# memory guard for the generic float path (pairs before merging)
_OUTER_LIMIT = 20_000_000


class DiscreteDist:
    """Distribution of a nonnegative value with finitely many atoms.

    Build instances with :func:`make_dist`; the constructor only checks
    invariants on already-normalized data.
    """

    __slots__ = ("support", "probs", "exact", "_f")

    def __init__(self, support, probs, exact):
        if exact:
            support = tuple(support)
            probs = tuple(probs)
        else:
            support = np.array(support, dtype=float)
            probs = np.array(probs, dtype=float)
            support.flags.writeable = False
            probs.flags.writeable = False
        if len(support) == 0:
            raise Empty("distribution has no atoms")
        if len(support) != len(probs):
            raise InputError("support and probs differ in length")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "exact", bool(exact))
        object.__setattr__(self, "_f", None)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteDist is immutable")

    def __len__(self):
        return len(self.support)

    def __eq__(self, other):
        if not isinstance(other, DiscreteDist):
            return NotImplemented
        if self.exact and other.exact:
            return self.support == other.support and self.probs == other.probs
        a, b = self.as_arrays(), other.as_arrays()
        return (a[0].shape == b[0].shape and np.array_equal(a[0], b[0])
                and np.array_equal(a[1], b[1]))

    def __hash__(self):
        if self.exact:
            return hash((self.support, self.probs))
        return hash((self.support.tobytes(), self.probs.tobytes()))

    def __repr__(self):
        n = len(self)
        if n <= 6:
            atoms = ", ".join(f"{fmt(v)}: {fmt(p)}" for v, p in zip(self.support, self.probs))
        else:
            atoms = f"{n} atoms on [{fmt(self.support[0])}, {fmt(self.support[-1])}]"
        mode = "exact" if self.exact else "float"
        return f"DiscreteDist({{{atoms}}}, {mode})"

    def as_arrays(self):
        """(values, probs) as float64 arrays; cached."""
        if self._f is None:
            if self.exact:
                f = (np.array([float(v) for v in self.support]),
                     np.array([float(p) for p in self.probs]))
            else:
                f = (self.support, self.probs)
            object.__setattr__(self, "_f", f)
        return self._f

    def to_float(self):
        if not self.exact:
            return self
        v, p = self.as_arrays()
        return make_dist(v, p, exact=False)


@dataclass(frozen=True)
class ProductDist:
    """k independently distributed items."""

    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise Empty("a product needs at least one item")
        for d in items:
            if not isinstance(d, DiscreteDist):
                raise InputError("items must be DiscreteDist instances")
        object.__setattr__(self, "items", items)

    @property
    def k(self):
        return len(self.items)

    @property
    def exact(self):
        return all(d.exact for d in self.items)

    @property
    def identical(self):
        first = self.items[0]
        return all(d == first for d in self.items[1:])


def product(*items):
    if len(items) == 1 and not isinstance(items[0], DiscreteDist):
        items = tuple(items[0])
    return ProductDist(tuple(items))


def iid(d, k):
    return ProductDist((d,) * k)


# ---------------------------------------------------------------- construction

def make_dist(support, probs, exact=None):
    """Normalize atoms into a :class:`DiscreteDist`.

    Zero-probability atoms are dropped, repeated values merged, and the
    support sorted. ``exact`` defaults to True when every input is an int,
    Fraction, or string; floats select float mode. With ``exact=True``,
    floats are read through their decimal repr.
    """
    support = list(support)
    probs = list(probs)
    if len(support) != len(probs):
        raise InputError("support and probs differ in length")
    if not support:
        raise Empty("distribution has no atoms")
    if exact is None:
        exact = all(is_exact(x) or isinstance(x, str) for x in support + probs)
    if exact:
        return _make_exact(support, probs)
    return _make_float(support, probs)


def _make_exact(support, probs):
    vals = [to_fraction(v) for v in support]
    ps = [to_fraction(p) for p in probs]
    if any(v < 0 for v in vals):
        raise NegativeValue("support values must be nonnegative")
    if any(p < 0 for p in ps):
        raise BadProbability("probabilities must be nonnegative")
    if sum(ps) != 1:
        raise BadProbability(f"probabilities sum to {fmt(sum(ps))}, not 1")
    acc = {}
    for v, p in zip(vals, ps):
        if p:
            acc[v] = acc.get(v, 0) + p
    if not acc:
        raise Empty("no atom has positive probability")
    keys = sorted(acc)
    return DiscreteDist(keys, [acc[v] for v in keys], exact=True)


def _make_float(support, probs):
    vals = np.array([float(v) for v in support])
    ps = np.array([float(p) for p in probs])
    if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(ps)):
        raise InputError("values and probabilities must be finite")
    if np.any(vals < 0):
        raise NegativeValue("support values must be nonnegative")
    if np.any(ps < 0):
        raise BadProbability("probabilities must be nonnegative")
    total = ps.sum()
    if abs(total - 1.0) > FLOAT_SUM_TOL * max(1, len(ps)):
        raise BadProbability(f"probabilities sum to {total!r}, not 1")
    return _from_float_atoms(vals, ps / total)


def _from_float_atoms(vals, ps, max_atoms=None):
    order = np.argsort(vals, kind="stable")
    v, p = kernels.merge_atoms(np.ascontiguousarray(vals[order]),
                               np.ascontiguousarray(ps[order]), MERGE_RTOL)
    keep = p > 0
    v, p = v[keep], p[keep]
    if v.size == 0:
        raise Empty("no atom has positive probability")
    if max_atoms is not None and v.size > max_atoms:
        raise SizeCap(f"result has {v.size} atoms, cap is {max_atoms}")
    return DiscreteDist(v, p / p.sum(), exact=False)


def point_mass(v):
    return make_dist([v], [1], exact=is_exact(v) or isinstance(v, str))


def uniform(values):
    values = list(values)
    n = len(values)
    if all(is_exact(v) for v in values):
        return make_dist(values, [Fraction(1, n)] * n)
    return make_dist(values, [1.0 / n] * n)


def bernoulli(p, low=0, high=1):
    """Two-point distribution: ``high`` with probability ``p``, else ``low``."""
    if is_exact(p) or isinstance(p, str):
        p = to_fraction(p)
        return make_dist([low, high], [1 - p, p])
    return make_dist([float(low), float(high)], [1.0 - p, p], exact=False)


# ---------------------------------------------------------------- queries

def tail(d, p):
    """P(X >= p), closed at ``p``."""
    if d.exact and is_exact(p):
        p = to_fraction(p)
        return sum((q for v, q in zip(d.support, d.probs) if v >= p), Fraction(0))
    v, q = d.as_arrays()
    return float(q[np.searchsorted(v, float(p), side="left"):].sum())


def tails_at_support(d):
    """P(X >= v) for every support value v, in support order."""
    if d.exact:
        out = []
        acc = Fraction(0)
        for q in reversed(d.probs):
            acc += q
            out.append(acc)
        return out[::-1]
    q = d.as_arrays()[1]
    return np.cumsum(q[::-1])[::-1]


def expectation(d):
    if d.exact:
        return sum((v * q for v, q in zip(d.support, d.probs)), Fraction(0))
    v, q = d.as_arrays()
    return float(v @ q)


def dominates(a, b):
    """True when ``a`` first-order stochastically dominates ``b``.

    Step tails are left-continuous, so comparing at the union of both
    supports covers every threshold.
    """
    if a.exact and b.exact:
        pts = sorted(set(a.support) | set(b.support))
        return all(tail(b, p) <= tail(a, p) for p in pts)
    av, aq = a.as_arrays()
    bv, bq = b.as_arrays()
    pts = np.union1d(av, bv)
    ta = _tail_vec(av, aq, pts)
    tb = _tail_vec(bv, bq, pts)
    return bool(np.all(tb <= ta + FLOAT_SUM_TOL))


def _tail_vec(v, q, pts):
    suffix = np.concatenate([np.cumsum(q[::-1])[::-1], [0.0]])
    return suffix[np.searchsorted(v, pts, side="left")]


# ---------------------------------------------------------------- transforms

def convolve(a, b, max_atoms=DEFAULT_MAX_ATOMS):
    """Distribution of X+Y for independent X ~ a and Y ~ b."""
    if a.exact and b.exact:
        acc = {}
        for v, p in zip(a.support, a.probs):
            for w, q in zip(b.support, b.probs):
                s = v + w
                acc[s] = acc.get(s, 0) + p * q
        if len(acc) > max_atoms:
            raise SizeCap(f"result has {len(acc)} atoms, cap is {max_atoms}")
        keys = sorted(acc)
        return DiscreteDist(keys, [acc[s] for s in keys], exact=True)
    av, aq = a.as_arrays()
    bv, bq = b.as_arrays()
    if _on_integer_lattice(av, bv):
        return _lattice_convolve(av, aq, bv, bq, max_atoms)
    if av.size * bv.size > _OUTER_LIMIT:
        raise SizeCap(f"{av.size}x{bv.size} outer sum exceeds {_OUTER_LIMIT} pairs")
    vals = np.add.outer(av, bv).ravel()
    ps = np.multiply.outer(aq, bq).ravel()
    return _from_float_atoms(vals, ps, max_atoms)


def _on_integer_lattice(av, bv):
    hi = av[-1] + bv[-1]
    return (hi <= _LATTICE_SPAN and np.all(av == np.round(av))
            and np.all(bv == np.round(bv)))


def _lattice_convolve(av, aq, bv, bq, max_atoms):
    a0, b0 = int(av[0]), int(bv[0])
    da = np.zeros(int(av[-1]) - a0 + 1)
    db = np.zeros(int(bv[-1]) - b0 + 1)
    da[av.astype(np.int64) - a0] = aq
    db[bv.astype(np.int64) - b0] = bq
    if da.size * db.size > 4e7:
        n = da.size + db.size - 1
        m = 1 << (n - 1).bit_length()
        dc = np.fft.irfft(np.fft.rfft(da, m) * np.fft.rfft(db, m), m)[:n]
        dc[dc < 1e-300] = 0.0
    else:
        dc = np.convolve(da, db)
    idx = np.flatnonzero(dc > 0)
    if idx.size > max_atoms:
        raise SizeCap(f"result has {idx.size} atoms, cap is {max_atoms}")
    p = dc[idx]
    return DiscreteDist((idx + a0 + b0).astype(float), p / p.sum(), exact=False)


def convolve_power(d, k, max_atoms=DEFAULT_MAX_ATOMS):
    """k-fold self-convolution by repeated squaring."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InputError("k must be a positive integer")
    result = None
    base = d
    k = int(k)
    while True:
        if k & 1:
            result = base if result is None else convolve(result, base, max_atoms)
        k >>= 1
        if not k:
            return result
        base = convolve(base, base, max_atoms)


def convolve_all(dists, max_atoms=DEFAULT_MAX_ATOMS):
    """Sum of independent draws, smallest supports combined first."""
    dists = list(dists)
    if not dists:
        raise Empty("nothing to convolve")
    heap = [(len(d), i, d) for i, d in enumerate(dists)]
    heapq.heapify(heap)
    n = len(heap)
    while len(heap) > 1:
        _, _, a = heapq.heappop(heap)
        _, _, b = heapq.heappop(heap)
        c = convolve(a, b, max_atoms)
        heapq.heappush(heap, (len(c), n, c))
        n += 1
    return heap[0][2]


def scale(d, alpha):
    """Distribution of alpha*X."""
    if alpha <= 0:
        raise BadScale("scale factor must be positive")
    if d.exact and is_exact(alpha):
        a = to_fraction(alpha)
        return DiscreteDist([v * a for v in d.support], d.probs, exact=True)
    v, q = d.as_arrays()
    return DiscreteDist(v * float(alpha), q, exact=False)


def truncate_above(d, m):
    """Distribution of min(X, m)."""
    if m <= 0:
        raise BadScale("truncation point must be positive")
    if d.exact and is_exact(m):
        m = to_fraction(m)
        keep = [(v, p) for v, p in zip(d.support, d.probs) if v < m]
        over = sum((p for v, p in zip(d.support, d.probs) if v >= m), Fraction(0))
        if over:
            keep.append((m, over))
        return DiscreteDist([v for v, _ in keep], [p for _, p in keep], exact=True)
    v, q = d.as_arrays()
    m = float(m)
    below = v < m
    over = q[~below].sum()
    vals = np.append(v[below], m) if over > 0 else v[below]
    ps = np.append(q[below], over) if over > 0 else q[below]
    return DiscreteDist(vals, ps, exact=False)


def er_discretized(r, m, n, exact=None):
    """Equal-revenue distribution scaled by ``r``, discretized on [r, m].

    Atoms sit on a geometric grid ``r = g_0 < ... < g_{n-1} = m``; the atom at
    ``g_i`` carries ``r/g_i - r/g_{i+1}`` and the last one the residual tail
    ``r/m``. Tails therefore equal ``r/g`` at every grid point, every grid
    price earns exactly ``r``, and the result is dominated by ``r * ER``.

    In exact mode interior grid points are rounded to rationals (denominator
    at most 10**6), which keeps all of the above exact.
    """
    if n < 2 or not m > r or r <= 0:
        raise BadGrid("need r > 0, m > r and n >= 2")
    if exact is None:
        exact = is_exact(r) and is_exact(m)
    n = int(n)
    if exact:
        r, m = to_fraction(r), to_fraction(m)
        ratio = float(m) / float(r)
        grid = [r]
        for i in range(1, n - 1):
            g = Fraction(float(r) * ratio ** (i / (n - 1))).limit_denominator(10**6)
            if g <= grid[-1] or g >= m:
                raise BadGrid("grid too fine for rational rounding")
            grid.append(g)
        grid.append(m)
        probs = [r / grid[i] - r / grid[i + 1] for i in range(n - 1)] + [r / m]
        return DiscreteDist(grid, probs, exact=True)
    r, m = float(r), float(m)
    grid = r * (m / r) ** (np.arange(n) / (n - 1))
    grid[-1] = m
    tails = r / grid
    probs = np.append(tails[:-1] - tails[1:], tails[-1])
    return DiscreteDist(grid, probs, exact=False)


def power_law_discretized(gamma, m, n, a=1.0):
    """Density ``c x**-gamma`` on [a, inf), discretized like :func:`er_discretized`.

    Atoms on a geometric grid over [a, m]; each atom carries the mass of the
    cell above it and the last atom the whole tail beyond ``m``. ``gamma=2``
    reproduces the equal-revenue grid.
    """
    if gamma <= 1:
        raise BadGrid("gamma must exceed 1 for a probability density")
    if n < 2 or not m > a or a <= 0:
        raise BadGrid("need a > 0, m > a and n >= 2")
    grid = a * (m / a) ** (np.arange(int(n)) / (int(n) - 1))
    grid[-1] = m
    tails = (grid / a) ** (1.0 - gamma)
    probs = np.append(tails[:-1] - tails[1:], tails[-1])
    return DiscreteDist(grid, probs, exact=False)


# ---------------------------------------------------------------- JSON

def dist_to_dict(d):
    if d.exact:
        return {"support": [fmt(v) for v in d.support],
                "probs": [fmt(p) for p in d.probs]}
    v, q = d.as_arrays()
    return {"support": [float(x) for x in v], "probs": [float(x) for x in q]}


def dist_from_dict(obj):
    try:
        support = [parse_number(x) for x in obj["support"]]
        probs = [parse_number(x) for x in obj["probs"]]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed distribution: {exc}") from None
    exact = not any(isinstance(x, float) for x in support + probs)
    return make_dist(support, probs, exact=exact)


def product_to_dict(p):
    return {"items": [dist_to_dict(d) for d in p.items]}


def product_from_dict(obj):
    """Accepts ``{"items": [...]}`` or a bare distribution (one item)."""
    if not isinstance(obj, dict):
        raise InputError("expected a JSON object")
    if "items" in obj:
        if not isinstance(obj["items"], list):
            raise InputError("'items' must be a list")
        return ProductDist(tuple(dist_from_dict(x) for x in obj["items"]))
    return ProductDist((dist_from_dict(obj),))


def dumps(obj):
    if isinstance(obj, DiscreteDist):
        return json.dumps(dist_to_dict(obj))
    return json.dumps(product_to_dict(obj))


def loads(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    return product_from_dict(obj)

