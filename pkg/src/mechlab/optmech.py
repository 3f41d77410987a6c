"""Optimal mechanisms for one additive buyer with independent discrete values.

The direct LP has, for every buyer type x, allocation probabilities
``q(x) in [0,1]^k`` and a free payment ``s(x)``. It maximizes expected
payment subject to incentive compatibility for every ordered pair of types
and individual rationality for every type. Nonnegative payments are not
imposed; at an optimum the zero type (when present) pays nothing anyway.
"""
from dataclasses import dataclass
from fractions import Fraction
import itertools
import os

import numpy as np

from . import kernels, simplex
from ._numbers import fmt
from .dist import ProductDist
from .errors import BadMenu, KTooLarge, ShapeMismatch, SizeCap, TooManyTypes

DEFAULT_MAX_TYPES = 400


def max_types_default():
    env = os.environ.get("MECHLAB_MAX_TYPES")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return DEFAULT_MAX_TYPES


@dataclass(frozen=True)
class TypeSpace:
    """All buyer types (tuples of item values) with their probabilities."""

    types: tuple
    masses: tuple
    exact: bool

    @property
    def k(self):
        return len(self.types[0])

    def __len__(self):
        return len(self.types)

    def values_array(self):
        return np.array([[float(v) for v in t] for t in self.types])


@dataclass(frozen=True)
class MechanismTable:
    alloc: tuple   # per type, a k-tuple in [0, 1]
    pay: tuple     # per type


@dataclass(frozen=True)
class Residuals:
    ic: object
    ir: object
    npt: object
    monotone: object

    def passes(self, tol=0):
        return max(self.ic, self.ir, self.monotone) <= tol


@dataclass(frozen=True)
class LPSolution:
    value: object
    table: MechanismTable
    residuals: Residuals
    mode: str
    iterations: int = 0

    def to_dict(self):
        conv = fmt
        return {
            "value": conv(self.value),
            "alloc": [[conv(v) for v in q] for q in self.table.alloc],
            "pay": [conv(v) for v in self.table.pay],
            "residuals": {"ic": conv(self.residuals.ic), "ir": conv(self.residuals.ir),
                          "npt": conv(self.residuals.npt),
                          "monotone": conv(self.residuals.monotone)},
            "mode": self.mode,
        }


def build_types(p, max_types=None):
    """Lexicographic enumeration of the product support."""
    if max_types is None:
        max_types = max_types_default()
    count = 1
    for d in p.items:
        count *= len(d)
    if count > max_types:
        raise TooManyTypes(f"{count} types exceed the cap of {max_types}")
    exact = p.exact
    if exact:
        supports = [list(zip(d.support, d.probs)) for d in p.items]
    else:
        supports = [list(zip(*(arr.tolist() for arr in d.as_arrays()))) for d in p.items]
    types, masses = [], []
    for combo in itertools.product(*supports):
        types.append(tuple(v for v, _ in combo))
        m = Fraction(1) if exact else 1.0
        for _, q in combo:
            m *= q
        masses.append(m)
    return TypeSpace(tuple(types), tuple(masses), exact)


def mechanism_lp(types, masses, q_floor=0, utility_floor=0):
    """Assemble the IC/IR linear program over explicit types.

    Columns: ``q[t, i]`` at ``t*k + i`` then ``s[t]`` at ``N*k + t``. Rows: IC
    for each ordered pair (a, b), a != b, then IR per type. ``q_floor`` and
    ``utility_floor`` add the lower bounds ``q(x) >= q_floor`` and
    ``x.q(x) - s(x) >= utility_floor`` (both zero for the plain problem).
    Masses may be zero, which admits constraint-only types.
    """
    N = len(types)
    k = len(types[0])
    F = Fraction
    X = [[F(v) for v in t] for t in types]
    qf, uf = F(q_floor), F(utility_floor)
    scol = N * k
    rows, b = [], []
    for a in range(N):
        xa = X[a]
        for bb in range(N):
            if a == bb:
                continue
            row = [(scol + a, F(1)), (scol + bb, F(-1))]
            for i in range(k):
                if xa[i]:
                    row.append((a * k + i, -xa[i]))
                    row.append((bb * k + i, xa[i]))
            rows.append(row)
            b.append(F(0))
    for a in range(N):
        row = [(scol + a, F(1))] + [(a * k + i, -X[a][i]) for i in range(k) if X[a][i]]
        rows.append(row)
        b.append(-uf)
    n = N * (k + 1)
    c = [F(0)] * (N * k) + [F(m) for m in masses]
    lo = [qf] * (N * k) + [None] * N
    hi = [F(1)] * (N * k) + [None] * N
    # feasible start: every type gets q_floor of each item at one common price
    s0 = min(qf * sum(x) for x in X) - uf
    x0 = [qf] * (N * k) + [s0] * N
    return simplex.LinearProgram(n, rows, b, c, lo, hi, x0)


def _scaled(types):
    """Divide all values by the largest one (float phase conditioning)."""
    top = max((max(t) for t in types), default=0)
    if not top:
        return types, 1
    return tuple(tuple(Fraction(v) / Fraction(top) for v in t) for t in types), Fraction(top)


def solve_optimal(p, exact=None, max_types=None, warm_start=True):
    """Revenue-optimal mechanism and its value.

    ``exact`` defaults to the product's own mode. Exact solves go through the
    float phase for a candidate basis, then certify and finish in rationals.
    """
    ts = build_types(p, max_types) if isinstance(p, ProductDist) else p
    if exact is None:
        exact = ts.exact
    return solve_types(ts, exact=exact, warm_start=warm_start)


def solve_types(ts, exact=True, warm_start=True, q_floor=0, utility_floor=0):
    N, k = len(ts), ts.k
    if exact:
        types = tuple(tuple(Fraction(v) for v in t) for t in ts.types)
        masses = tuple(Fraction(m) for m in ts.masses)
        scaled, top = _scaled(types)
        lp = mechanism_lp(scaled, masses, q_floor, Fraction(utility_floor) / top)
        res = simplex.solve(lp, exact=True, warm_start=warm_start)
        x = res.x
        alloc = tuple(tuple(x[t * k + i] for i in range(k)) for t in range(N))
        pay = tuple(x[N * k + t] * top for t in range(N))
        value = res.value * top
        mode = "exact"
    else:
        types = tuple(tuple(Fraction(float(v)) for v in t) for t in ts.types)
        masses = tuple(Fraction(float(m)) for m in ts.masses)
        scaled, top = _scaled(types)
        lp = mechanism_lp(scaled, masses, q_floor, Fraction(float(utility_floor)) / top)
        res = simplex.solve(lp, exact=False)
        x = np.asarray(res.x, dtype=float)
        topf = float(top)
        alloc = tuple(tuple(float(min(max(x[t * k + i], 0.0), 1.0)) for i in range(k))
                      for t in range(N))
        pay = tuple(float(x[N * k + t]) * topf for t in range(N))
        value = float(res.value) * topf
        mode = "float"
    table = MechanismTable(alloc, pay)
    if not q_floor and not utility_floor:
        # the shift would break an imposed utility floor
        table = npt_shift(table, ts)
    if mode == "exact":
        value = mechanism_revenue(table, ts)
    resid = validate(table, ts)
    return LPSolution(value, table, resid, mode, res.iterations)


def npt_shift(table, ts):
    """Shift payments up by ``-s(0)`` when the all-zeros type pays a negative amount."""
    for t, x in enumerate(ts.types):
        if all(v == 0 for v in x):
            s0 = table.pay[t]
            if s0 < 0:
                return MechanismTable(table.alloc, tuple(s - s0 for s in table.pay))
            break
    return table


def _check_shape(table, ts):
    if len(table.alloc) != len(ts) or len(table.pay) != len(ts):
        raise ShapeMismatch("table and type space differ in size")
    if any(len(q) != ts.k for q in table.alloc):
        raise ShapeMismatch("allocation vectors must have k entries")


def validate(table, ts, tol=None):
    """Largest IC, IR, NPT, and weak-monotonicity violations.

    Exact inputs give exact residuals; any float entry switches to the float
    kernel. ``tol`` is accepted for symmetry with :meth:`Residuals.passes`.
    """
    _check_shape(table, ts)
    exact = ts.exact and all(isinstance(v, (int, Fraction)) for q in table.alloc for v in q) \
        and all(isinstance(v, (int, Fraction)) for v in table.pay)
    if exact:
        X = ts.types
        util_own = [sum((xi * qi for xi, qi in zip(x, table.alloc[a])), Fraction(0)) - table.pay[a]
                    for a, x in enumerate(X)]
        ic = Fraction(0)
        mono = Fraction(0)
        for a, x in enumerate(X):
            for bb, xb in enumerate(X):
                if a == bb:
                    continue
                dev = sum((xi * qi for xi, qi in zip(x, table.alloc[bb])), Fraction(0)) - table.pay[bb]
                ic = max(ic, dev - util_own[a])
                cross = sum(((xi - yi) * (qa - qb) for xi, yi, qa, qb
                             in zip(x, xb, table.alloc[a], table.alloc[bb])), Fraction(0))
                mono = max(mono, -cross)
        ir = max([Fraction(0)] + [-u for u in util_own])
        npt = max([Fraction(0)] + [-s for s in table.pay])
        return Residuals(ic, ir, npt, mono)
    V = ts.values_array()
    Q = np.array([[float(v) for v in q] for q in table.alloc])
    S = np.array([float(v) for v in table.pay])
    ic, mono = kernels.pair_gaps(V, Q, S)
    util = (V * Q).sum(axis=1) - S
    ir = max(0.0, float(-util.min()))
    npt = max(0.0, float(-S.min()))
    return Residuals(float(ic), ir, npt, float(mono))


def mechanism_revenue(table, ts):
    """Expected payment under the type distribution."""
    _check_shape(table, ts)
    total = Fraction(0) if ts.exact and all(isinstance(s, (int, Fraction)) for s in table.pay) else 0.0
    for m, s in zip(ts.masses, table.pay):
        total += m * s if isinstance(total, Fraction) else float(m) * float(s)
    return total


def symmetrize(table, ts):
    """Average a mechanism over all coordinate permutations.

    For identically distributed items this preserves IC, IR, and revenue.
    """
    k = ts.k
    index = {t: a for a, t in enumerate(ts.types)}
    perms = list(itertools.permutations(range(k)))
    n = len(perms)
    alloc, pay = [], []
    for x in ts.types:
        acc_q = [0] * k
        acc_s = 0
        for perm in perms:
            # mechanism seen by a buyer whose coordinates are relabelled by perm
            y = tuple(x[perm[i]] for i in range(k))
            qy = table.alloc[index[y]]
            for i in range(k):
                acc_q[perm[i]] += qy[i]
            acc_s += table.pay[index[y]]
        alloc.append(tuple(v / n for v in acc_q) if ts.exact else tuple(v / n for v in acc_q))
        pay.append(acc_s / n)
    return MechanismTable(tuple(alloc), tuple(pay))


def taxation_menu(table):
    """Distinct (allocation, price) pairs offered by a direct mechanism."""
    seen = {}
    for q, s in zip(table.alloc, table.pay):
        seen.setdefault((tuple(q), s), None)
    return [(q, s) for q, s in seen]


# ---------------------------------------------------------------- menus

def _check_menu(menu, k):
    entries = []
    for entry in menu:
        try:
            alloc, price = entry
            alloc = tuple(alloc)
        except (TypeError, ValueError):
            raise BadMenu(f"menu entry {entry!r} is not an (allocation, price) pair") from None
        if len(alloc) != k:
            raise BadMenu(f"allocation {alloc} does not have {k} entries")
        if any(not 0 <= v <= 1 for v in alloc):
            raise BadMenu(f"allocation {alloc} leaves [0, 1]")
        if price < 0:
            raise BadMenu(f"price {price} is negative")
        entries.append((alloc, price))
    return entries


def menu_revenue(p, menu, max_types=None):
    """Expected payment when each type picks its favorite menu entry.

    ``menu`` is a list of ``(allocation, price)`` pairs; the empty entry at
    price 0 is always available. Among utility-maximizing entries the buyer
    takes the most expensive one.
    """
    ts = build_types(p, max_types) if isinstance(p, ProductDist) else p
    entries = _check_menu(menu, ts.k)
    exact = ts.exact and all(isinstance(v, (int, Fraction)) for q, s in entries for v in q + (s,))
    if not exact:
        worth = ts.values_array() @ np.array([[float(v) for v in q] for q, _ in entries]).T \
            if entries else np.zeros((len(ts), 0))
        prices = np.array([[float(s) for _, s in entries]])
        masses = np.array([float(m) for m in ts.masses])
        scale = max(1.0, float(np.abs(worth).max(initial=0.0)))
        return float(kernels.menu_revenues(worth, prices, masses, 1e-12 * scale)[0])
    total = Fraction(0)
    for x, m in zip(ts.types, ts.masses):
        best_u, best_p = Fraction(0), Fraction(0)
        for q, s in entries:
            u = sum((xi * qi for xi, qi in zip(x, q)), Fraction(0)) - s
            if u > best_u or (u == best_u and s > best_p):
                best_u, best_p = u, Fraction(s)
        total += m * best_p
    return total


def _bundles(k):
    """Nonempty item subsets as 0/1 tuples, smaller bundles first."""
    out = [t for t in itertools.product((0, 1), repeat=k) if any(t)]
    return sorted(out, key=lambda t: (sum(t), tuple(-v for v in t)))


def _spanning_trees(nodes):
    edges = list(itertools.combinations(nodes, 2))
    for tree in itertools.combinations(edges, len(nodes) - 1):
        parent = {v: v for v in nodes}

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v
        ok = True
        for a, b in tree:
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False
                break
            parent[ra] = rb
        if ok:
            yield tree


def _tree_vertices(worth, present):
    """Price vectors where a spanning tree of tie constraints is tight.

    Node ``-1`` is the empty option at price 0. An edge (-1, S) fixes
    ``P_S`` to some type's worth of S (or to 0); an edge (S, T) fixes
    ``P_S - P_T`` to some type's worth difference.
    """
    n_opt = worth.shape[1]
    diffs = {}
    for a in present:
        diffs[(-1, a)] = np.unique(np.append(worth[:, a], 0.0))
        for b in present:
            if a != b:
                diffs[(b, a)] = np.unique(worth[:, a] - worth[:, b])
    out = []
    for tree in _spanning_trees([-1] + list(present)):
        adj = {}
        for a, b in tree:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        cols = {-1: np.zeros(1)}
        order = [-1]
        for v in order:
            for w in adj.get(v, ()):
                if w in cols:
                    continue
                # P_w = P_v + (worth_w - worth_v) over types; broadcast across combos
                step = diffs[(v, w)] if (v, w) in diffs else diffs[(-1, w)]
                base = cols[v]
                new_cols = {u: np.repeat(c, step.size) for u, c in cols.items()}
                new_cols[w] = (base[:, None] + step[None, :]).ravel()
                cols = new_cols
                order.append(w)
        size = cols[-1].size
        block = np.full((size, n_opt), np.inf)
        for a in present:
            block[:, a] = cols[a]
        out.append(block)
    return out


def _grid_menus(worth, chunk):
    n_opt = worth.shape[1]
    cands = [np.append(np.unique(worth[:, a]), np.inf) for a in range(n_opt)]
    total = 1
    for c in cands:
        total *= c.size
    if total > 20_000_000:
        raise SizeCap(f"{total} candidate menus exceed the enumeration limit")
    grids = np.meshgrid(*cands, indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    for i in range(0, flat.shape[0], chunk):
        yield flat[i:i + chunk]


def _ascend(worth, masses, prices, tol):
    """Coordinate ascent over single-price tie points; returns an improved menu."""
    best = prices.copy()
    best_val = kernels.menu_revenues(worth, best[None, :], masses, tol)[0]
    improved = True
    while improved:
        improved = False
        for a in range(worth.shape[1]):
            others = [b for b in range(worth.shape[1]) if b != a and np.isfinite(best[b])]
            opts = [worth[:, a], [0.0, np.inf]]
            opts += [worth[:, a] - worth[:, b] + best[b] for b in others]
            vals = np.unique(np.concatenate([np.asarray(o, dtype=float) for o in opts]))
            vals = vals[vals >= 0]
            trial = np.repeat(best[None, :], vals.size, axis=0)
            trial[:, a] = vals
            revs = kernels.menu_revenues(worth, trial, masses, tol)
            i = int(np.argmax(revs))
            if revs[i] > best_val + tol:
                best, best_val, improved = trial[i].copy(), revs[i], True
    return best


def best_deterministic(p, max_types=None):
    """Best menu of posted bundle prices and its revenue.

    Every nonempty bundle gets a price (possibly infinite). With one or two
    items the search visits every vertex of the arrangement of tie
    hyperplanes, which contains an optimum because revenue is upper
    semicontinuous and piecewise linear in the prices once ties favor the
    seller. With three items it scans the bundle-worth grid and then runs
    coordinate ascent, so the result is a lower bound there.

    Returns ``(value, menu)`` with ``menu`` a list of ``(bundle, price)``
    entries for the finite prices.
    """
    k = p.k if isinstance(p, ProductDist) else p.k
    if k > 3:
        raise KTooLarge(f"deterministic menus are enumerated for k <= 3, got {k}")
    ts = build_types(p, max_types) if isinstance(p, ProductDist) else p
    bundles = _bundles(k)
    exact = ts.exact
    if exact:
        den = 1
        for t in ts.types:
            for v in t:
                den = den * Fraction(v).denominator // np.gcd(den, Fraction(v).denominator)
        ints = [[int(sum(Fraction(x) * bi for x, bi in zip(t, bund)) * den) for bund in bundles]
                for t in ts.types]
        if max(max(r) for r in ints) >= 2 ** 50:
            raise SizeCap("values too fine-grained for the integer menu search")
        worth = np.array(ints, dtype=float)
        tol = 0.0
    else:
        den = 1
        V = ts.values_array()
        worth = V @ np.array(bundles, dtype=float).T
        tol = 1e-12 * max(1.0, float(worth.max()))
    masses = np.array([float(m) for m in ts.masses])

    if k <= 2:
        blocks = []
        for r in range(len(bundles) + 1):
            for present in itertools.combinations(range(len(bundles)), r):
                blocks.extend(_tree_vertices(worth, present))
        cands = np.concatenate(blocks)
        cands = cands[(cands >= 0).all(axis=1)]
        cands = np.unique(cands, axis=0)
        chunks = [cands[i:i + 50_000] for i in range(0, cands.shape[0], 50_000)]
    else:
        chunks = _grid_menus(worth, 50_000)
    top, keep = -np.inf, []
    for block in chunks:
        revs = kernels.menu_revenues(worth, block, masses, tol)
        m = revs.max()
        slack = 1e-9 * max(1.0, abs(m))
        if m > top + slack:
            top, keep = m, [block[revs >= m - slack]]
        elif m >= top - slack:
            keep.append(block[revs >= top - slack])
    finalists = np.concatenate(keep)
    if k == 3:
        finalists = np.array([_ascend(worth, masses, row, tol) for row in finalists[:20]])

    def as_menu(row):
        menu = []
        for bund, pr in zip(bundles, row):
            if np.isfinite(pr):
                price = Fraction(int(pr), den) if exact else float(pr)
                if exact and price.denominator == 1:
                    price = int(price)
                menu.append((bund, price))
        return menu

    best = None
    for row in finalists:
        menu = as_menu(row)
        value = menu_revenue(ts, menu)
        key = (value, -len(menu), tuple(-float(s) for _, s in menu))
        if best is None or key > best[0]:
            best = (key, value, menu)
    return best[1], best[2]
