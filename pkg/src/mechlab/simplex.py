"""Bounded-variable primal simplex for ``max c.x  s.t.  A x <= b, lo <= x <= hi``.

The basis is kept in reduced form: rows whose slack is nonbasic ("tight"
rows) are paired with the basic structural columns, so only that square
block is ever factored. Slack variables of loose rows are basic implicitly.

Two phases share the same pivoting logic:

* a float64 phase (Dantzig pricing, Bland's rule after a run of degenerate
  pivots) that finds a candidate optimal basis quickly;
* an exact phase over :class:`fractions.Fraction` with Bland's rule, which
  re-derives the basic solution and duals of that basis, certifies primal and
  dual feasibility, and keeps pivoting exactly if the certificate fails.

The start point must be feasible; callers provide one (the mechanism LP has
the zero mechanism).
"""
from dataclasses import dataclass, field
from fractions import Fraction
import logging
import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import kernels
from .errors import SolverStall

log = logging.getLogger(__name__)

FLOAT_TOL = 1e-9
DEGENERATE_RUN = 50
# relative size of the random right-hand-side relaxation in the float phase
PERTURB = 1e-7


@dataclass
class LinearProgram:
    """Constraint data in exact form; float copies are derived on demand.

    ``rows[r]`` is a list of ``(col, coef)`` pairs. Bounds of ``None`` mean
    unbounded. ``x0`` must be feasible and sit at a bound for every bounded
    column.
    """

    n: int
    rows: list
    b: list
    c: list
    lo: list
    hi: list
    x0: list
    _float: tuple = field(default=None, repr=False)

    @property
    def m(self):
        return len(self.rows)

    def float_data(self):
        if self._float is None:
            ri, ci, vals = [], [], []
            for r, row in enumerate(self.rows):
                for j, a in row:
                    ri.append(r)
                    ci.append(j)
                    vals.append(float(a))
            A = sp.csr_matrix((vals, (ri, ci)), shape=(self.m, self.n))
            to_f = np.vectorize(lambda v, d: d if v is None else float(v), otypes=[float])
            lo = to_f(np.array(self.lo, dtype=object), -np.inf) if self.n else np.zeros(0)
            hi = to_f(np.array(self.hi, dtype=object), np.inf) if self.n else np.zeros(0)
            self._float = (A, A.tocsc(),
                           np.array([float(v) for v in self.b]),
                           np.array([float(v) for v in self.c]),
                           lo, hi, np.array([float(v) for v in self.x0]))
        return self._float


@dataclass
class LPResult:
    value: object
    x: list
    duals: dict
    iterations: int
    exact: bool
    certified: bool
    basis: tuple


@dataclass
class _Basis:
    tight: list        # row indices with nonbasic slack
    basic: list        # structural columns in the basis
    x: list            # values of all structural columns


# ---------------------------------------------------------------- float phase

def _float_phase(lp, basis, max_iter, tol=FLOAT_TOL, perturb=0.0):
    A, Acsc, b, c, lo, hi, _ = lp.float_data()
    if perturb:
        # random RHS relaxation breaks ties among degenerate vertices
        rng = np.random.default_rng(12345)
        b = b + perturb * (1.0 + rng.random(b.size))
    n, m = lp.n, lp.m
    x = np.array([float(v) for v in basis.x])
    tight = list(basis.tight)
    basic = list(basis.basic)
    is_basic = np.zeros(n, dtype=bool)
    is_basic[basic] = True
    in_tight = np.zeros(m, dtype=bool)
    in_tight[tight] = True
    finite_range = np.isfinite(lo) & np.isfinite(hi)
    run = 0
    for it in range(max_iter):
        s = len(basic)
        if s:
            AT = A[tight]
            lu = sla.lu_factor(AT[:, basic].toarray(), check_finite=False)
            xn = np.where(is_basic, 0.0, x)
            x[basic] = sla.lu_solve(lu, b[tight] - AT @ xn, check_finite=False)
            y = sla.lu_solve(lu, c[basic], trans=1, check_finite=False)
            d = c - AT.T @ y
        else:
            AT = None
            y = np.zeros(0)
            d = c.copy()
        d[is_basic] = 0.0

        at_lo = np.isfinite(lo) & (x <= lo + tol)
        at_hi = np.isfinite(hi) & (x >= hi - tol)
        free = ~np.isfinite(lo) & ~np.isfinite(hi)
        up = (d > tol) & ~at_hi & ~is_basic
        down = (d < -tol) & ~at_lo & ~is_basic
        up &= at_lo | free
        down &= at_hi | free
        slack_in = np.flatnonzero(y < -tol)

        cand = np.flatnonzero(up | down)
        if cand.size == 0 and slack_in.size == 0:
            return _Basis(tight, basic, list(x)), it, True
        bland = run > DEGENERATE_RUN
        if bland:
            if cand.size:
                enter, kind = int(cand[0]), "col"
            else:
                enter, kind = int(slack_in[0]), "slack"
        else:
            best_col = float(np.abs(d[cand]).max()) if cand.size else -1.0
            best_slack = float(-y[slack_in].min()) if slack_in.size else -1.0
            if best_col >= best_slack:
                enter = int(cand[np.argmax(np.abs(d[cand]))])
                kind = "col"
            else:
                enter = int(slack_in[np.argmin(y[slack_in])])
                kind = "slack"

        dx = np.zeros(n)
        if kind == "col":
            sigma = 1.0 if (up[enter]) else -1.0
            dx[enter] = sigma
            if s:
                col = Acsc[:, enter].toarray().ravel()[tight]
                dx[basic] = -sigma * sla.lu_solve(lu, col, check_finite=False)
            own = hi[enter] - lo[enter] if finite_range[enter] else np.inf
        else:
            e = np.zeros(s)
            e[enter] = 1.0
            dx[basic] = -sla.lu_solve(lu, e, check_finite=False)
            own = np.inf

        w = b - A @ x
        dw = -(A @ dx)
        dw[in_tight] = 0.0
        t_row, r_row = kernels.ratio_test(np.maximum(w, 0.0), dw, tol)
        t_col, j_col = np.inf, -1
        for p, j in enumerate(basic):
            dj = dx[j]
            if dj < -tol and np.isfinite(lo[j]):
                t = max((x[j] - lo[j]) / -dj, 0.0)
            elif dj > tol and np.isfinite(hi[j]):
                t = max((hi[j] - x[j]) / dj, 0.0)
            else:
                continue
            if t < t_col - tol or (t <= t_col + tol and j < j_col):
                t_col, j_col = t, j
        t = min(own, t_row, t_col)
        if not np.isfinite(t):
            raise SolverStall("objective is unbounded along an improving ray")
        run = run + 1 if t <= tol else 0

        x += t * dx
        if own <= t + tol and own <= min(t_row, t_col) + tol and kind == "col":
            x[enter] = hi[enter] if sigma > 0 else lo[enter]
            continue
        if t_col <= t_row + tol and j_col >= 0:
            leave = j_col
            p = basic.index(leave)
            x[leave] = lo[leave] if dx[leave] < 0 else hi[leave]
            is_basic[leave] = False
            if kind == "col":
                basic[p] = enter
                is_basic[enter] = True
            else:
                in_tight[tight[enter]] = False
                del tight[enter]
                del basic[p]
        else:
            in_tight[r_row] = True
            if kind == "col":
                tight.append(r_row)
                basic.append(enter)
                is_basic[enter] = True
            else:
                in_tight[tight[enter]] = False
                tight[enter] = r_row
    return _Basis(tight, basic, list(x)), max_iter, False


def _highs_phase(lp):
    """Optimal basis and pivot count from HiGHS, or ``None`` when it is unavailable or fails."""
    try:
        import highspy
    except ImportError:
        return None
    A, Acsc, b, c, lo, hi, _ = lp.float_data()
    model = highspy.HighsLp()
    model.num_col_, model.num_row_ = lp.n, lp.m
    model.sense_ = highspy.ObjSense.kMaximize
    model.col_cost_ = c
    model.col_lower_ = np.where(np.isfinite(lo), lo, -highspy.kHighsInf)
    model.col_upper_ = np.where(np.isfinite(hi), hi, highspy.kHighsInf)
    model.row_lower_ = np.full(lp.m, -highspy.kHighsInf)
    model.row_upper_ = b
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = Acsc.indptr
    model.a_matrix_.index_ = Acsc.indices
    model.a_matrix_.value_ = Acsc.data
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solver", "simplex")
    h.setOptionValue("presolve", "off")
    h.passModel(model)
    h.run()
    if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        return None
    basis = h.getBasis()
    if not basis.valid:
        return None
    B = highspy.HighsBasisStatus
    basic = [j for j, st in enumerate(basis.col_status) if st == B.kBasic]
    tight = [r for r, st in enumerate(basis.row_status) if st != B.kBasic]
    if len(basic) != len(tight):
        return None
    x = list(h.getSolution().col_value)
    for j, st in enumerate(basis.col_status):
        if st == B.kZero:
            x[j] = 0.0
    return _Basis(tight, basic, x), int(h.getInfo().simplex_iteration_count)


# ---------------------------------------------------------------- exact algebra

class _ExactLU:
    """Sparse Gaussian elimination over Fractions for a square block."""

    def __init__(self, rows, size):
        # rows: list of dict col -> Fraction, one per tight row (local indices)
        work = [dict(r) for r in rows]
        self.ops = []
        self.piv = [None] * size
        remaining = set(range(size))
        for k in range(size):
            best = None
            for r in remaining:
                if work[r].get(k):
                    if best is None or len(work[r]) < len(work[best]):
                        best = r
            if best is None:
                raise ZeroDivisionError("singular basis block")
            remaining.discard(best)
            self.piv[k] = best
            prow = work[best]
            pv = prow[k]
            for r in remaining:
                a = work[r].get(k)
                if a:
                    f = a / pv
                    tgt = work[r]
                    for j, v in prow.items():
                        nv = tgt.get(j, 0) - f * v
                        if nv:
                            tgt[j] = nv
                        else:
                            tgt.pop(j, None)
                    self.ops.append((r, best, f))
        self.U = work
        self.size = size

    def solve(self, rhs):
        g = list(rhs)
        for r, src, f in self.ops:
            if g[src]:
                g[r] -= f * g[src]
        x = [Fraction(0)] * self.size
        for k in range(self.size - 1, -1, -1):
            row = self.U[self.piv[k]]
            acc = g[self.piv[k]]
            for j, v in row.items():
                if j != k and x[j]:
                    acc -= v * x[j]
            x[k] = acc / row[k]
        return x

    def solve_transpose(self, rhs):
        z = [Fraction(0)] * self.size
        # column j of U^T z = rhs_j; rows of U are indexed through piv
        acc = list(rhs)
        for j in range(self.size):
            r = self.piv[j]
            row = self.U[r]
            zr = acc[j] / row[j]
            z[r] = zr
            if zr:
                for jj, v in row.items():
                    if jj > j:
                        acc[jj] -= v * zr
        for r, src, f in reversed(self.ops):
            if z[r]:
                z[src] -= f * z[r]
        return z


def _exact_phase(lp, basis, max_iter):
    n, m = lp.n, lp.m
    rows, b, c, lo, hi = lp.rows, lp.b, lp.c, lp.lo, lp.hi
    cols = [[] for _ in range(n)]
    for r, row in enumerate(rows):
        for j, a in row:
            cols[j].append((r, a))
    x = list(basis.x)
    tight = list(basis.tight)
    basic = list(basis.basic)

    for it in range(max_iter):
        s = len(basic)
        is_basic = set(basic)
        pos = {j: p for p, j in enumerate(basic)}
        in_tight = set(tight)
        lu = _ExactLU([{pos[j]: a for j, a in rows[r] if j in pos} for r in tight], s)
        rhs = []
        for r in tight:
            v = b[r]
            for j, a in rows[r]:
                if j not in pos and x[j]:
                    v -= a * x[j]
            rhs.append(v)
        for p, v in enumerate(lu.solve(rhs)):
            x[basic[p]] = v
        y = lu.solve_transpose([c[j] for j in basic])
        ydict = {r: y[i] for i, r in enumerate(tight)}

        enter = None
        for j in range(n):
            if j in is_basic:
                continue
            d = c[j] - sum((ydict[r] * a for r, a in cols[j] if r in ydict), Fraction(0))
            if d > 0 and (hi[j] is None or x[j] < hi[j]):
                enter, kind, sigma = j, "col", 1
                break
            if d < 0 and (lo[j] is None or x[j] > lo[j]):
                enter, kind, sigma = j, "col", -1
                break
        if enter is None:
            slack = sorted(r for r in tight if ydict[r] < 0)
            if slack:
                enter, kind, sigma = tight.index(slack[0]), "slack", 1
        if enter is None:
            return _Basis(tight, basic, x), it, True, ydict

        dx = {}
        if kind == "col":
            dx[enter] = Fraction(sigma)
            if s:
                colv = dict(cols[enter])
                rhs = [colv.get(r, Fraction(0)) for r in tight]
                for p, v in enumerate(lu.solve(rhs)):
                    if v:
                        dx[basic[p]] = -sigma * v
            own = hi[enter] - lo[enter] if (hi[enter] is not None and lo[enter] is not None) else None
        else:
            e = [Fraction(0)] * s
            e[enter] = Fraction(1)
            for p, v in enumerate(lu.solve(e)):
                if v:
                    dx[basic[p]] = -v
            own = None

        # ratio test; ties broken toward the smallest variable index
        # (structural j -> j, slack of row r -> n + r)
        best_t, best_idx, best_kind = own, (enter if kind == "col" else n + tight[enter]), "own"
        if own is None:
            best_idx = math.inf
        dw = {}
        for j, v in dx.items():
            for r, a in cols[j]:
                if r not in in_tight:
                    dw[r] = dw.get(r, 0) - a * v
        for r, dv in dw.items():
            if dv < 0:
                wr = b[r] - sum((a * x[j] for j, a in rows[r]), Fraction(0))
                t = wr / -dv
                if best_t is None or t < best_t or (t == best_t and n + r < best_idx):
                    best_t, best_idx, best_kind = t, n + r, "row"
        for j in basic:
            v = dx.get(j)
            if not v:
                continue
            if v < 0 and lo[j] is not None:
                t = (x[j] - lo[j]) / -v
            elif v > 0 and hi[j] is not None:
                t = (hi[j] - x[j]) / v
            else:
                continue
            if best_t is None or t < best_t or (t == best_t and j < best_idx):
                best_t, best_idx, best_kind = t, j, "col"
        if best_t is None:
            raise SolverStall("objective is unbounded along an improving ray")

        for j, v in dx.items():
            x[j] += best_t * v
        if best_kind == "own":
            continue
        if best_kind == "col":
            leave = best_idx
            p = pos[leave]
            x[leave] = lo[leave] if dx[leave] < 0 else hi[leave]
            if kind == "col":
                basic[p] = enter
            else:
                del tight[enter]
                del basic[p]
        else:
            r_new = best_idx - n
            if kind == "col":
                tight.append(r_new)
                basic.append(enter)
            else:
                tight[enter] = r_new
    raise SolverStall(f"exact simplex did not finish in {max_iter} pivots")


def _snap(lp, fb, free_at_zero=False):
    """Float basis -> exact starting basis (nonbasic columns snapped to bounds)."""
    x = []
    basic = set(fb.basic)
    for j in range(lp.n):
        lo, hi, v = lp.lo[j], lp.hi[j], fb.x[j]
        if j in basic:
            x.append(Fraction(0))
        elif lo is not None and hi is not None:
            x.append(lo if abs(v - float(lo)) <= abs(v - float(hi)) else hi)
        elif lo is not None:
            x.append(lo)
        elif hi is not None:
            x.append(hi)
        else:
            x.append(Fraction(0) if free_at_zero else lp.x0[j])
    return _Basis(list(fb.tight), list(fb.basic), x)


def _primal_feasible(lp, basis):
    x = basis.x
    for j in basis.basic:
        if lp.lo[j] is not None and x[j] < lp.lo[j]:
            return False
        if lp.hi[j] is not None and x[j] > lp.hi[j]:
            return False
    for r, row in enumerate(lp.rows):
        if sum((a * x[j] for j, a in row), Fraction(0)) > lp.b[r]:
            return False
    return True


def _float_basis(lp, engine, max_iter):
    """Candidate optimal basis as ``(basis, pivots, engine_used)``."""
    if engine in ("auto", "highs"):
        found = _highs_phase(lp)
        if found is not None:
            return found[0], found[1], "highs"
        if engine == "highs":
            raise SolverStall("HiGHS is unavailable or did not reach an optimal basis")
    start = _Basis([], [], list(lp.x0))
    fb, iters, done = _float_phase(lp, start, max_iter, perturb=PERTURB)
    if done:
        # re-solve the same basis against the true right-hand side
        fb, more, done = _float_phase(lp, fb, max_iter)
        iters += more
    if not done:
        raise SolverStall(f"float simplex did not finish in {max_iter} pivots")
    return fb, iters, "builtin"


def solve(lp, exact=True, max_iter=200_000, warm_start=True, engine="auto"):
    """Maximize; returns :class:`LPResult`.

    ``exact=True`` gives a certified rational optimum. With ``warm_start`` a
    float solver proposes the basis; otherwise the exact phase runs from the
    start point alone. ``engine`` picks that float solver: ``"highs"``,
    ``"builtin"`` (the simplex in this module), or ``"auto"`` (HiGHS when
    installed).
    """
    start = _Basis([], [], list(lp.x0))
    if not exact:
        fb, iters, used = _float_basis(lp, engine, max_iter)
        A, _, b, c, _, _, _ = lp.float_data()
        x = np.array(fb.x, dtype=float)
        y = np.zeros(lp.m)
        if fb.basic:
            AT = A[fb.tight]
            lu = sla.lu_factor(AT[:, fb.basic].toarray(), check_finite=False)
            y[fb.tight] = sla.lu_solve(lu, c[fb.basic], trans=1, check_finite=False)
        return LPResult(float(c @ x), list(x), {r: float(y[r]) for r in fb.tight},
                        iters, False, False, (tuple(fb.tight), tuple(fb.basic)))
    iters = 0
    if warm_start:
        try:
            fb, iters, used = _float_basis(lp, engine, max_iter)
        except SolverStall:
            fb = None
        if fb is not None:
            try:
                basis = _snap(lp, fb, free_at_zero=used == "highs")
                basis_out, it2, _, duals = _exact_phase(lp, _resolved(lp, basis), max_iter)
                return _finish(lp, basis_out, duals, iters + it2, certified=it2 == 0)
            except (ZeroDivisionError, _Infeasible):
                log.info("float basis rejected in exact arithmetic; restarting exactly")
    basis_out, it2, _, duals = _exact_phase(lp, start, max_iter)
    return _finish(lp, basis_out, duals, iters + it2, certified=False)


class _Infeasible(Exception):
    pass


def _resolved(lp, basis):
    """Recompute basic values exactly and reject primal-infeasible bases."""
    if basis.basic:
        pos = {j: p for p, j in enumerate(basis.basic)}
        lu = _ExactLU([{pos[j]: a for j, a in lp.rows[r] if j in pos} for r in basis.tight],
                      len(basis.basic))
        rhs = []
        for r in basis.tight:
            v = lp.b[r]
            for j, a in lp.rows[r]:
                if j not in pos and basis.x[j]:
                    v -= a * basis.x[j]
            rhs.append(v)
        for p, v in enumerate(lu.solve(rhs)):
            basis.x[basis.basic[p]] = v
    if not _primal_feasible(lp, basis):
        raise _Infeasible
    return basis


def _finish(lp, basis, duals, iters, certified):
    value = sum((cj * xj for cj, xj in zip(lp.c, basis.x)), Fraction(0))
    return LPResult(value, list(basis.x), dict(duals), iters, True, certified,
                    (tuple(basis.tight), tuple(basis.basic)))
