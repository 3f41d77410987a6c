"""Revenue reports and mechanical checks of the separate/bundle/optimal bounds.

Every check has the form ``lhs >= rhs``; its slack is ``lhs - rhs``. Checks
with an irrational constant compare in floats and allow ``FLOAT_SLACK``.
Checks that need identical items or a particular ``k`` are reported as not
applicable elsewhere.
"""
import csv
from dataclasses import dataclass, field
from fractions import Fraction
import io
import math

from . import dist as _dist
from . import eranalytics, myerson, optmech
from ._numbers import fmt
from .dist import ProductDist
from .errors import InputError

FLOAT_SLACK = 1e-12

CSV_COLUMNS = ["name", "k", "srev", "brev", "rev_opt", "val", "srev_over_rev",
               "brev_over_rev", "brev_over_srev", "checks_passed", "checks_total"]


@dataclass(frozen=True)
class Check:
    name: str
    statement: str
    applicable: bool
    passed: bool = None
    slack: object = None

    def to_dict(self):
        return {"name": self.name, "statement": self.statement,
                "applicable": self.applicable, "passed": self.passed,
                "slack": None if self.slack is None else fmt(self.slack)}


@dataclass
class RevenueReport:
    name: str
    k: int
    srev: object
    brev: object
    rev_opt: object
    val: object
    item_revs: tuple
    identical: bool
    checks: list = field(default_factory=list)

    def _ratio(self, a, b):
        if a is None or b is None or b == 0:
            return None
        return a / b

    @property
    def srev_over_rev(self):
        return self._ratio(self.srev, self.rev_opt)

    @property
    def brev_over_rev(self):
        return self._ratio(self.brev, self.rev_opt)

    @property
    def brev_over_srev(self):
        return self._ratio(self.brev, self.srev)

    @property
    def checks_passed(self):
        return sum(1 for c in self.checks if c.applicable and c.passed)

    @property
    def checks_total(self):
        return sum(1 for c in self.checks if c.applicable)

    def scaled_ratios(self):
        """Ratios multiplied by ``log2(k)**2`` and ``log2(k)`` (k >= 2)."""
        if self.k < 2 or self.rev_opt in (None, 0):
            return {}
        lg = math.log2(self.k)
        return {"srev_over_rev_times_log2k_sq": float(self.srev_over_rev) * lg * lg,
                "brev_over_rev_times_log2k": float(self.brev_over_rev) * lg}

    def row(self):
        def cell(v):
            return "" if v is None else fmt(v)
        return {"name": self.name, "k": self.k, "srev": cell(self.srev), "brev": cell(self.brev),
                "rev_opt": cell(self.rev_opt), "val": cell(self.val),
                "srev_over_rev": cell(self.srev_over_rev),
                "brev_over_rev": cell(self.brev_over_rev),
                "brev_over_srev": cell(self.brev_over_srev),
                "checks_passed": self.checks_passed, "checks_total": self.checks_total}

    def to_dict(self):
        out = self.row()
        out["checks"] = [c.to_dict() for c in self.checks]
        out.update(self.scaled_ratios())
        return out


def _pow2_at_least(k):
    return 1 << max(0, (k - 1).bit_length())


def _ge(name, statement, lhs, rhs):
    """Check ``lhs >= rhs``; floats get ``FLOAT_SLACK``."""
    exact = all(isinstance(v, (int, Fraction)) for v in (lhs, rhs))
    if exact:
        slack = lhs - rhs
        return Check(name, statement, True, slack >= 0, slack)
    slack = float(lhs) - float(rhs)
    return Check(name, statement, True, slack >= -FLOAT_SLACK, slack)


def _div(a, n):
    if a is None or isinstance(a, float):
        return None if a is None else a / n
    return Fraction(a) / n


def _na(name, statement):
    return Check(name, statement, False)


def report(p, name="instance", with_lp=True, exact=None, max_types=None):
    """All revenue quantities for ``p``, with :func:`verify_all` checks attached."""
    if not isinstance(p, ProductDist):
        raise InputError("report needs a ProductDist")
    item_revs = tuple(myerson.rev1(d).revenue for d in p.items)
    srev = myerson.srev(p)
    brev = myerson.brev(p).revenue
    rev_opt = None
    if with_lp:
        rev_opt = optmech.solve_optimal(p, exact=exact, max_types=max_types).value
    r = RevenueReport(name=name, k=p.k, srev=srev, brev=brev, rev_opt=rev_opt,
                      val=myerson.val(p), item_revs=item_revs, identical=p.identical)
    r.checks = verify_all(r)
    return r


def verify_all(r):
    """Evaluate every applicable inequality on a report."""
    k, srev, brev, rev, val = r.k, r.srev, r.brev, r.rev_opt, r.val
    consts = eranalytics.solve_constants()
    checks = []
    have_rev = rev is not None
    multi = k >= 2
    pair = k == 2
    iid = r.identical and multi
    rev1 = r.item_revs[0]

    def add(cond, name, statement, lhs=None, rhs=None):
        checks.append(_ge(name, statement, lhs, rhs) if cond else _na(name, statement))

    add(have_rev, "srev_le_rev", "Rev >= SRev", rev, srev)
    add(have_rev, "brev_le_rev", "Rev >= BRev", rev, brev)
    add(have_rev, "rev_le_val", "Val >= Rev", val, rev)
    K = _pow2_at_least(k)
    add(have_rev and multi, "rev_le_pow2_srev",
        f"SRev >= Rev / {K} (next power of two at or above k)", srev, _div(rev, K))
    add(have_rev and pair and r.identical, "srev_ge_iid_fraction_rev",
        "SRev >= e/(e+1) * Rev for two identical items", srev, consts.iid_bound * float(rev) if have_rev else None)
    add(pair, "brev_le_1pw_srev", "(1 + w) * SRev >= BRev for two items",
        consts.sep_bun_ratio * float(srev), brev)
    add(multi, "brev_ge_srev_over_k", "BRev >= SRev / k", brev, _div(srev, k))
    add(pair and r.identical, "brev_ge_four_thirds_rev1",
        "BRev >= 4/3 * Rev1 for two identical items", brev, Fraction(4, 3) * rev1)
    add(iid, "brev_ge_quarter_k_rev1", "BRev >= k/4 * Rev1 for identical items",
        brev, Fraction(k, 4) * rev1)
    add(have_rev and multi, "rev_le_linear_brev",
        f"BRev >= Rev / {3 * K - 2}", brev, _div(rev, 3 * K - 2))
    if iid and have_rev:
        if K == k:
            factor = 4 * (math.log2(k) + 1)
        else:
            factor = 4 * (math.log2(k) + 2) * 2 * 1.3
        checks.append(_ge("rev_le_log_brev", "BRev >= Rev / c(k) for identical items, "
                          "c(k) = 4(log2 k + 1) or 8.32(log2 k + 2)", brev, float(rev) / factor))
    else:
        checks.append(_na("rev_le_log_brev", "c(k) * BRev >= Rev for identical items"))
    return checks


def split_bound_check(p, split=None, exact=None, max_types=None, rev_whole=None):
    """Check ``Rev(X, Y) <= Rev(X) + Rev(Y) + BRev(X) + BRev(Y)`` for a split of the items.

    ``split`` is the number of leading items in X (default ``k // 2``).
    ``rev_whole`` reuses an already solved ``Rev(X, Y)``. Returns a :class:`Check`.
    """
    k = p.k
    if k < 2:
        raise InputError("need at least two items to split")
    split = k // 2 if split is None else split
    if not 1 <= split < k:
        raise InputError("split must leave items on both sides")
    X = _dist.product(*p.items[:split])
    Y = _dist.product(*p.items[split:])

    def rev(q):
        return optmech.solve_optimal(q, exact=exact, max_types=max_types).value
    whole = rev(p) if rev_whole is None else rev_whole
    bound = rev(X) + rev(Y) + myerson.brev(X).revenue + myerson.brev(Y).revenue
    return _ge("split_bound", "Rev(X)+Rev(Y)+BRev(X)+BRev(Y) >= Rev(X,Y)", bound, whole)


# ---------------------------------------------------------------- worked instances

def example_1k_items(M, k):
    """Items on ``{0, M**i}`` with ``P(M**i) = M**-i`` for ``i = 1..k``."""
    M = Fraction(M)
    if not M > 1:
        raise InputError("M must exceed 1")
    if k < 2:
        raise InputError("k must be at least 2")
    return _dist.product(*[_dist.make_dist([0, M ** i], [1 - M ** -i, M ** -i])
                           for i in range(1, k + 1)])


def example_1k(M, k, with_lp=None, max_types=None):
    """Report on the instance where bundling earns about ``1/k`` of selling separately.

    The LP runs only when the ``2**k`` types fit under the cap.
    """
    p = example_1k_items(M, k)
    if with_lp is None:
        cap = optmech.max_types_default() if max_types is None else max_types
        with_lp = 2 ** k <= cap
    return report(p, name=f"one_over_k_M{fmt(Fraction(M))}_k{k}", with_lp=with_lp,
                  max_types=max_types)


@dataclass(frozen=True)
class SparseBernoulliResult:
    k: int
    brev: float
    srev: float
    ratio: float
    price: int
    revenue_price1: float
    revenue_price2: float


def example_57(k, c=None):
    """Bundle versus separate revenue for ``k`` items worth 1 w.p. ``c/k``, else 0.

    ``c`` defaults to the root of ``1 - e**-c = 2(1 - (c+1)e**-c)``, which
    makes bundle prices 1 and 2 equally good in the large-``k`` limit.
    """
    if k < 2:
        raise InputError("k must be at least 2")
    c = eranalytics.solve_constants().c57 if c is None else float(c)
    item = _dist.bernoulli(c / k)
    total = _dist.convolve_power(item, k)
    best = myerson.rev1(total)
    srev = k * myerson.rev1(item).revenue
    r1 = float(myerson.revenue_at(total, 1.0))
    r2 = float(myerson.revenue_at(total, 2.0))
    return SparseBernoulliResult(k, float(best.revenue), float(srev),
                                 float(best.revenue) / float(srev), int(round(best.chosen_price)),
                                 r1, r2)


# ---------------------------------------------------------------- bundling optimality

def bundling_optimality_condition(density_samples, a, slack=1e-12):
    """True iff ``x f'(x) + 1.5 f(x) <= slack`` at every sample ``(x, f, f')`` with ``x > a``."""
    ok = True
    for x, f, fp in density_samples:
        if not x > a:
            raise InputError(f"sample at x={x} is not above a={a}")
        if x * fp + 1.5 * f > slack:
            ok = False
    return ok


def power_law_samples(gamma, xs, c=1.0):
    """``(x, c x**-gamma, -gamma c x**-(gamma+1))`` triples."""
    return [(float(x), c * x ** -gamma, -gamma * c * x ** (-gamma - 1)) for x in xs]


def bundling_optimality_numeric_check(gamma, M, n, max_types=None):
    """Optimal versus bundle revenue for two i.i.d. discretized power-law items.

    Returns ``(rev_opt, brev, gap)`` with ``gap = rev_opt - brev`` (float LP).
    """
    d = _dist.power_law_discretized(gamma, M, n)
    p = _dist.iid(d, 2)
    rev = optmech.solve_optimal(p, exact=False, max_types=max_types).value
    brev = float(myerson.brev(p).revenue)
    return rev, brev, rev - brev


# ---------------------------------------------------------------- large-k limit

def limit_check(d, ks, max_atoms=_dist.DEFAULT_MAX_ATOMS):
    """Rows ``(k, BRev(d^k)/k, E(d))``; the middle column tends to ``E(d)``."""
    e = _dist.expectation(d)
    rows = []
    for k in ks:
        if k < 1:
            raise InputError("k must be positive")
        b = myerson.rev1(_dist.convolve_power(d, k, max_atoms)).revenue
        rows.append((k, b / k, e))
    return rows


# ---------------------------------------------------------------- output

def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\r\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def worst_ratio_search(instances, ratio="srev_over_rev"):
    """Smallest ratio over reports of the given instances: ``(value, name)``."""
    worst = None
    for name, p in instances:
        r = report(p, name)
        v = getattr(r, ratio)
        if v is not None and (worst is None or v < worst[0]):
            worst = (v, name)
    return worst
