from fractions import Fraction as F
import itertools

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from mechlab import dist, myerson, optmech
from mechlab.errors import BadMenu, KTooLarge, ShapeMismatch, TooManyTypes

from conftest import exact_dists, random_exact_dist

LOTTERY_MENU = [((F(1, 2), 0), 1), ((0, F(1, 2)), 1), ((1, 1), 4)]


def hand_menu_revenue(ts, menu):
    """Reference enumeration: each type takes its best entry, priciest among ties."""
    total = F(0)
    for x, m in zip(ts.types, ts.masses):
        options = [((0,) * len(x), 0)] + list(menu)
        utils = [sum(xi * qi for xi, qi in zip(x, q)) - s for q, s in options]
        best = max(utils)
        total += m * max(s for (q, s), u in zip(options, utils) if u == best)
    return total


# ---------------------------------------------------------------- types

def test_build_types(u12, u012):
    ts = optmech.build_types(dist.iid(u12, 2))
    assert ts.types == ((1, 1), (1, 2), (2, 1), (2, 2))
    assert ts.masses == (F(1, 4),) * 4
    assert len(optmech.build_types(dist.product(dist.uniform(range(5))))) == 5
    ts = optmech.build_types(dist.iid(u012, 2))
    assert len(ts) == 9 and sum(ts.masses) == 1


def test_type_cap(u012, monkeypatch):
    with pytest.raises(TooManyTypes):
        optmech.build_types(dist.iid(u012, 2), max_types=8)
    monkeypatch.setenv("MECHLAB_MAX_TYPES", "5")
    with pytest.raises(TooManyTypes):
        optmech.solve_optimal(dist.iid(u012, 2))


# ---------------------------------------------------------------- solve_optimal

def test_uniform012_value(u012):
    sol = optmech.solve_optimal(dist.iid(u012, 2))
    assert sol.value == F(13, 9)
    assert sol.mode == "exact"
    assert sol.residuals.passes(0)


def test_lottery_instance_value(hr_item):
    sol = optmech.solve_optimal(dist.iid(hr_item, 2))
    assert sol.value == F(61, 18)
    menu = optmech.taxation_menu(sol.table)
    assert optmech.menu_revenue(dist.iid(hr_item, 2), menu) == F(61, 18)


def test_point_masses_extract_everything():
    p = dist.product(dist.point_mass(3), dist.point_mass(F(5, 2)))
    sol = optmech.solve_optimal(p)
    assert sol.value == F(11, 2)
    assert sol.table.alloc == ((1, 1),)
    assert sol.table.pay == (F(11, 2),)


def test_to_dict_shape(u012):
    out = optmech.solve_optimal(dist.iid(u012, 2)).to_dict()
    assert out["value"] == "13/9"
    assert out["mode"] == "exact"
    assert len(out["alloc"]) == 9 and len(out["pay"]) == 9
    assert set(out["residuals"]) == {"ic", "ir", "npt", "monotone"}


def test_float_mode_close_to_exact(hr_item):
    p = dist.iid(hr_item, 2)
    sol = optmech.solve_optimal(p, exact=False)
    assert sol.mode == "float"
    assert sol.value == pytest.approx(61 / 18, abs=1e-9)
    assert sol.residuals.passes(1e-9)


def test_zero_type_pays_nothing(u012):
    sol = optmech.solve_optimal(dist.iid(u012, 2))
    assert sol.table.pay[0] == 0


def test_myerson_oracle_random(rng):
    for _ in range(40):
        d = random_exact_dist(rng, max_atoms=8)
        assert optmech.solve_optimal(dist.product(d)).value == myerson.rev1(d).revenue


@settings(max_examples=25)
@given(exact_dists(max_atoms=3, max_value=8), exact_dists(max_atoms=3, max_value=8))
def test_ordering_and_feasibility(a, b):
    p = dist.product(a, b)
    sol = optmech.solve_optimal(p)
    assert sol.residuals.passes(0)
    assert sol.residuals.npt == 0
    assert max(myerson.srev(p), myerson.brev(p).revenue) <= sol.value <= myerson.val(p)
    ts = optmech.build_types(p)
    assert optmech.mechanism_revenue(sol.table, ts) == sol.value
    det, menu = optmech.best_deterministic(p)
    assert det <= sol.value
    assert optmech.menu_revenue(p, optmech.taxation_menu(sol.table)) == sol.value


@settings(max_examples=15)
@given(exact_dists(max_atoms=3, max_value=6))
def test_symmetrized_table_keeps_value(d):
    p = dist.iid(d, 2)
    ts = optmech.build_types(p)
    sol = optmech.solve_optimal(p)
    sym = optmech.symmetrize(sol.table, ts)
    assert optmech.mechanism_revenue(sym, ts) == sol.value
    assert optmech.validate(sym, ts).passes(0)
    # symmetric: swapping coordinates swaps allocations
    index = {t: i for i, t in enumerate(ts.types)}
    for i, (x, y) in enumerate(ts.types):
        j = index[(y, x)]
        assert sym.alloc[j] == sym.alloc[i][::-1]
        assert sym.pay[j] == sym.pay[i]


def test_cold_start_same_value(hr_item):
    p = dist.iid(hr_item, 2)
    assert optmech.solve_optimal(p, warm_start=False).value == F(61, 18)


# ---------------------------------------------------------------- validate

def test_validate_payment_shift(u012):
    ts = optmech.build_types(dist.iid(u012, 2))
    sol = optmech.solve_optimal(dist.iid(u012, 2))
    utils = [sum(x * q for x, q in zip(t, a)) - s
             for t, a, s in zip(ts.types, sol.table.alloc, sol.table.pay)]
    for c in (F(-1), F(1, 3), F(2)):
        shifted = optmech.MechanismTable(sol.table.alloc, tuple(s + c for s in sol.table.pay))
        r = optmech.validate(shifted, ts)
        assert r.ic == 0
        assert r.ir == max(0, c - min(utils))


def test_validate_non_monotone():
    ts = optmech.TypeSpace(((0,), (1,)), (F(1, 2), F(1, 2)), True)
    table = optmech.MechanismTable(((1,), (0,)), (0, 0))
    r = optmech.validate(table, ts)
    assert r.monotone == 1
    assert not r.passes(0)


def test_validate_float_kernel_matches_exact(hr_item):
    p = dist.iid(hr_item, 2)
    ts = optmech.build_types(p)
    rng = np.random.default_rng(1)
    alloc = tuple(tuple(F(int(v), 4) for v in rng.integers(0, 5, 2)) for _ in ts.types)
    pay = tuple(F(int(v), 3) for v in rng.integers(0, 12, len(ts)))
    exact = optmech.validate(optmech.MechanismTable(alloc, pay), ts)
    ftab = optmech.MechanismTable(tuple(tuple(float(v) for v in q) for q in alloc),
                                  tuple(float(s) for s in pay))
    approx = optmech.validate(ftab, ts)
    for name in ("ic", "ir", "npt", "monotone"):
        assert getattr(approx, name) == pytest.approx(float(getattr(exact, name)), abs=1e-12)


def test_shape_mismatch(u12):
    ts = optmech.build_types(dist.iid(u12, 2))
    with pytest.raises(ShapeMismatch):
        optmech.validate(optmech.MechanismTable(((0, 0),), (0,)), ts)
    with pytest.raises(ShapeMismatch):
        optmech.mechanism_revenue(optmech.MechanismTable(((0,),) * 4, (0,) * 4), ts)


def test_mechanism_revenue_examples(u12, u012):
    ts = optmech.build_types(dist.iid(u012, 2))
    zero = optmech.MechanismTable(((0, 0),) * 9, (0,) * 9)
    assert optmech.mechanism_revenue(zero, ts) == 0
    ts = optmech.build_types(dist.iid(u12, 2))
    bundle = optmech.MechanismTable(tuple((1, 1) if sum(t) >= 3 else (0, 0) for t in ts.types),
                                    tuple(3 if sum(t) >= 3 else 0 for t in ts.types))
    assert optmech.validate(bundle, ts).passes(0)
    assert optmech.mechanism_revenue(bundle, ts) == F(9, 4)


# ---------------------------------------------------------------- menus

def test_lottery_menu_revenue(hr_item):
    p = dist.iid(hr_item, 2)
    ts = optmech.build_types(p)
    assert hand_menu_revenue(ts, LOTTERY_MENU) == F(61, 18)
    assert optmech.menu_revenue(p, LOTTERY_MENU) == F(61, 18)


def test_lottery_menu_by_hand():
    # payment of each type; ties between entries go to the higher price
    m = {1: F(1, 6), 2: F(1, 2), 4: F(1, 3)}
    pays = {(1, 1): 0,                  # every entry has negative utility
            (1, 2): 1, (2, 1): 1,       # lottery at utility 0
            (2, 2): 4,                  # lottery and bundle both at 0
            (1, 4): 4, (4, 1): 4,       # lottery and bundle both at 1
            (2, 4): 4, (4, 2): 4, (4, 4): 4}
    total = sum(m[a] * m[b] * pays[(a, b)] for a, b in pays)
    assert total == F(61, 18)


def test_empty_and_bundle_menus(u12):
    p = dist.iid(u12, 2)
    assert optmech.menu_revenue(p, []) == 0
    assert optmech.menu_revenue(p, [((1, 1), 3)]) == F(9, 4)


@pytest.mark.parametrize("menu", [
    [((1,), 2)],
    [((1, 2), 2)],
    [((1, 0), -1)],
    [((1, -0.5), 1)],
    [(1, 2, 3)],
    [5],
])
def test_bad_menus(u12, menu):
    with pytest.raises(BadMenu):
        optmech.menu_revenue(dist.iid(u12, 2), menu)


def test_menu_ties_favor_seller():
    p = dist.product(dist.point_mass(2))
    # utility 0 from both entries: the buyer pays 2
    assert optmech.menu_revenue(p, [((1,), 2)]) == 2
    assert optmech.menu_revenue(p, [((F(1, 2),), 0), ((1,), 1)]) == 1


def test_float_menu_revenue(hr_item):
    p = dist.iid(hr_item.to_float(), 2)
    assert optmech.menu_revenue(p, LOTTERY_MENU) == pytest.approx(61 / 18, rel=1e-12)


def test_best_deterministic_uniform012(u012):
    value, menu = optmech.best_deterministic(dist.iid(u012, 2))
    assert value == F(13, 9)
    assert menu == [((1, 0), 2), ((0, 1), 2), ((1, 1), 3)]


def test_best_deterministic_uniform12(u12):
    value, menu = optmech.best_deterministic(dist.iid(u12, 2))
    assert value == F(9, 4)
    assert menu == [((1, 1), 3)]


def test_best_deterministic_point_masses():
    p = dist.product(dist.point_mass(3), dist.point_mass(F(5, 2)))
    value, _ = optmech.best_deterministic(p)
    assert value == F(11, 2)


def test_lottery_beats_deterministic(hr_item):
    p = dist.iid(hr_item, 2)
    det, _ = optmech.best_deterministic(p)
    assert det == F(10, 3)
    assert optmech.solve_optimal(p).value > det


def test_k_too_large(u12):
    with pytest.raises(KTooLarge):
        optmech.best_deterministic(dist.iid(u12, 4))


def brute_deterministic(p):
    """All integer bundle prices up to the largest bundle worth, plus 'not offered'."""
    k = p.k
    top = int(sum(max(d.support) for d in p.items))
    bundles = [b for b in itertools.product((0, 1), repeat=k) if any(b)]
    best = F(0)
    for prices in itertools.product(list(range(top + 1)) + [None], repeat=len(bundles)):
        menu = [(b, s) for b, s in zip(bundles, prices) if s is not None]
        best = max(best, optmech.menu_revenue(p, menu))
    return best


def test_deterministic_search_complete_for_two_items(rng):
    # integer supports put every vertex price on the integer grid
    for _ in range(25):
        p = dist.product(random_exact_dist(rng, max_atoms=4, max_value=7),
                         random_exact_dist(rng, max_atoms=4, max_value=7))
        assert optmech.best_deterministic(p)[0] == brute_deterministic(p)


def test_deterministic_rational_values():
    a = dist.make_dist([F(1, 2), F(7, 3)], [F(1, 3), F(2, 3)])
    b = dist.make_dist([0, F(5, 4)], [F(1, 2), F(1, 2)])
    p = dist.product(a, b)
    value, menu = optmech.best_deterministic(p)
    assert value == optmech.menu_revenue(p, menu)
    # doubling via 12ths puts every vertex on the integer grid
    scaled = dist.product(dist.scale(a, 12), dist.scale(b, 12))
    assert optmech.best_deterministic(scaled)[0] == 12 * value
    assert brute_deterministic(scaled) == 12 * value


def test_deterministic_three_items(u012):
    p = dist.iid(u012, 3)
    value, menu = optmech.best_deterministic(p)
    assert value == optmech.menu_revenue(p, menu)
    assert value == optmech.solve_optimal(p).value == F(61, 27)


def test_deterministic_one_item(rng):
    for _ in range(10):
        d = random_exact_dist(rng)
        assert optmech.best_deterministic(dist.product(d))[0] == myerson.rev1(d).revenue


def test_deterministic_float_mode(u012):
    value, menu = optmech.best_deterministic(dist.iid(u012.to_float(), 2))
    assert value == pytest.approx(13 / 9, rel=1e-12)
