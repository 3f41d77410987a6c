from fractions import Fraction as F
import json
import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from mechlab import dist, myerson
from mechlab.errors import (BadGrid, BadProbability, BadScale, Empty, InputError,
                            NegativeValue, SizeCap)

from conftest import exact_dists, rational_dists


# ---------------------------------------------------------------- construction

def test_two_point_distribution():
    d = dist.make_dist([1, 2], [F(1, 2), F(1, 2)])
    assert d.support == (1, 2)
    assert d.probs == (F(1, 2), F(1, 2))
    assert d.exact


def test_point_mass():
    d = dist.make_dist([5], [1])
    assert d.support == (5,) and d.probs == (1,)


def test_unsorted_input_is_sorted():
    assert dist.make_dist([2, 1], [F(1, 2), F(1, 2)]).support == (1, 2)


def test_zero_atoms_dropped_and_duplicates_merged():
    d = dist.make_dist([3, 1, 3, 7], [F(1, 4), F(1, 2), F(1, 4), 0])
    assert d.support == (1, 3)
    assert d.probs == (F(1, 2), F(1, 2))


def test_string_inputs_are_exact():
    d = dist.make_dist(["1/3", "0.5"], ["1/4", "3/4"])
    assert d.support == (F(1, 3), F(1, 2))


@pytest.mark.parametrize("support, probs, err", [
    ([-1, 2], [F(1, 2), F(1, 2)], NegativeValue),
    ([1, 2], [F(3, 2), F(-1, 2)], BadProbability),
    ([1, 2], [F(1, 2), F(1, 3)], BadProbability),
    ([], [], Empty),
    ([1], [0], BadProbability),
    ([1, 2], [1], InputError),
])
def test_construction_errors(support, probs, err):
    with pytest.raises(err):
        dist.make_dist(support, probs)


def test_float_path_tolerates_tiny_drift_and_renormalizes():
    d = dist.make_dist([0.0, 1.0], [0.5, 0.5 + 1e-13])
    assert not d.exact
    assert abs(d.probs.sum() - 1.0) < 1e-15


def test_float_path_rejects_real_drift():
    with pytest.raises(BadProbability):
        dist.make_dist([0.0, 1.0], [0.5, 0.51])


def test_float_merge_tolerance():
    d = dist.make_dist([1.0, 1.0 + 1e-14, 2.0], [0.25, 0.25, 0.5])
    assert len(d) == 2
    assert d.probs[0] == pytest.approx(0.5)


def test_immutable():
    d = dist.uniform([1, 2])
    with pytest.raises(AttributeError):
        d.support = (3,)
    f = d.to_float()
    with pytest.raises(ValueError):
        f.support[0] = 9.0


# ---------------------------------------------------------------- tails

def test_tail_examples(u12, u012):
    assert dist.tail(u12, 2) == F(1, 2)
    assert dist.tail(u012, 0) == 1
    assert dist.tail(u012, 1) == F(2, 3)
    assert dist.tail(u012, F(3, 2)) == F(1, 3)
    assert dist.tail(u012, 3) == 0


@given(exact_dists())
def test_tail_at_zero_is_one(d):
    assert dist.tail(d, 0) == 1


@given(exact_dists(), st.fractions(min_value=0, max_value=15))
def test_tail_float_matches_exact(d, p):
    assert dist.tail(d.to_float(), float(p)) == pytest.approx(float(dist.tail(d, p)), abs=1e-12)


# ---------------------------------------------------------------- convolution

def test_convolve_uniform12(u12):
    c = dist.convolve(u12, u12)
    assert c.support == (2, 3, 4)
    assert c.probs == (F(1, 4), F(1, 2), F(1, 4))


def test_convolve_identity(u012):
    assert dist.convolve(dist.point_mass(0), u012) == u012


def test_convolve_bernoulli():
    b = dist.bernoulli(F(2, 3))
    c = dist.convolve(b, b)
    assert c.support == (0, 1, 2)
    assert c.probs == (F(1, 9), F(4, 9), F(4, 9))


@pytest.mark.parametrize("k", [1, 2, 3, 7, 16])
def test_convolve_power_is_binomial(k):
    from scipy.stats import binom
    p = F(1, 3)
    c = dist.convolve_power(dist.bernoulli(p), k)
    assert c.support == tuple(range(k + 1))
    got = np.array([float(x) for x in c.probs])
    np.testing.assert_allclose(got, binom.pmf(np.arange(k + 1), k, 1 / 3), rtol=1e-12)
    # exact check against the closed form
    assert c.probs == tuple(math.comb(k, i) * p ** i * (1 - p) ** (k - i) for i in range(k + 1))


def test_convolve_power_two_equals_convolve(u12):
    assert dist.convolve_power(u12, 2) == dist.convolve(u12, u12)


def test_convolve_power_rejects_zero(u12):
    with pytest.raises(InputError):
        dist.convolve_power(u12, 0)


def test_float_convolution_large_binomial():
    from scipy.stats import binom
    k, p = 5000, 0.3
    c = dist.convolve_power(dist.bernoulli(p), k)
    v, q = c.as_arrays()
    ref = binom.pmf(v.astype(int), k, p)
    assert np.max(np.abs(q - ref)) < 1e-12


def test_float_convolution_non_lattice():
    a = dist.make_dist([0.5, 1.25], [0.5, 0.5], exact=False)
    b = dist.make_dist([0.1, 0.3], [0.25, 0.75], exact=False)
    c = dist.convolve(a, b)
    np.testing.assert_allclose(c.support, [0.6, 0.8, 1.35, 1.55])
    np.testing.assert_allclose(c.probs, [0.125, 0.375, 0.125, 0.375])


def test_size_cap():
    a = dist.uniform(list(range(0, 400, 2)))
    b = dist.uniform([F(1, 3) * i for i in range(300)])
    with pytest.raises(SizeCap):
        dist.convolve(a, b, max_atoms=1000)


def test_convolve_all_matches_pairwise(u12, u012):
    assert dist.convolve_all([u12, u012, u12]) == dist.convolve(dist.convolve(u12, u012), u12)


# ---------------------------------------------------------------- scale / truncate

def test_scale_examples(u12):
    assert dist.scale(u12, 1) == u12
    assert dist.scale(u12, 3) == dist.uniform([3, 6])
    assert dist.scale(dist.point_mass(2), F(1, 2)) == dist.point_mass(1)


@pytest.mark.parametrize("alpha", [0, -1])
def test_scale_rejects_nonpositive(u12, alpha):
    with pytest.raises(BadScale):
        dist.scale(u12, alpha)


def test_truncate_examples(u12, u012):
    assert dist.truncate_above(u12, 5) == u12
    assert dist.truncate_above(u12, F(3, 2)) == dist.make_dist([1, F(3, 2)], [F(1, 2), F(1, 2)])
    assert dist.truncate_above(u012, 1) == dist.make_dist([0, 1], [F(1, 3), F(2, 3)])


# ---------------------------------------------------------------- expectation

def test_expectation_examples(u12):
    assert dist.expectation(u12) == F(3, 2)
    assert dist.expectation(dist.point_mass(7)) == 7
    assert dist.expectation(dist.bernoulli(F(2, 3))) == F(2, 3)


# ---------------------------------------------------------------- dominance

def test_dominance_examples(u12):
    one = dist.point_mass(1)
    assert dist.dominates(u12, u12)
    assert dist.dominates(u12, one)
    assert not dist.dominates(one, u12)


# ---------------------------------------------------------------- ER discretization

def test_er_two_point_collapse():
    assert dist.er_discretized(1, 2, 2) == dist.make_dist([1, 2], [F(1, 2), F(1, 2)])


@pytest.mark.parametrize("r, m, n", [(1, 16, 5), (2, 50, 7), (F(1, 2), 8, 4)])
def test_er_tails_match_at_grid(r, m, n):
    d = dist.er_discretized(r, m, n)
    for g in d.support:
        assert dist.tail(d, g) == F(r) / g
    assert myerson.rev1(d).revenue == r


def test_er_float_grid():
    d = dist.er_discretized(1.0, 1000.0, 50)
    v, q = d.as_arrays()
    tails = np.cumsum(q[::-1])[::-1]
    np.testing.assert_allclose(tails, 1 / v, rtol=1e-12)
    assert myerson.rev1(d).revenue == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("r, m, n", [(1, 1, 5), (2, 1, 5), (1, 10, 1)])
def test_er_bad_grid(r, m, n):
    with pytest.raises(BadGrid):
        dist.er_discretized(r, m, n)


def test_power_law_tails():
    d = dist.power_law_discretized(2.0, 50.0, 15)
    v, q = d.as_arrays()
    assert v[0] == 1.0 and v[-1] == pytest.approx(50.0)
    tails = np.cumsum(q[::-1])[::-1]
    np.testing.assert_allclose(tails, v ** -1.0, rtol=1e-12)


# ---------------------------------------------------------------- JSON

def test_json_round_trip_exact(hr_item):
    p = dist.product(hr_item, dist.uniform([0, F(1, 3)]))
    text = dist.dumps(p)
    assert json.loads(text)["items"][0]["probs"] == ["1/6", "1/2", "1/3"]
    assert dist.loads(text) == p


def test_json_round_trip_float():
    d = dist.er_discretized(1.0, 30.0, 9)
    back = dist.loads(dist.dumps(d))
    assert back.items[0] == d


def test_json_bare_distribution():
    p = dist.loads('{"support": ["5"], "probs": ["1"]}')
    assert p.k == 1 and p.items[0] == dist.point_mass(5)


@pytest.mark.parametrize("text", ["{", '{"support": [1]}', '{"items": 3}', "[1, 2]",
                                  '{"support": [true], "probs": [1]}'])
def test_json_malformed(text):
    with pytest.raises(InputError):
        dist.loads(text)


# ---------------------------------------------------------------- properties

@given(exact_dists(), exact_dists())
def test_convolution_conserves_mass_and_adds_means(a, b):
    c = dist.convolve(a, b)
    assert sum(c.probs) == 1
    assert dist.expectation(c) == dist.expectation(a) + dist.expectation(b)


@given(exact_dists(), exact_dists())
def test_float_convolution_matches_exact(a, b):
    c = dist.convolve(a, b)
    cf = dist.convolve(a.to_float(), b.to_float())
    np.testing.assert_allclose(cf.support, [float(v) for v in c.support])
    np.testing.assert_allclose(cf.probs, [float(p) for p in c.probs], atol=1e-12)


@given(rational_dists(), st.fractions(min_value=F(1, 10), max_value=10))
def test_truncate_and_scale_expectation(d, m):
    assert dist.expectation(dist.truncate_above(d, m)) <= dist.expectation(d)
    assert dist.expectation(dist.scale(d, m)) == m * dist.expectation(d)


def _shift_up(d, rng_bits):
    """A distribution dominating ``d``: move each atom up by 0, 1 or 2."""
    vals = [v + (b % 3) for v, b in zip(d.support, rng_bits)]
    return dist.make_dist(vals, d.probs)


@given(exact_dists(), exact_dists(), st.lists(st.integers(0, 8), min_size=5, max_size=5),
       st.lists(st.integers(0, 8), min_size=5, max_size=5))
def test_dominance_transported_by_convolution(a, b, bits_a, bits_b):
    a2, b2 = _shift_up(a, bits_a), _shift_up(b, bits_b)
    assert dist.dominates(a2, a) and dist.dominates(b2, b)
    assert dist.dominates(dist.convolve(a2, b2), dist.convolve(a, b))


@given(exact_dists(), exact_dists(), exact_dists())
def test_dominance_is_a_partial_order(a, b, c):
    assert dist.dominates(a, a)
    if dist.dominates(a, b) and dist.dominates(b, a):
        assert a == b
    if dist.dominates(a, b) and dist.dominates(b, c):
        assert dist.dominates(a, c)


@given(exact_dists(), exact_dists())
def test_dominance_float_matches_exact(a, b):
    assert dist.dominates(a.to_float(), b.to_float()) == dist.dominates(a, b)
