import random
from fractions import Fraction

from hypothesis import settings, strategies as st
import pytest

from mechlab import dist

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_exact_dist(rng, max_atoms=6, max_value=20, min_atoms=1):
    n = rng.randint(min_atoms, max_atoms)
    values = rng.sample(range(0, max_value), n)
    weights = [rng.randint(1, 9) for _ in range(n)]
    total = sum(weights)
    return dist.make_dist(values, [Fraction(w, total) for w in weights])


@st.composite
def exact_dists(draw, max_atoms=5, max_value=12):
    n = draw(st.integers(1, max_atoms))
    values = draw(st.lists(st.integers(0, max_value), min_size=n, max_size=n, unique=True))
    weights = draw(st.lists(st.integers(1, 9), min_size=n, max_size=n))
    total = sum(weights)
    return dist.make_dist(values, [Fraction(w, total) for w in weights])


@st.composite
def rational_dists(draw, max_atoms=4):
    """Supports with non-integer rational values."""
    n = draw(st.integers(1, max_atoms))
    values = draw(st.lists(st.fractions(min_value=0, max_value=10, max_denominator=7),
                           min_size=n, max_size=n, unique=True))
    weights = draw(st.lists(st.integers(1, 9), min_size=n, max_size=n))
    total = sum(weights)
    return dist.make_dist(values, [Fraction(w, total) for w in weights])


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def u12():
    return dist.uniform([1, 2])


@pytest.fixture
def u012():
    return dist.uniform([0, 1, 2])


@pytest.fixture
def hr_item():
    return dist.make_dist([1, 2, 4], [Fraction(1, 6), Fraction(1, 2), Fraction(1, 3)])
