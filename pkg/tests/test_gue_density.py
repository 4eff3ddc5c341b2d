import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from soninlab import gue_density as G
from soninlab import hermite

INV = 1 / math.sqrt(2 * math.pi)

# mpmath, 50 digits, sum form
MP_DENSITY = [
    (3, 0.7, 0.50586698475082158),
    (5, 1.1, 0.69798113593412114),
    (10, 2.0, 0.92762172969598637),
    (40, 3.3, 1.9557820329094292),
]
MP_DERIVATIVE = [
    (2, 0.5, 0.1320244975366123),
    (4, 0.3, 0.13695962539769638),
    (7, -1.2, 0.039579880626309696),
]
MP_GLOBAL_MAX = [
    (4, 0.74196378430272586, 0.66710422150683894),
    (6, 0.61670659019259415, 0.80682987736595991),
]


def test_density_examples():
    assert G.density(1, 0.0) == pytest.approx(INV, rel=1e-14)
    assert G.density(2, 0.0) == pytest.approx(INV, rel=1e-14)
    assert G.density(2, 1.0) == pytest.approx(2 * math.exp(-0.5) * INV, rel=1e-14)
    assert G.density(2, 1.0) == pytest.approx(0.48394, abs=5e-6)


@pytest.mark.parametrize("n,x,expected", MP_DENSITY)
def test_density_high_precision(n, x, expected):
    assert G.density(n, x) == pytest.approx(expected, rel=1e-12)


def test_rejects_empty_ensemble():
    with pytest.raises(ValueError):
        G.density(0, 0.0)


def test_checked_density_agrees():
    x = np.linspace(-5, 5, 101)
    assert np.array_equal(G.density(7, x, check=True), G.density(7, x))


def test_forms_agree():
    rng = np.random.default_rng(11)
    for n in range(1, 51):
        x = rng.uniform(-2 * math.sqrt(n), 2 * math.sqrt(n), 1000)
        a = G.density(n, x)
        b = G.density_christoffel_darboux(n, x)
        assert np.max(np.abs(a - b) / a) <= 1e-10


@given(st.integers(1, 60), st.floats(-20, 20, allow_nan=False))
def test_nonnegative_and_even(n, x):
    v = G.density(n, x)
    assert v >= 0
    assert G.density(n, -x) == pytest.approx(v, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("n", [1, 2, 3, 8, 25])
def test_total_mass(n):
    assert G.integrated_density(n, -50, 50) == pytest.approx(n, abs=1e-6)


def test_derivative_examples():
    for n in (1, 2, 3, 10, 11):
        assert G.density_derivative(n, 0.0) == 0.0
    assert G.density_derivative(2, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert G.density_derivative(2, 0.5) == pytest.approx(0.13202, abs=5e-6)


@pytest.mark.parametrize("n,x,expected", MP_DERIVATIVE)
def test_derivative_high_precision(n, x, expected):
    assert G.density_derivative(n, x) == pytest.approx(expected, rel=1e-11)


def test_derivative_matches_finite_differences():
    h = 1e-6
    for n in (1, 2, 5, 12, 30):
        x = np.linspace(-2 * math.sqrt(n) - 1, 2 * math.sqrt(n) + 1, 301)
        d = G.density_derivative(n, x)
        fd = (G.density(n, x + h) - G.density(n, x - h)) / (2 * h)
        big = np.abs(d) > 1e-6
        assert np.all(np.sign(d[big]) == np.sign(fd[big]))
        assert np.all(np.abs(d[big] - fd[big]) <= 1e-4 * np.abs(d[big]))


def test_extrema_examples():
    two = G.local_extrema(2)
    assert [e.kind for e in two] == ["max", "min", "max"]
    assert [e.location for e in two] == pytest.approx([-1.0, 0.0, 1.0], abs=1e-12)
    three = G.local_extrema(3)
    assert [e.kind for e in three] == ["max", "min", "max", "min", "max"]
    r3 = math.sqrt(3)
    assert [e.location for e in three] == pytest.approx([-r3, -1.0, 0.0, 1.0, r3], abs=1e-12)
    kinds = [e.kind for e in G.local_extrema(10)]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
    with pytest.raises(ValueError):
        G.local_extrema(1)


def test_global_max_examples():
    one = G.global_max(1)
    assert one.locations == (0.0,)
    assert one.value == pytest.approx(0.39894, abs=5e-6)
    two = G.global_max(2)
    assert two.locations == pytest.approx((-1.0, 1.0), abs=1e-12)
    assert two.value == pytest.approx(0.48394, abs=5e-6)
    three = G.global_max(3)
    assert three.locations == (0.0,)
    assert three.value == pytest.approx(1.5 * INV, rel=1e-13)


@pytest.mark.parametrize("n,location,value", MP_GLOBAL_MAX)
def test_global_max_high_precision(n, location, value):
    g = G.global_max(n)
    assert g.locations[1] == pytest.approx(location, abs=1e-12)
    assert g.value == pytest.approx(value, rel=1e-12)
    assert g.scan_max <= g.value + 1e-9


def test_sonin_decay_of_maxima():
    for n in range(2, 41):
        z = hermite.zeros(n)
        values = G.density(n, z[z > 1e-9])
        assert np.all(np.diff(values) < 0)


def test_density_at_zeros_is_squared_slope():
    for n in (2, 5, 16, 33):
        z = hermite.zeros(n)
        slope = hermite.deriv_p(n, z) * np.exp(-z * z / 4)
        assert np.allclose(G.density(n, z), INV * slope**2, rtol=1e-9)


def test_center_is_local_minimum_for_even_n():
    for n in range(2, 41, 2):
        c = G.density(n, 0.0)
        assert c < G.density(n, 1e-3)
        assert c < G.density(n, -1e-3)


def test_odd_center_examples():
    assert G.odd_center_value(0) == pytest.approx(INV, rel=1e-15)
    assert G.odd_center_value(1) == pytest.approx(1.5 * INV, rel=1e-15)
    assert G.odd_center_value(2) == pytest.approx(1.875 * INV, rel=1e-15)
    assert G.odd_center_value(2) == pytest.approx(0.748017, abs=5e-7)
    with pytest.raises(ValueError):
        G.odd_center_value(-1)
    with pytest.raises(TypeError):
        G.odd_center_value(1.5)


def test_odd_center_matches_factorials():
    for k in range(0, 85):
        exact = math.factorial(2 * k + 1) / (2 ** (2 * k) * math.factorial(k) ** 2)
        assert G.odd_center_value(k) == pytest.approx(INV * exact, rel=1e-12)


def test_asymptotic_examples():
    assert G.asymptotic_center_value(1) == pytest.approx(math.exp(0.25) / math.pi, rel=1e-15)
    assert G.asymptotic_center_value(1) == pytest.approx(0.40872, abs=5e-6)
    assert G.asymptotic_center_value(3) == pytest.approx(0.59924, abs=5e-6)
    assert G.density(3, 0.0) == pytest.approx(0.59841, abs=5e-6)
    assert G.asymptotic_center_value(5) == pytest.approx(0.74826, abs=5e-6)
    assert G.density(5, 0.0) == pytest.approx(0.748017, abs=5e-7)
    with pytest.raises(ValueError):
        G.asymptotic_center_value(4)


def test_integrated_density_examples():
    eps = 0.01
    got = G.integrated_density(1, -eps, eps)
    assert abs(got - 2 * eps * INV) <= eps**3
    assert got == pytest.approx(math.erf(eps / math.sqrt(2)), rel=1e-12)
    assert G.integrated_density(2, 0.0, 0.0) == 0.0
    # mpmath quad
    assert G.integrated_density(2, 0.95, 1.05) / 0.1 == pytest.approx(0.48373995792456637, abs=1e-8)
    assert G.integrated_density(3, -1, 2) == pytest.approx(1.5939056277304882, abs=1e-9)
    with pytest.raises(ValueError):
        G.integrated_density(2, 1.0, 0.0)
