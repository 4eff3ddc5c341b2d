import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soninlab import hermite

SQ2 = math.sqrt(2.0)

# mpmath at 50 digits: hermite(k, x/sqrt2) 2^{-k/2} / sqrt(k!)
MP_VALUES = [
    (5, 1.3, 0.1134634663999826),
    (30, 2.5, -0.79629847972020291),
    (100, 0.7, 0.2370740847320054),
    (12, -3.1, -2.1124510306074893),
]
MP_WEIGHTED = [
    (400, 40.0, 0.35801218932213787),
    (50, 30.0, 1.8710633060300922e-57),
    (1000, 10.0, 0.10841978301658231),
]
# (n, smallest positive zero, largest zero) from mpmath polyroots
MP_ZEROS = [
    (4, 0.74196378430272586, 2.3344142183389772),
    (10, 0.48493570751549765, 4.8594628283323122),
    (20, 0.34696415708135593, 7.6190485416797583),
    (41, 0.48776856931943457, 11.614937254337464),
]

finite_x = st.floats(-12, 12, allow_nan=False)


def he_closed(k, x):
    # He_k from repeated differentiation of exp(-x^2/2)
    return [1.0, x, x * x - 1, x**3 - 3 * x, x**4 - 6 * x * x + 3][k]


def test_low_degree_examples():
    assert hermite.eval_p(0, 1.7) == 1.0
    assert hermite.eval_p(2, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert hermite.eval_p(3, 2.0) == pytest.approx(2.0 / math.sqrt(6.0), rel=1e-14)
    assert hermite.eval_p(3, 2.0) == pytest.approx(0.81650, abs=5e-6)


@given(st.integers(0, 4), finite_x)
def test_matches_closed_forms(k, x):
    expected = he_closed(k, x) / math.sqrt(math.factorial(k))
    assert hermite.eval_p(k, x) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("k,x,expected", MP_VALUES)
def test_high_precision_values(k, x, expected):
    assert hermite.eval_p(k, x) == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize("k,x,expected", MP_WEIGHTED)
def test_weighted_high_precision(k, x, expected):
    assert hermite.eval_weighted(k, x) == pytest.approx(expected, rel=1e-10)


def test_eval_all_examples():
    assert hermite.eval_all(1, 0.0) == (1.0, 0.0)
    assert hermite.eval_all(2, 1.0) == pytest.approx((1.0, 1.0, 0.0), abs=1e-15)
    assert hermite.eval_all(3, 0.0) == pytest.approx((1.0, 0.0, -1 / SQ2, 0.0), abs=1e-15)


@given(st.integers(0, 80), finite_x)
def test_eval_all_is_bitwise_eval_p(n, x):
    row = hermite.eval_all(n, x)
    assert len(row) == n + 1
    for k, v in enumerate(row):
        assert v == hermite.eval_p(k, x)


def test_eval_all_on_arrays():
    x = np.linspace(-3, 3, 7)
    table = hermite.eval_all(5, x)
    assert table.shape == (6, 7)
    assert np.array_equal(table[4], hermite.eval_p(4, x))


def test_weighted_examples():
    assert hermite.eval_weighted(0, 0.0) == 1.0
    assert hermite.eval_weighted(0, 2.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert hermite.eval_weighted(2, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_weighted_stays_finite_up_to_degree_500():
    for k in (1, 10, 100, 250, 500):
        x = np.linspace(-2 * math.sqrt(2 * k), 2 * math.sqrt(2 * k), 401)
        values = hermite.eval_weighted(k, x)
        assert np.all(np.isfinite(values))
        assert np.max(np.abs(values)) < 10.0


def test_weighted_matches_unweighted():
    rng = np.random.default_rng(3)
    for k in range(41):
        x = rng.uniform(-2 * math.sqrt(k) - 3, 2 * math.sqrt(k) + 3, 50)
        raw = hermite.eval_p(k, x)
        ok = np.abs(raw) < 1e100
        expected = raw[ok] * np.exp(-x[ok] ** 2 / 4)
        got = hermite.eval_weighted(k, x[ok])
        assert np.allclose(got, expected, rtol=1e-10, atol=1e-300)


def test_weighted_all_rows():
    x = np.array([-1.5, 0.2, 7.0])
    rows = hermite.eval_weighted_all(6, x)
    for k in range(7):
        assert np.allclose(rows[k], hermite.eval_weighted(k, x), rtol=1e-14)


def test_derivative_examples():
    assert hermite.deriv_p(0, 3.3) == 0.0
    assert hermite.deriv_p(1, 5.0) == pytest.approx(1.0)
    assert hermite.deriv_p(3, 0.0) == pytest.approx(-math.sqrt(3) / SQ2, rel=1e-14)
    assert hermite.deriv_p(3, 0.0) == pytest.approx(-1.22474, abs=5e-6)


def test_ode_residual():
    for k in range(61):
        x = np.linspace(-2 * math.sqrt(k) - 1, 2 * math.sqrt(k) + 1, 200)
        p = hermite.eval_p(k, x)
        dp = hermite.deriv_p(k, x)
        d2p = math.sqrt(k) * hermite.deriv_p(k - 1, x) if k >= 1 else 0.0 * x
        residual = -d2p + x * dp - k * p
        assert np.all(np.abs(residual) <= 1e-7 * (1 + np.abs(p)))


def test_orthonormality():
    h = 1e-3
    x = np.arange(-40.0, 40.0 + h / 2, h)
    w = hermite.eval_weighted_all(30, x)
    # trapezoid: the integrand vanishes at both ends
    gram = (w @ w.T) * h / math.sqrt(2 * math.pi)
    assert np.max(np.abs(gram - np.eye(31))) <= 1e-8


def test_leading_coefficient():
    for k in range(1, 11):
        nodes = np.cos(np.pi * (np.arange(k + 1) + 0.5) / (k + 1)) * 2.0
        coeffs = np.polynomial.polynomial.polyfit(nodes, hermite.eval_p(k, nodes), k)
        assert coeffs[-1] == pytest.approx(1 / math.sqrt(math.factorial(k)), rel=1e-8)


@given(st.integers(0, 60), finite_x)
def test_parity(k, x):
    assert hermite.eval_p(k, -x) == pytest.approx((-1) ** k * hermite.eval_p(k, x), rel=1e-12, abs=1e-12)


def test_zero_examples():
    assert np.array_equal(hermite.zeros(1, 1e-12), [0.0])
    assert np.allclose(hermite.zeros(2, 1e-12), [-1.0, 1.0], atol=1e-12)
    a, b = math.sqrt(3 + math.sqrt(6)), math.sqrt(3 - math.sqrt(6))
    assert np.allclose(hermite.zeros(4, 1e-10), [-a, -b, b, a], atol=1e-10)


@pytest.mark.parametrize("n,smallest,largest", MP_ZEROS)
def test_zeros_high_precision(n, smallest, largest):
    z = hermite.zeros(n)
    assert len(z) == n
    assert hermite.smallest_positive_zero(n) == pytest.approx(smallest, abs=1e-12)
    assert z[-1] == pytest.approx(largest, abs=1e-12)


def test_smallest_positive_zero_examples():
    assert hermite.smallest_positive_zero(2, 1e-12) == pytest.approx(1.0, abs=1e-12)
    assert hermite.smallest_positive_zero(3, 1e-12) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert hermite.smallest_positive_zero(4, 1e-12) == pytest.approx(math.sqrt(3 - math.sqrt(6)), abs=1e-12)


def test_interlacing():
    prev = hermite.zeros(1)
    for n in range(2, 61):
        z = hermite.zeros(n)
        assert np.all(np.diff(z) > 0)
        assert np.all(np.abs(hermite.eval_weighted(n, z)) < 1e-9)
        for lo, hi in zip(z[:-1], z[1:]):
            assert np.count_nonzero((prev > lo) & (prev < hi)) == 1
        prev = z


def test_zero_parity():
    for n in range(1, 40):
        z = hermite.zeros(n)
        assert np.array_equal(z, -z[::-1])
        at_zero = hermite.eval_p(n, 0.0)
        assert (at_zero == 0.0) == (n % 2 == 1)


def test_zeros_inside_outer_bound():
    for n in (5, 50, 200):
        assert np.max(np.abs(hermite.zeros(n))) < 2 * math.sqrt(n + 1)


def test_rejects_bad_degrees():
    with pytest.raises(ValueError):
        hermite.eval_p(-1, 0.0)
    with pytest.raises(TypeError):
        hermite.eval_p(1.5, 0.0)
    with pytest.raises(ValueError):
        hermite.zeros(0)
    with pytest.raises(ValueError):
        hermite.zeros(3, tol=0.0)
    with pytest.raises(ValueError):
        hermite.smallest_positive_zero(1)


def test_concurrent_zero_requests_agree():
    reference = hermite.zeros(57, 1e-11)
    results = []

    def work():
        results.append(hermite.zeros(57, 1e-11))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(r, reference) for r in results)
