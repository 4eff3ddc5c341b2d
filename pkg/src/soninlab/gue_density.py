"""Exact eigenvalue density (one-point function) of an n x n GUE matrix.

Normalization: diagonal entries N(0, 1), off-diagonal real and imaginary
parts N(0, 1/2), so that

    R(x) = (2 pi)^{-1/2} sum_{k<n} p_k(x)^2 exp(-x^2/2)

integrates to n.  All evaluations go through the weighted Hermite functions
p_k(x) exp(-x^2/4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import hermite

__all__ = [
    "GlobalMax",
    "Extremum",
    "density",
    "density_christoffel_darboux",
    "density_derivative",
    "local_extrema",
    "global_max",
    "odd_center_value",
    "asymptotic_center_value",
    "integrated_density",
]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
CROSS_CHECK_RTOL = 1e-10
SCAN_STEP = 1e-3
SCAN_MARGIN = 1e-9


def _check_size(n: int, minimum: int = 1) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise TypeError(f"matrix size must be an integer, got {n!r}")
    n = int(n)
    if n < minimum:
        raise ValueError(f"matrix size must be >= {minimum}, got {n}")
    return n


def density_christoffel_darboux(n: int, x):
    """Product form sqrt(n/2pi) [p_n' p_{n-1} - p_n p_{n-1}'] exp(-x^2/2)."""
    n = _check_size(n)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    w = hermite.eval_weighted_all(n, x)
    # p_n' = sqrt(n) p_{n-1},  p_{n-1}' = sqrt(n-1) p_{n-2}
    value = math.sqrt(n) * w[n - 1] ** 2
    if n >= 2:
        value = value - math.sqrt(n - 1) * w[n] * w[n - 2]
    value = math.sqrt(n) * INV_SQRT_2PI * value
    return float(value) if scalar else value


def density(n: int, x, *, check: bool = False):
    """GUE one-point function R(x) for matrix size n (sum-of-squares form).

    With ``check=True`` the Christoffel-Darboux product form is evaluated too
    and a relative disagreement above 1e-10 raises ``ArithmeticError``.
    """
    n = _check_size(n)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    w = hermite.eval_weighted_all(n - 1, x)
    value = INV_SQRT_2PI * np.sum(w * w, axis=0)
    if check:
        other = density_christoffel_darboux(n, x)
        gap = np.abs(value - other)
        if np.any(gap > CROSS_CHECK_RTOL * np.abs(value)):
            raise ArithmeticError(
                f"sum and product forms disagree (max gap {gap.max():.3e})"
            )
    return float(value) if scalar else value


def density_derivative(n: int, x):
    """R'(x) = -sqrt(n/2pi) p_n(x) p_{n-1}(x) exp(-x^2/2)."""
    n = _check_size(n)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    w = hermite.eval_weighted_all(n, x)
    value = -math.sqrt(n) * INV_SQRT_2PI * w[n] * w[n - 1]
    return float(value) if scalar else value


@dataclass(frozen=True)
class Extremum:
    location: float
    value: float
    kind: str  # "max" or "min"


def local_extrema(n: int, tol: float = hermite.DEFAULT_TOL) -> list[Extremum]:
    """Critical points of R: maxima at zeros of p_n, minima at zeros of p_{n-1}."""
    n = _check_size(n, minimum=2)
    maxima = hermite.zeros(n, tol)
    minima = hermite.zeros(n - 1, tol)
    points = [(z, "max") for z in maxima] + [(z, "min") for z in minima]
    points.sort(key=lambda item: item[0])
    values = density(n, np.array([z for z, _ in points]))
    out = [Extremum(float(z), float(v), kind) for (z, kind), v in zip(points, values)]
    for a, b in zip(out, out[1:]):
        if a.kind == b.kind:
            raise ArithmeticError(f"extrema kinds fail to alternate near x={b.location}")
    return out


@dataclass(frozen=True)
class GlobalMax:
    locations: tuple[float, ...]
    value: float
    scan_max: float


def global_max(n: int, tol: float = hermite.DEFAULT_TOL) -> GlobalMax:
    """Location(s) and value of sup R.

    Odd n: the maximum sits at 0.  Even n: at +-x_n, the smallest positive
    zero of p_n, with value n (2pi)^{-1/2} p_{n-1}(x_n)^2 exp(-x_n^2/2).
    The closed form is then confirmed by a grid scan with step 1e-3.
    """
    n = _check_size(n)
    if n % 2 == 1:
        locations = (0.0,)
        value = density(n, 0.0)
    else:
        xn = hermite.smallest_positive_zero(n, tol)
        locations = (-xn, xn)
        value = n * INV_SQRT_2PI * hermite.eval_weighted(n - 1, xn) ** 2
    half_width = 2.0 * math.sqrt(n) + 1.0
    count = int(round(2.0 * half_width / SCAN_STEP))
    grid = np.linspace(-half_width, half_width, count + 1)
    scan_max = float(np.max(density(n, grid)))
    if scan_max > value + SCAN_MARGIN:
        raise ArithmeticError(
            f"grid scan found density {scan_max!r} above claimed maximum {value!r}"
        )
    return GlobalMax(locations, float(value), scan_max)


def odd_center_value(k: int) -> float:
    """R(0) for n = 2k+1: (2pi)^{-1/2} (2k+1)! / (2^{2k} (k!)^2).

    Evaluated as the running product prod_{j<=k} (2j+1)/(2j).
    """
    if isinstance(k, bool) or int(k) != k:
        raise TypeError(f"k must be an integer, got {k!r}")
    k = int(k)
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    ratio = 1.0
    for j in range(1, k + 1):
        ratio *= (2 * j + 1) / (2 * j)
    value = INV_SQRT_2PI * ratio
    if not math.isfinite(value):
        raise OverflowError(f"center value overflows for k={k}")
    return value


def asymptotic_center_value(n: int) -> float:
    """sqrt(n) exp(1/(4n)) / pi, the large-n form of R(0) for odd n."""
    n = _check_size(n)
    if n % 2 == 0:
        raise ValueError(f"asymptotic center value is for odd n, got {n}")
    return math.sqrt(n) * math.exp(0.25 / n) / math.pi


def integrated_density(n: int, a: float, b: float, *, epsabs: float = 1e-10) -> float:
    """Integral of R over [a, b] (absolute error <= 1e-9).

    The range is clipped to where R is not negligibly small and split into
    unit pieces, each handled by adaptive Gauss-Kronrod quadrature.
    """
    n = _check_size(n)
    if a > b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    reach = 2.0 * math.sqrt(n) + 14.0
    lo, hi = max(a, -reach), min(b, reach)
    if lo >= hi:
        return 0.0
    pieces = max(1, int(math.ceil(hi - lo)))
    edges = np.linspace(lo, hi, pieces + 1)
    per_piece = epsabs / pieces
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(
            lambda t: density(n, t), left, right, epsabs=per_piece, epsrel=0.0, limit=200
        )
        total += value
    return total
