"""Rescaled Hermite polynomials p_k = He_k / sqrt(k!).

The p_k are orthonormal for the standard Gaussian measure.  Everything is
computed from the upward three-term recurrence

    p_{k+1}(x) = (x p_k(x) - sqrt(k) p_{k-1}(x)) / sqrt(k+1),   p_0 = 1, p_1 = x,

which is stable for Hermite polynomials.  The weighted functions
p_k(x) exp(-x^2/4) are carried with a separate binary exponent so that they
neither overflow (large k) nor underflow (large |x|).
"""

from __future__ import annotations

import math
import threading

import numpy as np

__all__ = [
    "BracketError",
    "eval_p",
    "eval_all",
    "eval_weighted",
    "eval_weighted_all",
    "deriv_p",
    "zeros",
    "smallest_positive_zero",
]

DEFAULT_TOL = 1e-12
MAX_BISECTIONS = 200

_RESCALE_AT = 2.0**500
_RESCALE_BITS = 500
_LN2 = math.log(2.0)


class BracketError(RuntimeError):
    """A bisection bracket failed to show a sign change."""


def _check_degree(k: int) -> int:
    if isinstance(k, bool) or int(k) != k:
        raise TypeError(f"degree must be an integer, got {k!r}")
    k = int(k)
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    return k


def _as_output(value, scalar: bool):
    return float(value) if scalar else value


def eval_all(n: int, x):
    """Return (p_0(x), ..., p_n(x)) stacked along the first axis."""
    n = _check_degree(n)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    prev = np.ones_like(x)
    out[0] = prev
    if n >= 1:
        cur = x.copy()
        out[1] = cur
        for k in range(1, n):
            prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
            out[k + 1] = cur
    if scalar:
        return tuple(float(v) for v in out)
    return out


def eval_p(k: int, x):
    """p_k(x) by the three-term recurrence.  May overflow for huge arguments."""
    k = _check_degree(k)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return _as_output(prev, scalar)
    cur = x.copy()
    for j in range(1, k):
        prev, cur = cur, (x * cur - math.sqrt(j) * prev) / math.sqrt(j + 1)
    return _as_output(cur, scalar)


def deriv_p(k: int, x):
    """p_k'(x) = sqrt(k) p_{k-1}(x)."""
    k = _check_degree(k)
    if k == 0:
        scalar = np.ndim(x) == 0
        return _as_output(np.zeros_like(np.asarray(x, dtype=float)), scalar)
    return math.sqrt(k) * eval_p(k - 1, x)


def _weighted_iter(n: int, x: np.ndarray):
    """Yield p_k(x) exp(-x^2/4) for k = 0..n.

    The recurrence runs on scaled copies of p_{k-1}, p_k; the Gaussian
    weight and the accumulated power-of-two rescaling live in ``log_scale``
    and are applied to each yielded value.
    """
    log_weight = -0.25 * x * x
    bits = np.zeros(x.shape)
    prev = np.ones_like(x)
    yield np.exp(log_weight)
    if n == 0:
        return
    cur = x.copy()
    yield cur * np.exp(log_weight)
    for k in range(1, n):
        prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
        big = np.abs(cur) > _RESCALE_AT
        if big.any():
            prev = np.where(big, np.ldexp(prev, -_RESCALE_BITS), prev)
            cur = np.where(big, np.ldexp(cur, -_RESCALE_BITS), cur)
            bits = bits + _RESCALE_BITS * big
        yield cur * np.exp(log_weight + bits * _LN2)


def eval_weighted(k: int, x):
    """p_k(x) exp(-x^2/4), finite for any degree and abscissa."""
    k = _check_degree(k)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    value = None
    for value in _weighted_iter(k, x):
        pass
    return _as_output(value, scalar)


def eval_weighted_all(n: int, x) -> np.ndarray:
    """Array of p_k(x) exp(-x^2/4) for k = 0..n along the first axis."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    for k, value in enumerate(_weighted_iter(n, x)):
        out[k] = value
    return out


def _bisect(k: int, lo: np.ndarray, hi: np.ndarray, tol: float) -> np.ndarray:
    flo = np.sign(eval_weighted(k, lo))
    fhi = np.sign(eval_weighted(k, hi))
    bad = ~(flo * fhi < 0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise BracketError(
            f"p_{k} does not change sign on [{lo[i]!r}, {hi[i]!r}]"
        )
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(MAX_BISECTIONS):
        width = hi - lo
        if np.all(width <= 2.0 * tol):
            break
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        fmid = np.sign(eval_weighted(k, mid))
        same = fmid == flo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
        exact = fmid == 0
        if exact.any():
            lo = np.where(exact, mid, lo)
            hi = np.where(exact, mid, hi)
    else:
        raise BracketError(f"bisection for p_{k} did not reach tol={tol}")
    return 0.5 * (lo + hi)


_zero_cache: dict[float, list[np.ndarray]] = {}
_zero_lock = threading.Lock()


def _zero_levels(n: int, tol: float) -> list[np.ndarray]:
    with _zero_lock:
        levels = _zero_cache.setdefault(tol, [np.empty(0), np.zeros(1)])
        while len(levels) <= n:
            k = len(levels)
            inner = levels[k - 1]
            bound = 2.0 * math.sqrt(k + 1)
            edges = np.concatenate(([-bound], inner, [bound]))
            z = _bisect(k, edges[:-1], edges[1:], tol)
            # exact parity; the average of z and -z[::-1] is still within tol
            levels.append(0.5 * (z - z[::-1]))
        return levels


def zeros(n: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """All n zeros of p_n, strictly increasing, each to absolute accuracy ``tol``.

    Brackets come from the zeros of p_{n-1} (interlacing) plus the outer
    bound |x| <= 2 sqrt(n+1); each bracket is bisected on the weighted form.
    """
    n = _check_degree(n)
    if n == 0:
        raise ValueError("p_0 has no zeros")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    return _zero_levels(n, float(tol))[n].copy()


def smallest_positive_zero(n: int, tol: float = DEFAULT_TOL) -> float:
    """x_n, the smallest positive zero of p_n (n >= 2)."""
    n = _check_degree(n)
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    z = zeros(n, tol)
    return float(z[z > tol][0])
