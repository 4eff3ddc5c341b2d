"""Fixed-step classical RK4 loops for second-order scalar ODEs.

Coefficient functions are sampled by the caller on the half-step grid
(index 2i is x_i, 2i+1 is x_i + h/2), so the loops only do arithmetic and
can be compiled.
"""

from __future__ import annotations

import numba
import numpy as np

# status codes returned by rk4_radial
OK = 0
BLOWUP = 1
CROSSED_ZERO = 2
TURNED_UP = 3


@numba.njit(cache=True)
def rk4_linear(c1, c0, y, dy, h, start):
    """y'' + c1(x) y' + c0(x) y = 0; fills y, dy from index ``start`` onward."""
    n = y.shape[0] - 1
    for i in range(start, n):
        a1, b1 = c1[2 * i], c0[2 * i]
        a2, b2 = c1[2 * i + 1], c0[2 * i + 1]
        a3, b3 = c1[2 * i + 2], c0[2 * i + 2]
        u, v = y[i], dy[i]
        k1u = v
        k1v = -a1 * v - b1 * u
        k2u = v + 0.5 * h * k1v
        k2v = -a2 * k2u - b2 * (u + 0.5 * h * k1u)
        k3u = v + 0.5 * h * k2v
        k3v = -a2 * k3u - b2 * (u + 0.5 * h * k2u)
        k4u = v + h * k3v
        k4v = -a3 * k4u - b3 * (u + h * k3u)
        y[i + 1] = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        dy[i + 1] = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)


@numba.njit(cache=True)
def _radial_rhs(u, v, fric, veff, omega, p):
    return -fric * v + (veff + omega) * u - abs(u) ** p * u


@numba.njit(cache=True)
def rk4_radial(fric, veff, omega, p, y, dy, h, start, blowup, shooting):
    """y'' = -fric(r) y' + (veff(r) + omega) y - |y|^p y.

    Returns (last filled index, status).  With ``shooting`` set the loop
    stops as soon as y crosses zero or y' turns positive while y > 0.
    """
    n = y.shape[0] - 1
    for i in range(start, n):
        f1, w1 = fric[2 * i], veff[2 * i]
        f2, w2 = fric[2 * i + 1], veff[2 * i + 1]
        f3, w3 = fric[2 * i + 2], veff[2 * i + 2]
        u, v = y[i], dy[i]
        k1u = v
        k1v = _radial_rhs(u, v, f1, w1, omega, p)
        k2u = v + 0.5 * h * k1v
        k2v = _radial_rhs(u + 0.5 * h * k1u, k2u, f2, w2, omega, p)
        k3u = v + 0.5 * h * k2v
        k3v = _radial_rhs(u + 0.5 * h * k2u, k3u, f2, w2, omega, p)
        k4u = v + h * k3v
        k4v = _radial_rhs(u + h * k3u, k4u, f3, w3, omega, p)
        un = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        y[i + 1] = un
        dy[i + 1] = vn
        if not abs(un) <= blowup:
            return i + 1, BLOWUP
        if shooting:
            if un < 0.0:
                return i + 1, CROSSED_ZERO
            if vn > 0.0:
                return i + 1, TURNED_UP
    return n, OK


def half_grid(x0: float, h: float, steps: int) -> np.ndarray:
    """Abscissae x0 + j h/2 for j = 0..2*steps."""
    return x0 + 0.5 * h * np.arange(2 * steps + 1)
