"""Compiled single-run integrator for Dyson Brownian motion.

One call advances one run over ``steps`` base steps, drawing from the
run's own numpy Generator.
"""

from __future__ import annotations

import math

import numba
import numpy as np

OK = 0
COLLISION = 1

_STACK = 256
_NEWTON_ITERATIONS = 100
_NEWTON_TOL = 1e-13
_STEP_TOL = 1e-14


@numba.njit(cache=True, nogil=True)
def _min_gap(u):
    g = np.inf
    for j in range(u.size - 1):
        d = u[j + 1] - u[j]
        if d < g:
            g = d
    return g


@numba.njit(cache=True, nogil=True)
def _drift(u, beta, out):
    n = u.size
    for j in range(n):
        s = 0.0
        for k in range(n):
            if k != j:
                s += 1.0 / (u[j] - u[k])
        out[j] = 0.5 * beta * s


@numba.njit(cache=True, nogil=True)
def _objective(v, w, c):
    n = v.size
    s = 0.0
    for j in range(n):
        s += 0.5 * (v[j] - w[j]) ** 2
    for j in range(n):
        for k in range(j + 1, n):
            s -= c * math.log(v[k] - v[j])
    return s


@numba.njit(cache=True, nogil=True)
def _ordered(v):
    for j in range(v.size - 1):
        if not v[j + 1] > v[j]:
            return False
    return True


@numba.njit(cache=True, nogil=True)
def implicit_step(u, w, h, beta, out):
    """Solve v = w + h drift(v) by damped Newton started from u (ordered).

    v minimizes |v - w|^2 / 2 - (beta h / 2) sum_{j<k} log(v_k - v_j), convex
    on the ordered chamber.  Converged when the gradient or the Newton step is
    negligible; returns False if Newton fails.
    """
    n = u.size
    c = 0.5 * beta * h
    shift = 0.0
    for j in range(n):
        shift += w[j] - u[j]
    shift /= n
    v = u + shift
    phi = _objective(v, w, c)
    grad = np.empty(n)
    hess = np.empty((n, n))
    for _ in range(_NEWTON_ITERATIONS):
        scale = 1.0
        worst = 0.0
        for j in range(n):
            s = 0.0
            diag = 0.0
            for k in range(n):
                if k != j:
                    inv = 1.0 / (v[j] - v[k])
                    s += inv
                    hess[j, k] = -c * inv * inv
                    diag += inv * inv
            hess[j, j] = 1.0 + c * diag
            grad[j] = v[j] - w[j] - c * s
            worst = max(worst, abs(grad[j]))
            scale = max(scale, 1.0 + abs(v[j]))
        if worst <= _NEWTON_TOL * scale:
            out[:] = v
            return True
        step = np.linalg.solve(hess, grad)
        # near a wall the gradient bottoms out at round-off times c / gap^2;
        # the Newton step does not
        biggest = 0.0
        for j in range(n):
            biggest = max(biggest, abs(step[j]))
        if biggest <= _STEP_TOL * scale:
            cand = v - step
            if _ordered(cand):
                out[:] = cand
                return True
        t = 1.0
        moved = False
        for _ in range(60):
            cand = v - t * step
            if _ordered(cand):
                phi_c = _objective(cand, w, c)
                if phi_c <= phi + 1e-14 * abs(phi):
                    v = cand
                    phi = phi_c
                    moved = True
                    break
            t *= 0.5
        if not moved:
            break
    return False


@numba.njit(cache=True, nogil=True)
def dbm_path(u, beta, dt, steps, rng, safety, floor, info):
    """Advance the ordered state ``u`` in place to time steps * dt.

    Each base step draws its Gaussian increment first.  Sub-steps of length
    max(floor, safety gap^2 / beta) take their increment from the Brownian
    bridge of what is left.  A sub-step whose explicit proposal is unsafe or
    unordered is halved (bridge again) while the halves stay above
    ``floor``; at the floor it is taken drift-implicitly.  On failure
    info = (time, gap) and COLLISION is returned.
    """
    n = u.size
    root = math.sqrt(dt)
    w = np.empty(n)
    db = np.empty(n)
    drift = np.empty(n)
    prop = np.empty(n)
    stack_h = np.empty(_STACK)
    stack_db = np.empty((_STACK, n))
    interacting = beta > 0.0 and n > 1
    for k in range(steps):
        for j in range(n):
            w[j] = rng.standard_normal() * root
        if not interacting:
            for j in range(n):
                u[j] += w[j]
            continue
        left = dt
        while left > 0.0:
            g = _min_gap(u)
            h = min(left, max(safety * g * g / beta, floor))
            if h >= left:
                h = left
                for j in range(n):
                    db[j] = w[j]
                left = 0.0
            else:
                a = h / left
                b = math.sqrt(h * (left - h) / left)
                for j in range(n):
                    db[j] = a * w[j] + b * rng.standard_normal()
                left -= h
            for j in range(n):
                w[j] -= db[j]
            time = (k + 1) * dt - left - h
            # depth-first over the halves of this sub-step
            top = 0
            stack_h[0] = h
            stack_db[0, :] = db
            while top >= 0:
                hs = stack_h[top]
                seg = stack_db[top].copy()
                top -= 1
                g = _min_gap(u)
                if hs <= safety * g * g / beta:
                    _drift(u, beta, drift)
                    for j in range(n):
                        prop[j] = u[j] + drift[j] * hs + seg[j]
                    if _ordered(prop):
                        u[:] = prop
                        time += hs
                        continue
                if 0.5 * hs >= floor and top + 2 < _STACK:
                    half = math.sqrt(0.25 * hs)
                    first = np.empty(n)
                    for j in range(n):
                        first[j] = 0.5 * seg[j] + half * rng.standard_normal()
                    top += 1
                    stack_h[top] = 0.5 * hs
                    stack_db[top, :] = seg - first
                    top += 1
                    stack_h[top] = 0.5 * hs
                    stack_db[top, :] = first
                    continue
                if not implicit_step(u, u + seg, hs, beta, prop):
                    info[0] = time
                    info[1] = g
                    return COLLISION
                u[:] = prop
                time += hs
    return OK
