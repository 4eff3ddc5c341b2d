"""Extrema and zeros of sampled oscillatory solutions, and monotonicity verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EnvelopeReport",
    "monotonicity",
    "strictly_monotone",
    "critical_points",
    "sign_zeros",
    "envelope_from_samples",
]

VERDICT_SLACK = 1e-9

CONSTANT = "constant"
NONINCREASING = "nonincreasing"
NONDECREASING = "nondecreasing"
VIOLATED = "violated"
NOT_APPLICABLE = "not applicable"


def monotonicity(values, slack: float = VERDICT_SLACK) -> tuple[str, float, int | None]:
    """Classify a sequence as constant / nonincreasing / nondecreasing / violated.

    A step counts as a rise only if it exceeds ``slack`` times the largest
    magnitude in the sequence.  Returns (verdict, max_violation, index) where
    max_violation is the smaller of the largest rise and the largest drop
    (zero for a monotone sequence) and index is the first step breaking the
    direction of the first non-negligible step.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return CONSTANT, 0.0, None
    tol = slack * float(np.max(np.abs(v)))
    steps = np.diff(v)
    max_rise = float(max(steps.max(), 0.0))
    max_drop = float(max((-steps).max(), 0.0))
    rises = steps > tol
    drops = steps < -tol
    if not rises.any() and not drops.any():
        return CONSTANT, 0.0, None
    if not rises.any():
        return NONINCREASING, 0.0, None
    if not drops.any():
        return NONDECREASING, 0.0, None
    first = int(np.flatnonzero(rises | drops)[0])
    bad = drops if rises[first] else rises
    return VIOLATED, min(max_rise, max_drop), int(np.flatnonzero(bad)[0])


def strictly_monotone(values, direction: str, slack: float = VERDICT_SLACK) -> bool:
    """True if every step moves in ``direction`` by more than slack * max|v|."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True
    tol = slack * float(np.max(np.abs(v)))
    steps = np.diff(v)
    if direction == "decreasing":
        return bool(np.all(steps < -tol))
    if direction == "increasing":
        return bool(np.all(steps > tol))
    raise ValueError(f"direction must be 'increasing' or 'decreasing', got {direction!r}")


def _local_quadratic(x, d, i):
    """Quadratic through three samples of d around the interval [x_i, x_{i+1}].

    Returns coefficients (a, b, c) of d(x_i + t) ~ a t^2 + b t + c.
    """
    j = i - 1 if i >= 1 else i
    if j + 2 >= len(x):
        j = len(x) - 3
    t = x[j : j + 3] - x[i]
    a, b, c = np.polyfit(t, d[j : j + 3], 2)
    return a, b, c


def _quad_root(a, b, c, h):
    """Root of a t^2 + b t + c in [0, h], assuming a sign change there."""
    t = -c / b if b != 0 else 0.5 * h
    for _ in range(30):
        q = (a * t + b) * t + c
        dq = 2 * a * t + b
        if dq == 0:
            break
        step = q / dq
        t -= step
        if abs(step) <= 1e-16 * max(h, abs(t)):
            break
    if not (-1e-9 * h <= t <= h * (1 + 1e-9)):
        # fall back to bisection on the quadratic
        lo, hi = 0.0, h
        qlo = c
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            qm = (a * mid + b) * mid + c
            if (qm > 0) == (qlo > 0):
                lo, qlo = mid, qm
            else:
                hi = mid
        t = 0.5 * (lo + hi)
    return min(max(t, 0.0), h)


def critical_points(x, y, dy, include_start: bool = False):
    """Locate sign changes of dy, refined by quadratic interpolation of dy.

    Returns a list of (location, y value, is_max_of_abs_y).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dy = np.asarray(dy, dtype=float)
    out = []
    if include_start and dy[0] == 0.0 and len(y) > 1:
        out.append((float(x[0]), float(y[0]), abs(y[1]) < abs(y[0])))
    s = np.sign(dy)
    change = np.flatnonzero(s[:-1] * s[1:] < 0)
    flat = np.flatnonzero(s[1:-1] == 0) + 1
    for i in sorted(set(change.tolist()) | set(flat.tolist())):
        if s[i] == 0:
            before, after = dy[i - 1], dy[i + 1]
            if before * after >= 0:
                continue
            loc, val = float(x[i]), float(y[i])
        else:
            before = dy[i]
            if s[i + 1] == 0:
                continue  # handled as the flat point i+1
            h = x[i + 1] - x[i]
            a, b, c = _local_quadratic(x, dy, i)
            t = _quad_root(a, b, c, h)
            loc = float(x[i] + t)
            val = float(y[i] + ((a / 3.0 * t + b / 2.0) * t + c) * t)
        out.append((loc, val, (before > 0) == (val > 0) and val != 0.0))
    return out


def sign_zeros(x, y, dy):
    """Zeros of y (sign changes), with |y'| there, both from the local quadratic of y'."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dy = np.asarray(dy, dtype=float)
    out = []
    s = np.sign(y)
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        h = x[i + 1] - x[i]
        a, b, c = _local_quadratic(x, dy, i)

        def cubic(t):
            return y[i] + ((a / 3.0 * t + b / 2.0) * t + c) * t

        t = h * y[i] / (y[i] - y[i + 1])
        for _ in range(30):
            slope = (a * t + b) * t + c
            if slope == 0:
                break
            step = cubic(t) / slope
            t -= step
            if abs(step) <= 1e-16 * h:
                break
        t = min(max(t, 0.0), h)
        out.append((float(x[i] + t), float(abs((a * t + b) * t + c))))
    for i in np.flatnonzero(s[1:-1] == 0) + 1:
        if s[i - 1] * s[i + 1] < 0:
            out.append((float(x[i]), float(abs(dy[i]))))
    out.sort()
    return out


@dataclass
class EnvelopeReport:
    """Successive maxima of |y| and the values of |y'| at zeros of y."""

    extrema: list[tuple[float, float]]
    zeros: list[tuple[float, float]]
    verdict: str
    max_violation: float
    violation_index: int | None = None
    minima: list[tuple[float, float]] = field(default_factory=list)

    @property
    def locations(self) -> np.ndarray:
        return np.array([loc for loc, _ in self.extrema])

    @property
    def values(self) -> np.ndarray:
        return np.array([val for _, val in self.extrema])

    @property
    def zero_slopes(self) -> np.ndarray:
        return np.array([val for _, val in self.zeros])

    def nonincreasing(self) -> bool:
        return self.verdict in (CONSTANT, NONINCREASING)

    def nondecreasing(self) -> bool:
        return self.verdict in (CONSTANT, NONDECREASING)


def envelope_from_samples(
    x, y, dy, *, include_start: bool = False, slack: float = VERDICT_SLACK, start_at: float | None = None
) -> EnvelopeReport:
    """Build an EnvelopeReport; ``start_at`` drops maxima located before it."""
    crit = critical_points(x, y, dy, include_start=include_start)
    maxima = [(loc, abs(val)) for loc, val, is_max in crit if is_max]
    minima = [(loc, abs(val)) for loc, val, is_max in crit if not is_max]
    if start_at is not None:
        maxima = [m for m in maxima if m[0] >= start_at]
    if not maxima:
        raise ValueError("no local maxima of |y| in the sampled range")
    verdict, worst, index = monotonicity([v for _, v in maxima], slack)
    return EnvelopeReport(
        extrema=maxima,
        zeros=sign_zeros(x, y, dy),
        verdict=verdict,
        max_violation=worst,
        violation_index=index,
        minima=minima,
    )
