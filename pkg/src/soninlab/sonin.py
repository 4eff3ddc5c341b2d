"""Envelope monotonicity for y'' + phi(x) y = 0 (Sonin's energy argument).

If phi > 0 is monotone, f = y^2 + y'^2 / phi moves opposite to phi and
equals y^2 at every extremum of y, so the maxima of |y| increase when phi
decreases and decrease when phi increases.  The companion energy
y'^2 + phi y^2 moves with phi, which orders |y'| at the zeros of y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels, hermite
from .envelope import (
    EnvelopeReport,
    envelope_from_samples,
    monotonicity,
    sign_zeros,
    strictly_monotone,
)

__all__ = [
    "CoefficientSpec",
    "Trajectory",
    "ZeroSlopeReport",
    "integrate",
    "envelope_report",
    "sonin_energy",
    "energy_follows_theorem",
    "derivative_at_zeros",
    "bessel_j0",
    "bessel_j0_prime",
    "preset",
]

MONOTONE_TOL = 1e-12
ENERGY_SLACK = 1e-8
STEPS_PER_HALF_OSCILLATION = 50
BESSEL_SWITCH = 12.0
BESSEL_STEP = 1e-3

DIRECTIONS = ("increasing", "decreasing", "constant")


@dataclass(frozen=True)
class CoefficientSpec:
    """phi on [x0, X0], positive, with a declared monotonicity direction.

    ``phi`` must accept numpy arrays.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    x0: float
    x1: float
    direction: str
    name: str = "custom"

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if not self.x0 < self.x1:
            raise ValueError(f"empty interval [{self.x0}, {self.x1}]")

    def evaluate(self, x) -> np.ndarray:
        """phi at x, checking positivity and the declared direction on these points."""
        x = np.asarray(x, dtype=float)
        values = np.asarray(self.phi(x), dtype=float) * np.ones_like(x)
        if not np.all(values > 0):
            bad = x[~(values > 0)][0]
            raise ValueError(f"phi must be positive; phi({bad!r}) = {self.phi(np.asarray(bad))!r}")
        if x.ndim == 1 and x.size > 1:
            order = np.argsort(x)
            steps = np.diff(values[order])
            tol = MONOTONE_TOL * float(np.max(np.abs(values)))
            if self.direction == "increasing" and np.any(steps < -tol):
                raise ValueError(f"{self.name}: phi declared increasing but decreases")
            if self.direction == "decreasing" and np.any(steps > tol):
                raise ValueError(f"{self.name}: phi declared decreasing but increases")
            if self.direction == "constant" and np.any(np.abs(steps) > tol):
                raise ValueError(f"{self.name}: phi declared constant but varies")
        return values

    @classmethod
    def constant(cls, c: float, x0: float, x1: float) -> "CoefficientSpec":
        return cls(lambda x: np.full_like(np.asarray(x, dtype=float), c), x0, x1, "constant", f"constant:{c:g}")

    @classmethod
    def linear(cls, a: float, b: float, x0: float, x1: float) -> "CoefficientSpec":
        """phi(x) = a + b x."""
        direction = "constant" if b == 0 else ("increasing" if b > 0 else "decreasing")
        return cls(lambda x: a + b * np.asarray(x, dtype=float), x0, x1, direction, f"linear:{a:g},{b:g}")

    @classmethod
    def bessel_log(cls, x0: float, x1: float) -> "CoefficientSpec":
        """phi = e^{2x}; solved by J0(e^x)."""
        return cls(lambda x: np.exp(2.0 * np.asarray(x, dtype=float)), x0, x1, "increasing", "bessel-log")

    @classmethod
    def bessel_sqrt(cls, x0: float, x1: float) -> "CoefficientSpec":
        """phi = 1 + 1/(4x^2) on x > 0; solved by sqrt(x) J0(x)."""
        if x0 <= 0:
            raise ValueError("bessel-sqrt needs x0 > 0")
        return cls(lambda x: 1.0 + 0.25 / np.asarray(x, dtype=float) ** 2, x0, x1, "decreasing", "bessel-sqrt")

    @classmethod
    def hermite_weighted(cls, n: int, x0: float, x1: float) -> "CoefficientSpec":
        """phi = n + 1/2 - x^2/4 on x >= 0; solved by p_n(x) e^{-x^2/4}."""
        if x0 < 0:
            raise ValueError("hermite-weighted is monotone only on x >= 0")
        return cls(
            lambda x: n + 0.5 - 0.25 * np.asarray(x, dtype=float) ** 2,
            x0,
            x1,
            "decreasing",
            f"hermite-weighted:{n}",
        )

    @classmethod
    def tabulated(cls, xs, phis, name: str = "table") -> "CoefficientSpec":
        """Linear interpolation of (x, phi) samples; evaluation outside the table is an error."""
        xs = np.asarray(xs, dtype=float)
        phis = np.asarray(phis, dtype=float)
        if xs.ndim != 1 or xs.shape != phis.shape or xs.size < 2:
            raise ValueError("table needs at least two (x, phi) rows")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("table abscissae must be strictly increasing")
        if not np.all(phis > 0):
            raise ValueError("tabulated phi must be positive")
        steps = np.diff(phis)
        if np.all(steps == 0):
            direction = "constant"
        elif np.all(steps >= 0):
            direction = "increasing"
        elif np.all(steps <= 0):
            direction = "decreasing"
        else:
            raise ValueError("tabulated phi must be monotone")
        lo, hi = xs[0], xs[-1]

        def phi(x):
            x = np.asarray(x, dtype=float)
            if np.any(x < lo) or np.any(x > hi):
                raise ValueError(f"phi table covers [{lo}, {hi}]; no extrapolation")
            return np.interp(x, xs, phis)

        return cls(phi, float(lo), float(hi), direction, name)

    @classmethod
    def from_file(cls, path) -> "CoefficientSpec":
        """Two-column (x, phi) text table; commas or whitespace, '#' comments."""
        rows = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
        if not rows:
            raise ValueError(f"{path}: no data rows")
        xs, phis = zip(*rows)
        return cls.tabulated(xs, phis, name=f"file:{path}")


@dataclass
class Trajectory:
    grid: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    step: float


def integrate(coeff: CoefficientSpec, y0: float, dy0: float, step: float) -> Trajectory:
    """RK4 solution of y'' + phi y = 0 on [x0, X0] with a fixed step.

    The step is shrunk to divide the interval evenly.  It must resolve the
    oscillation: step <= min(pi / sqrt(phi)) / 50.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    steps = max(1, int(math.ceil((coeff.x1 - coeff.x0) / step - 1e-9)))
    h = (coeff.x1 - coeff.x0) / steps
    nodes = _kernels.half_grid(coeff.x0, h, steps)
    nodes[-1] = coeff.x1
    phi = coeff.evaluate(nodes)
    limit = float(np.min(math.pi / np.sqrt(phi))) / STEPS_PER_HALF_OSCILLATION
    if step > limit:
        raise ValueError(
            f"step {step} too coarse for {coeff.name}: need <= {limit:.3e} "
            f"({STEPS_PER_HALF_OSCILLATION} steps per half oscillation)"
        )
    y = np.empty(steps + 1)
    dy = np.empty(steps + 1)
    y[0], dy[0] = y0, dy0
    _kernels.rk4_linear(np.zeros_like(phi), phi, y, dy, h, 0)
    return Trajectory(nodes[::2].copy(), y, dy, float(step))


def envelope_report(traj: Trajectory, slack: float = 1e-9) -> EnvelopeReport:
    """Maxima of |y|, |y'| at zeros, and the monotonicity verdict of the maxima."""
    if not np.any(np.sign(traj.dy[:-1]) * np.sign(traj.dy[1:]) <= 0):
        raise ValueError("trajectory has no sign change of y'")
    return envelope_from_samples(traj.grid, traj.y, traj.dy, slack=slack)


def sonin_energy(traj: Trajectory, coeff: CoefficientSpec) -> np.ndarray:
    """f = y^2 + y'^2 / phi on the trajectory grid."""
    phi = coeff.evaluate(traj.grid)
    return traj.y**2 + traj.dy**2 / phi


def energy_follows_theorem(f, coeff: CoefficientSpec, slack: float = ENERGY_SLACK) -> bool:
    """True if f is monotone opposite to phi (constant for constant phi)."""
    verdict, _, _ = monotonicity(f, slack)
    expected = {
        "increasing": ("nonincreasing", "constant"),
        "decreasing": ("nondecreasing", "constant"),
        "constant": ("constant",),
    }[coeff.direction]
    return verdict in expected


@dataclass
class ZeroSlopeReport:
    zeros: np.ndarray
    slopes: np.ndarray
    strictly_decreasing: bool
    energy_decreasing: bool

    @property
    def ok(self) -> bool:
        return self.strictly_decreasing and self.energy_decreasing


def derivative_at_zeros(traj: Trajectory, coeff: CoefficientSpec, slack: float = 1e-9) -> ZeroSlopeReport:
    """|y'| at successive zeros of y; strictly decreasing when phi strictly decreases."""
    if coeff.direction != "decreasing":
        raise ValueError(f"{coeff.name}: needs phi declared strictly decreasing, got {coeff.direction}")
    zs = sign_zeros(traj.grid, traj.y, traj.dy)
    locations = np.array([z for z, _ in zs])
    slopes = np.array([s for _, s in zs])
    phi = coeff.evaluate(traj.grid)
    energy = traj.dy**2 + phi * traj.y**2
    verdict, _, _ = monotonicity(energy, ENERGY_SLACK)
    return ZeroSlopeReport(
        zeros=locations,
        slopes=slopes,
        strictly_decreasing=strictly_monotone(slopes, "decreasing", slack),
        energy_decreasing=verdict in ("nonincreasing", "constant"),
    )


def _j0_series(x: float) -> tuple[float, float]:
    half = 0.5 * x
    q = half * half
    term = 1.0
    value = 1.0
    deriv = 0.0
    m = 0
    while True:
        m += 1
        term *= -q / (m * m)
        value += term
        # d/dx (x/2)^{2m} = m (x/2)^{2m-1}
        deriv += term * m / half if half != 0 else 0.0
        if m > half and abs(term) < 1e-18:
            break
    return value, deriv


def _j0_pair(x: float) -> tuple[float, float]:
    x = float(x)
    if x < 0 or not math.isfinite(x):
        raise ValueError(f"bessel_j0 needs finite x >= 0, got {x}")
    if x <= BESSEL_SWITCH:
        return _j0_series(x)
    y0, dy0 = _j0_series(BESSEL_SWITCH)
    steps = int(math.ceil((x - BESSEL_SWITCH) / BESSEL_STEP))
    h = (x - BESSEL_SWITCH) / steps
    nodes = _kernels.half_grid(BESSEL_SWITCH, h, steps)
    y = np.empty(steps + 1)
    dy = np.empty(steps + 1)
    y[0], dy[0] = y0, dy0
    # x^2 y'' + x y' + x^2 y = 0  ->  y'' + y'/x + y = 0
    _kernels.rk4_linear(1.0 / nodes, np.ones_like(nodes), y, dy, h, 0)
    return float(y[-1]), float(dy[-1])


def bessel_j0(x: float) -> float:
    """J0(x) for x >= 0: power series up to 12, ODE continuation beyond."""
    return _j0_pair(x)[0]


def bessel_j0_prime(x: float) -> float:
    """J0'(x) = -J1(x), by the same route as bessel_j0."""
    return _j0_pair(x)[1]


PRESETS = ("bessel-log", "bessel-sqrt", "hermite-weighted")


def preset(name: str, x0: float, x1: float, n: int | None = None) -> tuple[CoefficientSpec, float, float]:
    """Built-in (phi, y(x0), y'(x0)) triples whose exact solutions are known."""
    if name == "bessel-log":
        t = math.exp(x0)
        value, deriv = _j0_pair(t)
        return CoefficientSpec.bessel_log(x0, x1), value, t * deriv
    if name == "bessel-sqrt":
        value, deriv = _j0_pair(x0)
        s = math.sqrt(x0)
        return CoefficientSpec.bessel_sqrt(x0, x1), s * value, value / (2 * s) + s * deriv
    if name == "hermite-weighted":
        if n is None:
            raise ValueError("hermite-weighted preset needs a degree n")
        w = float(hermite.eval_weighted(n, x0))
        w_prev = float(hermite.eval_weighted(n - 1, x0)) if n >= 1 else 0.0
        return CoefficientSpec.hermite_weighted(n, x0, x1), w, math.sqrt(n) * w_prev - 0.5 * x0 * w
    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
