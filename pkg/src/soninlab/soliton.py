"""Real radial profiles of NLS solitons and their envelope.

Profiles solve

    -y'' - (d-1)/r y' + V(r) y - |y|^p y = -omega y,     y'(0) = 0,

and for a repulsive potential (V' <= 0) the successive maxima of |y| never
increase.  The energy

    f = y'^2/2 - V y^2/2 + |y|^{p+2}/(p+2) - omega y^2/2

satisfies f' = -(d-1)/r y'^2 - V'(r) y^2 / 2, which is what the checks here
exercise numerically.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels
from .envelope import NOT_APPLICABLE, EnvelopeReport, envelope_from_samples
from .errors import BlowUpError

__all__ = [
    "Potential",
    "NLSRadialParams",
    "RadialProfile",
    "InequalityReport",
    "integrate_radial",
    "envelope_report",
    "lyapunov_f",
    "lyapunov_residual",
    "extremum_inequality_check",
    "shoot_ground_state",
    "shifted_problem",
    "random_repulsive",
    "sech_profile",
]

BLOWUP_THRESHOLD = 1e6
ENVELOPE_SLACK = 1e-8
INEQUALITY_SLACK = 1e-6


@dataclass(frozen=True)
class Potential:
    """Radial potential V(r) with its derivative; both accept numpy arrays."""

    value: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    spec: str

    @classmethod
    def zero(cls) -> "Potential":
        return cls(lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                   lambda r: np.zeros_like(np.asarray(r, dtype=float)), "zero")

    @classmethod
    def exp_sum(cls, terms) -> "Potential":
        """V(r) = sum_i a_i exp(-b_i r); repulsive when every a_i >= 0."""
        terms = [(float(a), float(b)) for a, b in terms]
        if not terms:
            return cls.zero()
        for _, b in terms:
            if not b > 0:
                raise ValueError(f"decay rates must be positive, got {b}")

        def value(r):
            r = np.asarray(r, dtype=float)
            return sum(a * np.exp(-b * r) for a, b in terms) + 0.0 * r

        def deriv(r):
            r = np.asarray(r, dtype=float)
            return sum(-a * b * np.exp(-b * r) for a, b in terms) + 0.0 * r

        spec = "sum:" + ";".join(f"{a!r},{b!r}" for a, b in terms)
        return cls(value, deriv, spec)

    @classmethod
    def harmonic(cls, c: float) -> "Potential":
        """V(r) = c r^2 (a trap, not repulsive for c > 0)."""
        c = float(c)
        return cls(lambda r: c * np.asarray(r, dtype=float) ** 2,
                   lambda r: 2.0 * c * np.asarray(r, dtype=float), f"harmonic:{c!r}")

    @classmethod
    def tabulated(cls, rs, vs, spec: str = "table") -> "Potential":
        """Piecewise-linear V through (r, V) samples; no extrapolation."""
        rs = np.asarray(rs, dtype=float)
        vs = np.asarray(vs, dtype=float)
        if rs.ndim != 1 or rs.shape != vs.shape or rs.size < 2:
            raise ValueError("potential table needs at least two (r, V) rows")
        if not np.all(np.diff(rs) > 0):
            raise ValueError("potential table radii must be strictly increasing")
        slopes = np.diff(vs) / np.diff(rs)
        lo, hi = rs[0], rs[-1]

        def inside(r):
            r = np.asarray(r, dtype=float)
            if np.any(r < lo) or np.any(r > hi):
                raise ValueError(f"potential table covers [{lo}, {hi}]; no extrapolation")
            return r

        def value(r):
            return np.interp(inside(r), rs, vs)

        def deriv(r):
            idx = np.clip(np.searchsorted(rs, inside(r), side="right") - 1, 0, slopes.size - 1)
            return slopes[idx]

        return cls(value, deriv, spec)

    @classmethod
    def parse(cls, spec: str) -> "Potential":
        """``zero``, ``sum:a1,b1;a2,b2``, ``harmonic:c`` or ``file:path``."""
        spec = spec.strip()
        if spec in ("", "zero", "sum:"):
            return cls.zero()
        kind, _, body = spec.partition(":")
        if kind == "sum":
            terms = []
            for chunk in body.split(";"):
                chunk = chunk.strip()
                if not chunk:
                    continue
                parts = chunk.split(",")
                if len(parts) != 2:
                    raise ValueError(f"bad term {chunk!r} in potential {spec!r}; want a,b")
                terms.append((float(parts[0]), float(parts[1])))
            return cls.exp_sum(terms)
        if kind == "harmonic":
            return cls.harmonic(float(body))
        if kind == "file":
            rows = []
            for lineno, line in enumerate(Path(body).read_text().splitlines(), 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.replace(",", " ").split()
                if len(parts) != 2:
                    raise ValueError(f"{body}:{lineno}: expected two columns")
                rows.append((float(parts[0]), float(parts[1])))
            if not rows:
                raise ValueError(f"{body}: no data rows")
            rs, vs = zip(*rows)
            return cls.tabulated(rs, vs, spec)
        raise ValueError(f"unknown potential spec {spec!r}")


@dataclass(frozen=True)
class NLSRadialParams:
    """Parameters of the radial profile equation.

    ``ell`` is the angular index of the two-dimensional reduction (adds
    ell^2/r^2 to the potential).  ``shift`` > 0 describes the same equation
    in the variable s = r - shift, which has no singular point at s = 0.
    """

    d: int
    p: float
    omega: float
    potential: Potential = field(default_factory=Potential.zero)
    ell: int = 0
    shift: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if not self.p > 0:
            raise ValueError(f"nonlinearity power must be positive, got {self.p}")
        if self.ell != 0 and self.d != 2:
            raise ValueError("angular index ell is only meaningful for d = 2")
        if self.shift < 0:
            raise ValueError(f"shift must be non-negative, got {self.shift}")

    def friction(self, s):
        r = np.asarray(s, dtype=float) + self.shift
        if self.d == 1:
            return np.zeros_like(r)
        with np.errstate(divide="ignore"):
            return (self.d - 1) / r

    def effective_potential(self, s):
        r = np.asarray(s, dtype=float) + self.shift
        v = np.asarray(self.potential.value(r), dtype=float) + 0.0 * r
        if self.ell:
            with np.errstate(divide="ignore"):
                v = v + self.ell**2 / r**2
        return v

    def effective_potential_deriv(self, s):
        r = np.asarray(s, dtype=float) + self.shift
        dv = np.asarray(self.potential.deriv(r), dtype=float) + 0.0 * r
        if self.ell:
            with np.errstate(divide="ignore"):
                dv = dv - 2.0 * self.ell**2 / r**3
        return dv

    def describe(self) -> dict:
        return {
            "d": self.d,
            "p": self.p,
            "omega": self.omega,
            "potential": self.potential.spec,
            "ell": self.ell,
            "shift": self.shift,
        }


@dataclass
class RadialProfile:
    params: NLSRadialParams
    grid: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    step: float

    @property
    def repulsive(self) -> bool:
        s = self.grid[self.grid + self.params.shift > 0]
        return bool(np.all(self.params.effective_potential_deriv(s) <= 0.0))

    @property
    def regular_start(self) -> bool:
        """True when the profile starts at a point with y' = 0 (r = 0 or a shifted maximum)."""
        return self.dy[0] == 0.0 and not (self.params.ell and self.params.shift == 0)


def _prepare(params: NLSRadialParams, y0: float, r_max: float, step: float, dy0: float):
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if not r_max > 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    if not math.isfinite(y0):
        raise ValueError(f"y0 must be finite, got {y0}")
    steps = max(2, int(math.ceil(r_max / step - 1e-9)))
    h = r_max / steps
    nodes = _kernels.half_grid(0.0, h, steps)
    nodes[-1] = r_max
    fric = params.friction(nodes)
    veff = params.effective_potential(nodes)
    y = np.zeros(steps + 1)
    dy = np.zeros(steps + 1)
    singular = params.shift == 0 and params.d >= 2
    if singular:
        # the r = 0 node is never used by the stepping loop
        fric[0] = 0.0
        veff[0] = 0.0 if params.ell else veff[0]
    if params.shift == 0 and params.ell:
        # regular solution of the ell-channel behaves like y0 * r^|ell|
        m = abs(params.ell)
        dy[0] = y0 if m == 1 else 0.0
        y[1] = y0 * h**m
        dy[1] = y0 * m * h ** (m - 1)
        start = 1
    elif singular:
        if dy0 != 0.0:
            raise ValueError("profiles starting at r = 0 in d >= 2 need y'(0) = 0")
        # y = y0 + c2 r^2 + c3 r^3 + c4 r^4 near 0; the odd term comes from V'(0) != 0
        d, p, omega = params.d, params.p, params.omega
        v0 = float(params.potential.value(np.asarray(0.0)))
        dv0 = float(params.potential.deriv(np.asarray(0.0)))
        eps = 1e-5
        ddv0 = (float(params.potential.deriv(np.asarray(eps))) - dv0) / eps
        c2 = (v0 + omega - abs(y0) ** p) * y0 / (2 * d)
        c3 = dv0 * y0 / (3 * (d + 1))
        c4 = (0.5 * ddv0 * y0 + (v0 + omega - (p + 1) * abs(y0) ** p) * c2) / (4 * (d + 2))
        # RK4 is only stable once h (d-1)/r is moderate, so the series covers
        # the first d-1 steps
        start = max(1, d - 1)
        r = h * np.arange(start + 1)
        y[: start + 1] = y0 + r * r * (c2 + r * (c3 + r * c4))
        dy[: start + 1] = r * (2 * c2 + r * (3 * c3 + 4 * r * c4))
    else:
        y[0], dy[0] = y0, dy0
        start = 0
    return nodes, fric, veff, y, dy, h, start


def _run(params, y0, r_max, step, dy0, shooting, blowup=BLOWUP_THRESHOLD):
    nodes, fric, veff, y, dy, h, start = _prepare(params, y0, r_max, step, dy0)
    last, status = _kernels.rk4_radial(
        fric, veff, float(params.omega), float(params.p), y, dy, h, start, blowup, shooting
    )
    return nodes[::2].copy(), y, dy, last, status


def integrate_radial(
    params: NLSRadialParams, y0: float, r_max: float, step: float = 1e-3, dy0: float = 0.0,
    blowup: float = BLOWUP_THRESHOLD,
) -> RadialProfile:
    """Integrate the profile equation outward from s = 0 to r_max.

    From r = 0 in d >= 2 the first max(1, d - 1) steps come from the Taylor
    series y0 + c2 r^2 + c3 r^3 + c4 r^4, with c2 = (V(0) + omega - |y0|^p) y0 / (2d).
    With ell != 0 (d = 2) ``y0`` is the amplitude of the r^|ell| seed.
    """
    grid, y, dy, last, status = _run(params, y0, r_max, step, dy0, False, blowup)
    if status == _kernels.BLOWUP:
        raise BlowUpError(f"|y| exceeded {blowup:g} at r = {grid[last] + params.shift:.6g}")
    return RadialProfile(params, grid, y, dy, float(step))


def envelope_report(profile: RadialProfile, slack: float = ENVELOPE_SLACK, *, require_repulsive: bool = True) -> EnvelopeReport:
    """Maxima of |y| outward from the start; certified only for repulsive potentials."""
    report = envelope_from_samples(
        profile.grid, profile.y, profile.dy, include_start=profile.regular_start, slack=slack
    )
    if require_repulsive and not profile.repulsive:
        report.verdict = NOT_APPLICABLE
    return report


def lyapunov_f(profile: RadialProfile) -> np.ndarray:
    """f = y'^2/2 - V y^2/2 + |y|^{p+2}/(p+2) - omega y^2/2 on the grid."""
    par = profile.params
    y, dy = profile.y, profile.dy
    with np.errstate(invalid="ignore"):
        v = par.effective_potential(profile.grid)
        return 0.5 * dy**2 - 0.5 * v * y**2 + np.abs(y) ** (par.p + 2) / (par.p + 2) - 0.5 * par.omega * y**2


def lyapunov_derivative(profile: RadialProfile) -> np.ndarray:
    """The identity f' = -(d-1)/r y'^2 - V'(r) y^2 / 2."""
    par = profile.params
    with np.errstate(invalid="ignore"):
        return -par.friction(profile.grid) * profile.dy**2 - 0.5 * par.effective_potential_deriv(profile.grid) * profile.y**2


def lyapunov_residual(profile: RadialProfile) -> float:
    """Sup |f'_numeric - f'_identity| with a five-point stencil, skipping s < 2 step.

    Stencils that touch a singular r = 0 node are skipped as well.
    """
    f = lyapunov_f(profile)
    h = profile.grid[1] - profile.grid[0]
    numeric = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    exact = lyapunov_derivative(profile)[2:-2]
    keep = profile.grid[2:-2] >= 2.0 * profile.step
    if profile.params.shift == 0 and profile.params.d >= 2:
        keep[0] = False
    return float(np.max(np.abs(numeric - exact)[keep]))


@dataclass
class InequalityReport:
    """Per-maximum check of |y|^{p+2} >= (V + omega) y^2 and the g_k comparison."""

    locations: np.ndarray
    values: np.ndarray
    inequality_holds: np.ndarray
    g_current: np.ndarray
    g_next: np.ndarray
    step_ok: np.ndarray

    @property
    def ok(self) -> bool:
        return bool(np.all(self.inequality_holds) and np.all(self.step_ok))


def extremum_inequality_check(profile: RadialProfile, slack: float = INEQUALITY_SLACK,
                              report: EnvelopeReport | None = None) -> InequalityReport:
    """Check the extremum inequality at every maximum of |y|.

    For consecutive maxima it also evaluates
    g_k(y) = |y|^{p+2}/(p+2) - (V(r_k) + omega) y^2 / 2 at both heights: either
    the next maximum is lower, or g_k takes (to slack) the same value at both.
    """
    par = profile.params
    if report is None:
        report = envelope_report(profile, require_repulsive=False)
    r = report.locations
    a = report.values
    level = par.effective_potential(r) + par.omega
    lhs = a ** (par.p + 2)
    rhs = level * a**2
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    holds = lhs >= rhs - slack * np.maximum(scale, 1e-300)

    def g(k, amp):
        return amp ** (par.p + 2) / (par.p + 2) - 0.5 * level[k] * amp**2

    k = np.arange(len(a) - 1)
    g_cur = g(k, a[:-1])
    g_next = g(k, a[1:])
    gscale = np.maximum(np.abs(g_cur), np.abs(g_next))
    step_ok = (a[1:] ** 2 < a[:-1] ** 2) | (np.abs(g_cur - g_next) <= slack * np.maximum(gscale, 1e-300))
    return InequalityReport(r, a, holds, g_cur, g_next, step_ok)


def _classify(params, y0, r_max, step):
    _, _, _, _, status = _run(params, y0, r_max, step, 0.0, True)
    if status == _kernels.CROSSED_ZERO:
        return "over"
    if status in (_kernels.TURNED_UP, _kernels.BLOWUP):
        return "under"
    return "undecided"


def shoot_ground_state(
    params: NLSRadialParams, lo: float, hi: float, tol: float = 1e-10,
    r_max: float = 40.0, step: float = 1e-3,
) -> float:
    """Bisect y(0) between an undershoot and an overshoot.

    Overshoot: y crosses zero.  Undershoot: y turns back up (or grows)
    while positive.  Stops when the bracket is narrower than ``tol`` or a
    trial decays all the way to r_max without either event.
    """
    if params.ell or params.shift:
        raise ValueError("shooting is set up for ell = 0 profiles starting at r = 0")
    if not lo < hi:
        raise ValueError(f"invalid bracket: need lo < hi, got [{lo}, {hi}]")
    c_lo = _classify(params, lo, r_max, step)
    c_hi = _classify(params, hi, r_max, step)
    if {c_lo, c_hi} != {"over", "under"}:
        raise ValueError(f"invalid bracket [{lo}, {hi}]: behaviours {c_lo!r} and {c_hi!r}")
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        c_mid = _classify(params, mid, r_max, step)
        if c_mid == "undecided":
            return mid
        if c_mid == c_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shifted_problem(params: NLSRadialParams, r0: float) -> NLSRadialParams:
    """The same equation in s = r - r0, for profiles whose first maximum is at r0 > 0.

    The friction (d-1)/(s + r0) and potential V(s + r0) (plus ell^2/(s + r0)^2)
    are kept exactly, so integrating from s = 0 with y'(0) = 0 reproduces the
    original profile beyond r0.
    """
    if not r0 > 0:
        raise ValueError(f"shift r0 must be positive, got {r0}")
    return dataclasses.replace(params, shift=params.shift + float(r0))


def sech_profile(r, omega: float = 1.0):
    """Exact d = 1, p = 2 soliton sqrt(2 omega) sech(sqrt(omega) r)."""
    r = np.asarray(r, dtype=float)
    return math.sqrt(2.0 * omega) / np.cosh(math.sqrt(omega) * r)


def random_repulsive(rng: np.random.Generator) -> tuple[NLSRadialParams, float]:
    """A random repulsive configuration: V = sum of <= 3 decaying exponentials."""
    d = int(rng.choice([1, 2, 3, 5]))
    p = float(rng.choice([1, 2, 3]))
    omega = float(rng.uniform(0.2, 2.0))
    nterms = int(rng.integers(1, 4))
    terms = [(float(rng.uniform(0.0, 2.0)), float(rng.uniform(0.2, 2.0))) for _ in range(nterms)]
    y0 = float(rng.uniform(0.05, 3.0))
    return NLSRadialParams(d, p, omega, Potential.exp_sum(terms)), y0
