"""Batch command line for the soninlab experiments.

Every command writes CSV: one ``#`` line holding JSON metadata (command,
parameters, version, seed, assertions, summary), a header row, then data.
Exit codes: 0 all assertions pass, 1 an assertion failed, 2 usage error,
3 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, ensemble, gue_density, hermite, sonin, soliton
from .errors import NumericalAbort

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class Report:
    command: str
    params: dict
    columns: list[str]
    rows: list = field(default_factory=list)
    seed: int | None = None
    assertions: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def render(self) -> str:
        meta = {
            "command": self.command,
            "params": self.params,
            "version": __version__,
            "seed": self.seed,
            "assertions": {k: bool(v) for k, v in self.assertions.items()},
            "passed": self.passed,
            "summary": self.summary,
        }
        buf = io.StringIO()
        buf.write("# " + json.dumps(_plain(meta), sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _pos_int(text):
    value = _nonneg_int(text)
    if value == 0:
        raise argparse.ArgumentTypeError("must be >= 1, got 0")
    return value


def _pos_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# hermite


def cmd_hermite(args) -> Report:
    params = {"n": args.n, "x": args.x, "zeros": args.zeros}
    if args.zeros:
        if args.n == 0:
            raise UsageError("p_0 has no zeros")
        z = hermite.zeros(args.n)
        rows = [(i, float(v)) for i, v in enumerate(z)]
        asserts = {
            "count": len(z) == args.n,
            "symmetric": bool(np.all(z == -z[::-1])),
            "simple": bool(np.all(np.diff(z) > 0)),
        }
        return Report("hermite", params, ["k_or_index", "value"], rows, assertions=asserts)
    values = hermite.eval_all(args.n, args.x)
    rows = [(k, float(v)) for k, v in enumerate(values)]
    asserts = {"finite": all(math.isfinite(v) for _, v in rows)}
    return Report("hermite", params, ["k_or_index", "value"], rows, assertions=asserts)


# density


def cmd_density(args) -> Report:
    n = args.n
    params = {"n": n, "grid": args.grid, "max": args.max, "center": args.center}
    if args.max:
        g = gue_density.global_max(n)
        rows = [(loc, g.value) for loc in g.locations]
        asserts = {"scan_below_max": g.scan_max <= g.value + gue_density.SCAN_MARGIN}
        if n % 2 == 0:
            xn = hermite.smallest_positive_zero(n)
            asserts["center_is_lower"] = gue_density.density(n, 0.0) < g.value
            asserts["at_smallest_zero"] = abs(g.locations[1] - xn) <= 1e-10
        return Report("density", params, ["x", "R"], rows, assertions=asserts,
                      summary={"value": g.value, "scan_max": g.scan_max})
    if args.center:
        if n % 2 == 0:
            raise UsageError(f"--center needs odd n, got {n}")
        exact = float(gue_density.density(n, 0.0))
        closed = gue_density.odd_center_value((n - 1) // 2)
        asym = gue_density.asymptotic_center_value(n)
        gap = abs(exact - asym) / exact
        rows = [("exact", exact), ("closed_form", closed), ("asymptotic", asym),
                ("relative_gap", gap), ("n3_gap", n**3 * gap)]
        asserts = {
            "closed_form": abs(exact - closed) <= 1e-10 * closed,
            "asymptotic": gap <= 0.5 / n**3,
        }
        return Report("density", params, ["quantity", "value"], rows, assertions=asserts)
    a, b, step = args.grid if args.grid else (-(2 * math.sqrt(n) + 2), 2 * math.sqrt(n) + 2, 0.01)
    if not (b > a and step > 0):
        raise UsageError("--grid needs a < b and step > 0")
    count = int(math.floor((b - a) / step + 1e-9))
    x = a + step * np.arange(count + 1)
    values = gue_density.density(n, x)
    cd = gue_density.density_christoffel_darboux(n, x)
    scale = max(float(np.max(values)), 1e-300)
    asserts = {
        "nonnegative": bool(np.all(values >= 0)),
        "forms_agree": bool(np.max(np.abs(values - cd)) <= 1e-10 * scale),
    }
    rows = [(float(u), float(v)) for u, v in zip(x, values)]
    params["grid"] = [a, b, step]
    return Report("density", params, ["x", "R"], rows, assertions=asserts)


# envelope

_ENVELOPE_DEFAULTS = {"bessel-log": (0.0, 3.6), "bessel-sqrt": (1.0, 40.0)}


def cmd_envelope(args) -> Report:
    params = {"preset": args.preset, "n": args.n, "phi_file": args.phi_file,
              "range": args.range, "step": args.step}
    if args.phi_file:
        coeff = sonin.CoefficientSpec.from_file(args.phi_file)
        if args.range:
            coeff = sonin.CoefficientSpec(coeff.phi, args.range[0], args.range[1], coeff.direction, coeff.name)
        y0, dy0 = args.y0, args.dy0
        params.update(y0=y0, dy0=dy0)
    else:
        if args.preset == "hermite-weighted":
            if args.n is None or args.n < 1:
                raise UsageError("hermite-weighted needs --n >= 1")
            default = (0.0, 2.0 * math.sqrt(args.n))
        else:
            default = _ENVELOPE_DEFAULTS[args.preset]
        x0, x1 = args.range if args.range else default
        coeff, y0, dy0 = sonin.preset(args.preset, x0, x1, args.n)
    params["range"] = [coeff.x0, coeff.x1]
    traj = sonin.integrate(coeff, y0, dy0, args.step)
    rep = sonin.envelope_report(traj)
    f = sonin.sonin_energy(traj, coeff)
    asserts = {"energy_monotone": sonin.energy_follows_theorem(f, coeff)}
    maxima = rep.values
    if coeff.direction == "increasing":
        asserts["maxima_decreasing"] = sonin.strictly_monotone(maxima, "decreasing")
    elif coeff.direction == "decreasing":
        asserts["maxima_increasing"] = sonin.strictly_monotone(maxima, "increasing")
        asserts["slopes_at_zeros_decreasing"] = sonin.derivative_at_zeros(traj, coeff).ok
    rows = [("max", loc, val) for loc, val in rep.extrema] + [("zero", loc, val) for loc, val in rep.zeros]
    rows.sort(key=lambda r: r[1])
    summary = {"phi": coeff.name, "direction": coeff.direction, "verdict": rep.verdict,
               "maxima": len(rep.extrema), "max_violation": rep.max_violation}
    return Report("envelope", params, ["kind", "location", "value"], rows,
                  assertions=asserts, summary=summary)


# soliton

SECH_TOL = 1e-6
LYAPUNOV_TOL = 1e-5


def _profile_checks(profile):
    asserts = {"lyapunov_identity": soliton.lyapunov_residual(profile) <= LYAPUNOV_TOL}
    rep = soliton.envelope_report(profile)
    ineq = soliton.extremum_inequality_check(profile)
    asserts["extremum_inequality"] = bool(np.all(ineq.inequality_holds))
    if rep.verdict != soliton.NOT_APPLICABLE:
        # both only follow from a repulsive potential
        asserts["envelope_nonincreasing"] = rep.nonincreasing()
        asserts["maxima_step"] = bool(np.all(ineq.step_ok))
    summary = {"verdict": rep.verdict, "maxima": len(rep.extrema),
               "max_violation": rep.max_violation,
               "lyapunov_residual": soliton.lyapunov_residual(profile)}
    return asserts, summary


def cmd_soliton(args) -> Report:
    if args.rmax is None:
        # the sech separatrix is unstable: round-off grows like e^r
        args.rmax = {"sech": 10.0, "random": 30.0}.get(args.preset, 20.0)
    if args.preset == "random":
        return _soliton_random(args)
    if args.preset == "sech":
        params = soliton.NLSRadialParams(1, 2.0, args.omega)
        y0 = math.sqrt(2.0 * args.omega)
    else:
        params = soliton.NLSRadialParams(args.d, args.p, args.omega,
                                         soliton.Potential.parse(args.potential), ell=args.ell)
        if args.shoot:
            lo, hi = args.shoot
            y0 = soliton.shoot_ground_state(params, lo, hi, r_max=args.rmax, step=args.step)
        elif args.y0 is None:
            raise UsageError("give --y0, --shoot lo hi or --preset")
        else:
            y0 = args.y0
    profile = soliton.integrate_radial(params, y0, args.rmax, step=args.step)
    asserts, summary = _profile_checks(profile)
    summary["y0"] = y0
    if args.preset == "sech":
        err = float(np.max(np.abs(profile.y - soliton.sech_profile(profile.grid, args.omega))))
        asserts["sech_closed_form"] = err <= SECH_TOL
        summary["sech_error"] = err
    f = soliton.lyapunov_f(profile)
    keep = slice(None, None, args.every)
    rows = list(zip(profile.grid[keep], profile.y[keep], profile.dy[keep], f[keep]))
    run = {"preset": args.preset, **params.describe(), "y0": y0, "shoot": args.shoot,
           "rmax": args.rmax, "step": args.step, "every": args.every}
    return Report("soliton", run, ["r", "y", "dy", "f"], rows, assertions=asserts, summary=summary)


def _soliton_random(args) -> Report:
    rng = np.random.default_rng(args.seed)
    rows = []
    failures = 0
    for i in range(args.count):
        params, y0 = soliton.random_repulsive(rng)
        profile = soliton.integrate_radial(params, y0, args.rmax, step=args.step)
        asserts, summary = _profile_checks(profile)
        ok = all(asserts.values())
        failures += not ok
        rows.append((i, params.d, params.p, params.omega, params.potential.spec, y0,
                     summary["verdict"], summary["maxima"], summary["max_violation"],
                     summary["lyapunov_residual"],
                     asserts["extremum_inequality"] and asserts["maxima_step"], ok))
    run = {"preset": "random", "count": args.count, "rmax": args.rmax, "step": args.step}
    cols = ["index", "d", "p", "omega", "potential", "y0", "verdict", "maxima",
            "max_violation", "lyapunov_residual", "inequality_ok", "ok"]
    return Report("soliton", run, cols, rows, seed=args.seed,
                  assertions={"all_configs_pass": failures == 0}, summary={"failures": failures})


# Monte Carlo


def _edges(spec, n, c=0.0):
    if spec:
        a, b, width = spec
    else:
        reach = math.ceil(2 * math.sqrt(n) + 3)
        a, b, width = c - reach, c + reach, 0.1
    if not (b > a and width > 0):
        raise UsageError("--bins needs a < b and width > 0")
    count = int(round((b - a) / width))
    if abs(count * width - (b - a)) > 1e-9 * max(1.0, abs(b - a)):
        raise UsageError("--bins width must divide b - a")
    return np.linspace(a, b, count + 1)


def _bins_param(edges):
    return [float(edges[0]), float(edges[-1]), float((edges[-1] - edges[0]) / (len(edges) - 1))]


def _histogram_rows(est, reference):
    rows = []
    worst = 0.0
    for k in range(len(est.heights)):
        ref = None
        z = None
        if reference is not None:
            ref = reference(est.edges[k], est.edges[k + 1])
            if est.stderr[k] > 0:
                z = abs(est.heights[k] - ref) / est.stderr[k]
                worst = max(worst, z)
        rows.append((est.edges[k], est.edges[k + 1], int(est.counts[k]), est.heights[k], est.stderr[k], ref, z))
    return rows, worst


_HIST_COLUMNS = ["left", "right", "count", "height", "stderr", "reference", "z"]


def _gue_reference(n, shift=0.0):
    def ref(a, b):
        return gue_density.integrated_density(n, a - shift, b - shift) / (b - a)
    return ref


def cmd_sample(args) -> Report:
    spec = ensemble.EnsembleSpec(args.n, args.beta, args.seed)
    batch = ensemble.sample_batch(spec, args.runs, workers=args.workers)
    edges = _edges(args.bins, args.n)
    est = ensemble.estimate_density(batch, edges)
    reference = _gue_reference(args.n) if args.beta == 2 else None
    rows, worst = _histogram_rows(est, reference)
    summary = {"mass": est.mass, "samples": est.samples}
    if reference is not None:
        summary["max_z"] = worst
    asserts = {}
    if args.eps is not None:
        near = ensemble.prob_near_singular(batch, args.eps)
        summary.update(eps=args.eps, estimate=near.estimate, stderr=near.stderr,
                       multi_fraction=near.multi_fraction)
        if args.beta == 2:
            r0 = float(gue_density.density(args.n, 0.0))
            summary["density_at_0"] = r0
            asserts["near_singular_law"] = abs(near.estimate - r0) <= max(3 * near.stderr, 0.01 * r0)
    params = {"n": args.n, "beta": args.beta, "runs": args.runs, "eps": args.eps,
              "bins": _bins_param(edges)}
    return Report("sample", params, _HIST_COLUMNS, rows, seed=args.seed, assertions=asserts, summary=summary)


def _window_reference(n, beta, eps):
    """Exact window-averaged density at 0 for initial (x, ..., x), when known."""
    if beta == 2:
        return lambda x: gue_density.integrated_density(n, -eps - x, eps - x) / (2 * eps)
    if beta == 0:
        def gauss(x):
            cdf = 0.5 * (math.erf((eps - x) / math.sqrt(2)) - math.erf((-eps - x) / math.sqrt(2)))
            return n * cdf / (2 * eps)
        return gauss
    return None


def cmd_dbm(args) -> Report:
    if args.init is not None and args.const is not None:
        raise UsageError("--init and --const are exclusive")
    base = {"n": args.n, "beta": args.beta, "dt": args.dt, "delta": args.delta, "runs": args.runs}
    if args.scan:
        x0, x1, step = args.scan
        if args.eps is None:
            raise UsageError("--scan needs --eps")
        if not (x1 >= x0 and step > 0):
            raise UsageError("--scan needs x0 <= x1 and step > 0")
        grid = [x0 + step * k for k in range(int(math.floor((x1 - x0) / step + 1e-9)) + 1)]
        rows = ensemble.scan_initial_condition(args.n, args.beta, grid, args.eps, args.runs, seed=args.seed,
                                               dt=args.dt, delta=args.delta, workers=args.workers)
        best = ensemble.scan_argmax(rows)
        summary = {"argmax": best.x, "estimate": best.estimate, "stderr": best.stderr}
        asserts = {}
        ref = _window_reference(args.n, args.beta, args.eps)
        if ref is not None:
            exact = [ref(x) for x in grid]
            target = grid[int(np.argmax(exact))]
            summary["reference_argmax"] = target
            asserts["argmax_matches_reference"] = abs(best.x - target) <= step * (1 + 1e-9)
        params = {**base, "scan": [x0, x1, step], "eps": args.eps}
        table = [(r.x, r.estimate, r.stderr, r.runs) for r in rows]
        return Report("dbm", params, ["x", "estimate", "stderr", "runs"], table,
                      seed=args.seed, assertions=asserts, summary=summary)
    if args.init is not None:
        initial = args.init
    else:
        initial = [args.const if args.const is not None else 0.0] * args.n
    config = ensemble.DBMConfig(args.n, args.beta, tuple(initial), dt=args.dt, seed=args.seed, delta=args.delta)
    batch = ensemble.dbm_batch(config, args.runs, workers=args.workers)
    center = float(np.mean(initial))
    edges = _edges(args.bins, args.n, math.floor(center))
    est = ensemble.estimate_density(batch, edges)
    tied = all(v == initial[0] for v in initial)
    reference = _gue_reference(args.n, initial[0]) if args.beta == 2 and tied else None
    rows, worst = _histogram_rows(est, reference)
    summary = {"mass": est.mass, "runs": est.samples}
    if reference is not None:
        summary["max_z"] = worst
    params = {**base, "initial": list(config.initial),
              "bins": _bins_param(edges)}
    return Report("dbm", params, _HIST_COLUMNS, rows, seed=args.seed, summary=summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soninlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", help="write CSV here instead of stdout")
        p.set_defaults(handler=handler)
        return p

    p = add("hermite", cmd_hermite, "values or zeros of the rescaled Hermite polynomials")
    p.add_argument("--n", type=_nonneg_int, required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--x", type=float, help="print p_0(x) .. p_n(x)")
    mode.add_argument("--zeros", action="store_true", help="print the zeros of p_n")

    p = add("density", cmd_density, "GUE one-point density")
    p.add_argument("--n", type=_pos_int, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--grid", type=float, nargs=3, metavar=("A", "B", "STEP"))
    mode.add_argument("--max", action="store_true", help="global maximum record")
    mode.add_argument("--center", action="store_true", help="odd n: exact vs asymptotic R(0)")

    p = add("envelope", cmd_envelope, "oscillation envelope of y'' + phi y = 0")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sonin.PRESETS)
    src.add_argument("--phi-file", help="two-column (x, phi) table")
    p.add_argument("--n", type=_nonneg_int, help="degree for the hermite-weighted preset")
    p.add_argument("--range", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--step", type=_pos_float, default=1e-3)
    p.add_argument("--y0", type=float, default=1.0, help="y(a) for --phi-file")
    p.add_argument("--dy0", type=float, default=0.0, help="y'(a) for --phi-file")

    p = add("soliton", cmd_soliton, "radial NLS profiles")
    p.add_argument("--preset", choices=("sech", "random"))
    p.add_argument("--d", type=_pos_int, default=1)
    p.add_argument("--p", type=_pos_float, default=2.0)
    p.add_argument("--omega", type=_pos_float, default=1.0)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--potential", default="zero", help="zero | sum:a,b;... | harmonic:c | file:path")
    start = p.add_mutually_exclusive_group()
    start.add_argument("--y0", type=float)
    start.add_argument("--shoot", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--rmax", type=_pos_float, help="default 10 (sech), 30 (random), 20 otherwise")
    p.add_argument("--step", type=_pos_float, default=1e-3)
    p.add_argument("--every", type=_pos_int, default=10, help="keep every k-th profile row")
    p.add_argument("--count", type=_pos_int, default=100, help="configurations for --preset random")
    p.add_argument("--seed", type=_nonneg_int, default=0)

    p = add("sample", cmd_sample, "static Gaussian ensemble Monte Carlo")
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--beta", type=int, required=True)
    p.add_argument("--runs", type=_pos_int, default=100_000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--eps", type=_pos_float)
    p.add_argument("--bins", type=float, nargs=3, metavar=("A", "B", "WIDTH"))
    p.add_argument("--workers", type=_pos_int)

    p = add("dbm", cmd_dbm, "Dyson Brownian motion to t = 1")
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--init", type=_float_list, help="comma-separated sorted initial spectrum")
    p.add_argument("--const", type=float, help="initial spectrum (x, ..., x)")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--delta", type=_pos_float, default=1e-6, help="tie-splitting scale")
    p.add_argument("--runs", type=_pos_int, default=10_000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--scan", type=float, nargs=3, metavar=("X0", "X1", "STEP"))
    p.add_argument("--eps", type=_pos_float)
    p.add_argument("--bins", type=float, nargs=3, metavar=("A", "B", "WIDTH"))
    p.add_argument("--workers", type=_pos_int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    name = f"soninlab {args.command}"
    try:
        report = args.handler(args)
    except NumericalAbort as exc:
        print(f"{name}: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ArithmeticError as exc:
        print(f"{name}: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, TypeError, OSError) as exc:
        print(f"{name}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.render()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stdout = None
    if not report.passed:
        failed = [k for k, v in report.assertions.items() if not v]
        print(f"{name}: assertion failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK
