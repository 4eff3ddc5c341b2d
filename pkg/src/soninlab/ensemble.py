"""Monte Carlo for Gaussian ensembles and Dyson Brownian motion.

Static samples are X = sum_j Z_j E_j over an orthonormal basis of the real
symmetric (beta=1), complex hermitian (beta=2) or quaternion self-dual
(beta=4) matrices under <A, B> = Re tr(A^dagger B).  In matrix entries:
diagonal N(0, 1), each real component of an off-diagonal entry N(0, 1/2).

Static samples come in fixed-size blocks; block b draws from the stream
SeedSequence(seed, spawn_key=(0, b)).  Diffusion run r has its own stream
SeedSequence(seed, spawn_key=(1, r)).  Results therefore do not depend on
how many workers share the work, and sample i is the same whatever the
total count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _dbm_kernel, hermite
from .errors import CollisionError

__all__ = [
    "EnsembleSpec",
    "SpectrumBatch",
    "DensityEstimate",
    "NearSingularEstimate",
    "DBMConfig",
    "ScanRow",
    "sample_spectrum",
    "sample_batch",
    "estimate_density",
    "prob_near_singular",
    "dbm_run",
    "dbm_batch",
    "scan_initial_condition",
    "scan_argmax",
    "worker_count",
]

STATIC_BLOCK = 8192
DBM_CHUNK = 1024
SAFETY = 0.1
FLOOR_BITS = 20
GSE_PAIR_TOL = 1e-9

_STATIC, _DBM = 0, 1


def worker_count(workers: int | None = None) -> int:
    """Requested count (default: CPU count), capped by SONINLAB_THREADS if set."""
    if workers is None:
        workers = os.cpu_count() or 1
    env = os.environ.get("SONINLAB_THREADS")
    if env:
        workers = min(int(workers), int(env))
    return max(1, int(workers))


def _block_rng(seed: int, domain: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(domain, block))))


def _map_blocks(fn, nblocks: int, workers: int | None):
    workers = min(worker_count(workers), max(1, nblocks))
    if workers == 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(nblocks)))


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    beta: int
    seed: int = 0

    def __post_init__(self):
        if self.beta not in (1, 2, 4):
            raise ValueError(f"static sampling supports beta in (1, 2, 4), got {self.beta}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"matrix size must be a positive integer, got {self.n}")


@dataclass
class SpectrumBatch:
    """Sorted eigenvalue tuples, one row per sample."""

    samples: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.samples.shape[0])

    @property
    def n(self) -> int:
        return int(self.samples.shape[1])


def _gaussian_matrices(n: int, beta: int, rng: np.random.Generator, size: int) -> np.ndarray:
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    diag = rng.standard_normal((size, n))
    if beta == 1:
        mat = np.zeros((size, n, n))
        mat[:, iu[0], iu[1]] = rng.standard_normal((size, m)) * math.sqrt(0.5)
        mat = mat + mat.transpose(0, 2, 1)
        mat[:, np.arange(n), np.arange(n)] = diag
        return mat
    if beta == 2:
        parts = rng.standard_normal((size, m, 2)) * math.sqrt(0.5)
        mat = np.zeros((size, n, n), dtype=complex)
        mat[:, iu[0], iu[1]] = parts[..., 0] + 1j * parts[..., 1]
        mat = mat + mat.conj().transpose(0, 2, 1)
        mat[:, np.arange(n), np.arange(n)] = diag
        return mat
    # beta == 4: quaternion a + b i + c j + d k as [[a + bi, c + di], [-c + di, a - bi]]
    parts = rng.standard_normal((size, m, 4)) * math.sqrt(0.5)
    z = parts[..., 0] + 1j * parts[..., 1]
    w = parts[..., 2] + 1j * parts[..., 3]
    upper = np.zeros((size, 2 * n, 2 * n), dtype=complex)
    r, c = 2 * iu[0], 2 * iu[1]
    upper[:, r, c] = z
    upper[:, r, c + 1] = w
    upper[:, r + 1, c] = -w.conj()
    upper[:, r + 1, c + 1] = z.conj()
    k = np.arange(n)
    upper[:, 2 * k, 2 * k] = 0.5 * diag
    upper[:, 2 * k + 1, 2 * k + 1] = 0.5 * diag
    return upper + upper.conj().transpose(0, 2, 1)


def _static_block(n: int, beta: int, rng: np.random.Generator, size: int) -> np.ndarray:
    values = np.linalg.eigvalsh(_gaussian_matrices(n, beta, rng, size))
    if beta != 4:
        return values
    lo, hi = values[:, 0::2], values[:, 1::2]
    scale = np.maximum(1.0, np.max(np.abs(values), axis=1, keepdims=True))
    if np.any(np.abs(hi - lo) > GSE_PAIR_TOL * scale):
        raise ArithmeticError("quaternion eigenvalues failed to pair up")
    return 0.5 * (lo + hi)


def sample_batch(spec: EnsembleSpec, count: int, workers: int | None = None) -> SpectrumBatch:
    """``count`` independent spectra of the ensemble, sorted ascending per row."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    nblocks = -(-count // STATIC_BLOCK)

    def block(b):
        return _static_block(spec.n, spec.beta, _block_rng(spec.seed, _STATIC, b), STATIC_BLOCK)

    samples = np.concatenate(_map_blocks(block, nblocks, workers))[:count]
    return SpectrumBatch(samples, {"kind": "static", "n": spec.n, "beta": spec.beta, "seed": spec.seed})


def sample_spectrum(spec: EnsembleSpec, index: int = 0) -> tuple[float, ...]:
    """Sample number ``index`` of the seeded stream, as a sorted tuple."""
    b, i = divmod(int(index), STATIC_BLOCK)
    block = _static_block(spec.n, spec.beta, _block_rng(spec.seed, _STATIC, b), STATIC_BLOCK)
    return tuple(float(v) for v in block[i])


@dataclass
class DensityEstimate:
    edges: np.ndarray
    counts: np.ndarray
    heights: np.ndarray
    stderr: np.ndarray
    samples: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def mass(self) -> float:
        return float(np.sum(self.heights * self.widths))


def estimate_density(batch: SpectrumBatch, edges) -> DensityEstimate:
    """Eigenvalues per unit length per sample, with standard errors.

    The error of each bin comes from the per-sample count variance, which
    reduces to the binomial formula when n = 1.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or not np.all(np.diff(edges) > 0):
        raise ValueError("bin edges must be a strictly increasing sequence of length >= 2")
    if batch.count == 0:
        raise ValueError("empty batch")
    nbins = edges.size - 1
    values = batch.samples
    idx = np.searchsorted(edges, values, side="right") - 1
    idx[values == edges[-1]] = nbins - 1
    valid = (idx >= 0) & (idx < nbins)
    rows = np.broadcast_to(np.arange(batch.count)[:, None], idx.shape)[valid]
    bins = idx[valid]
    counts = np.bincount(bins, minlength=nbins).astype(float)
    keys, per_sample = np.unique(rows.astype(np.int64) * nbins + bins, return_counts=True)
    sq = np.bincount(keys % nbins, weights=per_sample.astype(float) ** 2, minlength=nbins)
    count = batch.count
    mean = counts / count
    var = np.maximum(sq / count - mean**2, 0.0) * count / max(count - 1, 1)
    widths = np.diff(edges)
    return DensityEstimate(edges, counts, mean / widths, np.sqrt(var / count) / widths, count)


@dataclass(frozen=True)
class NearSingularEstimate:
    eps: float
    estimate: float
    stderr: float
    multi_fraction: float
    samples: int

    @property
    def multi_normalized(self) -> float:
        """Fraction with >= 2 eigenvalues in the window, divided by 2 eps."""
        return self.multi_fraction / (2.0 * self.eps)


def prob_near_singular(batch: SpectrumBatch, eps: float) -> NearSingularEstimate:
    """P{min |lambda| <= eps} / (2 eps), its binomial error, and the >= 2 count fraction."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if batch.count == 0:
        raise ValueError("empty batch")
    inside = np.sum(np.abs(batch.samples) <= eps, axis=1)
    q = float(np.mean(inside >= 1))
    multi = float(np.mean(inside >= 2))
    n = batch.count
    return NearSingularEstimate(
        eps, q / (2 * eps), math.sqrt(q * (1 - q) / n) / (2 * eps), multi, n
    )


@dataclass(frozen=True)
class DBMConfig:
    """Dyson Brownian motion from ``initial`` run to time t_end = 1.

    Tied initial values are split to x + delta z_i, z_i the zeros of p_m for
    a group of m ties, before the first step.
    """

    n: int
    beta: float
    initial: tuple[float, ...]
    dt: float = 1e-3
    seed: int = 0
    delta: float = 1e-6
    t_end: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(float(v) for v in self.initial))
        if len(self.initial) != self.n:
            raise ValueError(f"initial spectrum has {len(self.initial)} values, expected n = {self.n}")
        if any(b < a for a, b in zip(self.initial, self.initial[1:])):
            raise ValueError("initial spectrum must be sorted ascending")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end != 1.0:
            raise ValueError("the diffusion is always run to t = 1")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def describe(self) -> dict:
        return {"n": self.n, "beta": self.beta, "initial": list(self.initial),
                "dt": self.dt, "seed": self.seed, "delta": self.delta, "t_end": self.t_end}


def _split_ties(values: np.ndarray, delta: float) -> np.ndarray:
    out = values.copy()
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[j + 1] == values[i]:
            j += 1
        m = j - i + 1
        if m > 1:
            out[i : j + 1] = values[i] + delta * hermite.zeros(m)
        i = j + 1
    return out


def _run_rng(seed: int, run: int) -> np.random.Generator:
    return _block_rng(seed, _DBM, run)


def _simulate(u0: np.ndarray, beta: float, dt: float, steps: int, seed: int, runs) -> np.ndarray:
    out = np.empty((len(runs), u0.size))
    info = np.zeros(2)
    floor = dt * 2.0**-FLOOR_BITS
    for i, run in enumerate(runs):
        u = u0.copy()
        status = _dbm_kernel.dbm_path(u, beta, dt, steps, _run_rng(seed, run), SAFETY, floor, info)
        if status != _dbm_kernel.OK:
            raise CollisionError(
                f"run {run}: eigenvalues collided at t = {info[0]:.6g} (gap {info[1]:.3e})", info[0], info[1]
            )
        out[i] = u
    return out


def _setup(config: DBMConfig):
    initial = np.asarray(config.initial, dtype=float)
    center = float(np.mean(initial))
    start = initial if config.beta == 0 else _split_ties(initial, config.delta)
    steps = max(1, int(round(config.t_end / config.dt)))
    return center, start - center, config.t_end / steps, steps


def _centered_endpoints(config: DBMConfig, runs: int, workers: int | None):
    center, u0, dt, steps = _setup(config)
    nchunks = -(-runs // DBM_CHUNK)

    def chunk(c):
        ids = range(c * DBM_CHUNK, min(runs, (c + 1) * DBM_CHUNK))
        return _simulate(u0, float(config.beta), dt, steps, config.seed, ids)

    return center, np.concatenate(_map_blocks(chunk, nchunks, workers))


def dbm_batch(config: DBMConfig, runs: int, workers: int | None = None) -> SpectrumBatch:
    """Endpoints at t = 1 of ``runs`` independent diffusions.

    Euler-Maruyama with sub-steps h <= 0.1 gap^2 / beta drawn from the
    Brownian bridge of the base increment.  Unordered proposals are retried
    on bridge halves; below dt 2^-20 a sub-step is taken drift-implicitly,
    which keeps the order for any step.  The state is integrated relative
    to the mean of the initial spectrum, so shifting the initial data by c
    shifts every endpoint by c with identical randomness.
    """
    if runs < 1:
        raise ValueError(f"runs must be positive, got {runs}")
    center, u = _centered_endpoints(config, runs, workers)
    samples = np.sort(center + u, axis=1)
    return SpectrumBatch(samples, {"kind": "dbm", **config.describe()})


def dbm_run(config: DBMConfig, index: int = 0) -> tuple[float, ...]:
    """Endpoint of run number ``index``."""
    center, u0, dt, steps = _setup(config)
    u = _simulate(u0, float(config.beta), dt, steps, config.seed, [int(index)])[0]
    return tuple(float(v) for v in np.sort(center + u))


@dataclass(frozen=True)
class ScanRow:
    x: float
    estimate: float
    stderr: float
    runs: int


def scan_initial_condition(
    n: int, beta: float, x_grid, eps: float, runs: int, seed: int = 0,
    dt: float = 1e-3, delta: float = 1e-6, workers: int | None = None,
) -> list[ScanRow]:
    """Estimate the t = 1 eigenvalue density at 0 for initial data (x, ..., x).

    Each grid point uses runs 0..runs-1 of the same seeded streams, so the
    estimates share their randomness across x.  The estimate counts every
    eigenvalue in [-eps, eps].
    """
    grid = [float(x) for x in x_grid]
    if not grid:
        raise ValueError("empty x grid")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if runs < 1000:
        raise ValueError(f"need at least 1000 runs per grid point, got {runs}")
    cache: dict[tuple, np.ndarray] = {}
    rows = []
    for x in grid:
        config = DBMConfig(n, beta, (x,) * n, dt=dt, seed=seed, delta=delta)
        # all-equal starts share the same centered paths; only the center moves
        key = (tuple(np.asarray(config.initial) - x),)
        if key not in cache:
            cache[key] = _centered_endpoints(config, runs, workers)[1]
        endpoints = x + cache[key]
        inside = np.sum(np.abs(endpoints) <= eps, axis=1)
        scale = 1.0 / (2.0 * eps)
        rows.append(ScanRow(
            x, float(np.mean(inside)) * scale,
            float(np.std(inside, ddof=1)) / math.sqrt(runs) * scale, runs,
        ))
    return rows


def scan_argmax(rows: list[ScanRow]) -> ScanRow:
    """The grid row with the largest estimate."""
    if not rows:
        raise ValueError("empty scan")
    return max(rows, key=lambda row: row.estimate)
