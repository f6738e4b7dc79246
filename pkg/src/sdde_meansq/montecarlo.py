"""Euler-Maruyama simulation of the stochastic delay equation.

Paths evolve as X(n+1) = X(n) + F(X_seg) h + G(X_seg) dW with history
segments read off the path's own grid (the step divides the delay horizon,
so no interpolation happens).  Every path owns a counter-based substream
keyed by (master seed, path index); normal increments come from the inverse
normal CDF applied to 53-bit counter draws.  Work is split into fixed-size
path chunks whose partial sums are combined in chunk order, so estimates
are bit-identical no matter how many workers run.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ConfigurationError, BAD_VALUE, GRID_MISALIGNED
from .measures import CompiledFunctional, Segment, SignedMeasure
from .quadrature import exact_divisions
from .resolvent import (
    ResolventTable,
    SolutionTable,
    compute_resolvent,
    deterministic_solution,
)

#: paths per work unit; fixed so reductions are scheduling-independent
CHUNK = 2048
#: a path whose magnitude passes this is reported as diverged
DIVERGE_LIMIT = 1e150

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimulationConfig:
    """Monte Carlo run parameters; results depend only on these and the problem."""

    step: float
    horizon: float
    path_count: int
    master_seed: int = 0
    worker_count: int = 1

    def __post_init__(self):
        if self.step <= 0.0 or self.horizon <= 0.0:
            raise ConfigurationError(BAD_VALUE, "step and horizon must be positive")
        if self.path_count < 2:
            raise ConfigurationError(BAD_VALUE, "need at least 2 paths")


@dataclass(eq=False)
class MomentEstimate:
    """Second-moment estimate with per-time standard errors."""

    step: float
    mean_sq: np.ndarray
    stderr: np.ndarray
    path_count: int
    master_seed: int
    diverged_paths: int

    @property
    def valid(self) -> bool:
        return self.diverged_paths == 0

    def times(self) -> np.ndarray:
        return self.step * np.arange(self.mean_sq.size)


@dataclass(eq=False)
class PathRecord:
    """One simulated path with the data needed to replay its integrals."""

    step: float
    values: np.ndarray
    increments: np.ndarray
    noise_values: np.ndarray


def _path_key(master_seed: int, path_index: int) -> int:
    return ((master_seed & _U64) << 64) | (path_index & _U64)


def _normal_increments(
    master_seed: int, lo: int, hi: int, n_steps: int, h: float
) -> np.ndarray:
    """Increments for paths [lo, hi) as an (n_steps, paths) array."""
    m = hi - lo
    raw = np.empty((m, n_steps))
    for i in range(m):
        bits = np.random.Philox(key=_path_key(master_seed, lo + i))
        gen = np.random.Generator(bits)
        raw[i] = gen.integers(0, 1 << 53, size=n_steps, dtype=np.int64)
    u = (raw + 0.5) * 2.0**-53
    return np.ascontiguousarray((ndtri(u) * math.sqrt(h)).T)


def _worker_count(hint: int) -> int:
    env = os.environ.get("SDDE_MEANSQ_THREADS")
    workers = max(1, hint)
    if env:
        try:
            workers = min(workers, max(1, int(env)))
        except ValueError:
            pass
    return workers


def _simulate_chunk(f_mu, g_nu, phi_values, n_steps, h, master_seed, lo, hi):
    n_hist = phi_values.size - 1
    dw = _normal_increments(master_seed, lo, hi, n_steps, h)
    paths = np.empty((n_hist + n_steps + 1, hi - lo))
    paths[: n_hist + 1] = phi_values[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_steps):
            drift = f_mu.value_vec(paths, n)
            noise = g_nu.value_vec(paths, n)
            paths[n_hist + n + 1] = paths[n_hist + n] + h * drift + noise * dw[n]
        body = paths[n_hist:]
        sq = body * body
        sum_sq = sq.sum(axis=1)
        sum_q4 = (sq * sq).sum(axis=1)
        bad = (~np.isfinite(body)).any(axis=0) | (np.abs(body) > DIVERGE_LIMIT).any(axis=0)
    return sum_sq, sum_q4, int(np.count_nonzero(bad))


def simulate_mean_square(
    mu: SignedMeasure, nu: SignedMeasure, phi: Segment, cfg: SimulationConfig
) -> MomentEstimate:
    """Estimate E|X(t)|^2 on the grid by averaging squared paths.

    Deterministic given (problem, cfg.master_seed): worker count and the
    SDDE_MEANSQ_THREADS cap only change scheduling, never the estimate.
    Diverged paths poison the estimate visibly (NaN/inf) and are counted.
    """
    if abs(phi.step - cfg.step) > 1e-12 * cfg.step:
        raise ConfigurationError(
            GRID_MISALIGNED, f"initial segment step {phi.step} != config step {cfg.step}"
        )
    n_steps = exact_divisions(cfg.horizon, cfg.step, "horizon")
    f_mu = CompiledFunctional(mu, cfg.step)
    g_nu = CompiledFunctional(nu, cfg.step)
    m_total = cfg.path_count
    bounds = [(lo, min(lo + CHUNK, m_total)) for lo in range(0, m_total, CHUNK)]

    def job(b):
        return _simulate_chunk(
            f_mu, g_nu, phi.values, n_steps, cfg.step, cfg.master_seed, b[0], b[1]
        )

    workers = min(_worker_count(cfg.worker_count), len(bounds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, bounds))
    else:
        results = [job(b) for b in bounds]

    total_sq = np.zeros(n_steps + 1)
    total_q4 = np.zeros(n_steps + 1)
    diverged = 0
    for sum_sq, sum_q4, bad in results:
        total_sq += sum_sq
        total_q4 += sum_q4
        diverged += bad
    mean_sq = total_sq / m_total
    with np.errstate(invalid="ignore", over="ignore"):
        var = (total_q4 - total_sq * total_sq / m_total) / (m_total - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / m_total)
    return MomentEstimate(cfg.step, mean_sq, stderr, m_total, cfg.master_seed, diverged)


def simulate_single_path(
    mu: SignedMeasure,
    nu: SignedMeasure,
    phi: Segment,
    h: float,
    T: float,
    increments: np.ndarray,
) -> PathRecord:
    """One path driven by the given increments, with its noise terms recorded."""
    n_steps = exact_divisions(T, h, "horizon")
    if increments.shape != (n_steps,):
        raise ConfigurationError(BAD_VALUE, "increments must have one entry per step")
    f_mu = CompiledFunctional(mu, h)
    g_nu = CompiledFunctional(nu, h)
    n_hist = phi.values.size - 1
    path = np.empty(n_hist + n_steps + 1)
    path[: n_hist + 1] = phi.values
    noise = np.empty(n_steps)
    for n in range(n_steps):
        drift = f_mu.value(path, n)
        noise[n] = g_nu.value(path, n)
        path[n_hist + n + 1] = path[n_hist + n] + h * drift + noise[n] * increments[n]
    return PathRecord(h, path[n_hist:].copy(), np.asarray(increments, dtype=float), noise)


def variation_of_constants_residual(
    record: PathRecord, r: ResolventTable, x: SolutionTable
) -> float:
    """Max defect of the path in the resolvent representation.

    Rebuilds x(t) + sum over n < m of r(t_m - t_n) G(X_at_t_n) dW_n from the
    recorded data and returns max_t |X(t) - rebuilt(t)|.
    """
    g_dw = record.noise_values * record.increments
    rv = r.trace.values
    xv = x.trace.values
    n_steps = g_dw.size
    rv_rev = rv[::-1].copy()
    last = rv.size - 1
    worst = abs(record.values[0] - xv[0])
    for m in range(1, n_steps + 1):
        conv = float(np.dot(g_dw[:m], rv_rev[last - m : last]))
        worst = max(worst, abs(record.values[m] - (xv[m] + conv)))
    return float(worst)


def verify_variation_of_constants(
    mu: SignedMeasure,
    nu: SignedMeasure,
    phi: Segment,
    cfg: SimulationConfig,
    path_index: int,
    increments: np.ndarray | None = None,
) -> float:
    """Max residual of one simulated path in the resolvent representation."""
    n_steps = exact_divisions(cfg.horizon, cfg.step, "horizon")
    if increments is None:
        increments = _normal_increments(
            cfg.master_seed, path_index, path_index + 1, n_steps, cfg.step
        )[:, 0]
    record = simulate_single_path(mu, nu, phi, cfg.step, cfg.horizon, increments)
    r = compute_resolvent(mu, cfg.step, cfg.horizon)
    x = deterministic_solution(mu, phi, cfg.step, cfg.horizon)
    return variation_of_constants_residual(record, r, x)
