"""Path and ensemble simulation of the classical, generalized and refined BN-S models.

Discretisation on a uniform grid ``t_k = k dt``::

    X_{k+1}       = X_k + (mu + beta s2_k) dt + sqrt(s2_k dt) N_k + rho dJ_price_k
    s2_{k+1}      = s2_k exp(-lam dt) + dJ_vol_k

where the subordinator increments are drawn over subordinator time
``lam dt``.  The OU part decays exactly between steps, so the variance stays
positive.  Each path owns four independent counter-based streams (Gaussian,
Z, Z^(b), Z*), so a path depends only on ``(seed, path_id, n_steps)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import rng as rngmod
from .params import BnsParams
from .schedule import ThetaSchedule
from .subordinators import sample_increments

GAUSS, ZSUB, ZBSUB, ZSTARSUB = 0, 1, 2, 3
BLOCK = 1024
MAX_BYTES = 4 * 2**30


class CapacityError(MemoryError):
    """Requested ensemble would exceed the configured memory budget."""


@dataclass(frozen=True, eq=False)
class PathInputs:
    """Random inputs for a block of paths, each array shaped (n_paths, n_steps)."""

    normals: np.ndarray
    dz: np.ndarray
    dz_sq: np.ndarray
    dzb: np.ndarray | None = None
    dzb_sq: np.ndarray | None = None
    dzstar: np.ndarray | None = None


def draw_inputs(params: BnsParams, model: str, n_steps: int, dt: float, seed: int,
                path_ids: Sequence[int]) -> PathInputs:
    n = len(path_ids)
    dt_sub = params.lam * dt
    normals = np.empty((n, n_steps))
    dz, dz_sq = np.empty((n, n_steps)), np.empty((n, n_steps))
    refined = model == "refined"
    general = model == "generalized" and params.zstar_spec is not None
    dzb = np.empty((n, n_steps)) if refined else None
    dzb_sq = np.empty((n, n_steps)) if refined else None
    dzstar = np.empty((n, n_steps)) if general else None
    streams = rngmod.StreamFactory(seed)
    for row, pid in enumerate(path_ids):
        normals[row] = streams(pid, GAUSS).standard_normal(n_steps)
        dz[row], dz_sq[row] = sample_increments(params.z_spec, dt_sub, n_steps, streams(pid, ZSUB))
        if refined:
            dzb[row], dzb_sq[row] = sample_increments(params.zb_spec, dt_sub, n_steps, streams(pid, ZBSUB))
        if general:
            dzstar[row] = sample_increments(params.zstar_spec, dt_sub, n_steps, streams(pid, ZSTARSUB))[0]
    return PathInputs(normals, dz, dz_sq, dzb, dzb_sq, dzstar)


def drivers(params: BnsParams, model: str, theta_steps: np.ndarray, inp: PathInputs):
    """Per-step (price jump, volatility jump) increments for each model."""
    if model == "classical":
        return inp.dz, inp.dz
    if model == "generalized":
        if inp.dzstar is None:
            return inp.dz, inp.dz
        w = math.sqrt(1.0 - params.rho_prime**2)
        return inp.dz, params.rho_prime * inp.dz + w * inp.dzstar
    mixed = (1.0 - theta_steps) * inp.dz + theta_steps * inp.dzb
    return mixed, mixed


def integrate(params: BnsParams, dt: float, normals: np.ndarray, jump_price: np.ndarray,
              jump_vol: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic recursion given the random inputs; returns (X, sigma_sq) with n_steps+1 nodes."""
    n, n_steps = normals.shape
    decay = math.exp(-params.lam * dt)
    sqdt = math.sqrt(dt)
    # Step-major layout keeps the recursion's row accesses contiguous.
    jv = np.ascontiguousarray(jump_vol.T)
    s2 = np.empty((n_steps + 1, n))
    s2[0] = params.sigma0_sq
    for k in range(n_steps):
        np.multiply(s2[k], decay, out=s2[k + 1])
        s2[k + 1] += jv[k]
    s2 = np.ascontiguousarray(s2.T)
    left = s2[:, :-1]
    inc = np.sqrt(left)
    inc *= sqdt * normals
    inc += (params.mu + params.beta * left) * dt
    inc += params.rho * jump_price
    x = np.empty((n, n_steps + 1))
    x[:, 0] = 0.0
    np.cumsum(inc, axis=1, out=x[:, 1:])
    return x, s2


def _grid(T: float, n_steps: int) -> tuple[float, np.ndarray]:
    if not T > 0:
        raise ValueError("T must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dt = T / n_steps
    return dt, np.arange(n_steps + 1) * dt


@dataclass(frozen=True, eq=False)
class SimPath:
    times: np.ndarray
    X: np.ndarray
    sigma_sq: np.ndarray
    s0: float
    theta: np.ndarray = field(repr=False)
    dz: np.ndarray = field(repr=False)
    dz_sq: np.ndarray = field(repr=False)
    dzb: np.ndarray | None = field(default=None, repr=False)
    dzb_sq: np.ndarray | None = field(default=None, repr=False)
    dzstar: np.ndarray | None = field(default=None, repr=False)

    @property
    def S(self) -> np.ndarray:
        return self.s0 * np.exp(self.X)

    def cumulative(self, which: str = "dz") -> np.ndarray:
        """Cumulative subordinator path on the grid (starts at 0)."""
        inc = getattr(self, which)
        return np.concatenate([[0.0], np.cumsum(inc)])


def simulate_path(params: BnsParams, schedule: ThetaSchedule | None, model: str, T: float, n_steps: int,
                  seed: int, path_id: int = 0) -> SimPath:
    params.require(model)
    dt, times = _grid(T, n_steps)
    schedule = schedule or ThetaSchedule.constant(params.theta)
    theta = schedule.on_grid(times[:-1])
    inp = draw_inputs(params, model, n_steps, dt, seed, [path_id])
    jp, jv = drivers(params, model, theta, inp)
    x, s2 = integrate(params, dt, inp.normals, jp, jv)
    pick = (lambda a: None if a is None else a[0])
    return SimPath(times, x[0], s2[0], params.s0, theta, inp.dz[0], inp.dz_sq[0], pick(inp.dzb),
                   pick(inp.dzb_sq), pick(inp.dzstar))


@dataclass(frozen=True, eq=False)
class SimEnsemble:
    """Independent paths recorded at a subset of grid nodes.

    ``X``/``sigma_sq`` and the cumulative squared-jump sums are shaped
    (n_paths, len(nodes)); ``mean_sigma_sq`` is the across-path mean on the
    full grid.
    """

    times: np.ndarray
    nodes: np.ndarray
    X: np.ndarray
    sigma_sq: np.ndarray
    mean_sigma_sq: np.ndarray
    jump_sq_z: np.ndarray
    jump_sq_zb: np.ndarray | None
    model: str
    params: BnsParams
    seed: int

    @property
    def n_paths(self) -> int:
        return self.X.shape[0]

    @property
    def recorded_times(self) -> np.ndarray:
        return self.times[self.nodes]

    def node_of(self, t: float, tol: float = 1e-9) -> int:
        """Column of the recorded node at time ``t``; no interpolation."""
        dt = self.times[1] - self.times[0]
        hits = np.flatnonzero(np.abs(self.recorded_times - t) <= tol * dt)
        if len(hits) == 0:
            raise ValueError(f"time {t} is not a recorded grid node")
        return int(hits[0])

    @property
    def S(self) -> np.ndarray:
        return self.params.s0 * np.exp(self.X)


def _run_block(params, model, theta, dt, seed, path_ids, nodes):
    inp = draw_inputs(params, model, len(theta), dt, seed, path_ids)
    jp, jv = drivers(params, model, theta, inp)
    x, s2 = integrate(params, dt, inp.normals, jp, jv)
    zero = np.zeros((len(path_ids), 1))
    cz = np.concatenate([zero, np.cumsum(inp.dz_sq, axis=1)], axis=1)[:, nodes]
    czb = None
    if inp.dzb_sq is not None:
        czb = np.concatenate([zero, np.cumsum(inp.dzb_sq, axis=1)], axis=1)[:, nodes]
    return x[:, nodes], s2[:, nodes], s2.sum(axis=0), cz, czb


def simulate_ensemble(params: BnsParams, schedule: ThetaSchedule | None, model: str, T: float, n_steps: int,
                      n_paths: int, seed: int, parallelism: int = 1, record: Sequence[int] | None = None,
                      max_bytes: int = MAX_BYTES) -> SimEnsemble:
    """Simulate ``n_paths`` paths; identical output for any ``parallelism``.

    Paths are processed in fixed blocks of :data:`BLOCK` ids and reassembled
    in block order, so neither the thread count nor scheduling changes a bit.
    ``record`` selects the grid nodes kept per path (default: all).
    """
    params.require(model)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    dt, times = _grid(T, n_steps)
    nodes = np.arange(n_steps + 1) if record is None else np.unique(np.asarray(record, dtype=np.int64))
    if nodes.size == 0 or nodes[0] < 0 or nodes[-1] > n_steps:
        raise ValueError("record nodes must lie in 0..n_steps")
    need = n_paths * len(nodes) * 8 * (4 if model == "refined" else 3)
    work = min(n_paths, BLOCK) * n_steps * 8 * 8 * parallelism
    if need + work > max_bytes:
        raise CapacityError(f"ensemble needs ~{(need + work) / 2**20:.0f} MiB, budget {max_bytes / 2**20:.0f} MiB; "
                            "record fewer nodes or simulate fewer paths")
    schedule = schedule or ThetaSchedule.constant(params.theta)
    theta = schedule.on_grid(times[:-1])
    blocks = [list(range(s, min(s + BLOCK, n_paths))) for s in range(0, n_paths, BLOCK)]

    def run(ids):
        return _run_block(params, model, theta, dt, seed, ids, nodes)

    if parallelism == 1:
        results = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(run, blocks))
    x = np.concatenate([r[0] for r in results])
    s2 = np.concatenate([r[1] for r in results])
    block_sums = np.stack([r[2] for r in results])
    mean_s2 = np.array([math.fsum(col) for col in block_sums.T]) / n_paths
    cz = np.concatenate([r[3] for r in results])
    czb = None if results[0][4] is None else np.concatenate([r[4] for r in results])
    return SimEnsemble(times, nodes, x, s2, mean_s2, cz, czb, model, params, seed)


def expected_sigma_sq(params: BnsParams, model: str, times: np.ndarray, theta: float | None = None) -> np.ndarray:
    """E[sigma_t^2] = s0 e^{-lam t} + m (1 - e^{-lam t}) for constant theta, m the driver's mean rate."""
    m = params.driving_mean_rate(model, theta)
    e = np.exp(-params.lam * np.asarray(times, dtype=np.float64))
    return params.sigma0_sq * e + m * (1.0 - e)
