"""Log-return correlation Corr(X_t, X_s) for the classical and refined models.

Closed forms take integrated variances and the subordinator variances; the
Monte Carlo side estimates the same quantity from a simulated ensemble.

Jump terms default to the expected quadratic jump mass,
``J(s) = s * lam * Var(Z_1)``, which makes ``Corr(X_s, X_s) = 1``.  Passing
``j_s``/``jb_s`` explicitly (e.g. realized sums of squared jumps) overrides it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .levy_sim import TRADING_DAY, BnsParams, SimEnsemble, ThetaSchedule, simulate_ensemble


@dataclass(frozen=True)
class CorrInputs:
    s: float
    t: float
    iv_s: float
    iv_t: float
    rho: float
    lam: float
    var_z: float
    theta: float = 0.0
    var_zb: float = 0.0
    j_s: float | None = None
    jb_s: float | None = None

    def __post_init__(self):
        if not (self.t >= self.s > 0):
            raise ValueError(f"need t >= s > 0, got s={self.s}, t={self.t}")
        if not (self.iv_t >= self.iv_s > 0):
            raise ValueError("integrated variances must be positive and non-decreasing in the upper limit")
        if not 0 <= self.theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        for name in ("j_s", "jb_s"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CorrEstimate:
    """Pearson estimate with its Fisher-transform standard error.

    ``robust_se`` drops the bivariate-normal assumption (fourth-moment delta
    method); for jump-driven returns it is noticeably larger than ``se``.
    """

    estimate: float
    se: float
    n_paths: int
    robust_se: float = math.nan

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.estimate - value) <= k * self.se


def _ratio(num: float, alpha_t: float, alpha_s: float) -> float:
    den_sq = alpha_t * alpha_s
    if not den_sq > 0:
        raise ValueError("non-positive denominator in correlation formula")
    return num / math.sqrt(den_sq)


def corr_classical(inp: CorrInputs) -> float:
    """Classical BN-S correlation; ``theta`` and ``var_zb`` are ignored."""
    rho2 = inp.rho**2
    alpha_s = inp.iv_s + inp.s * rho2 * inp.lam * inp.var_z
    alpha_t = inp.iv_t + inp.t * rho2 * inp.lam * inp.var_z
    num = alpha_s if inp.j_s is None else inp.iv_s + rho2 * inp.j_s
    return _ratio(num, alpha_t, alpha_s)


def corr_refined(inp: CorrInputs) -> float:
    """Refined model: Z and Z^(b) mixed with weights (1 - theta) and theta."""
    rho2 = inp.rho**2
    th = inp.theta
    mix = (1.0 - th) ** 2 * inp.var_z + th**2 * inp.var_zb
    alpha_s = inp.iv_s + inp.s * rho2 * inp.lam * mix
    alpha_t = inp.iv_t + inp.t * rho2 * inp.lam * mix
    if inp.j_s is None and inp.jb_s is None:
        num = alpha_s
    else:
        j = inp.s * inp.lam * inp.var_z if inp.j_s is None else inp.j_s
        jb = inp.s * inp.lam * inp.var_zb if inp.jb_s is None else inp.jb_s
        num = inp.iv_s + rho2 * (1.0 - th) ** 2 * j + rho2 * th**2 * jb
    return _ratio(num, alpha_t, alpha_s)


def cumulative_trapezoid(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Running trapezoid integral, starting at 0 on the first node."""
    seg = 0.5 * (values[1:] + values[:-1]) * np.diff(times)
    return np.concatenate([[0.0], np.cumsum(seg)])


def expected_integrated_variance(params: BnsParams, model: str, nu: float, theta: float | None = None) -> float:
    """Integral of E[sigma^2] over [0, nu] for constant theta."""
    m = params.driving_mean_rate(model, theta)
    lam = params.lam
    g = -math.expm1(-lam * nu) / lam
    return params.sigma0_sq * g + m * (nu - g)


def inputs_from_ensemble(ens: SimEnsemble, s: float, t: float, theta: float | None = None,
                         realized_jumps: bool = False) -> CorrInputs:
    """Formula inputs with integrated variance from the ensemble-mean variance path."""
    p = ens.params
    iv = cumulative_trapezoid(ens.times, ens.mean_sigma_sq)
    dt = ens.times[1] - ens.times[0]
    ks, kt = int(round(s / dt)), int(round(t / dt))
    j = jb = None
    if realized_jumps:
        col = ens.node_of(s)
        j = float(np.mean(ens.jump_sq_z[:, col]))
        if ens.jump_sq_zb is not None:
            jb = float(np.mean(ens.jump_sq_zb[:, col]))
    return CorrInputs(
        s=s, t=t, iv_s=float(iv[ks]), iv_t=float(iv[kt]), rho=p.rho, lam=p.lam, var_z=p.z_spec.var_rate,
        theta=p.theta if theta is None else theta,
        var_zb=p.zb_spec.var_rate if p.zb_spec is not None else 0.0, j_s=j, jb_s=jb,
    )


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = a - math.fsum(a) / len(a)
    db = b - math.fsum(b) / len(b)
    saa, sbb = math.fsum(da * da), math.fsum(db * db)
    if saa == 0 or sbb == 0:
        raise ValueError("zero-variance marginal; correlation undefined")
    sab = math.fsum(da * db)
    return max(-1.0, min(1.0, sab / math.sqrt(saa * sbb)))


def fisher_se(r: float, n: int) -> float:
    """Standard error of r from the Fisher transform, 1/sqrt(n-3) on the z scale."""
    if n <= 3:
        return math.inf
    return (1.0 - r * r) / math.sqrt(n - 3)


def moment_se(a: np.ndarray, b: np.ndarray) -> float:
    """Large-sample SE of Pearson's r without assuming normality."""
    n = len(a)
    da, db = a - a.mean(), b - b.mean()
    m = {(i, j): float(np.mean(da**i * db**j)) for i, j in
         [(2, 0), (0, 2), (1, 1), (4, 0), (0, 4), (2, 2), (3, 1), (1, 3)]}
    r = m[1, 1] / math.sqrt(m[2, 0] * m[0, 2])
    if r == 0:
        return math.sqrt(m[2, 2] / (m[2, 0] * m[0, 2]) / n)
    v = (r * r / 4) * (m[4, 0] / m[2, 0] ** 2 + m[0, 4] / m[0, 2] ** 2 + 2 * m[2, 2] / (m[2, 0] * m[0, 2])
                       + 4 * m[2, 2] / m[1, 1] ** 2 - 4 * m[3, 1] / (m[1, 1] * m[2, 0])
                       - 4 * m[1, 3] / (m[1, 1] * m[0, 2]))
    return math.sqrt(max(v, 0.0) / n)


def mc_correlation(ens: SimEnsemble, s: float, t: float) -> CorrEstimate:
    """Sample correlation of (X_s, X_t) across paths; s and t must be recorded nodes."""
    if ens.n_paths < 2:
        raise ValueError("need at least two paths")
    a = ens.X[:, ens.node_of(s)]
    b = ens.X[:, ens.node_of(t)]
    r = pearson(a, b)
    return CorrEstimate(r, fisher_se(r, ens.n_paths), ens.n_paths, moment_se(a, b))


@dataclass(frozen=True)
class DecayRow:
    t: float
    formula_corr: float
    mc_corr: float
    mc_se: float
    mc_robust_se: float = math.nan


def _on_grid(value: float, dt: float) -> int:
    k = round(value / dt)
    if abs(k * dt - value) > 1e-9 * dt:
        raise ValueError(f"time {value} is not a multiple of the step {dt}")
    return int(k)


def decay_profile(
    params: BnsParams,
    model: str,
    s: float,
    t_grid: Sequence[float],
    n_paths: int,
    seed: int,
    dt: float = TRADING_DAY,
    theta: float | None = None,
    schedule: ThetaSchedule | None = None,
    variance: str | float | None = None,
    parallelism: int = 1,
) -> list[DecayRow]:
    """Formula and Monte Carlo correlation of (X_s, X_t) along ``t_grid``.

    ``variance`` picks the integrated variance fed to the formula:
    ``"ensemble"`` (trapezoid over the simulated mean variance path, the
    default when paths are simulated), ``"expected"`` (closed-form mean), or a
    number for a constant variance.  With ``n_paths=0`` only the formula
    column is filled and the MC columns are NaN.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.size == 0 or t_grid[0] <= s or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be increasing and strictly greater than s")
    theta = params.theta if theta is None else theta
    if variance is None:
        variance = "ensemble" if n_paths > 0 else "expected"
    ens = None
    if n_paths > 0:
        n_steps = _on_grid(t_grid[-1], dt)
        record = [_on_grid(s, dt)] + [_on_grid(t, dt) for t in t_grid]
        sim_params = replace(params, theta=theta)
        ens = simulate_ensemble(sim_params, schedule, model, n_steps * dt, n_steps, n_paths, seed,
                                parallelism=parallelism, record=record)
    elif variance == "ensemble":
        raise ValueError("variance='ensemble' needs n_paths > 0")

    def iv(nu: float) -> float:
        if isinstance(variance, (int, float)):
            return float(variance) * nu
        if variance == "expected":
            return expected_integrated_variance(params, model, nu, theta)
        cum = cumulative_trapezoid(ens.times, ens.mean_sigma_sq)
        return float(cum[_on_grid(nu, ens.times[1] - ens.times[0])])

    formula = corr_refined if model == "refined" else corr_classical
    var_zb = params.zb_spec.var_rate if params.zb_spec is not None else 0.0
    rows = []
    for t in t_grid:
        inp = CorrInputs(s, float(t), iv(s), iv(float(t)), params.rho, params.lam, params.z_spec.var_rate,
                         theta, var_zb)
        if ens is not None:
            est = mc_correlation(ens, s, float(t))
            mc, se, rse = est.estimate, est.se, est.robust_se
        else:
            mc = se = rse = math.nan
        rows.append(DecayRow(float(t), formula(inp), mc, se, rse))
    return rows

