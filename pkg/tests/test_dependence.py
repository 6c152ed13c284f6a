import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bns_refined.dependence import (CorrInputs, corr_classical, corr_refined, cumulative_trapezoid, decay_profile,
                                    expected_integrated_variance, fisher_se, mc_correlation, moment_se, pearson)
from bns_refined.levy_sim import BnsParams, cpe, simulate_ensemble

P = BnsParams()
pos = st.floats(1e-3, 5.0)


def make(s, t, sigma2=0.04, rho=-0.5, theta=0.0, **kw):
    return CorrInputs(s, t, sigma2 * s, sigma2 * t, rho, 1.0, 0.5, theta=theta, var_zb=0.25, **kw)


@given(pos, st.floats(-1, 0), st.floats(0, 1))
def test_equal_times_give_one(s, rho, theta):
    inp = make(s, s, rho=rho, theta=theta)
    assert corr_classical(inp) == pytest.approx(1.0, abs=1e-12)
    assert corr_refined(inp) == pytest.approx(1.0, abs=1e-12)


@given(pos, st.floats(1.0, 50.0), st.floats(0, 1))
def test_no_leverage_is_sqrt_ratio(s, ratio, theta):
    inp = make(s, s * ratio, rho=0.0, theta=theta)
    assert corr_classical(inp) == pytest.approx(math.sqrt(1 / ratio), abs=1e-12)
    assert corr_refined(inp) == pytest.approx(math.sqrt(1 / ratio), abs=1e-12)


def test_no_leverage_example():
    assert abs(corr_refined(make(1.0, 4.0, rho=0.0, theta=0.4)) - 0.5) <= 1e-12


@given(st.floats(-1, 0), st.floats(0, 1), pos)
def test_decreasing_in_t(rho, theta, s):
    ts = s + np.linspace(0.1, 10, 20)
    vals = [corr_refined(make(s, float(t), rho=rho, theta=theta)) for t in ts]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert all(0 < v <= 1 for v in vals)


@given(st.floats(-1, 0), pos, st.floats(1, 10))
def test_refined_reductions(rho, s, ratio):
    inp = make(s, s * ratio, rho=rho)
    assert corr_refined(replace(inp, theta=0.0)) == corr_classical(inp)
    pure = replace(inp, theta=1.0)
    assert corr_refined(pure) == corr_classical(replace(inp, var_z=inp.var_zb))


def test_refined_exceeds_classical_when_zb_less_variable():
    # Mixing two independent drivers lowers the jump variance; with a decaying
    # variance path the diffusive share then favours the earlier time.
    inp = CorrInputs(1.0, 3.0, 0.04, 0.08, -0.8, 1.0, 0.5, theta=0.5, var_zb=0.25)
    assert corr_refined(inp) > corr_classical(inp)
    rising = replace(inp, iv_t=0.2)
    assert corr_refined(rising) < corr_classical(rising)


def test_realized_jump_override():
    inp = make(1.0, 2.0, rho=-0.5)
    assert corr_classical(replace(inp, j_s=0.5)) == pytest.approx(corr_classical(inp))
    assert corr_classical(replace(inp, j_s=0.0)) < corr_classical(inp)


def test_input_validation():
    for bad in [dict(s=2.0, t=1.0), dict(s=0.0, t=1.0), dict(theta=1.5), dict(j_s=-1.0)]:
        kw = dict(s=1.0, t=2.0, iv_s=0.04, iv_t=0.08, rho=-0.5, lam=1.0, var_z=0.5)
        kw.update(bad)
        with pytest.raises(ValueError):
            CorrInputs(**kw)


def test_pearson_and_se():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(20_000)
    b = 0.6 * a + 0.8 * rng.standard_normal(20_000)
    r = pearson(a, b)
    se = fisher_se(r, len(a))
    assert abs(r - 0.6) <= 3 * se
    assert moment_se(a, b) == pytest.approx(se, rel=0.1)
    assert fisher_se(0.5, 3) == math.inf
    with pytest.raises(ValueError):
        pearson(np.ones(5), a[:5])


def test_independent_synthetic_correlation_within_three_se():
    rng = np.random.default_rng(1)
    hits = 0
    for _ in range(200):
        a, b = rng.standard_normal(500), rng.standard_normal(500)
        hits += abs(pearson(a, b)) <= 3 * fisher_se(pearson(a, b), 500)
    assert hits >= 195


def test_integrated_variance_helpers():
    t = np.linspace(0, 2, 2001)
    np.testing.assert_allclose(cumulative_trapezoid(t, 2 * t)[-1], 4.0, rtol=1e-12)
    p = replace(P, sigma0_sq=0.5, z_spec=cpe(1, 2))  # stationary start
    assert expected_integrated_variance(p, "classical", 3.0) == pytest.approx(1.5)


def test_decay_profile_errors():
    with pytest.raises(ValueError):
        decay_profile(P, "classical", 1.0, [1.0, 2.0], 0, seed=0)
    with pytest.raises(ValueError, match="multiple"):
        decay_profile(P, "classical", 1.0, [2.001], 10, seed=0)
    with pytest.raises(ValueError):
        decay_profile(P, "classical", 1.0, [2.0], 0, seed=0, variance="ensemble")
    ens = simulate_ensemble(P, None, "classical", 1.0, 252, 10, seed=0, record=[252])
    with pytest.raises(ValueError):
        mc_correlation(ens, 0.5, 1.0)


def test_formula_only_profile():
    rows = decay_profile(P, "refined", 1.0, [2, 3, 4], 0, seed=0, theta=0.5)
    assert all(math.isnan(r.mc_corr) for r in rows)
    assert [r.formula_corr for r in rows] == sorted((r.formula_corr for r in rows), reverse=True)
    const = decay_profile(replace(P, rho=0.0), "classical", 1.0, [4.0], 0, seed=0, variance=0.04)
    assert abs(const[0].formula_corr - 0.5) <= 1e-12


@settings(deadline=None, max_examples=1)
@given(st.just(0))
def test_moderate_monte_carlo_agreement(_):
    rows = decay_profile(P, "classical", 1.0, [2.0], 4000, seed=7)
    r = rows[0]
    assert abs(r.mc_corr - r.formula_corr) <= 3 * max(r.mc_se, r.mc_robust_se)
