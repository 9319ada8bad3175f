import math

import numpy as np
import pytest

from priceimpact import calibrated_params, nash, pareto, radner, solve
from priceimpact import metrics as M

from conftest import solved


@pytest.fixture(scope="module")
def riskless():
    return solved(5.0, 0.002, 2000, sigma_D=0.0, sigma_Y=0.0)


def test_instantaneous_sharpe():
    p = calibrated_params()
    assert M.instantaneous_sharpe(p) == pytest.approx(2 * 100 * 0.0226743 / 15, abs=1e-15)


def test_riskless_economy_has_no_premium(riskless):
    p = riskless.params
    assert M.instantaneous_sharpe(p) == 0.0
    for eq in (riskless, radner(p), pareto(p)):
        for t in (0.1, 1.0, 3.0):
            assert abs(M.equity_premium(eq, t)) < 1e-8


def test_short_horizon_premium_rate(base):
    p = base.params
    t = 1e-3
    target = base.lam * base.grids.F[0] * p.sigma_D / base.S0
    assert M.equity_premium(base, t) / t == pytest.approx(target, rel=2e-3)


def test_report_consistency(base):
    rep = M.sharpe_quadrature(base, 1.0)
    assert rep.SR == pytest.approx(rep.EP / math.sqrt(rep.variance), rel=1e-15)
    assert rep.SR_normalized == rep.SR and rep.method == "quadrature"
    half = M.sharpe_quadrature(base, 0.25)
    assert half.SR_normalized == pytest.approx(half.SR / 0.5)


def test_horizon_domain(base):
    with pytest.raises(ValueError):
        M.equity_premium(base, 0.0)
    with pytest.raises(ValueError):
        M.sharpe_quadrature(base, 3.5)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_quadrature_inside_mc_interval(base, t):
    q = M.sharpe_quadrature(base, t)
    mc = M.sharpe_montecarlo(base, t, n_paths=100_000, seed=7)
    assert mc.ci[0] <= q.SR <= mc.ci[1]
    # the variance itself agrees too
    assert mc.variance == pytest.approx(q.variance, rel=0.03)


def test_mc_deterministic_and_worker_independent(base):
    a = M.sharpe_montecarlo(base, 0.5, n_paths=20_000, seed=3)
    b = M.sharpe_montecarlo(base, 0.5, n_paths=20_000, seed=3)
    c = M.sharpe_montecarlo(base, 0.5, n_paths=20_000, seed=3, workers=4)
    assert a == b == c
    d = M.sharpe_montecarlo(base, 0.5, n_paths=20_000, seed=4)
    assert d.SR != a.SR


def test_mc_degenerate_variance(riskless):
    rep = M.sharpe_montecarlo(riskless, 1.0, n_paths=10_000, seed=0)
    assert rep.degenerate and math.isnan(rep.SR)


def test_quadrature_degenerate_variance(riskless):
    rep = M.sharpe_quadrature(riskless, 1.0)
    assert rep.degenerate and math.isnan(rep.SR)


def test_sharpe_ordering(base):
    p = base.params
    for t in (0.25, 1.0, 2.0):
        sr = [M.sharpe_quadrature(eq, t).SR for eq in (base, radner(p), pareto(p))]
        assert sr[0] >= sr[1] >= sr[2]


def test_table_sharpe_values(base, alpha01):
    assert M.sharpe_quadrature(base, 1.0).SR == pytest.approx(0.3010, abs=5e-4)
    assert M.sharpe_quadrature(alpha01, 1.0).SR == pytest.approx(0.3011, abs=5e-4)


@pytest.fixture(scope="module")
def ensemble():
    eq = solved(5.0, 0.002, 2000, rho=0.5)
    return eq, M.simulate_paths(eq, 4000, seed=5, stride=10)


def test_dividend_moments(ensemble):
    eq, ens = ensemble
    p = eq.params
    j = len(ens.t) // 2
    mean = ens.D[:, j].mean()
    se = p.sigma_D * math.sqrt(ens.t[j]) / math.sqrt(ens.n_paths)
    assert abs(mean - (p.D0 + p.mu_D * ens.t[j])) < 4 * se
    dD = np.diff(ens.D, axis=1)
    dt = ens.t[1] - ens.t[0]
    assert dD.mean() == pytest.approx(p.mu_D * dt, abs=4 * p.sigma_D * math.sqrt(dt / dD.size))
    assert dD.var() == pytest.approx(p.sigma_D ** 2 * dt, rel=0.02)


def test_income_dividend_correlation(ensemble):
    eq, ens = ensemble
    dD = np.diff(ens.D, axis=1).ravel()
    dY = np.diff(ens.Y[:, 3, :], axis=1).ravel()
    assert np.corrcoef(dD, dY)[0, 1] == pytest.approx(0.5, abs=0.01)


def test_terminal_price_equals_dividend(ensemble):
    eq, ens = ensemble
    assert ens.t[-1] == eq.params.T
    np.testing.assert_allclose(ens.S[:, -1], ens.D[:, -1], rtol=0, atol=1e-14)


def test_consumption_rule_matches(ensemble):
    eq, ens = ensemble
    np.testing.assert_allclose(M.consumption_on_paths(eq, ens), ens.c, rtol=1e-12, atol=1e-12)


def test_ensemble_reproducible(ensemble):
    eq, ens = ensemble
    again = M.simulate_paths(eq, 4000, seed=5, stride=10)
    assert np.array_equal(again.D, ens.D) and np.array_equal(again.M, ens.M)
