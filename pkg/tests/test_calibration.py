import logging

import pytest

from priceimpact.calibration import (CalibrationTargets, calibrate_alpha, calibrate_traders,
                                     income_drift_from_rate, traders_from_lambda)
from priceimpact.equilibrium import market_price_of_risk, radner_rate
from priceimpact.params import ParameterError, calibrated_params

FIXED = dict(a=2.0, delta=0.02, mu_D=0.0201672, sigma_D=0.0226743, sigma_Y=0.1, rho=0.0, L=100.0)


def test_traders_exact_inversion():
    lam = 2 * 100 * 0.0226743 / 15
    I, exact, amb = traders_from_lambda(lam, 2.0, 100.0, 0.0226743)
    assert I == 15 and exact == pytest.approx(15.0, abs=1e-12) and not amb


def test_round_trip_with_rate_formula():
    p = calibrated_params()
    r = radner_rate(p)
    mu = income_drift_from_rate(r, p.a, p.delta, p.mu_D, p.sigma_D, p.sigma_Y, p.rho, p.L, p.I)
    assert mu == pytest.approx(p.mu_Y, abs=1e-14)


def test_correlated_inversion():
    p = calibrated_params(rho=0.4)
    lam = market_price_of_risk(p)
    I, exact, _ = traders_from_lambda(lam, p.a, p.L, p.sigma_D, p.sigma_Y, p.rho)
    assert I == 15 and exact == pytest.approx(15.0)


def test_ambiguous_count_warns(caplog):
    lam = 2 * 100 * 0.0226743 / 15.5
    with caplog.at_level(logging.WARNING):
        I, exact, amb = traders_from_lambda(lam, 2.0, 100.0, 0.0226743)
    assert amb and "candidates 15 and 16" in caplog.text


def test_calibrate_traders_defaults():
    res = calibrate_traders(CalibrationTargets(), **FIXED)
    assert res.I == 15
    # rate target rounded to 8.137% pins mu_Y only to about 2.5e-6
    assert res.mu_Y == pytest.approx(-0.0709146, abs=5e-6)


def test_alpha_chain():
    assert calibrate_alpha(CalibrationTargets()) == pytest.approx(0.0018, abs=1e-4)
    # scales inversely in L
    assert calibrate_alpha(CalibrationTargets(), L=200.0) == pytest.approx(
        calibrate_alpha(CalibrationTargets()) / 2)


def test_invalid_targets():
    with pytest.raises(ParameterError):
        CalibrationTargets(Q1=2.0, Q3=1.0)
    with pytest.raises(ParameterError):
        CalibrationTargets(eta=0.0)
