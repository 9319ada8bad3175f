"""Backing model inputs out of observable targets.

Two modes: the number of traders and income drift from a target market
price of risk and competitive interest rate, and the temporary price-impact
coefficient from a parent-order price-impact power law.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .params import ParameterError

log = logging.getLogger(__name__)

TRADING_DAYS = 265


@dataclass(frozen=True)
class CalibrationTargets:
    lambda_target: float = 0.302324
    r_radner_target: float = 0.08137
    market_value: float = 3.5
    annual_return_vol: float = 0.2
    eta: float = 0.141
    beta_exponent: float = 0.6
    Q1: float = 0.38
    Q3: float = 1.36
    SO_over_ADV: float = 121.36
    trading_days: int = TRADING_DAYS

    def __post_init__(self):
        for name in ("market_value", "annual_return_vol", "eta", "beta_exponent",
                     "SO_over_ADV", "trading_days"):
            if not getattr(self, name) > 0:
                raise ParameterError(name, "must be strictly positive")
        if not 0 < self.Q1 < self.Q3:
            raise ParameterError("Q1", "quartiles must satisfy 0 < Q1 < Q3")


@dataclass(frozen=True)
class TraderCalibration:
    I: int
    I_exact: float
    mu_Y: float
    ambiguous: bool


def traders_from_lambda(lambda_target: float, a: float, L: float, sigma_D: float,
                        sigma_Y: float = 0.0, rho: float = 0.0) -> tuple[int, float, bool]:
    """Invert lambda = a (L sigma_D + I sigma_Y rho) / I for I.

    Returns the rounded count, the exact solution and whether the exact
    value was far from a whole number.
    """
    denom = lambda_target - a * sigma_Y * rho
    if not denom > 0:
        raise ParameterError("lambda_target", "must exceed a * sigma_Y * rho")
    exact = a * L * sigma_D / denom
    I = int(round(exact))
    ambiguous = abs(exact - I) > 0.49
    if ambiguous:
        log.warning("I = %.4f is not close to an integer; candidates %d and %d",
                    exact, math.floor(exact), math.ceil(exact))
    if I < 2:
        raise ParameterError("lambda_target", f"implies I = {exact:.4g} < 2 traders")
    return I, exact, ambiguous


def income_drift_from_rate(r_target: float, a: float, delta: float, mu_D: float,
                           sigma_D: float, sigma_Y: float, rho: float, L: float,
                           I: int) -> float:
    """Solve the competitive interest rate formula for the income drift."""
    risk = I ** 2 * sigma_Y ** 2 + 2 * I * L * rho * sigma_D * sigma_Y + L ** 2 * sigma_D ** 2
    return (r_target - delta + 0.5 * a ** 2 / I ** 2 * risk) / a - L * mu_D / I


def calibrate_traders(targets: CalibrationTargets, a: float, delta: float, mu_D: float,
                      sigma_D: float, sigma_Y: float, rho: float, L: float
                      ) -> TraderCalibration:
    I, exact, ambiguous = traders_from_lambda(targets.lambda_target, a, L, sigma_D,
                                              sigma_Y, rho)
    mu_Y = income_drift_from_rate(targets.r_radner_target, a, delta, mu_D, sigma_D,
                                  sigma_Y, rho, L, I)
    return TraderCalibration(I, exact, mu_Y, ambiguous)


def calibrate_alpha(targets: CalibrationTargets, L: float = 100.0) -> float:
    """Temporary price impact per unit order rate from the daily power law,
    linearised between the interquartile order sizes."""
    t = targets
    daily_vol = t.annual_return_vol * math.sqrt(1.0 / t.trading_days)
    slope = (t.Q3 ** t.beta_exponent - t.Q1 ** t.beta_exponent) / (t.Q3 - t.Q1)
    return (t.market_value * daily_vol * t.eta * slope * t.SO_over_ADV * 100.0 / L
            / t.trading_days)
