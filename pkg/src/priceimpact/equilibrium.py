"""Equilibrium objects: the price-impact Nash equilibrium built from the
solver grids, and the closed-form competitive (Radner) and Pareto-efficient
benchmarks.

Off-node evaluation of any Nash grid is linear interpolation in t.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from .params import ModelParams
from .solver import SolutionGrids


class DegenerateImpactError(ArithmeticError):
    """The response coefficients are undefined where I*Q2 + 2*L*Q22 = 0."""


def market_price_of_risk(p: ModelParams) -> float:
    """Instantaneous Sharpe ratio a (L sigma_D + I sigma_Y rho) / I."""
    return p.a * (p.L * p.sigma_D + p.I * p.sigma_Y * p.rho) / p.I


def _rate_constant(p: ModelParams) -> float:
    # everything in the interest rate except the psi term
    a, I, L = p.a, p.I, p.L
    return p.delta - a * (a * I * p.sigma_Y ** 2 + 2 * a * L * p.rho * p.sigma_D * p.sigma_Y
                          - 2 * I * p.mu_Y - 2 * L * p.mu_D) / (2 * I)


def nash_rate(grids: SolutionGrids, params: ModelParams | None = None) -> np.ndarray:
    p = params or grids.params
    return _rate_constant(p) - p.a ** 2 * p.sigma_D ** 2 * grids.psi / (2 * p.I)


def radner_rate(p: ModelParams) -> float:
    a, I, L = p.a, p.I, p.L
    return (p.delta + a / I * (L * p.mu_D + I * p.mu_Y)
            - 0.5 * a ** 2 / I ** 2 * (I ** 2 * p.sigma_Y ** 2
                                        + 2 * I * L * p.rho * p.sigma_D * p.sigma_Y
                                        + L ** 2 * p.sigma_D ** 2))


def pareto_rate(p: ModelParams) -> float:
    a, I, L = p.a, p.I, p.L
    spanned = L * p.sigma_D + I * p.sigma_Y * p.rho
    return (p.delta + a / I * (L * p.mu_D + I * p.mu_Y)
            - 0.5 * a ** 2 / I ** 2 * (spanned ** 2 + I * p.sigma_Y ** 2 * (1 - p.rho ** 2)))


def _interp(t, mesh_t, values):
    out = np.interp(t, mesh_t, values)
    return float(out) if np.ndim(out) == 0 else out


def nash_price(grids: SolutionGrids, params: ModelParams | None, t, D):
    """Equilibrium price F(t) D + F(t) (L Q22(t)/I + Q2(t))."""
    p = params or grids.params
    F = _interp(t, grids.t, grids.F)
    det = _interp(t, grids.t, grids.F * (p.L * grids.Q22 / p.I + grids.Q2))
    return F * D + det


def nash_holdings(grids: SolutionGrids, params: ModelParams | None = None,
                  endowments: Sequence[float] | None = None, trapezoid: bool = False):
    """Holdings L/I + (theta_0 - L/I) exp(int_0^t gamma), one row per trader.

    Returns ``(holdings, order_rates, gamma)``.  Since psi - L**2/I grows like
    exp(2 int gamma), the decay factor is read off the RK4 psi grid, which
    keeps it fourth-order accurate; ``trapezoid=True`` integrates gamma
    directly instead.
    """
    p = params or grids.params
    theta0 = np.asarray(p.endowments if endowments is None else endowments, dtype=float)
    gamma = grids.F * grids.Q22 / p.alpha
    excess = grids.psi - p.psi_min
    if trapezoid or not excess[0] > 0:
        dt = grids.mesh.dt
        Gamma = np.concatenate(([0.0], np.cumsum(0.5 * dt * (gamma[1:] + gamma[:-1]))))
        decay = np.exp(Gamma)
    else:
        decay = np.sqrt(np.maximum(excess, 0.0) / excess[0])
    mean = p.L / p.I
    dev = theta0 - mean
    holdings = mean + dev[:, None] * decay[None, :]
    rates = gamma[None, :] * dev[:, None] * decay[None, :]
    return holdings, rates, gamma


@dataclass(frozen=True)
class ImpactCoefficients:
    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray


def impact_coefficients(grids: SolutionGrids, params: ModelParams | None = None, t=None,
                        rtol: float = 1e-12) -> ImpactCoefficients:
    """Perceived response coefficients at ``t`` (default: every node before T).

    The terminal node is excluded by default because Q2 = Q22 = 0 there.
    """
    p = params or grids.params
    if t is None:
        t = grids.t[:-1]
    t = np.atleast_1d(np.asarray(t, dtype=float))
    F = np.interp(t, grids.t, grids.F)
    Q2 = np.interp(t, grids.t, grids.Q2)
    Q22 = np.interp(t, grids.t, grids.Q22)
    I, L, alpha = p.I, p.L, p.alpha
    denom = I * Q2 + 2 * L * Q22
    scale = I * np.abs(Q2) + 2 * L * np.abs(Q22)
    bad = ~(np.abs(denom) > rtol * scale) | (scale == 0)
    if bad.any():
        j = int(np.argmax(bad))
        raise DegenerateImpactError(
            f"I*Q2 + 2*L*Q22 vanishes at t={t[j]:.6g}; response coefficients undefined")
    A0 = I * L * Q22 / (alpha * (I - 1) * denom)
    A1 = A0 * (I - 1) * F * denom / (I * L)
    A2 = A0 * F * (I * Q2 - (I - 2) * L * Q22) / (I * L)
    A3 = A0 * alpha + 1.0 / (1 - I)
    return ImpactCoefficients(A0, A1, A2, A3)


def perceived_price(grids: SolutionGrids, params: ModelParams | None, t, D, theta, theta_rate):
    """Price trader i perceives for own holdings ``theta`` and order rate
    ``theta_rate``: permanent impact -F Q22 on holdings, temporary alpha on
    the order rate."""
    p = params or grids.params
    F = _interp(t, grids.t, grids.F)
    Q2 = _interp(t, grids.t, grids.Q2)
    Q22 = _interp(t, grids.t, grids.Q22)
    return (F * D + F * (2 * p.L * Q22 / p.I + Q2) - F * Q22 * theta
            + p.alpha * theta_rate)


def nash_consumption(grids: SolutionGrids, params: ModelParams | None, t, D, theta, M, Y):
    """Optimal feedback consumption rate."""
    F = _interp(t, grids.t, grids.F)
    Q = _interp(t, grids.t, grids.Q)
    Q2 = _interp(t, grids.t, grids.Q2)
    Q22 = _interp(t, grids.t, grids.Q22)
    p = params or grids.params
    return (np.log(F) / p.a + D * theta + M / F + Q + theta * Q2
            + 0.5 * theta ** 2 * Q22 + Y)


@dataclass(frozen=True)
class NashEquilibrium:
    """Nash equilibrium with price-impact sampled on the solver mesh."""

    grids: SolutionGrids

    kind = "nash"

    @property
    def params(self) -> ModelParams:
        return self.grids.params

    @property
    def t(self) -> np.ndarray:
        return self.grids.t

    @cached_property
    def r(self) -> np.ndarray:
        return nash_rate(self.grids)

    @cached_property
    def det(self) -> np.ndarray:
        """Deterministic price component S - F D on the mesh."""
        g, p = self.grids, self.params
        return g.F * (p.L * g.Q22 / p.I + g.Q2)

    @cached_property
    def _holdings(self):
        return nash_holdings(self.grids)

    @property
    def holdings(self) -> np.ndarray:
        return self._holdings[0]

    @property
    def order_rates(self) -> np.ndarray:
        return self._holdings[1]

    @property
    def gamma(self) -> np.ndarray:
        return self._holdings[2]

    @property
    def vol(self) -> np.ndarray:
        return self.grids.F * self.params.sigma_D

    @property
    def lam(self) -> float:
        return market_price_of_risk(self.params)

    @property
    def S0(self) -> float:
        return float(self.grids.F[0] * self.params.D0 + self.det[0])

    def rate(self, t):
        return _interp(t, self.t, self.r)

    def annuity(self, t):
        return _interp(t, self.t, self.grids.F)

    def price(self, t, D):
        return self.annuity(t) * D + _interp(t, self.t, self.det)

    def volatility(self, t):
        return self.annuity(t) * self.params.sigma_D

    def coefficients(self, t=None) -> ImpactCoefficients:
        return impact_coefficients(self.grids, t=t)

    @property
    def sum_sq_holdings_T(self) -> float:
        return float(np.sum(self.holdings[:, -1] ** 2))


def nash(grids: SolutionGrids) -> NashEquilibrium:
    return NashEquilibrium(grids)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
# below this |r| the closed-form duration term loses about eps / r**2
SMALL_RATE = 1e-3


@dataclass(frozen=True)
class BenchmarkEquilibrium:
    """Constant-rate competitive benchmark (Radner or Pareto)."""

    kind: Literal["radner", "pareto"]
    params: ModelParams
    r: float
    lam: float

    def rate(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.r) if np.ndim(t) else self.r

    def _quad(self, tau, fn):
        # Gauss-Legendre on [0, tau]; used where the closed form cancels
        tau = np.asarray(tau, dtype=float)
        u = 0.5 * tau[..., None] * (_GL_NODES + 1.0)
        return 0.5 * tau * np.sum(_GL_WEIGHTS * fn(u), axis=-1)

    def annuity(self, t):
        r, T = self.r, self.params.T
        tau = T - np.asarray(t, dtype=float)
        if r == 0.0:
            out = 1.0 + tau
        else:
            # ((r - 1) exp(-r tau) + 1) / r without cancellation
            out = np.exp(-r * tau) - np.expm1(-r * tau) / r
        return float(out) if np.ndim(out) == 0 else out

    def det(self, t):
        """Deterministic price part: risk-neutral dividend drift times the
        duration-weighted annuity."""
        p, r = self.params, self.r
        m = p.mu_D - p.sigma_D * self.lam
        tau = p.T - np.asarray(t, dtype=float)
        if abs(r) < SMALL_RATE:
            out = m * (self._quad(tau, lambda u: u * np.exp(-r * u)) + tau * np.exp(-r * tau))
        else:
            out = -(np.exp(-r * tau) * (1.0 - (r - 1.0) * r * tau) - 1.0) * m / r ** 2
        return float(out) if np.ndim(out) == 0 else out

    def price(self, t, D):
        return self.annuity(t) * D + self.det(t)

    def volatility(self, t):
        return self.annuity(t) * self.params.sigma_D

    @property
    def S0(self) -> float:
        return float(self.price(0.0, self.params.D0))


def radner(params: ModelParams) -> BenchmarkEquilibrium:
    return BenchmarkEquilibrium("radner", params, radner_rate(params),
                                market_price_of_risk(params))


def pareto(params: ModelParams) -> BenchmarkEquilibrium:
    return BenchmarkEquilibrium("pareto", params, pareto_rate(params),
                                market_price_of_risk(params))
