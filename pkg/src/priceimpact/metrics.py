"""Asset-pricing puzzle metrics: equity premium, finite-horizon Sharpe ratios
(deterministic quadrature and a Monte Carlo oracle), the Figure-1 style
trajectory sweep, and simulated path ensembles.

All equilibria expose the same small surface (``rate``, ``annuity``,
``price``, ``S0``, ``params``), and every metric is computed on a time grid
over [0, t]: the solver mesh for Nash equilibria, a uniform grid for the
constant-rate benchmarks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .equilibrium import (BenchmarkEquilibrium, NashEquilibrium, market_price_of_risk,
                          nash_consumption, pareto, radner)
from .params import ModelParams

BENCHMARK_STEPS = 2000
MC_CHUNK = 8192
Z95 = 1.959963984540054


@dataclass(frozen=True)
class PuzzleReport:
    t: float
    EP: float
    SR: float
    SR_normalized: float
    variance: float
    method: str
    ci: tuple[float, float] | None = None
    n_paths: int = 0
    seed: int | None = None
    degenerate: bool = False


def instantaneous_sharpe(params: ModelParams) -> float:
    return market_price_of_risk(params)


def _horizon_grid(eq, t: float) -> np.ndarray:
    if isinstance(eq, NashEquilibrium):
        mesh_t = eq.t
        m = int(np.searchsorted(mesh_t, t, side="right"))
        u = mesh_t[:m]
        if t - u[-1] > 1e-12 * max(1.0, t):
            u = np.append(u, t)
        else:
            u = u.copy()
            u[-1] = t
        return u
    n = max(64, int(math.ceil(t * BENCHMARK_STEPS)))
    return np.linspace(0.0, t, n + 1)


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(0.5 * np.diff(x) * (y[1:] + y[:-1]))))


@dataclass(frozen=True)
class _Horizon:
    """Discount structure on [0, t]: growth factor w(u) = exp(int_u^t r)."""

    u: np.ndarray
    w: np.ndarray
    growth: float  # exp(int_0^t r)
    F_t: float
    det_t: float


def _horizon(eq, t: float) -> _Horizon:
    u = _horizon_grid(eq, t)
    r = np.asarray(eq.rate(u), dtype=float)
    R = _cumtrapz(r, u)
    w = np.exp(R[-1] - R)
    F_t = float(eq.annuity(t))
    det_t = float(eq.price(t, 0.0))
    return _Horizon(u, w, float(np.exp(R[-1])), F_t, det_t)


def _check_horizon(eq, t):
    if not 0 < t <= eq.params.T * (1 + 1e-12):
        raise ValueError(f"horizon t={t!r} must lie in (0, T]")


def equity_premium(eq, t: float) -> float:
    """Expected excess return over [0, t] of the stock including reinvested
    dividends, relative to the money market."""
    _check_horizon(eq, t)
    p = eq.params
    hz = _horizon(eq, t)
    S0 = eq.S0
    ES_t = hz.F_t * (p.D0 + p.mu_D * t) + hz.det_t
    ED = p.D0 + p.mu_D * hz.u
    carry = np.trapezoid(ED * hz.w, hz.u)
    return (ES_t - S0 + carry) / S0 - (hz.growth - 1.0)


def gain_variance(eq, t: float) -> float:
    """Variance of the excess gain: the gain is linear in the dividend
    Brownian motion, so V = sigma_D^2/S0^2 int_0^t (F(t) + H(s))^2 ds with
    H(s) = int_s^t exp(int_u^t r) du."""
    p = eq.params
    hz = _horizon(eq, t)
    total = _cumtrapz(hz.w, hz.u)
    H = total[-1] - total
    return p.sigma_D ** 2 / eq.S0 ** 2 * float(np.trapezoid((hz.F_t + H) ** 2, hz.u))


def sharpe_quadrature(eq, t: float) -> PuzzleReport:
    _check_horizon(eq, t)
    ep = equity_premium(eq, t)
    var = gain_variance(eq, t)
    if var > 0:
        sr = ep / math.sqrt(var)
        return PuzzleReport(t, ep, sr, sr / math.sqrt(t), var, "quadrature")
    return PuzzleReport(t, ep, math.nan, math.nan, var, "quadrature", degenerate=True)


def _mc_chunk(eq, hz: _Horizon, n: int, seed_seq: np.random.SeedSequence,
              n_steps: int) -> np.ndarray:
    p = eq.params
    rng = np.random.Generator(np.random.Philox(seed_seq))
    t = hz.u[-1]
    grid = np.linspace(0.0, t, n_steps + 1)
    w = np.interp(grid, hz.u, hz.w)
    dt = t / n_steps
    dB = rng.standard_normal((n, n_steps)) * math.sqrt(dt)
    D = np.empty((n, n_steps + 1))
    D[:, 0] = p.D0
    np.cumsum(p.mu_D * dt + p.sigma_D * dB, axis=1, out=D[:, 1:])
    D[:, 1:] += p.D0
    carry = np.sum(0.5 * dt * (D[:, 1:] * w[1:] + D[:, :-1] * w[:-1]), axis=1)
    S_t = hz.F_t * D[:, -1] + hz.det_t
    S0 = eq.S0
    return (S_t - S0 + carry) / S0 - (hz.growth - 1.0)


def mc_gains(eq, t: float, n_paths: int, seed: int, n_steps: int = 500,
             workers: int = 1) -> np.ndarray:
    """Per-path excess gains over [0, t].

    Paths are drawn in fixed-size chunks, each with its own stream spawned
    from ``seed``, so results do not depend on ``workers``.
    """
    hz = _horizon(eq, t)
    n_chunks = -(-n_paths // MC_CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(MC_CHUNK, n_paths - c * MC_CHUNK) for c in range(n_chunks)]
    jobs = list(zip(sizes, seqs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda job: _mc_chunk(eq, hz, job[0], job[1], n_steps), jobs))
    else:
        parts = [_mc_chunk(eq, hz, n, s, n_steps) for n, s in jobs]
    return np.concatenate(parts)


def sharpe_montecarlo(eq, t: float, n_paths: int = 100_000, seed: int = 0,
                      n_steps: int = 500, workers: int = 1) -> PuzzleReport:
    """Sample Sharpe ratio of simulated excess gains with a 95% interval
    (delta method, exact for Gaussian gains)."""
    _check_horizon(eq, t)
    gains = mc_gains(eq, t, n_paths, seed, n_steps=n_steps, workers=workers)
    mean = float(np.mean(gains))
    var = float(np.var(gains, ddof=1))
    if not var > 1e-30 * max(1.0, mean * mean):
        return PuzzleReport(t, mean, math.nan, math.nan, 0.0, "monte-carlo",
                            ci=(math.nan, math.nan), n_paths=n_paths, seed=seed,
                            degenerate=True)
    sr = mean / math.sqrt(var)
    half = Z95 * math.sqrt((1.0 + 0.5 * sr * sr) / n_paths)
    return PuzzleReport(t, mean, sr, sr / math.sqrt(t), var, "monte-carlo",
                        ci=(sr - half, sr + half), n_paths=n_paths, seed=seed)


@dataclass
class PathEnsemble:
    seed: int
    n_paths: int
    t: np.ndarray
    D: np.ndarray  # (paths, nodes)
    Y: np.ndarray  # (paths, traders, nodes)
    S: np.ndarray  # (paths, nodes)
    holdings: np.ndarray  # (traders, nodes), deterministic
    order_rates: np.ndarray
    M: np.ndarray  # (paths, traders, nodes)
    c: np.ndarray  # (paths, traders, nodes)
    gains: np.ndarray  # excess gain over [0, t[-1]] per path
    params: ModelParams = field(repr=False, default=None)


def simulate_paths(eq: NashEquilibrium, n_paths: int, seed: int, stride: int = 1,
                   t_end: float | None = None, Y0: float = 0.0) -> PathEnsemble:
    """Simulate dividends, incomes, prices, money-market balances and
    consumption on every ``stride``-th solver node up to ``t_end``.

    Money-market balances follow their drift under the optimal controls by
    forward Euler, starting from zero.
    """
    p = eq.params
    grids = eq.grids
    t_end = p.T if t_end is None else t_end
    idx = np.arange(0, grids.mesh.n + 1, stride)
    idx = idx[grids.t[idx] <= t_end + 1e-12]
    t = grids.t[idx]
    m = len(t) - 1
    dt = np.diff(t)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    dB = rng.standard_normal((n_paths, m)) * np.sqrt(dt)
    dW = rng.standard_normal((n_paths, p.I, m)) * np.sqrt(dt)

    D = np.empty((n_paths, m + 1))
    D[:, 0] = p.D0
    D[:, 1:] = p.D0 + np.cumsum(p.mu_D * dt + p.sigma_D * dB, axis=1)
    dY = (p.mu_Y * dt + p.sigma_Y * (p.rho * dB[:, None, :]
                                     + math.sqrt(max(0.0, 1.0 - p.rho ** 2)) * dW))
    Y = np.empty((n_paths, p.I, m + 1))
    Y[:, :, 0] = Y0
    Y[:, :, 1:] = Y0 + np.cumsum(dY, axis=2)

    F = grids.F[idx]
    Q = grids.Q[idx]
    Q2 = grids.Q2[idx]
    Q22 = grids.Q22[idx]
    r = eq.r[idx]
    S = F[None, :] * D + eq.det[idx][None, :]
    theta = eq.holdings[:, idx]
    theta_rate = eq.order_rates[:, idx]

    M = np.zeros((n_paths, p.I, m + 1))
    for n in range(m):
        drift = (-np.log(F[n]) / p.a + M[:, :, n] * (r[n] - 1.0 / F[n]) - Q[n]
                 - 0.5 * theta[:, n] * (2.0 * Q2[n] + theta[:, n] * Q22[n])
                 - S[:, n, None] * theta_rate[:, n])
        M[:, :, n + 1] = M[:, :, n] + dt[n] * drift

    c = (np.log(F) / p.a + D[:, None, :] * theta[None] + M / F + Q + theta[None] * Q2
         + 0.5 * theta[None] ** 2 * Q22 + Y)

    hz = _horizon(eq, float(t[-1]))
    w = np.interp(t, hz.u, hz.w)
    carry = np.sum(0.5 * dt * (D[:, 1:] * w[1:] + D[:, :-1] * w[:-1]), axis=1)
    gains = (S[:, -1] - eq.S0 + carry) / eq.S0 - (hz.growth - 1.0)

    return PathEnsemble(seed, n_paths, t, D, Y, S, theta, theta_rate, M, c, gains, p)


def consumption_on_paths(eq: NashEquilibrium, ens: PathEnsemble) -> np.ndarray:
    """Re-evaluate the consumption feedback rule through nash_consumption."""
    return nash_consumption(eq.grids, None, ens.t[None, None, :], ens.D[:, None, :],
                            ens.holdings[None], ens.M, ens.Y)


def sharpe_curve(eq, ts) -> np.ndarray:
    return np.array([sharpe_quadrature(eq, float(t)).SR for t in ts])


FIGURE_VARIANTS = {
    "a002_sd5": (0.002, 5.0),
    "a01_sd5": (0.01, 5.0),
    "a002_sd10": (0.002, 10.0),
}


def figure1_sweep(nash_variants: Mapping[str, NashEquilibrium], horizon: float = 1.0,
                  sr_points: int = 50, stride: int = 1) -> dict[str, dict[str, np.ndarray]]:
    """Six panels of trajectories over [0, horizon].

    ``nash_variants`` maps the keys of FIGURE_VARIANTS to solved equilibria
    sharing every parameter except alpha and the endowment SD.  Rates and
    volatilities are sampled at every ``stride``-th solver node; Sharpe
    differences at ``sr_points`` equally spaced horizons in (0, horizon].
    """
    base = nash_variants["a002_sd5"]
    p = base.params
    rad, par = radner(p), pareto(p)
    t = base.t[::stride]
    t = t[t <= horizon + 1e-12]
    n = len(t)

    r = {key: eq.r[::stride][:n] for key, eq in nash_variants.items()}
    vol = {key: eq.vol[::stride][:n] for key, eq in nash_variants.items()}
    const = np.ones(n)
    ts = horizon * np.arange(1, sr_points + 1) / sr_points
    sr_rad = sharpe_curve(rad, ts)
    sr_diff = {key: sharpe_curve(eq, ts) - sr_rad for key, eq in nash_variants.items()}

    return {
        "A": {"t": t, "r_nash_a002": r["a002_sd5"], "r_nash_a01": r["a01_sd5"],
              "r_radner": rad.r * const, "r_pareto": par.r * const},
        "B": {"t": t, "r_nash_sd5": r["a002_sd5"], "r_nash_sd10": r["a002_sd10"],
              "r_radner": rad.r * const, "r_pareto": par.r * const},
        "C": {"t": t, "vol_nash_a002": vol["a002_sd5"], "vol_nash_a01": vol["a01_sd5"],
              "vol_radner": rad.volatility(t), "vol_pareto": par.volatility(t)},
        "D": {"t": t, "vol_nash_sd5": vol["a002_sd5"], "vol_nash_sd10": vol["a002_sd10"],
              "vol_radner": rad.volatility(t), "vol_pareto": par.volatility(t)},
        "E": {"t": ts, "sr_diff_a002": sr_diff["a002_sd5"], "sr_diff_a01": sr_diff["a01_sd5"]},
        "F": {"t": ts, "sr_diff_sd5": sr_diff["a002_sd5"], "sr_diff_sd10": sr_diff["a002_sd10"]},
    }
