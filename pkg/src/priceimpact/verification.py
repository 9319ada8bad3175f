"""Residual checks on an assembled Nash equilibrium: real-good clearing,
HJB optimality of the feedback controls, consistency of the conjectured
responses, and pathwise consumption clearing."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .equilibrium import (NashEquilibrium, impact_coefficients, nash_consumption,
                          nash_rate, perceived_price)
from .metrics import PathEnsemble
from .params import ModelParams
from .solver import SolutionGrids

PROBE_SEED = 20190607


@dataclass(frozen=True)
class ResidualReport:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    worst_index: int
    worst_t: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _report(name, resid, t, tol, detail=""):
    resid = np.abs(np.asarray(resid, dtype=float))
    flat = resid.reshape(-1, resid.shape[-1]) if resid.ndim > 1 else resid[None]
    per_node = flat.max(axis=0)
    j = int(np.argmax(per_node))
    worst = float(per_node[j])
    if not math.isfinite(worst):
        worst = math.inf
    return ResidualReport(name, worst, tol, bool(worst <= tol), j, float(t[j]), detail)


def clearing_terms(grids: SolutionGrids, params: ModelParams | None = None) -> np.ndarray:
    """I log(F)/a + I Q + L Q2 + Q22 psi / 2 at every node."""
    p = params or grids.params
    return (p.I * np.log(grids.F) / p.a + p.I * grids.Q + p.L * grids.Q2
            + 0.5 * grids.Q22 * grids.psi)


def clearing_residual(grids: SolutionGrids, params: ModelParams | None = None,
                      tol: float = 1e-6) -> ResidualReport:
    resid = clearing_terms(grids, params)
    return _report("clearing", resid, grids.t, tol,
                   "" if np.max(np.abs(resid)) <= tol else "refine the mesh: increase steps_per_year")


@dataclass(frozen=True)
class ValueFunctionProbe:
    t: float
    M: float
    D: float
    theta: float
    Y: float
    v: float


def _at(grids, t):
    return {name: np.interp(t, grids.t, getattr(grids, name))
            for name in ("F", "Q", "Q2", "Q22", "psi")}


def value_function(grids: SolutionGrids, t, M, D, theta, Y) -> ValueFunctionProbe:
    """exp(-a (M/F + D theta + Y + Q + Q2 theta + Q22 theta^2 / 2))."""
    p = grids.params
    g = _at(grids, t)
    v = math.exp(-p.a * (M / g["F"] + D * theta + Y + g["Q"] + g["Q2"] * theta
                         + 0.5 * g["Q22"] * theta ** 2))
    return ValueFunctionProbe(float(t), M, D, theta, Y, v)


def optimal_controls(grids: SolutionGrids, t, M, D, theta, Y):
    """Feedback order rate gamma (theta - L/I) and consumption rate."""
    p = grids.params
    g = _at(grids, t)
    rate = g["F"] * g["Q22"] / p.alpha * (theta - p.L / p.I)
    c = nash_consumption(grids, p, t, D, theta, M, Y)
    return float(rate), float(c)


def hjb_drift_residual(grids: SolutionGrids, params: ModelParams | None, t, state, controls
                       ) -> float:
    """Drift of exp(-delta t) v + int exp(-a c) divided by exp(-delta t) v,
    in the closed form obtained after substituting the ODEs and the rate.

    ``state`` is (M, D, theta, Y) and ``controls`` is (c, theta_rate).
    """
    p = params or grids.params
    M, D, theta, Y = state
    c, rate = controls
    g = _at(grids, t)
    F, Q, Q2, Q22 = g["F"], g["Q"], g["Q2"], g["Q22"]
    a, alpha, L, I = p.a, p.alpha, p.L, p.I
    phi = D * theta + Q + theta * Q2 + 0.5 * theta ** 2 * Q22 + Y
    return float(
        math.exp(a * (-c + phi + M / F))
        - (-a * alpha * rate ** 2 - a * c + a * phi + math.log(F) + 1.0) / F
        + a * F * Q22 ** 2 * (L - theta * I) ** 2 / (alpha * I ** 2)
        - a * M / F ** 2
        + 2.0 * a * rate * Q22 * (L - theta * I) / I)


def _diff4(y: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order finite-difference derivative on a uniform grid."""
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * dt)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12.0 * dt)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12.0 * dt)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12.0 * dt)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12.0 * dt)
    return d


def _derivatives(grids: SolutionGrids, p: ModelParams, r: np.ndarray, mode: str):
    F, Q, Q2, Q22 = grids.F, grids.Q, grids.Q2, grids.Q22
    if mode == "fd":
        return tuple(_diff4(y, grids.mesh.dt) for y in (F, Q, Q2, Q22))
    if mode != "ode":
        raise ValueError("mode must be 'fd' or 'ode'")
    fq = F * Q22 ** 2
    dF = r * F - 1.0
    dQ = (-p.delta / p.a + (p.a * Q + np.log(F) + 1.0) / (p.a * F) + 0.5 * p.a * p.sigma_Y ** 2
          - p.L ** 2 * fq / (p.alpha * p.I ** 2) - p.mu_Y)
    dQ2 = (p.a * p.rho * p.sigma_D * p.sigma_Y + 2 * p.L * fq / (p.alpha * p.I) + Q2 / F
           - p.mu_D)
    dQ22 = p.a * p.sigma_D ** 2 - 2 * fq / p.alpha + Q22 / F
    return dF, dQ, dQ2, dQ22


def generator_drift(grids: SolutionGrids, node: int, state, controls, mode: str = "fd",
                    _cache: dict | None = None) -> float:
    """Same drift as hjb_drift_residual, computed independently by applying
    the Ito generator to the value-function ansatz at a mesh node.

    Time derivatives of the grids come from central differences (``fd``,
    which also tests the solver output) or from the ODE right-hand sides.
    """
    p = grids.params
    if _cache is not None and mode in _cache:
        r, deriv = _cache[mode]
    else:
        r = nash_rate(grids)
        deriv = _derivatives(grids, p, r, mode)
        if _cache is not None:
            _cache[mode] = (r, deriv)
    dF, dQ, dQ2, dQ22 = (d[node] for d in deriv)
    n = node
    F, Q, Q2, Q22 = grids.F[n], grids.Q[n], grids.Q2[n], grids.Q22[n]
    t = grids.t[n]
    M, D, theta, Y = state
    c, rate = controls
    S_i = perceived_price(grids, p, t, D, theta, rate)
    dM = r[n] * M + theta * D - S_i * rate + Y - c
    # Phi = M/F + D theta + Y + Q + Q2 theta + Q22 theta^2/2, v = exp(-a Phi)
    phi = M / F + D * theta + Y + Q + Q2 * theta + 0.5 * Q22 * theta ** 2
    drift_phi = (dM / F - M * dF / F ** 2 + p.mu_D * theta + D * rate + p.mu_Y
                 + dQ + dQ2 * theta + Q2 * rate + 0.5 * dQ22 * theta ** 2 + Q22 * theta * rate)
    qv = (theta * p.sigma_D) ** 2 + 2 * theta * p.rho * p.sigma_D * p.sigma_Y + p.sigma_Y ** 2
    return float(-p.delta - p.a * drift_phi + 0.5 * p.a ** 2 * qv
                 + math.exp(-p.a * c + p.a * phi))


def _probe_states(grids: SolutionGrids, n_states: int, seed: int):
    p = grids.params
    rng = np.random.default_rng(seed)
    nodes = rng.integers(1, grids.mesh.n, size=n_states)
    lo = min(p.endowments) - 1.0
    hi = max(p.endowments) + 1.0
    for n in nodes:
        M = rng.uniform(-5.0, 5.0)
        D = p.D0 + rng.uniform(-0.5, 0.5)
        theta = rng.uniform(lo, hi)
        Y = rng.uniform(-1.0, 1.0)
        yield int(n), (M, D, theta, Y)


def hjb_check(grids: SolutionGrids, n_states: int = 200, seed: int = PROBE_SEED,
              tol: float = 1e-6, mode: str = "fd") -> ResidualReport:
    """Drift at the optimal controls over random interior states, taking the
    larger of the closed-form and generator evaluations."""
    p = grids.params
    cache: dict = {}
    worst, worst_node = 0.0, 0
    for n, state in _probe_states(grids, n_states, seed):
        t = float(grids.t[n])
        rate, c = optimal_controls(grids, t, *state)
        closed = hjb_drift_residual(grids, p, t, state, (c, rate))
        gen = generator_drift(grids, n, state, (c, rate), mode=mode, _cache=cache)
        res = max(abs(closed), abs(gen))
        if not res <= worst:
            worst, worst_node = res, n
    return ResidualReport("hjb_drift", float(worst), tol, bool(worst <= tol), worst_node,
                          float(grids.t[worst_node]),
                          f"{n_states} states, seed {seed}, derivatives={mode}")


def response_residuals(eq: NashEquilibrium) -> np.ndarray:
    """theta'_j - [A0 (F D - S) + A1 theta_j + A2 theta_i + A3 theta'_i] for
    every ordered pair i != j at every node before T; shape (I, I, N)."""
    g, p = eq.grids, eq.params
    co = impact_coefficients(g)
    th = eq.holdings[:, :-1]
    rate = eq.order_rates[:, :-1]
    fd_minus_s = -eq.det[:-1]
    rhs = (co.A0 * fd_minus_s + co.A1 * th[None, :, :] + co.A2 * th[:, None, :]
           + co.A3 * rate[:, None, :])
    resid = rate[None, :, :] - rhs  # [i, j, n]
    off = ~np.eye(p.I, dtype=bool)
    return resid[off]


def response_consistency(eq: NashEquilibrium, tol: float = 1e-8) -> ResidualReport:
    resid = response_residuals(eq)
    return _report("response_consistency", resid, eq.t[:-1], tol,
                   f"{eq.params.I * (eq.params.I - 1)} ordered pairs")


def response_direct(eq: NashEquilibrium, node: int, theta_i, rate_i, theta_j):
    """Trader j's response to trader i's arbitrary (theta_i, rate_i) in three
    forms: the conjecture evaluated at the perceived clearing price, the
    reduced affine form, and the deviation-from-equilibrium form."""
    g, p = eq.grids, eq.params
    co = impact_coefficients(g, t=g.t[node])
    A0, A1, A2, A3 = (float(x[0]) for x in (co.A0, co.A1, co.A2, co.A3))
    I, L = p.I, p.L
    # perceived clearing price solved from the conjecture, minus F D
    S_minus_FD = (A1 * L / (A0 * (I - 1)) + (A2 * (I - 1) - A1) / (A0 * (I - 1)) * theta_i
                  + (A3 * (I - 1) + 1) / (A0 * (I - 1)) * rate_i)
    conj = -A0 * S_minus_FD + A1 * theta_j + A2 * theta_i + A3 * rate_i
    reduced = A1 * theta_j + A1 / (1 - I) * (L - theta_i) + rate_i / (1 - I)
    return conj, reduced


def response_deviation_form(eq: NashEquilibrium, node: int, i: int, j: int,
                            theta_i, rate_i, theta_j) -> float:
    """Deviation form: equilibrium order of j corrected for both deviations."""
    co = impact_coefficients(eq.grids, t=eq.t[node])
    A1 = float(co.A1[0])
    I = eq.params.I
    th_i, th_j = eq.holdings[i, node], eq.holdings[j, node]
    r_i, r_j = eq.order_rates[i, node], eq.order_rates[j, node]
    return (r_j - A1 * (th_j - theta_j) + (r_i - rate_i) / (I - 1)
            - A1 / (I - 1) * (th_i - theta_i))


def deviation_check(eq: NashEquilibrium, n_probes: int = 200, seed: int = PROBE_SEED,
                    tol: float = 1e-8) -> ResidualReport:
    """Off-equilibrium responses: all three forms must agree at random
    perturbations.  Residuals are relative to the response magnitude."""
    p = eq.params
    rng = np.random.default_rng(seed)
    worst, worst_node = 0.0, 0
    for _ in range(n_probes):
        n = int(rng.integers(0, eq.grids.mesh.n))
        i, j = (int(x) for x in rng.choice(p.I, size=2, replace=False))
        theta_i = eq.holdings[i, n] + rng.normal(0.0, 2.0)
        rate_i = eq.order_rates[i, n] + rng.normal(0.0, 10.0)
        theta_j = eq.holdings[j, n] + rng.normal(0.0, 2.0)
        conj, reduced = response_direct(eq, n, theta_i, rate_i, theta_j)
        dev = response_deviation_form(eq, n, i, j, theta_i, rate_i, theta_j)
        scale = max(1.0, abs(conj), abs(reduced), abs(dev))
        res = max(abs(conj - reduced), abs(dev - reduced)) / scale
        if not res <= worst:
            worst, worst_node = res, n
    return ResidualReport("response_deviation", float(worst), tol, bool(worst <= tol), worst_node,
                          float(eq.t[worst_node]), f"{n_probes} probes, seed {seed}")


def consumption_clearing_on_paths(ens: PathEnsemble, params: ModelParams | None = None,
                                  tol: float = 1e-6) -> ResidualReport:
    """sum_i c_i - (L D + sum_i Y_i), relative to L |D| + sum_i |Y_i|."""
    p = params or ens.params
    supply = p.L * ens.D + ens.Y.sum(axis=1)
    scale = p.L * np.abs(ens.D) + np.abs(ens.Y).sum(axis=1)
    resid = (ens.c.sum(axis=1) - supply) / np.maximum(scale, 1e-300)
    return _report("consumption_clearing", resid, ens.t, tol, f"{ens.n_paths} paths")


def stock_clearing(eq: NashEquilibrium, tol: float = 1e-9) -> ResidualReport:
    resid = (eq.holdings.sum(axis=0) - eq.params.L) / eq.params.L
    return _report("stock_clearing", resid, eq.t, tol)


def run_all(eq: NashEquilibrium, n_paths: int = 200, seed: int = PROBE_SEED,
            path_stride: int | None = None) -> list[ResidualReport]:
    from .metrics import simulate_paths

    g = eq.grids
    stride = path_stride or max(1, g.mesh.n // 600)
    ens = simulate_paths(eq, n_paths, seed, stride=stride)
    return [
        clearing_residual(g),
        hjb_check(g, seed=seed),
        response_consistency(eq),
        deviation_check(eq, seed=seed),
        consumption_clearing_on_paths(ens),
        stock_clearing(eq),
    ]
