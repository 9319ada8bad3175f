"""Shooting solver for the forward-backward equilibrium ODE system.

The backward components (F, Q, Q2, Q22) and the forward component psi are
solved in reversed time, where every component has an initial condition
except h(0) = psi(T) - L**2/I.  That one free value is found by bracketing
on the strictly increasing map h0 -> h(T; h0) until h(T) equals the
endowment excess k = sum(theta_0**2) - L**2/I.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _accel, kernels
from .params import ModelParams

log = logging.getLogger(__name__)

DEFAULT_STEPS_PER_YEAR = 10_000
FIGURE_STEPS_PER_YEAR = 250_000
DEFAULT_REL_TOL = 1e-10
DEFAULT_MAX_ITER = 200
K_ZERO = 1e-12


class SolverError(RuntimeError):
    """Numerical failure of the ODE integration or the shooting search."""

    hint = ""

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{msg} ({self.hint})" if self.hint else msg


class PositivityError(SolverError):
    hint = "refine the mesh: increase steps_per_year"


class BlowUpError(SolverError):
    hint = "the ODE system blew up; check the parameter set"


class BracketError(SolverError):
    hint = "h(T; h0) is not monotone on the bracket at this mesh"


class ConvergenceError(SolverError):
    hint = "raise max_iter or loosen rel_tol"


def drift_constant(p: ModelParams) -> float:
    """Constant C0 of the reversed (h, f, g) system; equals the competitive
    interest rate."""
    a, I, L = p.a, p.I, p.L
    return (p.delta
            - a * (-2 * L * p.mu_D - 2 * I * p.mu_Y + 2 * a * L * p.rho * p.sigma_D * p.sigma_Y
                   + a * I * p.sigma_Y ** 2) / (2 * I)
            - a ** 2 * p.sigma_D ** 2 * L ** 2 / (2 * I ** 2))


def kernel_coefficients(p: ModelParams) -> np.ndarray:
    return np.array([
        p.alpha,
        p.a ** 2 * p.sigma_D ** 2 / (2 * p.I),
        drift_constant(p),
        p.a * p.sigma_D ** 2,
        p.a * p.rho * p.sigma_D * p.sigma_Y,
        p.mu_D,
        p.L,
        float(p.I),
        p.a,
        p.delta,
        p.sigma_Y,
        p.mu_Y,
    ])


@dataclass(frozen=True)
class Mesh:
    """Uniform grid on [0, T] with ``n`` steps."""

    T: float
    n: int

    @classmethod
    def for_horizon(cls, T: float, steps_per_year: int) -> "Mesh":
        if steps_per_year <= 0:
            raise ValueError("steps_per_year must be positive")
        return cls(T, max(1, int(math.ceil(T * steps_per_year - 1e-9))))

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)


@dataclass(frozen=True)
class Trajectories:
    """Reversed-time solution: column order h, f, g, q2, q."""

    mesh: Mesh
    y: np.ndarray

    @property
    def h(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def f(self) -> np.ndarray:
        return self.y[:, 1]

    @property
    def g(self) -> np.ndarray:
        return self.y[:, 2]


@dataclass(frozen=True)
class SolutionGrids:
    params: ModelParams
    mesh: Mesh
    psi: np.ndarray
    F: np.ndarray
    Q: np.ndarray
    Q2: np.ndarray
    Q22: np.ndarray
    h0_hat: float
    k: float
    shooting_iterations: int
    shooting_residual: float
    trajectories: Trajectories

    @property
    def t(self) -> np.ndarray:
        return self.mesh.t

    @property
    def psi_T(self) -> float:
        return float(self.psi[-1])


def _raise_for(status: int, where: int, dt: float, h0: float) -> None:
    if status == kernels.POSITIVITY:
        raise PositivityError(
            f"positivity of (h, f, g) violated at reversed time {where * dt:.6g} "
            f"for h0={h0!r}")
    if status == kernels.NONFINITE:
        raise BlowUpError(f"non-finite state at reversed time {where * dt:.6g} for h0={h0!r}")


def integrate_hfg(params: ModelParams, h0: float, mesh: Mesh, backend: str | None = None
                  ) -> Trajectories:
    """RK4 trajectories of the reversed system from (h0, 1, 0), plus the
    reversed Q2 and Q components."""
    if not h0 >= 0:
        raise ValueError("h0 must be non-negative")
    y, status, where = kernels.full_trajectory(h0, mesh.n, mesh.dt, kernel_coefficients(params),
                                               backend=backend)
    _raise_for(status, where, mesh.dt, h0)
    return Trajectories(mesh, y)


def _terminal(params, h0s, mesh, coef, backend):
    # stopping once h > 2k is safe: h is nondecreasing along the trajectory
    hT, status, where = kernels.hfg_terminal(h0s, mesh.n, mesh.dt, coef,
                                             h_cap=2.0 * params.k, backend=backend)
    for j in range(len(h0s)):
        _raise_for(int(status[j]), int(where[j]), mesh.dt, float(h0s[j]))
    return hT


def shoot_h0(params: ModelParams, mesh: Mesh, rel_tol: float = DEFAULT_REL_TOL,
             max_iter: int = DEFAULT_MAX_ITER, backend: str | None = None,
             probes: int | None = None) -> tuple[float, int, float]:
    """Find h0 in (0, k) with |h(T; h0) - k| <= rel_tol * k.

    Returns ``(h0_hat, iterations, |h(T) - k|)``; ``iterations`` counts bracket
    halvings.  With ``probes = 2**m - 1`` interior points per pass each pass is
    m bisection steps done at once (cheap for the vectorised numpy kernel).
    """
    k = params.k
    if k < K_ZERO:
        return 0.0, 0, 0.0
    backend = backend or _accel.BACKEND
    if probes is None:
        probes = 1 if backend == "numba" else 31
    halvings_per_pass = math.log2(probes + 1)
    coef = kernel_coefficients(params)
    tol = rel_tol * k

    lo, hi = 0.0, k
    r_lo = -k
    r_hi = float(_terminal(params, np.array([hi]), mesh, coef, backend)[0]) - k
    if abs(r_hi) <= tol:
        # no dividend risk: holdings never move, so h0 = k
        return hi, 0, abs(r_hi)
    if not r_hi > 0:
        raise BracketError(f"bracket [0, k] invalid: residuals {r_lo!r}, {r_hi!r}")
    best_h, best_r = hi, r_hi
    halvings = 0.0
    while halvings < max_iter:
        cand = np.linspace(lo, hi, probes + 2)[1:-1]
        res = _terminal(params, cand, mesh, coef, backend) - k
        halvings += halvings_per_pass
        j = int(np.argmin(np.abs(res)))
        if abs(res[j]) < abs(best_r):
            best_h, best_r = float(cand[j]), float(res[j])
        if abs(best_r) <= tol:
            return best_h, int(round(halvings)), abs(best_r)
        above = np.nonzero(res > 0)[0]
        i = int(above[0]) if above.size else probes
        new_lo = float(cand[i - 1]) if i > 0 else lo
        new_hi = float(cand[i]) if i < probes else hi
        if new_hi - new_lo <= 4 * np.spacing(new_hi):
            break
        lo, hi = new_lo, new_hi
    raise ConvergenceError(
        f"shooting did not reach |h(T)-k| <= {tol:.3g} after {int(halvings)} halvings "
        f"(best residual {abs(best_r):.3g})")


def assemble_grids(params: ModelParams, h0_hat: float, traj: Trajectories,
                   iterations: int = 0) -> SolutionGrids:
    """Map the reversed trajectories onto the forward time mesh."""
    y = traj.y[::-1]
    h, f, g, q2, q = (np.ascontiguousarray(y[:, j]) for j in range(5))
    psi = h + params.psi_min
    F = f
    Q22 = -g / f
    residual = abs(float(traj.h[-1]) - params.k)
    return SolutionGrids(
        params=params, mesh=traj.mesh, psi=psi, F=F, Q=q, Q2=q2, Q22=Q22,
        h0_hat=float(h0_hat), k=params.k, shooting_iterations=iterations,
        shooting_residual=residual, trajectories=traj)


def solve(params: ModelParams, steps_per_year: int = DEFAULT_STEPS_PER_YEAR,
          rel_tol: float = DEFAULT_REL_TOL, max_iter: int = DEFAULT_MAX_ITER,
          backend: str | None = None) -> SolutionGrids:
    """Shoot for h0 and return the forward-time grids of psi, F, Q, Q2, Q22."""
    mesh = Mesh.for_horizon(params.T, steps_per_year)
    h0_hat, iters, _ = shoot_h0(params, mesh, rel_tol=rel_tol, max_iter=max_iter,
                                backend=backend)
    traj = integrate_hfg(params, h0_hat, mesh, backend=backend)
    grids = assemble_grids(params, h0_hat, traj, iters)
    log.debug("solved: h0=%.12g iterations=%d residual=%.3g", h0_hat, iters,
              grids.shooting_residual)
    return grids
