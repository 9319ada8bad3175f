"""Exogenous model inputs: preferences, dividend and income dynamics, market
structure, price-impact and initial stock endowments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """A model input lies outside its admissible domain."""

    def __init__(self, name: str, message: str):
        self.field = name
        super().__init__(f"{name}: {message}")


@dataclass(frozen=True)
class ModelParams:
    a: float
    delta: float
    mu_D: float
    sigma_D: float
    D0: float
    mu_Y: float
    sigma_Y: float
    rho: float
    L: float
    I: int
    T: float
    alpha: float
    endowments: tuple[float, ...]
    # excess of sum of squared endowments over L**2/I; filled in by validate()
    k: float = field(default=float("nan"), compare=False)

    @property
    def psi_min(self) -> float:
        """Pareto-efficient level L**2/I of the sum of squared holdings."""
        return self.L * self.L / self.I

    @property
    def psi0(self) -> float:
        return self.psi_min + self.k

    def with_(self, **changes) -> "ModelParams":
        """Copy with fields replaced, re-validated."""
        changes.setdefault("k", float("nan"))
        return validate(replace(self, **changes))


def _require(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise ParameterError(name, message)


def endowment_excess(endowments: Sequence[float], L: float) -> float:
    """Sum of squared deviations from L/I, i.e. sum(theta**2) - L**2/I when
    the endowments clear.  Correctly rounded, so permutations give identical
    results."""
    mean = L / len(endowments)
    return math.fsum((x - mean) ** 2 for x in endowments)


def validate(params: ModelParams) -> ModelParams:
    """Check every parameter domain and attach the endowment excess ``k``."""
    p = params
    for name in ("a", "delta", "mu_D", "sigma_D", "D0", "mu_Y", "sigma_Y",
                 "rho", "L", "T", "alpha"):
        _require(math.isfinite(getattr(p, name)), name, "must be finite")
    _require(p.a > 0, "a", "risk aversion must be strictly positive")
    _require(p.delta >= 0, "delta", "time preference must be non-negative")
    _require(p.sigma_D >= 0, "sigma_D", "dividend volatility must be non-negative")
    _require(p.sigma_Y >= 0, "sigma_Y", "income volatility must be non-negative")
    _require(-1.0 <= p.rho <= 1.0, "rho", "correlation must lie in [-1, 1]")
    _require(p.L > 0, "L", "stock supply must be strictly positive")
    _require(isinstance(p.I, (int, np.integer)) and p.I >= 2, "I",
             "number of traders must be an integer >= 2")
    _require(p.T > 0, "T", "horizon must be strictly positive")
    _require(p.alpha > 0, "alpha", "alpha must be strictly positive")
    _require(len(p.endowments) == p.I, "endowments",
             f"expected {p.I} entries, got {len(p.endowments)}")
    _require(all(math.isfinite(x) for x in p.endowments), "endowments",
             "entries must be finite")
    total = math.fsum(p.endowments)
    _require(abs(total - p.L) <= 1e-9 * p.L, "endowments",
             f"must sum to L={p.L} (got {total!r})")
    k = endowment_excess(p.endowments, p.L)
    return replace(p, I=int(p.I), endowments=tuple(float(x) for x in p.endowments), k=k)


def endowments_from_sd(L: float, I: int, sd: float) -> np.ndarray:
    """Deterministic endowment vector with mean L/I and population SD ``sd``.

    Deviations alternate +c, -c; an odd leftover entry gets 0.  The scale c is
    chosen so the mean square of the pattern is exactly one.
    """
    if I < 2:
        raise ParameterError("I", "number of traders must be an integer >= 2")
    if not sd >= 0:
        raise ParameterError("endowment_sd", "must be non-negative")
    pairs = I // 2
    c = math.sqrt(I / (2 * pairs))
    z = np.zeros(I)
    z[: 2 * pairs : 2] = c
    z[1 : 2 * pairs : 2] = -c
    return L / I + sd * z


def endowment_sd(endowments: Sequence[float]) -> float:
    x = np.asarray(endowments, dtype=float)
    return float(np.sqrt(np.mean((x - x.mean()) ** 2)))


def calibrated_params(sd: float = 5.0, alpha: float = 0.002, **overrides) -> ModelParams:
    """Calibrated parameter set of the numerical study (decimal units)."""
    base = dict(a=2.0, delta=0.02, mu_D=0.0201672, sigma_D=0.0226743, D0=1.0,
                mu_Y=-0.0709146, sigma_Y=0.1, rho=0.0, L=100.0, I=15, T=3.0,
                alpha=alpha)
    base.update(overrides)
    if "endowments" not in base:
        base["endowments"] = tuple(endowments_from_sd(base["L"], base["I"], sd))
    return validate(ModelParams(**base))
