"""Run configuration: a TOML (or JSON) file with sections model, nash,
numerics, output and an optional calibration section.

Without a file the calibrated defaults are used.  A file that is given must
spell out every model and nash key; numerics, output and calibration keys
fall back to their defaults.  Unknown sections and keys are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibration import CalibrationTargets
from .params import ModelParams, endowments_from_sd, validate
from .solver import DEFAULT_REL_TOL, DEFAULT_STEPS_PER_YEAR


class ConfigError(ValueError):
    """Malformed, incomplete or inconsistent configuration."""


MODEL_KEYS = ("a", "delta", "mu_D", "sigma_D", "D0", "mu_Y", "sigma_Y", "rho", "L", "I", "T")

DEFAULTS: dict[str, dict[str, Any]] = {
    "model": dict(a=2.0, delta=0.02, mu_D=0.0201672, sigma_D=0.0226743, D0=1.0,
                  mu_Y=-0.0709146, sigma_Y=0.1, rho=0.0, L=100.0, I=15, T=3.0),
    "nash": dict(alpha=0.002, endowment_sd=5.0),
    "numerics": dict(steps_per_year=DEFAULT_STEPS_PER_YEAR, bisection_rel_tol=DEFAULT_REL_TOL,
                     mc_paths=100_000, mc_steps=500, seed=0, metric_grid_points=50,
                     figure_points=1001),
    "output": dict(directory="out", formats=["csv", "json"]),
    "calibration": dict(lambda_target=0.302324, r_radner_target=0.08137, market_value=3.5,
                        annual_return_vol=0.2, eta=0.141, beta_exponent=0.6, Q1=0.38,
                        Q3=1.36, SO_over_ADV=121.36, trading_days=265),
}

_INT_KEYS = {"I", "steps_per_year", "mc_paths", "mc_steps", "seed", "metric_grid_points",
             "figure_points", "trading_days"}
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    steps_per_year: int
    bisection_rel_tol: float
    mc_paths: int
    mc_steps: int
    seed: int
    metric_grid_points: int
    figure_points: int
    directory: Path
    formats: tuple[str, ...]
    targets: CalibrationTargets
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def digest(self) -> str:
        """sha256 of the resolved configuration in canonical JSON; the output
        section is left out so moving a run does not change its hash."""
        body = {k: v for k, v in self.raw.items() if k != "output"}
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def params_for(self, alpha: float | None = None, endowment_sd: float | None = None
                   ) -> ModelParams:
        """Variant sharing the model section with a different alpha and/or
        endowment SD."""
        p = self.params
        changes: dict[str, Any] = {}
        if alpha is not None:
            changes["alpha"] = alpha
        if endowment_sd is not None:
            changes["endowments"] = tuple(endowments_from_sd(p.L, p.I, endowment_sd))
        return p.with_(**changes) if changes else p


def _parse(text: str, source: str) -> dict:
    if source.endswith(".json"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def _check_type(section: str, key: str, value):
    where = f"{section}.{key}"
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if key == "formats":
        if isinstance(value, str):
            value = [value]
        if not isinstance(value, list) or not value or any(v not in FORMATS for v in value):
            raise ConfigError(f"{where}: expected a non-empty list drawn from {FORMATS}")
        return list(value)
    if key == "directory":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    if key == "endowments":
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{where}: expected a list of numbers")
        return [float(v) for v in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def resolve(data: dict | None) -> dict:
    """Merge a parsed document over the defaults, enforcing the key rules."""
    merged = copy.deepcopy(DEFAULTS)
    if data is None:
        return merged
    if not isinstance(data, dict):
        raise ConfigError("top level must be a table of sections")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    for section, body in data.items():
        if not isinstance(body, dict):
            raise ConfigError(f"section [{section}] must be a table")
        allowed = set(DEFAULTS[section]) | ({"endowments"} if section == "nash" else set())
        bad = sorted(set(body) - allowed)
        if bad:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(bad)}")
    model = data.get("model", {})
    for key in MODEL_KEYS:
        if key not in model:
            raise ConfigError(f"missing required key 'model.{key}'")
    nash = data.get("nash", {})
    if "alpha" not in nash:
        raise ConfigError("missing required key 'nash.alpha'")
    if ("endowment_sd" in nash) == ("endowments" in nash):
        raise ConfigError("[nash] needs exactly one of 'endowment_sd' or 'endowments'")
    merged["nash"] = {}
    for section, body in data.items():
        for key, value in body.items():
            merged[section][key] = _check_type(section, key, value)
    return merged


def build(resolved: dict) -> RunConfig:
    m, n, num, out, cal = (resolved[s] for s in
                           ("model", "nash", "numerics", "output", "calibration"))
    if "endowments" in n:
        endow = tuple(n["endowments"])
    else:
        if n["endowment_sd"] < 0:
            raise ConfigError("nash.endowment_sd: must be non-negative")
        endow = tuple(endowments_from_sd(m["L"], m["I"], n["endowment_sd"]))
    params = validate(ModelParams(**m, alpha=n["alpha"], endowments=endow))
    for key in ("steps_per_year", "mc_paths", "mc_steps", "metric_grid_points", "figure_points"):
        if num[key] <= 0:
            raise ConfigError(f"numerics.{key}: must be positive")
    if not 0 < num["bisection_rel_tol"] < 1:
        raise ConfigError("numerics.bisection_rel_tol: must lie in (0, 1)")
    return RunConfig(
        params=params,
        steps_per_year=num["steps_per_year"],
        bisection_rel_tol=num["bisection_rel_tol"],
        mc_paths=num["mc_paths"],
        mc_steps=num["mc_steps"],
        seed=num["seed"],
        metric_grid_points=num["metric_grid_points"],
        figure_points=num["figure_points"],
        directory=Path(out["directory"]),
        formats=tuple(dict.fromkeys(out["formats"])),
        targets=CalibrationTargets(**cal),
        raw=resolved,
    )


def load(path: str | Path | None = None, overrides: dict[str, dict[str, Any]] | None = None
         ) -> RunConfig:
    """Read ``path`` (TOML, or JSON by extension) or use the defaults, then
    apply command-line ``overrides`` given as {section: {key: value}}."""
    data = None
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        data = _parse(text, str(path))
    resolved = resolve(data)
    for section, body in (overrides or {}).items():
        for key, value in body.items():
            if value is not None:
                resolved[section][key] = _check_type(section, key, value)
    return build(resolved)


def default_toml() -> str:
    """The default configuration written out as TOML."""
    lines = []
    for section, body in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key, value in body.items():
            lines.append(f"{key} = {json.dumps(value)}")
        lines.append("")
    return "\n".join(lines)
