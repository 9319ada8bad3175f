"""Command-line frontend.

    priceimpact solve|table2|figure1|calibrate|verify [--config PATH] [--out DIR]
        [--steps-per-year N] [--seed N] [--mc-paths N] [--format csv|json]

Exit codes: 0 success, 1 usage or configuration error, 2 solver error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, calibration, config as cfgmod, equilibrium as eqm, metrics
from . import verification
from ._accel import BACKEND
from .equilibrium import DegenerateImpactError
from .params import ParameterError, endowment_sd
from .solver import Mesh, SolverError, solve

log = logging.getLogger("priceimpact")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3

TABLE2_ROWS = ((5.0, 0.002), (10.0, 0.002), (5.0, 0.01))


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _meta(cfg: cfgmod.RunConfig, command: str, mesh: Mesh | None, extra=None) -> list[tuple]:
    rows = [("tool", f"priceimpact {__version__}"), ("command", command),
            ("config_sha256", cfg.digest), ("seed", cfg.seed)]
    if mesh is not None:
        rows += [("mesh", f"T={mesh.T!r} steps={mesh.n} dt={mesh.dt!r}"),
                 ("steps_per_year", cfg.steps_per_year)]
    rows += list(extra or [])
    return rows


def write_csv(path: Path, columns: dict[str, Sequence], meta: list[tuple]) -> None:
    buf = io.StringIO()
    for key, value in meta:
        buf.write(f"# {key}: {_fmt(value)}\n")
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow(names)
    cols = [np.asarray(columns[n]) for n in names]
    for i in range(len(cols[0])):
        w.writerow([_fmt(c[i]) for c in cols])
    path.write_text(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, obj, meta: list[tuple]) -> None:
    doc = {"meta": {k: _fmt(v) if not isinstance(v, (int, float)) else v for k, v in meta}}
    doc.update(obj)
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _outdir(cfg: cfgmod.RunConfig) -> Path:
    cfg.directory.mkdir(parents=True, exist_ok=True)
    return cfg.directory


def _solve(cfg, params):
    grids = solve(params, steps_per_year=cfg.steps_per_year, rel_tol=cfg.bisection_rel_tol)
    return eqm.nash(grids)


def cmd_solve(cfg: cfgmod.RunConfig) -> int:
    p = cfg.params
    nash = _solve(cfg, p)
    g = nash.grids
    rad, par = eqm.radner(p), eqm.pareto(p)
    out = _outdir(cfg)
    meta = _meta(cfg, "solve", g.mesh, [("backend", BACKEND)])
    columns = {"t": g.t, "psi": g.psi, "F": g.F, "Q": g.Q, "Q2": g.Q2, "Q22": g.Q22,
               "r": nash.r, "gamma": nash.gamma, "vol": nash.vol}
    if "csv" in cfg.formats:
        write_csv(out / "grids.csv", columns, meta)
    if "json" in cfg.formats:
        write_json(out / "grids.json", {"grids": columns}, meta)
    summary = {
        "h0_hat": g.h0_hat, "k": g.k, "psi_T": g.psi_T, "w": g.psi_T,
        "S0": nash.S0, "r0": float(nash.r[0]), "lambda": nash.lam,
        "sum_sq_holdings_T": nash.sum_sq_holdings_T, "endowment_sd": endowment_sd(p.endowments),
        "alpha": p.alpha,
        "shooting": {"iterations": g.shooting_iterations, "residual": g.shooting_residual,
                     "rel_tol": cfg.bisection_rel_tol},
        "radner": {"r": rad.r, "S0": rad.S0},
        "pareto": {"r": par.r, "S0": par.S0},
    }
    write_json(out / "summary.json", summary, meta)
    print(f"S0={nash.S0:.6f} r(0)={nash.r[0]:.6%} lambda={nash.lam:.6f} "
          f"h0={g.h0_hat:.6g} (wrote {out})")
    return EXIT_OK


def table2_rows(cfg: cfgmod.RunConfig) -> list[dict]:
    rows = []
    for sd, alpha in TABLE2_ROWS:
        p = cfg.params_for(alpha=alpha, endowment_sd=sd)
        nash = _solve(cfg, p)
        rad, par = eqm.radner(p), eqm.pareto(p)
        sr = metrics.sharpe_quadrature(nash, 1.0)
        mc = metrics.sharpe_montecarlo(nash, 1.0, n_paths=cfg.mc_paths, seed=cfg.seed,
                                       n_steps=cfg.mc_steps)
        rows.append({
            "SD": sd, "alpha": alpha,
            "S0": nash.S0, "S0_radner": rad.S0, "S0_pareto": par.S0,
            "sum_sq_holdings_T": nash.sum_sq_holdings_T,
            "SR1": sr.SR, "SR1_radner": metrics.sharpe_quadrature(rad, 1.0).SR,
            "SR1_pareto": metrics.sharpe_quadrature(par, 1.0).SR,
            "SR1_mc": mc.SR, "SR1_mc_lo": mc.ci[0], "SR1_mc_hi": mc.ci[1],
            "r0": float(nash.r[0]), "r_radner": rad.r, "r_pareto": par.r,
        })
    return rows


def format_table2(rows: list[dict]) -> str:
    lines = [f"{'SD':>4} {'alpha':>6}  {'S0 (Radner) [Pareto]':<28} {'sum theta^2_T':>13}  "
             f"{'SR(1) (Radner) [Pareto]':<28} r(0) (Radner) [Pareto]"]
    for r in rows:
        lines.append(
            f"{r['SD']:>4g} {r['alpha']:>6g}  "
            f"{r['S0']:.4f} ({r['S0_radner']:.4f}) [{r['S0_pareto']:.4f}]{'':<4} "
            f"{r['sum_sq_holdings_T']:>13.1f}  "
            f"{r['SR1']:.4f} ({r['SR1_radner']:.4f}) [{r['SR1_pareto']:.4f}]{'':<4} "
            f"{r['r0']:.3%} ({r['r_radner']:.3%}) [{r['r_pareto']:.3%}]")
    return "\n".join(lines)


def cmd_table2(cfg: cfgmod.RunConfig) -> int:
    rows = table2_rows(cfg)
    out = _outdir(cfg)
    mesh = Mesh.for_horizon(cfg.params.T, cfg.steps_per_year)
    meta = _meta(cfg, "table2", mesh, [("mc_paths", cfg.mc_paths)])
    if "csv" in cfg.formats:
        write_csv(out / "table2.csv", {k: [r[k] for r in rows] for k in rows[0]}, meta)
    if "json" in cfg.formats:
        write_json(out / "table2.json", {"rows": rows}, meta)
    text = format_table2(rows)
    (out / "table2.txt").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_figure1(cfg: cfgmod.RunConfig) -> int:
    variants = {}
    for key, (alpha, sd) in metrics.FIGURE_VARIANTS.items():
        variants[key] = _solve(cfg, cfg.params_for(alpha=alpha, endowment_sd=sd))
    mesh = variants["a002_sd5"].grids.mesh
    per_year = int(round(1.0 / mesh.dt))
    stride = max(1, per_year // max(1, cfg.figure_points - 1))
    panels = metrics.figure1_sweep(variants, horizon=1.0, sr_points=cfg.metric_grid_points,
                                   stride=stride)
    failures = []
    for key in ("A", "B"):
        cols = panels[key]
        nash_cols = [c for c in cols if c.startswith("r_nash")]
        for c in nash_cols:
            if not (np.all(cols[c] <= cols["r_radner"]) and np.all(cols["r_radner"] <= cols["r_pareto"])):
                failures.append(f"panel {key}: {c} violates r <= r_radner <= r_pareto")
    out = _outdir(cfg)
    meta = _meta(cfg, "figure1", mesh, [("output_stride", stride)])
    for key, cols in panels.items():
        if "csv" in cfg.formats:
            write_csv(out / f"figure1_{key}.csv", cols, meta + [("panel", key)])
        if "json" in cfg.formats:
            write_json(out / f"figure1_{key}.json", {"panel": key, "columns": cols}, meta)
    if failures:
        raise VerificationFailure("; ".join(failures))
    print(f"wrote panels A-F to {out}")
    return EXIT_OK


def cmd_calibrate(cfg: cfgmod.RunConfig) -> int:
    p, t = cfg.params, cfg.targets
    tc = calibration.calibrate_traders(t, p.a, p.delta, p.mu_D, p.sigma_D, p.sigma_Y,
                                       p.rho, p.L)
    alpha = calibration.calibrate_alpha(t, L=p.L)
    result = {"I": tc.I, "I_exact": tc.I_exact, "I_ambiguous": tc.ambiguous,
              "mu_Y": tc.mu_Y, "alpha": alpha}
    out = _outdir(cfg)
    meta = _meta(cfg, "calibrate", None)
    if "csv" in cfg.formats:
        write_csv(out / "calibration.csv", {k: [v] for k, v in result.items()}, meta)
    if "json" in cfg.formats:
        write_json(out / "calibration.json", {"calibration": result}, meta)
    print(f"I={tc.I} (exact {tc.I_exact:.6f}) mu_Y={tc.mu_Y:.7f} alpha={alpha:.6f}")
    return EXIT_OK


def cmd_verify(cfg: cfgmod.RunConfig) -> int:
    nash = _solve(cfg, cfg.params)
    reports = verification.run_all(nash, seed=cfg.seed)
    out = _outdir(cfg)
    meta = _meta(cfg, "verify", nash.grids.mesh)
    write_json(out / "verify.json", {"reports": [r.to_dict() for r in reports],
                                     "passed": all(r.passed for r in reports)}, meta)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: max {r.max_residual:.3e} <= {r.tolerance:.1e} "
              f"(worst t={r.worst_t:.6g}) {r.detail}".rstrip())
    bad = [r for r in reports if not r.passed]
    if bad:
        worst = max(bad, key=lambda r: r.max_residual / r.tolerance)
        raise VerificationFailure(
            f"{len(bad)} check(s) failed; worst {worst.name} at t={worst.worst_t:.6g}"
            + ("; refine the mesh: increase --steps-per-year" if worst.name in ("clearing", "hjb_drift") else ""))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "table2": cmd_table2, "figure1": cmd_figure1,
            "calibrate": cmd_calibrate, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="priceimpact", description="Price-impact equilibrium toolkit.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="TOML or JSON run configuration")
    ap.add_argument("--out", type=str, help="output directory (overrides output.directory)")
    ap.add_argument("--steps-per-year", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--mc-paths", type=int)
    ap.add_argument("--format", choices=cfgmod.FORMATS)
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {
        "numerics": {"steps_per_year": args.steps_per_year, "seed": args.seed,
                     "mc_paths": args.mc_paths},
        "output": {"directory": args.out, "formats": [args.format] if args.format else None},
    }
    try:
        cfg = cfgmod.load(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except (cfgmod.ConfigError, ParameterError, UsageError) as exc:
        print(f"priceimpact: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, DegenerateImpactError) as exc:
        print(f"priceimpact: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VerificationFailure as exc:
        print(f"priceimpact: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
