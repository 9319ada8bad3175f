import csv
import json

import numpy as np
import pytest

from priceimpact import cli
from priceimpact import config as C


def full_config(tmp_path, name="run.toml", **edits):
    text = C.default_toml()
    for key, value in edits.items():
        lines = text.splitlines()
        lines = [f"{key} = {value}" if ln.split(" = ")[0] == key else ln for ln in lines]
        text = "\n".join(lines) + "\n"
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    rows = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(rows)
    return list(reader)


def run(args, capsys=None):
    code = cli.main([str(a) for a in args])
    out = capsys.readouterr() if capsys else None
    return code, out


def test_defaults_roundtrip():
    cfg = C.load(None)
    assert cfg.params.alpha == 0.002 and cfg.params.I == 15
    again = C.build(C.resolve(C._parse(C.default_toml(), "x.toml")))
    assert again.digest == cfg.digest


def test_missing_alpha_named(tmp_path, capsys):
    path = tmp_path / "a.toml"
    path.write_text(C.default_toml().replace("alpha = 0.002\n", ""))
    code, out = run(["solve", "--config", path, "--out", tmp_path / "o"], capsys)
    assert code == 1 and "nash.alpha" in out.err


def test_missing_model_key(tmp_path):
    path = tmp_path / "m.toml"
    path.write_text(C.default_toml().replace("sigma_D = 0.0226743\n", ""))
    with pytest.raises(C.ConfigError, match="model.sigma_D"):
        C.load(path)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "u.toml"
    path.write_text(C.default_toml() + "\n[extra]\nfoo = 1\n")
    with pytest.raises(C.ConfigError, match="unknown section"):
        C.load(path)
    path.write_text(C.default_toml().replace("[numerics]", "[numerics]\nsteps = 5"))
    with pytest.raises(C.ConfigError, match="unknown key.*steps"):
        C.load(path)


def test_type_errors(tmp_path):
    path = full_config(tmp_path, I="15.5")
    with pytest.raises(C.ConfigError, match="model.I"):
        C.load(path)
    path = full_config(tmp_path, alpha='"big"')
    with pytest.raises(C.ConfigError, match="nash.alpha"):
        C.load(path)


def test_parse_error_has_position(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[model]\na = = 2\n")
    code, out = run(["solve", "--config", path], capsys)
    assert code == 1 and "line 2" in out.err


def test_endowment_choices(tmp_path):
    text = C.default_toml().replace("endowment_sd = 5.0", "endowments = " + json.dumps([50.0, 50.0]))
    text = text.replace("I = 15", "I = 2")
    path = tmp_path / "e.toml"
    path.write_text(text)
    cfg = C.load(path)
    assert cfg.params.endowments == (50.0, 50.0) and cfg.params.k == 0.0
    path.write_text(C.default_toml().replace("endowment_sd = 5.0",
                                             "endowment_sd = 5.0\nendowments = [1.0]"))
    with pytest.raises(C.ConfigError, match="exactly one"):
        C.load(path)


def test_json_config(tmp_path):
    doc = {s: dict(v) for s, v in C.DEFAULTS.items() if s in ("model", "nash")}
    doc["nash"]["alpha"] = 0.01
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    assert C.load(path).params.alpha == 0.01


def test_invalid_parameter_exit_1(tmp_path, capsys):
    path = full_config(tmp_path, alpha="-1.0")
    code, out = run(["solve", "--config", path], capsys)
    assert code == 1 and "alpha" in out.err


def test_usage_error_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve", "--steps-per-year", "many"])
    assert exc.value.code == 1


def test_solve_outputs(tmp_path, capsys):
    code, _ = run(["solve", "--out", tmp_path], capsys)
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["S0"] == pytest.approx(3.5737, abs=5e-4)
    assert summary["lambda"] == pytest.approx(0.302324, abs=1e-6)
    head = (tmp_path / "grids.csv").read_text().splitlines()[:8]
    assert any(ln.startswith("# config_sha256: ") for ln in head)
    assert any(ln.startswith("# seed: ") for ln in head)
    assert any(ln.startswith("# mesh: ") for ln in head)
    assert any(ln.startswith("# tool: priceimpact") for ln in head)
    rows = read_csv(tmp_path / "grids.csv")
    assert list(rows[0]) == ["t", "psi", "F", "Q", "Q2", "Q22", "r", "gamma", "vol"]
    assert len(rows) == 30_001


def test_zero_dispersion_rate_constant(tmp_path, capsys):
    path = full_config(tmp_path, endowment_sd="0.0")
    code, _ = run(["solve", "--config", path, "--out", tmp_path / "o", "--steps-per-year", 1000],
                  capsys)
    assert code == 0
    r = np.array([float(x["r"]) for x in read_csv(tmp_path / "o" / "grids.csv")])
    assert np.ptp(r) == 0.0 and r[0] == pytest.approx(0.08137, abs=5e-6)


def test_byte_identical(tmp_path, capsys):
    for d in ("a", "b"):
        assert run(["table2", "--out", tmp_path / d, "--steps-per-year", 1000,
                    "--mc-paths", 10_000, "--seed", 9], capsys)[0] == 0
    for name in ("table2.csv", "table2.json", "table2.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_format_flag(tmp_path, capsys):
    code, _ = run(["calibrate", "--out", tmp_path, "--format", "json"], capsys)
    assert code == 0
    assert (tmp_path / "calibration.json").exists() and not (tmp_path / "calibration.csv").exists()
    res = json.loads((tmp_path / "calibration.json").read_text())["calibration"]
    assert res["I"] == 15 and res["alpha"] == pytest.approx(0.0018, abs=1e-4)


def test_table2_rows(tmp_path, capsys):
    code, out = run(["table2", "--out", tmp_path, "--steps-per-year", 2000, "--mc-paths", 10_000],
                    capsys)
    assert code == 0
    rows = read_csv(tmp_path / "table2.csv")
    assert [(float(r["SD"]), float(r["alpha"])) for r in rows] == list(cli.TABLE2_ROWS)
    assert float(rows[0]["S0"]) == pytest.approx(3.5737, abs=5e-4)
    assert float(rows[2]["sum_sq_holdings_T"]) == pytest.approx(782, abs=1)
    assert "Radner" in out.out


def test_figure1_panels(tmp_path, capsys):
    code, _ = run(["figure1", "--out", tmp_path, "--steps-per-year", 2000, "--format", "csv"],
                  capsys)
    assert code == 0
    a = read_csv(tmp_path / "figure1_A.csv")
    assert list(a[0]) == ["t", "r_nash_a002", "r_nash_a01", "r_radner", "r_pareto"]
    f = read_csv(tmp_path / "figure1_F.csv")
    assert list(f[0]) == ["t", "sr_diff_sd5", "sr_diff_sd10"] and len(f) == 50
    for r in a:
        assert float(r["r_nash_a002"]) <= float(r["r_radner"]) <= float(r["r_pareto"])


def test_verify_exit_codes(tmp_path, capsys):
    code, out = run(["verify", "--out", tmp_path], capsys)
    assert code == 0
    bundle = json.loads((tmp_path / "verify.json").read_text())
    assert bundle["passed"] and len(bundle["reports"]) >= 4
    code, out = run(["verify", "--out", tmp_path, "--steps-per-year", 10], capsys)
    assert code == 3 and "refine the mesh" in out.err


def test_verify_flat(tmp_path, capsys):
    path = full_config(tmp_path, endowment_sd="0.0")
    assert run(["verify", "--config", path, "--out", tmp_path / "o"], capsys)[0] == 0


def test_solver_error_exit_2(tmp_path, capsys, monkeypatch):
    from priceimpact.solver import PositivityError

    def boom(*a, **k):
        raise PositivityError("positivity of (h, f, g) violated")

    monkeypatch.setattr(cli, "solve", boom)
    code, out = run(["solve", "--out", tmp_path], capsys)
    assert code == 2 and "increase steps_per_year" in out.err
