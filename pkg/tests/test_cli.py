import json
import math

import numpy as np
import pytest

from igac.cli import main, parse_params
from igac.complexity import ComplexityTrace, GrowthFit
from igac.errors import ParseError, ValidationError
from igac.scenario import (
    fit_report,
    load_scenario,
    parse_grid,
    parse_scenario,
    resolve_out_dir,
    run,
    write_trace_csv,
)

SPIN_TRACE = """
id = "spin_small"
kind = "complexity_trace"

[model]
name = "spin_integrable"

[settings]
theta0 = [1.0, 1.0]
v0 = [1.0, 2.0]
tau = "0.5:10:0.25"

[expect]
regime = "{regime}"

[compare]
closed_form = "spin_integrable_exact"
"""


def _write(tmp_path, text, name="sc.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_filled():
    sc = parse_scenario(SPIN_TRACE.format(regime="logarithmic"))
    assert sc.settings["tol"] == 1e-10
    assert sc.settings["s0"] == 0.0
    assert sc.settings["tail"] == 0.5
    np.testing.assert_allclose(sc.settings["tau"][[0, -1]], [0.5, 10.0])


def test_case2_bound_in_message():
    text = """
kind = "complexity_trace"
[model]
name = "trivariate_case2"
params = { rho = 0.8 }
[settings]
theta0 = [0.0, 1.0]
v0 = [1.0, 0.0]
tau = "1:5:1"
"""
    with pytest.raises(ValidationError) as info:
        parse_scenario(text)
    assert "sqrt(2)/2" in str(info.value)
    assert any(f == "model.params.rho" for f, _ in info.value.errors)


def test_missing_v0():
    text = """
kind = "geodesic_ivp"
[model]
name = "uncorrelated_gaussian"
[settings]
theta0 = [0.0, 1.0]
tau_max = 2.0
"""
    with pytest.raises(ValidationError) as info:
        parse_scenario(text)
    assert any("v0" in f for f, _ in info.value.errors)


def test_unknown_fields_collected():
    text = SPIN_TRACE.format(regime="linear").replace("[expect]", "[expect]\nbogus = 1\n").replace("v0 =", "vzero =")
    with pytest.raises(ValidationError) as info:
        parse_scenario(text)
    fields = [f for f, _ in info.value.errors]
    assert "expect.bogus" in fields and any("v0" in f for f in fields)


def test_parse_error_line():
    with pytest.raises(ParseError) as info:
        parse_scenario('kind = "ratio_table"\n[settings\nrho_grid = "0:1:0.1"\n')
    assert info.value.line == 2


def test_parse_grid_forms():
    np.testing.assert_allclose(parse_grid("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(parse_grid({"start": 1, "stop": 2, "num": 3}), [1, 1.5, 2])
    with pytest.raises(ValueError):
        parse_grid("1:0:0.1")


def test_trace_csv_rows(tmp_path):
    tr = ComplexityTrace([1.0, 2.0, 3.0], [1, 2, 3], [0.5, 1, 1.5], np.log([0.5, 1, 1.5]))
    p = write_trace_csv(tr, tmp_path / "t.csv")
    lines = p.read_bytes().split(b"\n")
    assert lines[-1] == b"" and len(lines) - 1 == 4
    assert lines[0] == b"tau,volume,igc,ige"


def test_fit_report_prefix():
    fit = GrowthFit("linear", {"slope": 3.0, "intercept": 2.0}, 1.0, (5.0, 10.0), {}, "ige")
    text, data = fit_report(fit)
    assert text.startswith("regime=linear slope=3.000000")
    assert data["fit"]["coefficients"]["slope"] == 3.0


def test_fit_report_comparison_block():
    fit = GrowthFit("linear", {"slope": 3.0, "intercept": 2.0}, 1.0, (5.0, 10.0), {}, "ige")
    cmp = {"closed_form": "demo", "quantity": "ige", "tau": np.array([1.0]), "numeric": np.array([2.0]),
           "closed": np.array([2.5]), "abs_diff": np.array([0.5])}
    text, data = fit_report(fit, cmp)
    assert "comparison against demo (ige):" in text
    assert "  1 2 2.5 0.5" in text
    assert data["comparison"]["abs_diff"] == [0.5]


def test_run_writes_reproducible_files(tmp_path):
    sc = load_scenario(_write(tmp_path, SPIN_TRACE.format(regime="logarithmic")))
    rep = run(sc, tmp_path / "a")
    assert rep.passed
    run(sc, tmp_path / "b")
    for name in ("spin_small_trace.csv", "spin_small_fit.txt", "spin_small_fit.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = json.loads((tmp_path / "a" / "spin_small_report.json").read_text())
    assert report["fit"]["regime"] == "logarithmic"
    assert report["results"]["max_compare_diff"] <= 1e-6


def test_output_dir_precedence(tmp_path, monkeypatch):
    sc = parse_scenario(SPIN_TRACE.format(regime="linear"))
    monkeypatch.setenv("IGAC_OUT", str(tmp_path / "env"))
    assert resolve_out_dir(sc) == tmp_path / "env"
    assert resolve_out_dir(sc, tmp_path / "cli") == tmp_path / "cli"
    monkeypatch.delenv("IGAC_OUT")
    assert resolve_out_dir(sc).name == "igac_out"
    with_output = parse_scenario('output = "here"\n' + SPIN_TRACE.format(regime="linear"), base_dir=tmp_path)
    assert resolve_out_dir(with_output) == tmp_path / "here"


def test_cli_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, SPIN_TRACE.format(regime="logarithmic"), "good.toml")
    bad = _write(tmp_path, SPIN_TRACE.format(regime="linear"), "bad.toml")
    broken = _write(tmp_path, 'kind = "nope"\n', "broken.toml")
    out = str(tmp_path / "out")
    assert main(["run", str(good), "--out", out]) == 0
    assert main(["run", str(bad), "--out", out]) == 1
    assert main(["run", str(broken), "--out", out]) == 2
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    text = capsys.readouterr().out
    assert "PASS spin_small" in text and "FAIL spin_small" in text


def test_cli_batch_with_env_out(tmp_path, monkeypatch):
    d = tmp_path / "batch"
    d.mkdir()
    _write(d, SPIN_TRACE.format(regime="logarithmic"), "a.toml")
    _write(d, 'id = "r"\nkind = "ratio_table"\n[settings]\nrho_grid = "0:0.5:0.25"\n', "b.toml")
    monkeypatch.setenv("IGAC_OUT", str(tmp_path / "env"))
    assert main(["run", str(d), "--workers", "2"]) == 0
    assert (tmp_path / "env" / "spin_small_trace.csv").exists()
    assert (tmp_path / "env" / "r_trivariate_weak.csv").exists()


def test_catalog_list(capsys):
    assert main(["catalog", "list"]) == 0
    out = capsys.readouterr().out
    assert "spin_chaotic" in out and "trivariate_case2" in out


def test_metric_command(capsys):
    assert main(["metric", "--model", "uncorrelated_gaussian", "--params", "l=1", "--theta", "0,2"]) == 0
    out = capsys.readouterr().out
    assert "0.25" in out and "0.5" in out
    assert main(["metric", "--model", "iho", "--params", "omega=1;2", "--theta", "0.1,0.2"]) == 0
    assert main(["metric", "--model", "bivariate_corr", "--params", "rho=2", "--theta", "0,1"]) == 2


def test_parse_params():
    assert parse_params("rho=0.5,Sigma=2") == {"rho": 0.5, "Sigma": 2.0}
    assert parse_params("omega=1;2") == {"omega": [1.0, 2.0]}
    with pytest.raises(ValueError):
        parse_params("rho")


def test_ratios_command(tmp_path, capsys):
    assert main(["ratios", "--family", "bivariate_strong", "--rho-grid", "0:0.44:0.44"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "rho,value"
    rho, val = map(float, lines[-1].split(","))
    assert rho == 0.44 and val == pytest.approx(1.2, rel=1e-15)
    out = tmp_path / "r.csv"
    assert main(["ratios", "--family", "trivariate_strong", "--rho-grid", "0:0.5:0.25", "--out", str(out)]) == 0
    vals = [float(line.split(",")[1]) for line in out.read_text().splitlines()[1:]]
    assert vals == [math.sqrt(1 + 2 * r) for r in (0.0, 0.25, 0.5)]
    assert main(["ratios", "--family", "trivariate_strong", "--rho-grid=-0.6:0:0.1"]) == 2
