import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noiseflux import analytic
from noiseflux.cli import main
from noiseflux.config import ExperimentConfig, load_config, parse_text
from noiseflux.errors import ConfigError
from noiseflux.output import Series, emit_csv, emit_svg, read_csv


def run(args, capsys=None):
    code = main(args)
    out = capsys.readouterr() if capsys else None
    return code, out


# -- output ------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=40))
def test_csv_round_trip_bit_exact(tmp_path_factory, ys):
    path = tmp_path_factory.mktemp("csv") / "s.csv"
    y = np.array(ys)
    t = np.arange(y.size) * 0.1
    emit_csv([Series("a", t, y), Series("b", t, -y)], path)
    back = read_csv(path)
    assert list(back) == ["t", "a", "b"]
    assert np.array_equal(back["t"], t) and np.array_equal(back["a"], y)
    assert np.array_equal(back["b"], -y)


def test_empty_series_rejected(tmp_path):
    with pytest.raises(ConfigError):
        emit_csv([], tmp_path / "x.csv")
    with pytest.raises(ConfigError):
        emit_svg([], tmp_path / "x.svg")


def test_mismatched_grids_rejected(tmp_path):
    with pytest.raises(ConfigError):
        emit_csv([Series("a", [0, 1], [0, 1]), Series("b", [0, 2], [0, 1])], tmp_path / "x.csv")


def test_svg_structure(tmp_path):
    t = np.linspace(0, 1, 50)
    s = [Series("one", t, np.sin(t), err=0.1 * np.ones_like(t)),
         Series("two", t, np.cos(t), axis="right", dashed=True)]
    text = emit_svg(s, tmp_path / "p.svg", title="demo", y2label="E").read_text(encoding="utf-8")
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 2
    assert "dimensionless" in text and "one" in text and "two" in text
    assert "stroke-dasharray" in text


# -- config ------------------------------------------------------------------

def test_config_validation_names_key():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig(routes=())
    assert err.value.key == "routes"
    with pytest.raises(ConfigError) as err:
        ExperimentConfig(t_samples=1)
    assert err.value.key == "t_samples"
    with pytest.raises(ConfigError) as err:
        ExperimentConfig(d_list=(0.0, -0.1))
    assert err.value.key == "d_list"
    with pytest.raises(ConfigError) as err:
        parse_text("sigma = 1\nbogus = 3\n")
    assert err.value.key == "bogus"
    with pytest.raises(ConfigError) as err:
        parse_text("n_paths = many")
    assert err.value.key == "n_paths"


def test_flags_override_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nsigma = 2.0\nx_obs = 5\nd_list = 0, 0.1\n", encoding="utf-8")
    cfg = load_config(p, sigma=3.0)
    assert cfg.sigma == 3.0 and cfg.x_obs == 5.0 and cfg.d_list == (0.0, 0.1)


def test_manifest_round_trip():
    cfg = ExperimentConfig(sigma=1.7, routes=("analytic", "mc"), d_list=(0.0, 0.03), exact_paths=True)
    assert load_config(None, **parse_text(cfg.to_text("x"))) == cfg


# -- commands ----------------------------------------------------------------

def test_figure1_outputs(tmp_path, capsys):
    out = tmp_path / "f1"
    code, _ = run(["figure1", "--out-dir", str(out), "--n-paths", "500", "--t-samples", "120"], capsys)
    assert code == 0
    data = read_csv(out / "figure1.csv")
    # 1 + |routes| x |D-sweep|
    assert len(data) == 1 + 2 * 4
    t = data["t"]
    fld_cfg = ExperimentConfig()
    ref = analytic.gaussian_flux(20.0, t, fld_cfg.packet(), fld_cfg.field_model())
    assert np.array_equal(data["averaged_D=0"], ref)
    assert np.array_equal(data["mc_D=0"], ref)
    assert (out / "figure1.svg").read_text(encoding="utf-8").count("<polyline") == 8
    summary = json.loads((out / "figure1_summary.json").read_text(encoding="utf-8"))
    peaks = [c["peak"] for c in summary["curves"]]
    assert peaks == sorted(peaks, reverse=True)
    assert (out / "figure1_stderr.csv").exists() and (out / "manifest.cfg").exists()


def test_figure2_field_column(tmp_path, capsys):
    out = tmp_path / "f2"
    code, _ = run(["figure2", "--out-dir", str(out), "--routes", "averaged", "--format", "csv"], capsys)
    assert code == 0
    data = read_csv(out / "figure2.csv")
    assert len(data) == 1 + 1 * 4 + 1
    assert data["field"][0] == 0.0
    assert not (out / "figure2.svg").exists()


def test_manifest_rerun_is_bit_exact(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["figure2", "--n-paths", "400", "--t-samples", "80", "--seed", "5", "--sigma", "1.2"]
    assert run(args + ["--out-dir", str(a)], capsys)[0] == 0
    assert run(["figure2", "--config", str(a / "manifest.cfg"), "--out-dir", str(b)], capsys)[0] == 0
    for name in ("figure2.csv", "figure2_stderr.csv", "figure2.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flux_routes_and_tdse(tmp_path, capsys):
    out = tmp_path / "fx"
    code, _ = run(["flux", "--routes", "analytic,tdse", "--t-max", "20", "--t-samples", "21",
                   "--out-dir", str(out), "--format", "csv"], capsys)
    assert code == 0
    data = read_csv(out / "flux.csv")
    assert np.max(np.abs(data["analytic"] - data["tdse"])) < 1e-6


def test_covariance_and_classical_commands(tmp_path, capsys):
    code, out = run(["covariance", "--D", "0.05", "--n-paths", "2000", "--t-max", "20",
                     "--out-dir", str(tmp_path / "c")], capsys)
    assert code == 0 and "var_phi_loglog_slope" in out.out
    assert len(read_csv(tmp_path / "c" / "covariance.csv")["t1"]) == 25
    code, out = run(["classical", "--D", "0.05", "--field", "zero", "--n-paths", "500",
                     "--t-max", "10", "--out-dir", str(tmp_path / "k")], capsys)
    assert code == 0 and "pumping_rate" in out.out


def test_usage_errors(tmp_path, capsys):
    assert run(["figure1", "--routes", "bogus", "--out-dir", str(tmp_path)], capsys)[0] == 1
    assert run(["flux", "--field", "tabulated", "--out-dir", str(tmp_path)], capsys)[0] == 1
    assert run(["flux", "--routes", "classical", "--out-dir", str(tmp_path)], capsys)[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["figure1", "--no-such-flag"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_numerical_error_exit_code(tmp_path, capsys):
    table = tmp_path / "field.txt"
    table.write_text("0 0\n10 0.1\n", encoding="utf-8")
    # the tabulated field ends at t = 10, the output grid runs to 100
    code, out = run(["flux", "--field", "tabulated", "--field-file", str(table), "--routes", "analytic",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 3 and "RangeError" in out.err


def test_validate_quick_checks(tmp_path, capsys):
    code, out = run(["validate", "--checks", "d0,figure1,figure2,continuity,zero_flux,plane_wave",
                     "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "validate_report.json").read_text(encoding="utf-8"))
    assert report["passed"] and len(report["checks"]) == 6
    assert out.out.count("[PASS]") == 6


def test_validate_zero_noise_trivially_passes(tmp_path, capsys):
    code, _ = run(["validate", "--checks", "mc,mc_resolvable,drift", "--d-list", "0",
                   "--out-dir", str(tmp_path)], capsys)
    assert code == 0


def test_validate_catches_wrong_drift_coefficient(tmp_path, capsys):
    """Mutation test: G = 10 D t^2 must be rejected by the Monte Carlo band."""
    ok, _ = run(["validate", "--checks", "mc_resolvable", "--out-dir", str(tmp_path / "ok")], capsys)
    bad, out = run(["validate", "--checks", "mc_resolvable", "--drift-coefficient", "10",
                    "--out-dir", str(tmp_path / "bad")], capsys)
    assert ok == 0
    assert bad == 2 and "averaged flux vs Monte Carlo" in out.err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "noiseflux", "--version"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and "noiseflux" in res.stdout
