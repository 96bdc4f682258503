import csv
import io
import json
import math
from pathlib import Path

import pytest

from quasirect.cli import main
from quasirect.observables import read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SQRT_2_2EM2 = 1.5068744362000522649


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_simulate_cat(tmp_path):
    assert run(tmp_path, "simulate", "--r", "0", "--tau", "1", "--pulses", "1") == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert [c["amplitude"] for c in s["components"]] == [-1.0, 1.0]
    assert [c["weight_re"] for c in s["components"]] == [0.5, 0.5]
    assert s["norm_constant"] == pytest.approx(0.5 * SQRT_2_2EM2, rel=1e-14)
    assert s["success_probability"] == pytest.approx(s["norm_constant"] ** 2, rel=1e-14)
    assert (tmp_path / "summary.csv").exists()


def test_simulate_from_figure_config(tmp_path):
    assert main(["simulate", "--config", str(CONFIGS / "fig2d.yaml"), "--out", str(tmp_path), "--format", "json"]) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert len(s["components"]) == 16
    assert s["tau"] == pytest.approx(math.exp(-3) / 2, rel=1e-15)
    assert s["tau_tag"] == "exp(-r)/2"
    assert not (tmp_path / "summary.csv").exists()


def test_flags_override_config(tmp_path):
    assert main(["simulate", "--config", str(CONFIGS / "fig2d.yaml"), "--out", str(tmp_path), "--pulses", "2"]) == 0
    assert len(json.loads((tmp_path / "summary.json").read_text())["components"]) == 4


def test_invalid_pulses_exit_2(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--pulses", "0") == 2
    assert "empty schedule" in capsys.readouterr().err


def test_usage_error_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["density", "--pulses", "many"])
    assert exc.value.code == 1


def test_bad_config_exit_2(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("r: 1\nbogus: 2\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text("tau: 'sqrt(r)'\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert run(tmp_path, "simulate", "--r", "0", "1") == 2


def test_density_vacuum(tmp_path):
    assert run(tmp_path, "density", "--r", "0", "--tau", "1e-9", "--pulses", "1") == 0
    header, rows = read_csv((tmp_path / "density.csv").read_text())
    assert abs(float(header["integral_estimate"]) - 1) < 1e-8
    assert rows.shape == (2001, 2)
    payload = json.loads((tmp_path / "density.json").read_text())
    assert payload["flatness"]["coverage"] == 0.8


def test_density_flat_vs_oscillatory(tmp_path):
    ripples = {}
    for name in ("fig1d", "fig2d"):
        out = tmp_path / name
        assert main(["density", "--config", str(CONFIGS / f"{name}.yaml"), "--out", str(out)]) == 0
        ripples[name] = json.loads((out / "density.json").read_text())["flatness"]["ripple"]
    assert ripples["fig2d"] < ripples["fig1d"]


def test_husimi_vacuum(tmp_path):
    assert run(tmp_path, "husimi", "--r", "0", "--tau", "1e-9", "--pulses", "1", "--format", "csv") == 0
    header, rows = read_csv((tmp_path / "husimi.csv").read_text())
    assert rows[:, 2].max() == pytest.approx(1 / math.pi, rel=1e-4)
    assert abs(float(header["integral_estimate"]) - 1) < 1e-5


def test_verify_pass(tmp_path, capsys):
    assert run(tmp_path, "verify", "--r", "1", "--tau", "0.5", "--pulses", "2", "--dim", "256") == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("PASS")
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["passed"] and report["dimension"] == 256


def test_verify_identity_evolution(tmp_path):
    assert run(tmp_path, "verify", "--r", "0", "--tau", "1e-12", "--pulses", "1") == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert abs(report["fidelity"]["value"] - 1) < 1e-12


def test_verify_truncation_exit_3(tmp_path, capsys):
    assert run(tmp_path, "verify", "--r", "0", "--tau", "4", "--pulses", "4", "--dim", "64") == 3
    assert "--dim" in capsys.readouterr().err


def test_sweep_eight_rows(tmp_path):
    assert main(["sweep", "--config", str(CONFIGS / "sweep.yaml"), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "sweep.csv").read_text()
    rows = list(csv.DictReader(io.StringIO("".join(l + "\n" for l in text.splitlines() if not l.startswith("#")))))
    assert len(rows) == 8
    by = {(float(r["r"]), r["tau_tag"]): float(r["ripple"]) for r in rows}
    for r in (0, 1, 2, 3):
        assert by[(r, "exp(-r)/2")] < by[(r, "4*exp(-r)")]


def test_sweep_empty_r_list(tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("r: []\ntau: ['exp(-r)/2']\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_outputs_are_byte_identical(tmp_path):
    for sub in ("a", "b"):
        assert main(["density", "--config", str(CONFIGS / "fig1b.yaml"), "--out", str(tmp_path / sub)]) == 0
        assert main(["husimi", "--config", str(CONFIGS / "fig1b.yaml"), "--out", str(tmp_path / sub)]) == 0
    for name in ("density.csv", "density.json", "husimi.csv", "husimi.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert not list(tmp_path.rglob("*.tmp"))
