import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from cavitynet.cli import main
from cavitynet.config import load_scenario, parse_quantity, validate_file
from cavitynet.errors import ConfigError

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

DEVICE = """
device:
  cavities:
    - {label: C1, wavelength: 1325.9132 nm, q_e: 10165, q_i: 35460}
    - {label: C2, wavelength: 1325.95 nm, kappa_e: 5 GHz, kappa_i: %s}
  phi1: 0.78 pi
  phi2: 1.44 pi
"""


def write(tmp_path, text, name="s.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_quantity():
    assert parse_quantity("115 MHz", "frequency", "x") == pytest.approx(0.115)
    assert parse_quantity("0.5 pi", "phase", "x") == pytest.approx(np.pi / 2)
    assert parse_quantity("960 ns", "time", "x") == pytest.approx(960e-9)
    assert parse_quantity(1.2, "phase", "x") == 1.2
    with pytest.raises(ConfigError, match="device.phi1"):
        parse_quantity("3 GHz", "phase", "device.phi1")
    with pytest.raises(ConfigError, match="needs a unit"):
        parse_quantity(5, "frequency", "k")


def test_shipped_scenarios_validate():
    for path in SCENARIOS.glob("*.yaml"):
        assert validate_file(path) == [], path


def test_negative_kappa_i_finding(tmp_path):
    path = write(tmp_path, "task: spectrum\n" + DEVICE % "-2 GHz")
    findings = validate_file(path)
    assert any(f.path == "device.cavities[1].kappa_i" for f in findings)
    assert main(["validate", str(path)]) == 2


def test_lifetime_needs_emitter(tmp_path):
    text = ("task: lifetime\n" + DEVICE % "3 GHz"
            + "sweep: {axis: cavity2_wavelength, start: 1326.0 nm, stop: 1325.8 nm, points: 5}\n")
    findings = validate_file(write(tmp_path, text))
    assert [f.path for f in findings] == ["emitter"]


def test_parse_error_has_line(tmp_path):
    path = write(tmp_path, "task: spectrum\ndevice:\n  phi1: [1, 2\n")
    with pytest.raises(ConfigError, match="line"):
        load_scenario(path)
    assert main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == 2


def test_unit_error_names_field(tmp_path):
    path = write(tmp_path, "task: spectrum\n" + (DEVICE % "3 GHz").replace("0.78 pi", "0.78 nm"))
    with pytest.raises(ConfigError, match=r"device\.phi1"):
        load_scenario(path)


def test_single_point_spectrum(tmp_path):
    text = "task: spectrum\n" + DEVICE % "3 GHz" + "probe: {span: 0 GHz, points: 1}\n"
    out = tmp_path / "o"
    assert main(["run", str(write(tmp_path, text)), "--output-dir", str(out)]) == 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert len(lines) == 2
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["code_version"] and len(manifest["scenario_sha256"]) == 64


def test_determinism_and_fit_round_trip(tmp_path):
    scen = SCENARIOS / "hybridization_stack.yaml"
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(scen), "--output-dir", str(a)]) == 0
    assert main(["run", str(scen), "--output-dir", str(b)]) == 0
    for name in ("stack_reflectance.csv", "stack_manifest.csv", "stack/slice_0005.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    # The spectrum output feeds the fitter without transformation.
    f = tmp_path / "f"
    assert main(["fit", str(a / "stack" / "slice_0000.csv"), "--output-dir", str(f)]) == 0
    assert "kappa_GHz" in (f / "fit.txt").read_text()


def test_metrics_subcommand(capsys):
    rc = main(["metrics", "--tau0", "960 ns", "--eta-dw", "0.23", "--tau", "62.1 ns",
               "488.0 ns", "--cooperativity", "115 MHz", "5.1 GHz", "3.0 GHz"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "P = 62.9" in out and "P = 4.2" in out and "cooperativity = 0.003458" in out


def test_metrics_needs_input():
    assert main(["metrics"]) == 2


def test_task_error_exit_code(tmp_path):
    # A flat spectrum has no dip: the fit task fails, not the config.
    path = tmp_path / "flat.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["wavelength_nm", "detuning_GHz", "re_r", "im_r", "reflectance"])
        for k in range(20):
            w.writerow([1326 + 0.01 * k, 0, 1, 0, 1])
    assert main(["fit", str(path), "--output-dir", str(tmp_path / "o")]) == 1


def test_tune_task(tmp_path):
    out = tmp_path / "t"
    assert main(["run", str(SCENARIOS / "uniform_array.yaml"), "--output-dir", str(out),
                 "--seed", "3"]) == 0
    rows = list(csv.DictReader((out / "final_resonances.csv").open()))
    f = np.sort([float(r["frequency_GHz"]) for r in rows])
    assert np.allclose(np.diff(f), 40.0, atol=0.5)
