import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import oracle_frequencies
from nvorient.cli import SCAN_COLUMNS, TRACK_COLUMNS, run
from nvorient.geometry import NVOrientation
from nvorient.protocols.estimation import _measure, _transverse_fields
from nvorient.protocols.scans import find_maxima
from nvorient.spin_model import FieldConfig, SpinParams

GOLDEN = Path(__file__).parent / "golden"


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema: ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_spectrum_zero_field(capsys):
    code, out, _ = invoke(capsys, "spectrum")
    assert code == 0
    data = json.loads(out)
    assert data["exact"] == {"f_minus": 2.87, "f_plus": 2.87}
    assert data["difference"] == {"f_minus": 0.0, "f_plus": 0.0}


def test_spectrum_demo_fields_match_oracle(tmp_path, capsys):
    cfg = write_config(tmp_path, {"fields": {"B": [55, 0, 0], "E": [0.64, 0, 0]}})
    code, out, _ = invoke(capsys, "spectrum", "--config", cfg)
    assert code == 0
    data = json.loads(out)
    want = oracle_frequencies(SpinParams(), np.array([55.0, 0, 0]), np.array([0.64, 0, 0]))
    assert [data["exact"]["f_minus"], data["exact"]["f_plus"]] == pytest.approx(want, abs=1e-12)
    assert abs(data["difference"]["f_minus"]) < 1e-3


@pytest.mark.parametrize("bad,key", [
    ({"parms": {}}, "parms"),
    ({"params": {"D": -1}}, "params.D"),
    ({"scan": {"mode": "theta"}}, "scan.mode"),
    ({"noise": {"contrast": 2}}, "noise.contrast"),
    ({"track": {"axis": [0, 0, 1], "angle": 45, "n_steps": 2}}, "track.angle"),
])
def test_malformed_config_exits_2(tmp_path, capsys, bad, key):
    code, out, err = invoke(capsys, "spectrum", "--config", write_config(tmp_path, bad))
    assert code == 2 and out == ""
    assert key in err


def test_invalid_json_reports_position(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "params": {"D": 2.87,}\n}')
    code, _, err = invoke(capsys, "spectrum", "--config", str(path))
    assert code == 2 and "line 2" in err


def test_out_of_range_value_rejected_before_run(tmp_path, capsys):
    cfg = write_config(tmp_path, {"orientation_truth": {"x_axis": [1, 0, 0], "z_axis": [1, 0, 0]}})
    code, out, _ = invoke(capsys, "scan", "--config", cfg)
    assert code == 2 and out == ""


def test_gamma_scan_three_maxima(tmp_path, capsys):
    cfg = write_config(tmp_path, {"orientation_truth": {"x_axis": [1, 0, 0], "z_axis": [0, 0, 1]},
                                  "scan": {"mode": "gamma", "n_points": 72}})
    code, out, _ = invoke(capsys, "scan", "--config", cfg)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 72
    angles = [float(r["angle_deg"]) for r in rows]
    assert angles == sorted(angles)
    peaks = np.degrees(sorted(find_maxima(np.radians(angles), [float(r["delta_f_minus_khz"]) for r in rows])))
    assert len(peaks) == 3
    assert np.allclose(np.diff(peaks), 120, atol=0.5)


def test_phib_scan_two_leaf(tmp_path, capsys):
    cfg = write_config(tmp_path, {"orientation_truth": {"x_axis": [1, 0, 0], "z_axis": [0, 0, 1]},
                                  "scan": {"mode": "phiB", "fixed_angle": 180, "n_points": 36}})
    code, out, _ = invoke(capsys, "scan", "--config", cfg, "--format", "json")
    y = [r["delta_f_minus_khz"] for r in json.loads(out)["rows"]]
    assert code == 0 and max(y) > 0 > min(y)


def test_seeded_scan_byte_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, {"orientation_truth": {"family": 1, "minor_index": 2},
                                  "noise": {"rng_seed": 1}, "scan": {"n_points": 24}})
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert invoke(capsys, "scan", "--config", cfg, "--seed", "7", "--out", str(a))[0] == 0
    assert invoke(capsys, "scan", "--config", cfg, "--seed", "7", "--out", str(b))[0] == 0
    assert invoke(capsys, "scan", "--config", cfg, "--seed", "8", "--out", str(c))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    assert b"\r" not in a.read_bytes()


@pytest.mark.parametrize("command,stem,columns", [
    ("scan", "scan_gamma", SCAN_COLUMNS),
    ("track", "track_script", TRACK_COLUMNS),
])
def test_golden_outputs(capsys, command, stem, columns):
    code, out, _ = invoke(capsys, command, "--config", str(GOLDEN / f"{stem}.json"))
    assert code == 0
    golden = (GOLDEN / f"{stem}.csv").read_text()
    assert out.splitlines()[:2] == golden.splitlines()[:2]
    assert golden.splitlines()[1] == ",".join(columns)
    got, want = read_csv(out), read_csv(golden)
    assert len(got) == len(want)
    for g, w in zip(got, want):
        for col in columns:
            try:
                assert float(g[col]) == pytest.approx(float(w[col]), abs=1e-9, nan_ok=True)
            except ValueError:
                assert g[col] == w[col]


def test_track_script_round_trip(capsys):
    code, out, _ = invoke(capsys, "track", "--config", str(GOLDEN / "track_script.json"))
    rows = read_csv(out)
    script = json.loads((GOLDEN / "track_script.json").read_text())["track"]["steps"]
    assert code == 0 and len(rows) == len(script) + 1
    for row, step in zip(rows[1:], script):
        axis = np.asarray(step["axis"], float)
        axis /= np.linalg.norm(axis)
        got = np.array([float(row[k]) for k in ("axis_x", "axis_y", "axis_z")])
        assert np.max(np.abs(got - axis)) <= 1e-6
        assert float(row["angle_deg"]) == pytest.approx(step["angle"], abs=1e-6)
        assert row["status"] == "ok"


def test_estimate_with_truth_reports_errors(tmp_path, capsys):
    cfg = write_config(tmp_path, {"orientation_truth": {"family": 2},
                                  "estimate": {"prior": {"family": 2}}})
    code, out, _ = invoke(capsys, "estimate", "--config", cfg)
    data = json.loads(out)
    assert code == 0
    assert data["orientation_error_deg"] < 1e-6 and data["z_error_deg"] < 1e-6


def _recorded_readings(truth):
    # noiseless dq observables at the estimator's default fields around the identity prior
    p = SpinParams()
    tilt = math.radians(60)
    z_dirs = [[math.sin(tilt), 0, math.cos(tilt)], [0, math.sin(tilt), math.cos(tilt)]]
    rz = [_measure(p, FieldConfig(100 * np.array(d), np.zeros(3), "lab"), truth, "dq", 0.5, None, None)
          for d in z_dirs]
    z = truth.z_axis
    e1 = np.array([1.0, 0, 0]) - z[0] * z
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(z, e1)
    rx = [_measure(p, _transverse_fields(e1, e2, psi, 100, 1.0), truth, "dq", 0.5, None, None)
          for psi in (math.radians(30), math.radians(-30))]
    return rz, rx


def test_estimate_without_truth_omits_errors(tmp_path, capsys):
    truth = NVOrientation.from_vectors([0.02, 0.01, 1], [1, 0.05, 0])
    rz, rx = _recorded_readings(truth)
    cfg = write_config(tmp_path, {"estimate": {"prior": {"x_axis": [1, 0, 0], "z_axis": [0, 0, 1]},
                                               "readings_z": rz, "readings_x": rx}})
    code, out, err = invoke(capsys, "estimate", "--config", cfg)
    assert code == 0, err
    data = json.loads(out)
    assert "orientation_error_deg" not in data and "z_error_deg" not in data
    assert np.allclose(data["z_axis"], truth.z_axis, atol=1e-9)
    assert np.allclose(data["x_axis"], truth.x_axis, atol=1e-6)


def test_estimate_without_truth_or_readings_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"estimate": {"prior": {"family": 0}}})
    assert invoke(capsys, "estimate", "--config", cfg)[0] == 2


def test_sensitivity_defaults(capsys):
    code, out, _ = invoke(capsys, "sensitivity")
    t = json.loads(out)
    assert code == 0
    for key, want in (("delta_theta_sq", 8.0e-5), ("delta_gamma_sq", 0.043),
                      ("delta_theta_dq", 4.5e-5), ("delta_gamma_dq", 0.021)):
        assert t[key] == pytest.approx(want, rel=0.05)


def test_microscopics_report(capsys):
    code, out, _ = invoke(capsys, "microscopics")
    r = json.loads(out)
    assert code == 0
    assert r["k_perp_sign"] == 1 and r["k_z_sign"] == 1 and r["D_E"] > 0


def test_unwritable_output_exits_1(tmp_path, capsys):
    target = tmp_path / "missing" / "out.json"
    code, _, err = invoke(capsys, "sensitivity", "--out", str(target))
    assert code == 1 and "cannot write" in err


def test_runtime_failure_exits_1(tmp_path, capsys):
    # readings outside the attainable range cannot intersect
    cfg = write_config(tmp_path, {"estimate": {"prior": {"x_axis": [1, 0, 0], "z_axis": [0, 0, 1]},
                                               "readings_z": [1.5, 1.5], "readings_x": [0.0, 0.0]}})
    code, out, err = invoke(capsys, "estimate", "--config", cfg)
    assert code == 1 and out == "" and err.startswith("error:")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nvorient.cli", "spectrum"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["exact"]["f_minus"] == pytest.approx(2.87)
