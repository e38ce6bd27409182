import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from majorana_berry import reports
from majorana_berry.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, EXIT_RESIDUAL, main
from majorana_berry.spin_core import coherent_state


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


def amps_doc(amps, **extra):
    return {"amps": [[float(np.real(a)), float(np.imag(a))] for a in amps], **extra}


def test_stars_of_m_zero_state(tmp_path, capsys):
    path = write(tmp_path, "s.json", amps_doc([0, 1, 0], j=1))
    assert main(["stars", path, "--format", "report"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    vectors = sorted(s["vector"][2] for s in doc["stars"])
    assert vectors == [-1.0, 1.0]


def test_stars_of_coherent_state_has_multiplicity(tmp_path, capsys):
    psi = coherent_state([0.36, 0.48, 0.8], 2)
    path = write(tmp_path, "s.json", amps_doc(psi.amps))
    assert main(["stars", path, "--format", "report"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["stars"]) == 1
    assert doc["stars"][0]["multiplicity"] == 4
    assert np.allclose(doc["stars"][0]["vector"], [0.36, 0.48, 0.8], atol=1e-12)


def test_stars_table_and_residuals(tmp_path, capsys):
    rng = np.random.default_rng(0)
    amps = rng.normal(size=5) + 1j * rng.normal(size=5)
    path = write(tmp_path, "s.json", amps_doc(amps / np.linalg.norm(amps)))
    assert main(["stars", path]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("spin j = 2.0")
    assert len(out.strip().splitlines()) == 2 + 4
    assert main(["stars", path, "--format", "report"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert max(s["residual"] for s in doc["stars"]) < 1e-8


def test_stars_normalization_policy(tmp_path, capsys):
    slightly = write(tmp_path, "a.json", amps_doc([0, 1 + 5e-7, 0]))
    assert main(["stars", slightly]) == EXIT_OK
    assert "renormalized" in capsys.readouterr().err
    far = write(tmp_path, "b.json", amps_doc([0, 1.1, 0]))
    assert main(["stars", far]) == EXIT_INPUT


@pytest.mark.parametrize("text", ["", "   \n", "{not json", '{"kind": "spiral"}', '{"kind": "corotation"}'])
def test_berry_input_errors(tmp_path, text):
    assert main(["berry", write(tmp_path, "p.json", text)]) == EXIT_INPUT


def test_missing_file_is_input_error(tmp_path):
    assert main(["berry", str(tmp_path / "nope.json")]) == EXIT_INPUT


def test_numeric_failure_exit_code(tmp_path):
    # two samples a quarter turn apart: far too coarse for the continuity bound
    stars = [[[1, 0, 0]], [[0, 1, 0]], [[-1, 0, 0]], [[0, -1, 0]], [[1, 0, 0]]]
    path = write(tmp_path, "p.json", {"kind": "sampled", "stars": stars})
    assert main(["berry", path]) == EXIT_NUMERIC


def test_berry_corotation_report(tmp_path, capsys):
    spec = {"kind": "corotation", "theta1": 0.3, "theta2": 1.1, "phi1": 0, "phi2": 0.8, "samples": 10000}
    out = tmp_path / "r.json"
    assert main(["berry", write(tmp_path, "p.json", spec), "-o", str(out)]) == EXIT_OK
    assert "closed form" in capsys.readouterr().err
    doc = json.loads(out.read_text())
    report = doc["report"]
    assert report["verified"]
    diff = (report["gamma_formula"] - doc["closed_form"]["gamma"]) % (2 * np.pi)
    assert min(diff, 2 * np.pi - diff) < 1e-6


def test_berry_sliding_has_no_pair_term(tmp_path, capsys):
    assert main(["berry", write(tmp_path, "p.json", {"kind": "sliding"})]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)["report"]
    assert abs(report["pair_terms"][0]["integral"]) < 1e-12


def test_berry_fourier_seed_and_residual_exit(tmp_path, capsys):
    path = write(tmp_path, "p.json", {"kind": "fourier_random", "j": 1.5, "seed": 0})
    assert main(["berry", path, "--seed", "11"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["path"]["seed"] == 11 and doc["report"]["verified"]
    assert main(["berry", path, "--tolerance", "1e-12"]) == EXIT_RESIDUAL
    assert main(["berry", write(tmp_path, "c.json", {"kind": "sliding"}), "--seed", "3"]) == EXIT_INPUT


def test_report_roundtrip_is_field_exact(tmp_path):
    out = tmp_path / "r.json"
    path = write(tmp_path, "p.json", {"kind": "fourier_random", "j": 1, "seed": 4})
    assert main(["berry", path, "-o", str(out)]) == EXIT_OK
    text = out.read_text()
    report = reports.parse_berry_report(text)
    again = reports.dumps(reports.berry_document(report, json.loads(text)["path"]))
    assert again == text
    assert reports.parse_berry_report(again) == report


def test_output_is_deterministic(tmp_path):
    path = write(tmp_path, "p.json", {"kind": "fourier_random", "j": 1, "seed": 9})
    outs = []
    for name in ("a.json", "b.json"):
        assert main(["berry", path, "-o", str(tmp_path / name)]) == EXIT_OK
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    sweep = write(tmp_path, "s.json", {"kind": "three_star_random", "count": 50})
    tables = []
    for name in ("a.csv", "b.csv"):
        assert main(["sweep", sweep, "--seed", "5", "-o", str(tmp_path / name)]) == EXIT_OK
        tables.append((tmp_path / name).read_bytes())
    assert tables[0] == tables[1]


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def test_sweep_theta_pair_endpoints(tmp_path, capsys):
    path = write(tmp_path, "s.json", {"kind": "theta_pair", "steps": 21})
    assert main(["sweep", path]) == EXIT_OK
    header, data = read_csv(capsys.readouterr().out)
    assert header == ["Theta", "concurrence", "barycentric", "w12"]
    assert np.allclose(data[0, 1:], [0, 0, 0], atol=1e-15)
    assert np.allclose(data[-1, 1:], [1, 1, 0], atol=1e-15)
    assert np.all(np.diff(data[:, 1]) > 0) and np.all(np.diff(data[:, 2]) > 0)


def test_sweep_corotation_latitude_tracks_cosine(tmp_path, capsys):
    path = write(tmp_path, "s.json", {"kind": "corotation_latitude", "Theta": 0.4, "steps": 7})
    assert main(["sweep", path, "--samples", "3000"]) == EXIT_OK
    header, data = read_csv(capsys.readouterr().out)
    col = {name: data[:, k] for k, name in enumerate(header)}
    assert np.allclose(col["ratio"], col["cos_vartheta"], atol=1e-5)
    assert np.allclose(col["extra_term"], col["closed_form"], atol=1e-6)


def test_sweep_three_star_margins_non_negative(tmp_path, capsys):
    path = write(tmp_path, "s.json", {"kind": "three_star_random", "count": 500, "seed": 1})
    assert main(["sweep", path]) == EXIT_OK
    header, data = read_csv(capsys.readouterr().out)
    assert len(data) == 500
    assert np.all(data[:, header.index("margin")] >= -1e-10)


def test_sweep_equilateral_report_format(tmp_path, capsys):
    path = write(tmp_path, "s.json", {"kind": "equilateral", "steps": 5})
    assert main(["sweep", path, "--format", "report"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    cols = doc["columns"]
    for row in doc["rows"]:
        assert abs(row[cols.index("w_general")] - row[cols.index("half_root_tau_eb")]) < 1e-14


def test_sweep_input_errors(tmp_path):
    assert main(["sweep", write(tmp_path, "a.json", {"kind": "theta_pair", "stop": 3.0})]) == EXIT_INPUT
    assert main(["sweep", write(tmp_path, "b.json", {"kind": "nope"})]) == EXIT_INPUT
    assert main(["sweep", write(tmp_path, "c.json", {"kind": "theta_pair", "steps": 0})]) == EXIT_INPUT


def test_verify_pass_and_injected_failure(capsys):
    assert main(["verify", "--only", "3", "4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 2
    assert main(["verify", "--only", "3", "--inject", "weights=1e-30"]) == EXIT_RESIDUAL
    assert "[FAIL] 3." in capsys.readouterr().out
    assert main(["verify", "--inject", "bogus=1"]) == EXIT_INPUT


def test_stdin_and_module_entry_point():
    spec = json.dumps({"kind": "corotation", "theta1": 0.5, "theta2": 2.0, "samples": 400})
    proc = subprocess.run([sys.executable, "-m", "majorana_berry", "berry", "--format", "table"],
                          input=spec, capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
    assert "verified at tolerance" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "majorana_berry", "berry"],
                          input="", capture_output=True, text=True)
    assert proc.returncode == EXIT_INPUT


def test_berry_rigid_rotation_includes_fast_path(tmp_path, capsys):
    spec = {"kind": "rigid_rotation", "stars": [[0, 0, 1], [1, 0, 0], [0, 1, 0]], "axis": [1, 2, 2]}
    assert main(["berry", write(tmp_path, "p.json", spec)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)["report"]
    assert abs(report["fast_path"] - report["gamma_formula"]) < 1e-5
    bad = {"kind": "rigid_rotation", "stars": [[0, 0, 1]], "axis": [0, 0, 0]}
    assert main(["berry", write(tmp_path, "q.json", bad)]) == EXIT_INPUT


@pytest.mark.parametrize("doc", [
    {"kind": "corotation_latitude", "Theta": "x"},
    {"kind": "corotation_latitude", "samples": 1.5},
    {"kind": "three_star_random", "seed": -1},
    {"kind": "theta_pair", "start": "a"},
])
def test_malformed_sweep_parameters(tmp_path, doc):
    assert main(["sweep", write(tmp_path, "s.json", doc)]) == EXIT_INPUT


@pytest.mark.parametrize("doc", [
    {"kind": "fourier_random", "j": 1, "seed": -3},
    {"kind": "fourier_random", "j": 1, "modes": 0},
    {"kind": "sliding", "schedules": [{"winding": "x"}, {}]},
    {"kind": "sampled", "stars": [[[0, 0, float("nan")]]] * 3},
])
def test_malformed_path_parameters(tmp_path, doc):
    assert main(["berry", write(tmp_path, "p.json", doc)]) == EXIT_INPUT
