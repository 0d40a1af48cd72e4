from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from adiabatic_transfer.cli import main, validate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path: Path, name: str, obj) -> Path:
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


SCATTER = {
    "kind": "scatter",
    "pulse": {"shape": "gaussian", "tau": 70.71067811865476},
    "emitter": {"gamma_w_es": 0.5, "gamma_b_es": 0.0, "gamma_w_ef": 0.5, "gamma_b_ef": 0.0},
}
# bandwidth/Gamma = 0.6
BROADBAND = {**SCATTER, "pulse": {"shape": "gaussian", "tau": 1.1785113019775793}, "method": "adiabatic"}


def test_fig5_row(tmp_path):
    assert main(["run", "--config", str(CONFIGS / "fig5.json"), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "fig5.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eta_bar_a", "eta_bar_b", "F_a", "F_b", "R"]
    assert len(rows) == 1 + 21 * 21
    row = next(r for r in rows[1:] if float(r[0]) == 0.5 and float(r[1]) == 1.0)
    assert float(row[2]) == pytest.approx(5 / 6, abs=1e-12)
    assert float(row[3]) == pytest.approx(5 / 6, abs=1e-12)
    assert float(row[4]) == pytest.approx(0.75, abs=1e-12)
    assert row[2].startswith("0.83333333333333")


def test_malformed_json_exit_2(tmp_path, capsys):
    path = _write(tmp_path, "bad.json", "{ not json")
    assert main(["--config", str(path), "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2


def test_schema_error_exit_2(tmp_path):
    path = _write(tmp_path, "bad.json", {**SCATTER, "emitter": {"gamma_w_es": -1}})
    assert main(["--config", str(path), "--out", str(tmp_path)]) == 2


def test_divergent_series_exit_3(tmp_path, capsys):
    path = _write(tmp_path, "wide.json", BROADBAND)
    assert main(["--config", str(path), "--out", str(tmp_path)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "SeriesDivergent"


def test_wrong_subcommand_exit_2(tmp_path):
    path = _write(tmp_path, "s.json", SCATTER)
    assert main(["entangle-ring", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_scatter_run(tmp_path):
    path = _write(tmp_path, "s.json", {**SCATTER, "output": {"trajectories": True}})
    assert main(["scatter", "--config", str(path), "--out", str(tmp_path)]) == 0
    result = json.loads((tmp_path / "scatter.json").read_text())
    assert result["kind"] == "scatter"
    traj = tmp_path / "scatter_psi_e.csv"
    assert traj.exists()
    assert traj.read_bytes().splitlines()[0] == b"t,Re,Im"


@pytest.mark.parametrize(
    "obj, code",
    [(SCATTER, 0), ("{", 2), (BROADBAND, 3)],
    ids=["valid", "malformed", "divergent"],
)
def test_validate(tmp_path, obj, code):
    path = _write(tmp_path, "v.json", obj)
    report = validate(path)
    assert report["exit_code"] == code
    assert main(["--validate-only", "--config", str(path)]) == code
    assert not (tmp_path / "scatter.json").exists()


def test_sweep_determinism_across_threads(tmp_path):
    cfg = {
        **SCATTER,
        "sweep": [{"parameter": "pulse.tau", "values": [70.0, 35.0, 20.0]},
                  {"parameter": "emitter.gamma_b_es", "values": [0.0, 0.1]}],
    }
    path = _write(tmp_path, "sweep.json", cfg)
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        assert main(["--config", str(path), "--out", str(out), "--threads", threads]) == 0
        outs.append(((out / "scatter.csv").read_bytes(), (out / "scatter.json").read_bytes()))
    assert outs[0] == outs[1]
    body = outs[0][0]
    assert b"\r" not in body
    rows = list(csv.reader(body.decode().splitlines()))
    params = [(float(r[0]), float(r[1])) for r in rows[1:]]
    assert params == sorted(params)


def test_sim_threads_env(tmp_path, monkeypatch):
    path = _write(tmp_path, "s.json", SCATTER)
    monkeypatch.setenv("SIM_THREADS", "3")
    assert main(["--config", str(path), "--out", str(tmp_path)]) == 0


def test_unknown_sweep_parameter(tmp_path):
    cfg = {**SCATTER, "sweep": [{"parameter": "pulse.nope", "values": [1.0]}]}
    path = _write(tmp_path, "sweep.json", cfg)
    assert main(["--config", str(path), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_bundled_configs_validate(name):
    assert validate(CONFIGS / name)["exit_code"] == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "adiabatic_transfer", "validate", "--config", str(CONFIGS / "clone_asymmetric.json")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["valid"] is True
