"""End-to-end command-line tests (exit codes, file outputs, determinism)."""

import numpy as np
import pytest

from loadtune.cli import main

G_NUM = " ".join(format(c, ".17g") for c in np.convolve([1.0, -0.7], [1.0 / 120.0]))
G_DEN = " ".join(format(c, ".17g") for c in np.convolve([1.0, -0.95], [1.0, -0.95]))
QD_NUM = " ".join(
    format(c, ".17g")
    for c in np.convolve(np.convolve([1.0, -0.7], [1.0, -1.0]), [1.0 / 120.0])
)
QD_DEN = " ".join(
    format(c, ".17g")
    for c in np.convolve([1.0, -0.9], np.convolve([1.0, -0.95], [1.0, -0.95]))
)

BASE = f"""
[plant]
num = {G_NUM}
den = {G_DEN}

[reference_model]
num = {QD_NUM}
den = {QD_DEN}

[controller_filter]
num = 1
den = 1 -1

[excitation]
kind = square
period = 300
amplitude = 1.0
n = 3000

[experiment]
mode = open_loop
noise_variance = 0.0
seed = 0
"""

TUNING_PIDF = """
[tuning]
predictor = linear
method = norm
n_a = 1
n_b = 3
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_simulate_writes_dataset_and_is_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.ini", BASE)
    out1 = tmp_path / "d1.csv"
    out2 = tmp_path / "d2.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
    assert "N=3000" in capsys.readouterr().out
    assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_text().splitlines()[0] == "t,u,y"
    assert len(out1.read_text().splitlines()) == 3001


def test_tune_recovers_ideal_parameters(tmp_path, capsys):
    cfg = _write(tmp_path, "job.ini", BASE + TUNING_PIDF)
    data = tmp_path / "data.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(data)]) == 0
    out = tmp_path / "result.txt"
    assert main(["tune", "--config", str(cfg), "--data", str(data), "--out", str(out)]) == 0
    entries = dict(
        ln.split(" = ", 1) for ln in out.read_text().strip().split("\n") if " = " in ln
    )
    rho = np.array([float(x) for x in entries["rho_hat"].split()])
    assert np.max(np.abs(rho - np.array([-0.7, 0.0, 12.0, -22.8, 10.83]))) < 1e-4
    assert float(entries["final_cost"]) < 1e-10


def test_tune_kind_mismatch_exits_2(tmp_path):
    cfg = _write(tmp_path, "sim.ini", BASE)
    data = tmp_path / "data.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(data)]) == 0
    mismatched = BASE.replace("mode = open_loop", "mode = closed_loop") + TUNING_PIDF
    mismatched += "\n[initial_controller]\nnum = 1\nden = 1\n"
    cfg2 = _write(tmp_path, "job.ini", mismatched)
    out = tmp_path / "result.txt"
    assert main(["tune", "--config", str(cfg2), "--data", str(data), "--out", str(out)]) == 2


def test_tune_correlation_without_L_exits_2(tmp_path):
    cfg = _write(
        tmp_path, "job.ini", BASE + TUNING_PIDF.replace("method = norm", "method = correlation")
    )
    data = tmp_path / "data.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(data)]) == 0
    out = tmp_path / "result.txt"
    assert main(["tune", "--config", str(cfg), "--data", str(data), "--out", str(out)]) == 2


def test_unknown_key_exits_2(tmp_path):
    cfg = _write(tmp_path, "bad.ini", BASE + "\n[tuning]\nbogus_key = 1\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2


def test_missing_plant_exits_2(tmp_path):
    text = BASE.replace(f"num = {G_NUM}\n", "")
    cfg = _write(tmp_path, "bad.ini", text)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2


def test_missing_config_file_exits_3(tmp_path):
    missing = tmp_path / "nope.ini"
    assert main(["simulate", "--config", str(missing), "--out", str(tmp_path / "x.csv")]) == 3


def test_evaluate_prints_cost(tmp_path, capsys):
    job = BASE + TUNING_PIDF + "\n[disturbance]\nkind = step\namplitude = 1.0\nn = 150\n"
    cfg = _write(tmp_path, "job.ini", job)
    data = tmp_path / "data.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(data)]) == 0
    out = tmp_path / "result.txt"
    assert main(["tune", "--config", str(cfg), "--data", str(data), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--config", str(cfg), "--data", str(out)]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("disturbance_cost = ")
    assert float(line.split(" = ")[1]) < 1e-10


def test_montecarlo_noiseless_single_run(tmp_path):
    job = (
        BASE
        + TUNING_PIDF
        + """
L = 185
rho0 = -0.35 0 6 -11.4 5.415
max_simplex_iters = 3000

[disturbance]
kind = step
amplitude = 1.0
n = 150

[initial_controller]
num = 0 6 -11.4 5.415
den = 1 -1.35 0.35

[montecarlo]
runs = 1
base_seed = 0
"""
    )
    cfg = _write(tmp_path, "mc.ini", job)
    out_dir = tmp_path / "mc"
    assert main(["montecarlo", "--config", str(cfg), "--out", str(out_dir)]) == 0
    lines = (out_dir / "summary.csv").read_text().strip().split("\n")
    assert len(lines) == 9  # header + 2 experiments x 2 predictors x 2 methods
    for ln in lines[1:]:
        mean = float(ln.split(",")[3])
        assert mean < 1e-10
    per_run = (out_dir / "per_run_costs.csv").read_text().strip().split("\n")
    assert len(per_run) == 9


def test_missing_out_flag_exits_2(tmp_path):
    cfg = _write(tmp_path, "sim.ini", BASE)
    assert main(["simulate", "--config", str(cfg)]) == 2
