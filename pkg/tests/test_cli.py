import csv
from pathlib import Path

import pytest

from phaseseg.cli import main
from phaseseg.config import config_hash

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

FAST = """\
grid.cells = 16
grid.length = 1
time.tau = 1e-2
time.final = 0.1
output.every = 5
potential = logarithmic
kappa = rational
init.mu.mean = 1
init.mu.amp = 0.5
init.mu.mode = 2
init.rho.amp = 0.6
study.eps = 1e-1, 1e-2, 1e-3
converge.levels = 3
"""


@pytest.fixture
def fast_cfg(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text(FAST)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_validate_good(capsys):
    assert main(["validate", str(CONFIGS / "default.cfg")]) == 0
    assert "PASS" in capsys.readouterr().out


def test_validate_failing_model(tmp_path, capsys):
    text = (CONFIGS / "default.cfg").read_text().replace("bounds.rho_max = 0.98",
                                                         "bounds.rho_max = 0.95")
    text = text.replace("bounds.xi_max = 4.59511985013459", "bounds.xi_max = 3.6635616461296463")
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    assert main(["validate", str(path)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate", "x.cfg"])
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_missing_out_is_usage_error(fast_cfg):
    with pytest.raises(SystemExit) as info:
        main(["simulate", str(fast_cfg)])
    assert info.value.code == 2


def test_config_error_exit_two(tmp_path, capsys):
    path = tmp_path / "broken.cfg"
    path.write_text(FAST + "time.tua = 1\n")
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "time.tau" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "absent.cfg")]) == 2


def test_simulate_outputs(fast_cfg, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", str(fast_cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "steps.csv")
    assert rows[0] == ["step", "time", "balance_residual", "min_mu", "rho_min", "rho_max",
                       "xi_min", "xi_max", "cg_iterations", "prox_max_iterations",
                       "safeguard_margin"]
    assert len(rows) == 11
    snaps = sorted(p.name for p in out.glob("snap_*_mu.txt"))
    assert snaps == ["snap_000000_mu.txt", "snap_000005_mu.txt", "snap_000010_mu.txt"]
    manifest = (out / "manifest.txt").read_text()
    assert f"config_sha256 = {config_hash(FAST)}" in manifest
    assert "tool = phaseseg" in manifest
    assert not list(out.glob("*.partial"))


def test_simulate_failure_leaves_partial(fast_cfg, tmp_path, monkeypatch, capsys):
    import phaseseg.stepper as stepper
    from phaseseg.errors import StepSizeError

    real_step = stepper.step

    def failing(state, model, tau, solver, index=1):
        if index == 4:
            raise StepSizeError("forced", margin=-1.0, index=0)
        return real_step(state, model, tau, solver, index)

    monkeypatch.setattr(stepper, "step", failing)
    out = tmp_path / "run"
    assert main(["simulate", str(fast_cfg), "--out", str(out)]) == 1
    assert "step 4 failed" in capsys.readouterr().err
    assert not (out / "steps.csv").exists()
    rows = read_csv(out / "steps.csv.partial")
    assert len(rows) == 4  # header and three completed steps
    assert (out / "snap_000000_rho.txt").exists()


def test_cdep_study_rows(fast_cfg, tmp_path):
    out = tmp_path / "study"
    assert main(["cdep-study", str(fast_cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "study.csv")
    assert rows[0] == ["eps", "lhs", "rhs", "ratio"]
    assert [float(r[0]) for r in rows[1:]] == [1e-1, 1e-2, 1e-3]


def test_pointwise_and_converge(fast_cfg, tmp_path):
    assert main(["pointwise-check", str(fast_cfg), "--out", str(tmp_path / "p")]) == 0
    rows = read_csv(tmp_path / "p" / "pointwise.csv")
    assert rows[0] == ["time", "worst_cell", "L", "R", "ratio"] and len(rows) == 12
    code = main(["converge", str(fast_cfg), "--out", str(tmp_path / "c")])
    assert code in (0, 1)
    rows = read_csv(tmp_path / "c" / "convergence.csv")
    assert rows[0] == ["level", "tau", "distance", "observed_order"] and len(rows) == 4


def test_tables_to_stdout(fast_cfg, capsys):
    assert main(["prox-table", str(fast_cfg), "--tau", "0.1", "--count", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "r,x,xi" and len(lines) == 4
    assert main(["kirchhoff-table", str(fast_cfg), "--m-max", "1", "--count", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "m,kappa,K"
    m, kappa, K = map(float, lines[2].split(","))
    assert (m, kappa) == (1.0, 1.5) and abs(K - 1.6931471805599454) < 1e-12


def test_table_to_file(fast_cfg, tmp_path):
    assert main(["prox-table", str(fast_cfg), "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "prox.csv")) == 42
