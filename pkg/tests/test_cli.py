import subprocess
import sys

import numpy as np
import pytest

from utpm import TaylorMatrix, load, save
from utpm.cli import main


def _records(out):
    rows = []
    for line in out.splitlines():
        if line.startswith("command="):
            rows.append(dict(tok.split("=", 1) for tok in line.split()))
    return rows


def test_oed_gradient_passes(capsys):
    assert main(["oed-gradient", "--nm", "20", "--nx", "5", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "overall: PASS" in out
    recs = _records(out)
    assert recs[-1]["result"] == "pass"
    assert all(r["pass"] == "1" for r in recs if "check" in r)


def test_oed_modes(capsys):
    assert main(["--format", "records", "oed-gradient", "--nx", "4", "--mode", "forward"]) == 0
    checks = [r["check"] for r in _records(capsys.readouterr().out) if "check" in r]
    assert any("forward" in c for c in checks)
    assert not any("reverse" in c for c in checks)


def test_failed_check_exits_one(capsys):
    # a negative tolerance can never be met
    assert main(["--format", "records", "oed-gradient", "--nx", "4", "--tol", "-1"]) == 1


def test_config_errors_exit_one(capsys):
    assert main(["oed-gradient", "--nm", "3", "--nx", "5"]) == 1
    assert "error" in capsys.readouterr().err


def test_b_file_round_trip(tmp_path, capsys):
    saved = tmp_path / "b.txt"
    assert main(["--format", "records", "oed-gradient", "--nx", "3", "--nm", "7",
                 "--seed", "9", "--save-b", str(saved)]) == 0
    first = _records(capsys.readouterr().out)
    b = load(saved)
    assert b.shape == (7, 3)
    assert main(["--format", "records", "oed-gradient", "--b-file", str(saved)]) == 0
    second = _records(capsys.readouterr().out)
    assert [r.get("value") for r in first if "check" in r] == \
        [r.get("value") for r in second if "check" in r]


def test_b_file_identity(tmp_path, capsys):
    path = tmp_path / "eye.txt"
    save(path, TaylorMatrix.constant(np.eye(1), 1))
    assert main(["--format", "records", "oed-gradient", "--b-file", str(path)]) == 0
    recs = [r for r in _records(capsys.readouterr().out) if "check" in r]
    assert float(recs[0]["value"]) == pytest.approx(1.0)
    assert float(recs[1]["value"]) == pytest.approx(-2.0)


@pytest.mark.parametrize("suite", ["core", "qr", "eigh", "adjoint", "graph"])
def test_check_suites(suite, capsys):
    assert main(["--format", "records", "check", "--suite", suite, "--sizes", "5x3,4"]) == 0
    assert _records(capsys.readouterr().out)[-1]["result"] == "pass"


@pytest.mark.parametrize("op", ["mul", "inv", "solve", "qr", "eigh"])
@pytest.mark.parametrize("degree", [1, 3])
def test_dot_test_command(op, degree, capsys):
    assert main(["dot-test", "--op", op, "--degree", str(degree), "--instances", "5"]) == 0


def test_bench_degree_one_ratio_near_one(capsys):
    assert main(["--format", "records", "bench", "--op", "qr", "--rows", "200", "--cols", "20",
                 "--degree", "1", "--reps", "9"]) == 0
    recs = [r for r in _records(capsys.readouterr().out) if "check" in r]
    ratio = float(next(r for r in recs if r["informational"] == "1")["value"])
    assert 0.5 <= ratio <= 3.0


def test_bench_reports_reference_ratio(capsys):
    assert main(["bench", "--op", "eigh", "--rows", "6", "--cols", "6",
                 "--degree", "4", "--reps", "3"]) == 0
    out = capsys.readouterr().out
    assert "11.88" in out and "INFO" in out


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["check", "--suite", "bogus"],
    ["dot-test"],
    ["dot-test", "--op", "qr", "--degree", "0"],
    ["bench", "--op", "qr", "--rows", "5", "--cols", "2", "--degree", "2", "--reps", "2"],
    ["bench", "--op", "eigh", "--rows", "5", "--cols", "4", "--degree", "2", "--reps", "3"],
])
def test_usage_errors_exit_two(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "utpm", "--format", "human", "oed-gradient",
                          "--nx", "3", "--nm", "6"], capture_output=True, text=True)
    assert out.returncode == 0 and "overall: PASS" in out.stdout
