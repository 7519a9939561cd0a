import csv
import io
import json
import math
import subprocess
import sys

import pytest

from fockhankel import cli
from fockhankel.errors import ConvergenceError
from fockhankel.fock_core import MultiIndexPoly


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def symbol_file(tmp_path):
    path = tmp_path / "symbol.json"
    path.write_text(MultiIndexPoly.monomial((2,)).to_json(), encoding="utf-8")
    return str(path)


def test_ml_eval_reports_exponential():
    code, out, _ = run_cli("ml", "eval", "--a", "1", "--b", "1", "--lam", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["passed"] is True
    assert payload["result"]["log_mag"] == pytest.approx(2.0, abs=1e-13)


def test_kernel_eval_planar_closed_form():
    code, out, _ = run_cli("kernel", "eval", "--z", "1+1j", "--w", "0.5")
    assert code == 0
    result = json.loads(out)["result"]
    assert result["log_mag"] == pytest.approx(0.5, abs=1e-13)
    assert result["phase"] == pytest.approx(0.5, abs=1e-13)


def test_output_is_deterministic():
    args = ("decomp", "verify", "--ell", "2", "--grid", "5", "--seed", "3")
    first = run_cli(*args)
    second = run_cli(*args)
    assert first[0] == 0
    assert first[1] == second[1]


def test_failed_check_exits_one():
    code, out, err = run_cli("kernel", "check", "--ell", "2", "--grid", "3", "--tol", "1e-300")
    assert code == 1
    assert json.loads(out)["passed"] is False
    assert "failed:" in err


@pytest.mark.parametrize("argv", [
    ("ml", "eval", "--a", "1"),
    ("ml", "eval", "--a", "-1", "--b", "1"),
    ("kernel", "eval", "--z", "1,2", "--w", "0"),
    ("kernel", "check", "--grid", "0"),
    ("hankel", "schatten", "--symbol", "/nonexistent/symbol.json"),
    ("hankel", "rank1", "--alpha", "2"),
    ("ml", "nonsense"),
    ("kernel", "eval", "--p", "-1", "--z", "0", "--w", "0"),
])
def test_bad_parameters_exit_two(argv):
    code, out, _ = run_cli(*argv)
    assert code == 2
    assert out == ""


def test_bad_parameters_write_no_file(tmp_path):
    target = tmp_path / "report.json"
    code, _, _ = run_cli("ml", "eval", "--a", "0", "--b", "1", "--out", str(target))
    assert code == 2
    assert not target.exists()


def test_convergence_error_exits_three(monkeypatch):
    def fail(args, report):
        raise ConvergenceError("did not settle")

    monkeypatch.setitem(cli.COMMANDS, ("ml", "eval"), fail)
    code, _, err = run_cli("ml", "eval", "--a", "1", "--b", "1")
    assert code == 3
    assert "convergence error" in err


def test_report_file_and_csv(tmp_path, symbol_file):
    target = tmp_path / "report.csv"
    code, out, _ = run_cli("hankel", "schatten", "--symbol", symbol_file, "--p", "inf", "--trunc", "6",
                           "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    rows = dict(csv.reader(io.StringIO(target.read_text(encoding="utf-8"))))
    assert float(rows["result.schatten"]) == pytest.approx(2.0, rel=1e-13)
    assert rows["config.p"] == "inf"


def test_hankel_rank1_passes():
    code, out, _ = run_cli("hankel", "rank1", "--w0", "1.5")
    assert code == 0
    result = json.loads(out)["result"]
    assert result["s1"] == pytest.approx(0.5 * math.exp(1.5 ** 2 / 4), rel=1e-10)


def test_hankel_represent_passes(tmp_path):
    path = tmp_path / "b.json"
    path.write_text(MultiIndexPoly(1, {(0,): 1.0, (3,): 0.5j}).to_json(), encoding="utf-8")
    code, out, _ = run_cli("hankel", "represent", "--symbol", str(path), "--ell", "2", "--trunc", "12",
                           "--grid", "3")
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_decomp_verify_example():
    code, out, _ = run_cli("decomp", "verify", "--ell", "3", "--alpha", "3", "--grid", "20")
    assert code == 0
    result = json.loads(out)["result"]
    assert result["residual_max"] <= 1e-6
    assert result["params"]["theta"] == pytest.approx(0.75)


def test_lp_check_reports_bands():
    code, out, _ = run_cli("lp", "check", "--k", "1", "--p", "2")
    assert code == 0
    assert json.loads(out)["result"]["bands"]["1"]["band"] <= 50


def test_suite_all_planar():
    code, out, _ = run_cli("suite", "all", "--ell", "1")
    assert code == 0
    checks = json.loads(out)["checks"]
    assert checks and all(c["passed"] for c in checks)


def test_console_script_version():
    done = subprocess.run([sys.executable, "-m", "fockhankel", "--version"], capture_output=True, text=True)
    assert done.returncode == 0
    assert done.stdout.startswith("fockhankel ")
