import csv
import io
import re
import subprocess
import sys

import pytest

from critline import eval_total
from critline.cli import EXIT_EVALUATION, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_VERIFY, main, run_suite
from critline.configio import load_config
from critline.presets import preset_text


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def value(out: str, name: str) -> float:
    m = re.search(rf"^{re.escape(name)} = (\S+)$", out, re.M)
    assert m, out
    return float(m.group(1))


def write_cfg(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- eval ---------------------------------------------------------------------------


@pytest.mark.parametrize("name, published", [("thm1", 0.369927), ("thm2", 0.410725)])
def test_eval_presets(capsys, name, published):
    code, out, _ = run(capsys, "eval", "--config", name)
    assert code == EXIT_OK
    assert abs(value(out, "kappa") - published) <= 5e-4
    assert re.search(r"^kappa = \d\.\d{6}$", out, re.M)
    for key in ("c11", "c12", "c22", "c"):
        assert re.search(rf"^{key} = -?\d+\.\d{{6}}$", out, re.M)


def test_eval_single_piece(capsys, tmp_path):
    text = preset_text("conrey-half")
    code, out, _ = run(capsys, "eval", "--config", write_cfg(tmp_path, text))
    assert code == EXIT_OK
    assert "c12 = 0.000000" in out and "c22 = 0.000000" in out


def test_eval_breakdown_csv(capsys, tmp_path):
    path = tmp_path / "b.csv"
    code, out, _ = run(capsys, "eval", "--config", "thm1", "--breakdown", str(path))
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert list(rows[0]) == ["block", "l1", "l2", "k", "value"]
    c22 = sum(float(r["value"]) for r in rows if r["block"] == "c22")
    assert c22 == pytest.approx(value(out, "c22"), abs=5e-7)
    assert {(r["l1"], r["l2"], r["k"]) for r in rows if r["block"] == "c22"} >= {("2", "3", "2"), ("3", "2", "2")}


def test_eval_kappa_star_preset(capsys):
    code, out, _ = run(capsys, "eval", "--config", "star2")
    assert code == EXIT_OK
    assert "bound = kappa_star" in out
    assert abs(value(out, "kappa") - 0.403211) <= 1e-3


# -- optimize --------------------------------------------------------------------------


def test_optimize_single_evaluation_returns_warm_start(capsys):
    code, out, _ = run(capsys, "optimize", "--config", "thm1", "--iters", "1", "--restarts", "1", "--seed", "0")
    assert code == EXIT_OK
    assert value(out, "kappa") == value(out, "start kappa")
    assert value(out, "kappa") == pytest.approx(0.369927, abs=1e-6)


def test_optimize_trace_deterministic_and_roundtrip(capsys, tmp_path):
    args = ["optimize", "--config", "conrey-half", "--iters", "60", "--restarts", "3", "--seed", "5"]
    t1, t2, best = tmp_path / "t1.csv", tmp_path / "t2.csv", tmp_path / "best.cfg"
    code, out, _ = run(capsys, *args, "--trace", str(t1), "--out", str(best))
    assert code == EXIT_OK
    run(capsys, *args, "--trace", str(t2))
    assert t1.read_bytes() == t2.read_bytes()
    assert t1.read_text().splitlines()[0] == "restart,iteration,evaluations,kappa"
    rerun = load_config(best)
    assert rerun.optimize.seed == 5 and rerun.optimize.budget == 60
    assert eval_total(rerun.mollifier).kappa == pytest.approx(value(out, "kappa"), abs=1e-6)
    code, out2, _ = run(capsys, "eval", "--config", str(best))
    assert value(out2, "kappa") == value(out, "kappa")


@pytest.mark.parametrize("name", ["star1", "thm2"])
def test_optimize_output_config_reevaluates(capsys, tmp_path, name):
    from critline import eval_kappa_star

    best = tmp_path / "best.cfg"
    run(capsys, "optimize", "--config", name, "--iters", "40", "--restarts", "1", "--out", str(best))
    text = best.read_text()
    reported = float(re.match(r"# best kappa(?:_star)? = (\S+)", text).group(1))
    run_cfg = load_config(best)
    fn = eval_kappa_star if run_cfg.bound == "kappa_star" else eval_total
    assert abs(fn(run_cfg.mollifier).kappa - reported) <= 1e-9


def test_optimize_fixed_r(capsys):
    code, out, _ = run(capsys, "optimize", "--config", "thm1", "--iters", "30", "--restarts", "1", "--fix-r")
    assert code == EXIT_OK
    assert value(out, "R") == 1.3


# -- verify ------------------------------------------------------------------------------


@pytest.mark.parametrize("suite, limit", [("vonmangoldt", "10000"), ("residue", None), ("arith-factor", None)])
def test_verify_suites_pass(capsys, suite, limit):
    argv = ["verify", "--suite", suite] + (["--limit", limit] if limit else [])
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_OK
    assert "FAIL" not in out and "PASS" in out


def test_verify_failure_exit_code(capsys, monkeypatch):
    from critline import cli

    monkeypatch.setitem(cli._SUITE_FUNCS, "residue", lambda limit: [("broken", 1.0, 1e-10)])
    code, out, _ = run(capsys, "verify", "--suite", "residue")
    assert code == EXIT_VERIFY
    assert "FAIL" in out


def test_run_suite_rows():
    rows = run_suite("residue")
    assert rows and all(ok for *_, ok in rows)


# -- exit codes ---------------------------------------------------------------------------


def test_unknown_suite_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["verify", "--suite", "bogus"])
    assert err.value.code == EXIT_PARSE


def test_missing_file(capsys):
    code, _, err = run(capsys, "eval", "--config", "/no/such/file.cfg")
    assert code == EXIT_PARSE and "parse error" in err


@pytest.mark.parametrize(
    "edit, expected, key",
    [
        (("\nK = 3", "\nK = three"), EXIT_PARSE, "params.K"),
        (("P1 = x1mx:", "P1 = cubic:"), EXIT_PARSE, "polynomials.P1"),
        (("[params]", "params"), EXIT_PARSE, "file"),
        (("theta1 = 1/2", "theta1 = 0.7"), EXIT_VALIDATION, "params.theta1"),
        (("R = 1.3", "R = 0"), EXIT_VALIDATION, "params.R"),
        (("Q = onem2x: 0:", "Q = onem2x: 2:0.1, 0:"), EXIT_VALIDATION, "polynomials.Q"),
        (("R = 1.3", "R = 1000"), EXIT_EVALUATION, ""),
    ],
)
def test_fault_injection(capsys, tmp_path, edit, expected, key):
    text = preset_text("thm1")
    assert edit[0] in text
    code, _, err = run(capsys, "eval", "--config", write_cfg(tmp_path, text.replace(*edit, 1)))
    assert code == expected
    assert key in err


def test_theta_order_is_validation_error(capsys, tmp_path):
    text = preset_text("thm1").replace("\ntheta1 = 1/2", "\ntheta1 = 0.4", 1)
    code, _, err = run(capsys, "eval", "--config", write_cfg(tmp_path, text))
    assert code == EXIT_VALIDATION


def test_nonlinear_q_with_kappa_star_is_validation_error(capsys, tmp_path):
    text = preset_text("thm1").replace("bound = kappa", "bound = kappa_star", 1)
    code, _, _ = run(capsys, "eval", "--config", write_cfg(tmp_path, text))
    assert code == EXIT_VALIDATION


def test_optimize_bad_budget(capsys):
    code, _, err = run(capsys, "optimize", "--config", "thm1", "--iters", "0")
    assert code == EXIT_VALIDATION


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "critline", "eval", "--config", "thm1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "kappa = 0.3699" in proc.stdout
