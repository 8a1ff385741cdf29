from __future__ import annotations

import csv
import json
import os
import subprocess
import sys

import pytest

from rikit.cli import UsageError, execute, main, run
from rikit.selftest import _status, _worst

IND = '{"kind": "indicator", "s": 0.25}'


def _cli(*argv, env=None):
    e = dict(os.environ)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "rikit", *argv], capture_output=True, text=True,
                          env=e, timeout=300)


def test_norm_prints_bare_value():
    r = _cli("norm", "--space", '{"kind": "lebesgue", "p": 2}', "--f", IND)
    assert r.returncode == 0
    assert float(r.stdout) == pytest.approx(0.5, rel=1e-14)


def test_norm_from_file(tmp_path):
    fpath = tmp_path / "f.json"
    fpath.write_text(IND)
    assert main(["norm", "--space", '{"kind": "lebesgue", "p": 4}', "--f", f"@{fpath}"]) == 0


def test_csv_projection(tmp_path):
    out = tmp_path / "fund.csv"
    code = main(["fundamental", "--space", '{"kind": "lebesgue", "p": 2}', "--floor", "1e-4",
                 "--csv", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "phi"]
    assert float(rows[1][0]) == pytest.approx(1e-4)


def test_counterexample_report():
    rep = run(["counterexample", "--phi", "sqrt", "--levels", "4"])
    assert rep["all_certificates"] and len(rep["levels"]) == 4
    assert rep["target"]["verdict"] == "noncompact"


def test_verdict_ratio_one():
    rep = run(["verdict", "--sobolev", "3,1,2.5", "--domain", '{"kind": "lz", "p": 1.5, "q": 2, "alpha": 0.5}',
               "--target", "optimal"])
    v = rep["verdict"]
    assert v["verdict"] == "noncompact" and v["reason"] == "ratio ≡ 1"
    assert "floor" in v and "rtol" in v


def test_L_infinity_target_exit_code():
    r = _cli("verdict", "--sobolev", "3,1,2.5", "--domain", '{"kind": "lebesgue", "p": 1.5}',
             "--target", '{"kind": "lebesgue", "p": "inf"}')
    assert r.returncode == 2
    err = json.loads(r.stderr)
    assert err["condition"] == "target_not_L_infinity"


def test_sum_plan_violation_exit_code(capsys):
    code = main(["sum-enlarge", "--z1", '{"kind": "lebesgue", "p": 2}', "--z2", '{"kind": "lebesgue", "p": 2}'])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["condition"] == "ratio_zero"


@pytest.mark.parametrize("argv", [
    [],
    ["norm", "--space", "{not json"],
    ["norm", "--space", '{"kind": "lebesgue", "p": 2}', "--f", '{"s": 1}'],
    ["verdict", "--sobolev", "3,1"],
    ["selftest", "--rtol", "0.1"],
    ["bogus"],
    ["norm", "--space", '{"kind": "foo"}', "--f", IND],
    ["norm", "--space", '{"kind": "lebesgue", "p": 2}', "--f", '{"kind": "step", "edges": [0, 1], "values": [1, 2]}'],
    ["norm", "--space", '{"kind": "lebesgue", "p": 2}', "--f", '{"kind": "indicator", "s": 2}'],
])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "usage"


def test_execute_raises_usage_error():
    with pytest.raises(UsageError):
        execute(["norm", "--space", "[1,", "--f", IND])


def test_env_floor_relative_to_a():
    env = {"RIKIT_GRID_FLOOR": "1e-3"}
    r = _cli("fundamental", "--space", '{"kind": "lebesgue", "p": 2, "a": 2.0}', env=env)
    assert r.returncode == 0
    assert json.loads(r.stdout)["floor"] == pytest.approx(2e-3)


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--sobolev", "3,1,2.5", "--ps", "1.5", "--alphas", "0.5", "--q", "2",
                 "--csv", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 3


def test_selftest_coarse_floor_is_inconclusive_not_fail():
    rep = run(["selftest", "--criteria", "6,7", "--floor", "1e-3"])
    statuses = {c["status"] for c in rep["criteria"]}
    assert statuses == {"inconclusive at this floor"}
    assert not rep["any_fail"] and not rep["all_pass"]


def test_selftest_tight_rtol_does_not_fail():
    rep = run(["selftest", "--criteria", "1,4,8", "--rtol", "1e-12"])
    assert not rep["any_fail"]


def test_status_semantics():
    assert _status(0.0, 1e-9) == "pass"
    assert _status(5e-10, 1e-12) == "flagged"
    assert _status(5e-10, 1e-10) == "flagged"
    assert _status(2e-9, 1e-12) == "fail"
    assert _status(2e-9, 1e-6) == "pass"
    assert _worst("pass", "flagged") == "flagged"
    assert _worst("flagged", "inconclusive at this floor", "fail") == "fail"


def test_inadmissible_space_exit_two(capsys):
    assert main(["norm", "--space", '{"kind": "lz", "p": 0.5, "q": 1}', "--f", IND]) == 2
    assert json.loads(capsys.readouterr().err)["condition"] == "InadmissibleSpec"


def test_env_floor_reaches_selftest():
    r = _cli("selftest", "--criteria", "6", env={"RIKIT_GRID_FLOOR": "1e-3"})
    assert r.returncode == 0
    assert json.loads(r.stdout)["criteria"][0]["status"] == "inconclusive at this floor"
