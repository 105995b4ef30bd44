import csv
import io
import json
import math
import subprocess
import sys

import pytest

from mdm.cli import (
    CSV_FIELDS,
    METHODS,
    RunSpec,
    ValidationError,
    append_csv,
    cmd_active_set,
    cmd_reference,
    cmd_run,
    main,
)
from mdm.tolerance import ToleranceParams

TIMINGS = ("t_act", "t_ext", "t_run")


def strip_timings(rep):
    return {k: v for k, v in rep.items() if k not in TIMINGS}


def test_active_set_row_and_dump(tmp_path):
    dump = tmp_path / "sets.jsonl"
    row = cmd_active_set(3.0, ToleranceParams(1e-1), dump)
    assert row["schema"] == 1
    assert row["total"] == sum(row["counts"])
    lines = dump.read_text().splitlines()
    assert len(lines) == row["total"] + 1
    assert json.loads(lines[0]) == []


@pytest.mark.parametrize("method", METHODS)
def test_run_every_method(method):
    rep = cmd_run(RunSpec(beta=3.0, epsilon=1e-1, method=method, shifts=2))
    assert rep["schema"] == 1 and rep["method"] == method
    assert rep["reference"] == 1.1011984577041
    assert rep["total_error"] == abs(rep["estimate"] - rep["reference"])
    assert all(rep[k] >= 0 for k in TIMINGS)
    assert rep["total_error"] < 1e-2


def test_reproducible_reports():
    spec = RunSpec(beta=3.0, epsilon=1e-2, method="rqmc", shifts=4, seed=3, threads=2)
    a, b = cmd_run(spec), cmd_run(spec)
    assert json.dumps(strip_timings(a), sort_keys=True) == json.dumps(strip_timings(b), sort_keys=True)
    c = cmd_run(RunSpec(beta=3.0, epsilon=1e-2, method="rqmc", shifts=4, seed=3, threads=1))
    assert c["estimate"] == a["estimate"] and c["per_shift"] == a["per_shift"]


def test_json_and_csv_roundtrip(tmp_path):
    rep = cmd_run(RunSpec(beta=3.0, epsilon=1e-1, method="qmc", seed=1))
    text = json.dumps(rep, indent=1)
    assert json.dumps(json.loads(text), indent=1) == text
    path = tmp_path / "runs.csv"
    append_csv(path, rep)
    append_csv(path, rep)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 2 and list(rows[0]) == list(CSV_FIELDS)
    assert float(rows[0]["estimate"]) == rep["estimate"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\r\n")
    w.writeheader()
    w.writerows(rows)
    with open(path, newline="") as fh:
        assert buf.getvalue() == fh.read()


def test_reference_values():
    assert cmd_reference(3.0, 4, 0, 2)["estimate"] == 1.0
    one = cmd_reference(3.0, 20, 1, 4)
    # [DERIVED] integral of 1/(1+x) over [-1/2, 1/2] is ln 3
    assert abs(one["estimate"] - math.log(3.0)) <= 1e-9
    high = cmd_reference(3.0, 10, 40, 2)
    assert high["points"] == "sobol" and abs(high["estimate"] - 1.1011984577041) < 1e-4
    with pytest.raises(ValidationError):
        cmd_reference(3.0, 30, 2, 2)


def test_run_spec_validation():
    for bad in [dict(method="mc"), dict(beta=1.0), dict(epsilon=0.0), dict(epsilon=2.0),
                dict(method="rqmc", shifts=1), dict(threads=0), dict(t=1.5), dict(beta=1.5)]:
        kw = dict(beta=3.0, epsilon=1e-2)
        kw.update(bad)
        with pytest.raises(ValidationError):
            RunSpec(**kw)


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", "--method", "smolyak-direct", "--beta", "3", "--eps", "1e-1", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["method"] == "smolyak-direct"
    assert main(["run", "--method", "qmc", "--beta", "0.5", "--eps", "1e-1"]) == 2
    assert main(["active-set", "--beta", "3", "--eps", "-1"]) == 2
    assert main(["reference", "--beta", "3", "--m", "40", "--dims", "2"]) == 2
    assert main(["run", "--method", "qmc", "--beta", "3", "--eps", "1e-1", "--s", "1000", "--t", "0.5",
                 "--alpha-grid", "100", "--reference", "1.1"]) == 0
    assert main(["active-set", "--beta", "3", "--eps", "1e-1", "--alpha-grid", "2"]) == 0
    with pytest.raises(SystemExit) as exc:
        main(["run", "--method", "bogus", "--beta", "3", "--eps", "1e-1"])
    assert exc.value.code == 2


def test_capacity_exit_code(monkeypatch):
    import mdm.cli as cli

    def boom(*a, **k):
        from mdm.active_set import CapacityError

        raise CapacityError("cardinality cap hit")

    monkeypatch.setattr(cli, "build_active_set", boom)
    assert main(["active-set", "--beta", "3", "--eps", "1e-2"]) == 3


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "mdm", "active-set", "--beta", "4", "--eps", "1e-1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["counts"] == [9, 12, 5]
