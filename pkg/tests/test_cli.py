import csv
import io
import json

import pytest

from bellgrid.cli import main, parse_range, parse_sweep, UsageError
from bellgrid.tensor import CorrelationTensor


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_tensor(capsys):
    code, out, _ = run(capsys, "tensor", "--n", "3", "--v", "0.5")
    assert code == 0
    d = json.loads(out)
    assert sum(1 for c in d["components"] if c != 0) == 4
    assert d["n_parties"] == 3


def test_tensor_zero_visibility(capsys):
    code, out, _ = run(capsys, "tensor", "--n", "2", "--v", "0")
    assert code == 0
    assert json.loads(out)["components"] == [0.0] * 4


def test_tensor_rejects_single_party(capsys):
    code, _, err = run(capsys, "tensor", "--n", "1", "--v", "0.5")
    assert code == 2
    assert "n_parties must be ≥ 2" in err


def test_bounds_headline(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "6", "--v", "0.1765")
    d = json.loads(out)
    assert code == 0
    assert d["three_setting_violated"] is True
    assert d["zb_two_setting_exists"] is True


def test_bounds_below_window(capsys):
    _, out, _ = run(capsys, "bounds", "--n", "6", "--v", "0.17")
    assert json.loads(out)["three_setting_violated"] is False


def test_bounds_load_zero(tmp_path, capsys):
    p = tmp_path / "zero.json"
    p.write_text(CorrelationTensor.zeros(3).to_json())
    code, out, _ = run(capsys, "bounds", "--load", str(p))
    d = json.loads(out)
    assert code == 0
    assert d["three_setting_violated"] is False and d["zb_two_setting_exists"] is True


def test_bounds_with_oracle(capsys):
    _, out, _ = run(capsys, "bounds", "--n", "3", "--v", "1.0", "--oracle")
    d = json.loads(out)
    assert d["lhv_oracle_max"] <= d["three_setting_bound"] + 1e-9


def test_tensor_file_roundtrip(tmp_path, capsys):
    p = tmp_path / "t.json"
    assert run(capsys, "tensor", "--n", "4", "--v", "0.3", "--out", str(p))[0] == 0
    _, out, _ = run(capsys, "bounds", "--load", str(p))
    d = json.loads(out)
    assert d["t_max_method"] == "closed_form_ghz"
    assert d["t_max"] == 0.3


def test_window_range(capsys):
    code, out, _ = run(capsys, "window", "--n", "2..10")
    rows = json.loads(out)
    assert code == 0
    assert [r["n_parties"] for r in rows] == list(range(2, 11))
    assert next(r["n_parties"] for r in rows if r["nonempty"]) == 6


def test_window_single(capsys):
    _, out, _ = run(capsys, "window", "--n-range", "6..6")
    rows = json.loads(out)
    assert len(rows) == 1 and rows[0]["nonempty"]


def test_window_rejects_one(capsys):
    code, _, err = run(capsys, "window", "--n", "1..1")
    assert code == 2 and "error" in err


def test_scan_csv(capsys):
    code, out, _ = run(capsys, "scan", "--n-range", "5..6", "--v-sweep", "0.17:0.18:0.005")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["n", "v", "ee", "t_max", "bound", "sum_sq", "zb_exists", "violated"]
    assert [(r["n"], r["v"]) for r in rows] == [
        (n, v) for n in ("5", "6") for v in ("0.17", "0.175", "0.18")
    ]


def test_scan_parallel_is_identical(capsys, monkeypatch):
    args = ("scan", "--n-range", "3..6", "--v-sweep", "0.1:0.3:0.05", "--format", "json")
    _, serial, _ = run(capsys, *args)
    monkeypatch.setenv("BELL_THREADS", "3")
    _, parallel, _ = run(capsys, *args)
    assert serial == parallel


def test_reproducible_with_seed(tmp_path, capsys):
    p = tmp_path / "r.json"
    p.write_text(CorrelationTensor(3, [0.1, -0.4, 0.3, 0.9, -0.2, 0.5, 0.05, -0.7]).to_json())
    first = run(capsys, "bounds", "--load", str(p), "--seed", "5")[1]
    second = run(capsys, "bounds", "--load", str(p), "--seed", "5")[1]
    assert first == second


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--n", "3", "--v", "1.0")
    d = json.loads(out)
    assert code == 0
    assert d["satisfied"] and d["mode"] == "exhaustive"
    assert d["max_value"] <= d["bound"] + 1e-9


def test_oracle_alternating(capsys):
    code, out, _ = run(capsys, "oracle", "--n", "10", "--v", "0.5", "--mode", "alternating", "--seed", "1")
    assert code == 0
    assert json.loads(out)["mode"] == "alternating"


def test_verify(capsys):
    code, out, _ = run(capsys, "verify")
    d = json.loads(out)
    assert code == 0 and d["passed"]
    assert d["projection_dichotomy"]["zero"] == 2


def test_usage_errors(capsys):
    assert run(capsys, "bounds")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_parsers():
    assert parse_range("2..10") == (2, 10)
    assert parse_range("6") == (6, 6)
    assert parse_sweep("0.1:0.2:0.05") == [0.1, 0.15, 0.2]
    assert parse_sweep("0.3,0.4") == [0.3, 0.4]
    for bad in ("5..2", "a..b"):
        with pytest.raises(UsageError):
            parse_range(bad)
    for bad in ("0:2:0.5", "0:1:0", ""):
        with pytest.raises(UsageError):
            parse_sweep(bad)
