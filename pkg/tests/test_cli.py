import csv
import io
import json
import math

import numpy as np
import pytest

from spectral_entropy.cli import ConfigError, main, parse_depths, parse_times


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_times_and_depths():
    assert parse_times("2^1..2^4") == [2, 4, 8, 16]
    assert parse_times("2,4,8") == [2, 4, 8]
    assert parse_depths("6..9") == [6, 7, 8, 9]
    assert parse_depths("3,5") == [3, 5]
    for bad in ("2^4..2^1", "a,b", "4,2"):
        with pytest.raises(ConfigError):
            parse_times(bad)


def test_describe_presets(capsys):
    code, out, _ = run(capsys, "describe", "--spec", "uniform")
    d = json.loads(out)
    assert code == 0
    assert d["known_dimensions"]["information"] == pytest.approx(1.0)
    assert len(d["fourier"]) == 17
    assert d["config"]["spec_path"] == "uniform"

    _, out, _ = run(capsys, "describe", "--spec", "cantor")
    assert json.loads(out)["known_dimensions"]["information"] == pytest.approx(math.log(2) / math.log(3))

    _, out, _ = run(capsys, "describe", "--spec", "appendix")
    table = json.loads(out)["appendix_log2_mu"]
    assert [table[str(k)] for k in (2, 3, 4, 5)] == [-1, -2, -19, -20]


def test_entropy_scan_csv(capsys):
    code, out, err = run(capsys, "entropy-scan", "--spec", "uniform", "--times", "2,4,8", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["T"]) for r in rows] == [2, 4, 8]
    for r in rows:
        assert float(r["S"]) == pytest.approx(math.log(int(r["T"])), abs=1e-9)
    summary = json.loads(err)
    assert summary["slope"] == pytest.approx(1.0, abs=1e-9)


def test_entropy_scan_atomic_constant(capsys):
    code, out, _ = run(capsys, "entropy-scan", "--spec", "atomic", "--times", "2^1..2^6")
    d = json.loads(out)
    assert code == 0
    assert all(abs(r["S"]) < 1e-12 for r in d["rows"])
    assert d["summary"]["config"]["times"] == [2, 4, 8, 16, 32, 64]


def test_entropy_scan_bf_method(capsys):
    code, out, _ = run(capsys, "entropy-scan", "--spec", "cantor", "--times", "2^3..2^6", "--method", "bf")
    assert code == 0
    assert json.loads(out)["summary"]["method"] == "bf"


def test_dimension_commands(capsys):
    code, out, _ = run(capsys, "dimension", "--spec", "cantor", "--kind", "info", "--base", "3", "--depths", "4..12")
    assert code == 0
    d = json.loads(out)
    assert d["value"] == pytest.approx(math.log(2) / math.log(3), abs=1e-4)
    assert d["kind"] == "info" and len(d["per_depth"]) == 9

    _, out, _ = run(capsys, "dimension", "--spec", "appendix", "--kind", "fractal", "--epsilon", "0.01",
                    "--depths", "6..22")
    assert json.loads(out)["value"] >= 0.85

    for kind in ("info", "fractal", "hausdorff"):
        _, out, _ = run(capsys, "dimension", "--spec", "atomic", "--kind", kind, "--depths", "4..8",
                        "--samples", "100")
        assert json.loads(out)["value"] == pytest.approx(0.0, abs=1e-12)


def test_timeseries_synth_and_analyze(capsys, tmp_path):
    code, out, _ = run(capsys, "timeseries", "synth", "--spec", "atomic", "--length", "4", "--seed", "2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4
    for r in rows:
        assert abs(complex(float(r["re"]), float(r["im"]))) == pytest.approx(1.0, abs=1e-12)

    path = tmp_path / "u.csv"
    code, _, _ = run(capsys, "timeseries", "synth", "--spec", "uniform", "--length", str(2**15),
                     "--output", str(path))
    assert code == 0
    code, out, _ = run(capsys, "timeseries", "analyze", "--input", str(path), "--times", "2^3..2^9")
    assert code == 0
    assert json.loads(out)["slope"] == pytest.approx(1.0, abs=0.1)


def test_deterministic_output(capsys):
    _, a, _ = run(capsys, "timeseries", "synth", "--spec", "cantor", "--length", "64", "--depths", "6")
    _, b, _ = run(capsys, "timeseries", "synth", "--spec", "cantor", "--length", "64", "--depths", "6")
    assert a == b


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "describe", "--spec", "nope")[0] == 2
    assert run(capsys, "describe")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "entropy-scan", "--spec", "uniform", "--times", "x")[0] == 2
    assert run(capsys, "dimension", "--spec", "uniform", "--epsilon", "2")[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("re,im\n1,0\n1,zz\n")
    code, _, err = run(capsys, "timeseries", "analyze", "--input", str(bad))
    assert code == 2 and "line 3" in err
    code, _, err = run(capsys, "entropy-scan", "--spec", "uniform", "--times", "2^12..2^13")
    assert code == 3 and "resource" in err
    code, _, _ = run(capsys, "timeseries", "synth", "--spec", "uniform", "--depths", "40")
    assert code == 3


def test_bad_spec_file_exit(capsys, tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"kind": "uniform", "unknown": True}))
    code, _, err = run(capsys, "describe", "--spec", str(p))
    assert code == 2 and "unknown" in err


def test_output_file(capsys, tmp_path):
    p = tmp_path / "o.json"
    code, out, _ = run(capsys, "describe", "--spec", "cantor", "--output", str(p))
    assert code == 0 and out == ""
    assert json.loads(p.read_text())["kind"] == "cantor"
