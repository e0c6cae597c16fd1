from __future__ import annotations

import csv
import io
import subprocess
import sys

import pytest

from geonets.cli import ExperimentConfig, main, run
from geonets.quad import gain_coefficients
from geonets.nets import net_for


def call(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_net_vdc(capsys):
    code, out, err = call(["net", "-b", "2", "-s", "1", "-m", "2"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("# config: {")
    data = rows(out)
    assert [float(r["value"]) for r in data] == [0.0, 0.5, 0.25, 0.75]
    assert list(data[0]) == ["i", "j", "value", "digits"]
    assert "t=0 PASS" in err


def test_net_single_point(capsys):
    code, out, _ = call(["net", "-b", "4", "-s", "1", "-m", "0"], capsys)
    assert code == 0 and len(rows(out)) == 1


def test_net_bad_base(capsys):
    code, out, err = call(["net", "-b", "6", "-s", "2", "-m", "2"], capsys)
    assert code == 1 and "not prime" in err and out == ""


def test_scrambled_net_verifies(capsys):
    code, _, err = call(["net", "-b", "3", "-s", "2", "-m", "2", "--scramble"], capsys)
    assert code == 0 and "PASS" in err


def test_net_quality_out_of_range(capsys):
    code, _, err = call(["net", "-b", "2", "-s", "1", "-m", "2", "-t", "3"], capsys)
    assert code == 1 and "t" in err


def test_bad_flags_exit_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["net", "-b", "2"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1
    code, _, _ = call(["net", "-b", "2", "-s", "1", "-m", "2", "--replicates", "1"], capsys)
    assert code == 1


def test_gains_examples(capsys):
    code, out, _ = call(["gains", "-b", "2", "-s", "1", "-m", "3"], capsys)
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["u", "kappa", "gamma"]
    for r in data:
        if int(r["kappa"]) <= 2:
            assert float(r["gamma"]) == 0.0
    code, out, _ = call(["gains", "-b", "2", "-s", "2", "-m", "0"], capsys)
    assert all(float(r["gamma"]) == 1.0 for r in rows(out))
    code, out, _ = call(["gains", "-b", "2", "-s", "2", "-m", "2", "--max-total", "4"], capsys)
    ps = net_for(2, 2, 2)
    for r in rows(out):
        u = tuple(int(x) for x in r["u"].split(";"))
        kap = tuple(int(x) for x in r["kappa"].split(";"))
        assert float(r["gamma"]) == pytest.approx(gain_coefficients(ps, u, kap))


def test_sample_columns(capsys):
    code, out, _ = call(["sample", "--scheme", "interval-b2,sphertri-b2", "-m", "2", "--seed", "5"], capsys)
    data = rows(out)
    assert code == 0 and len(data) == 8
    assert list(data[0]) == ["i", "factor", "x0", "x1", "x2"]
    assert data[0]["x1"] == ""
    assert all(float(data[1][c]) > 0 for c in ("x0", "x1", "x2"))


def test_sample_rejects_mixed_bases(capsys):
    code, _, err = call(["sample", "--scheme", "interval-b2,triangle-b4", "-m", "1"], capsys)
    assert code == 1 and "common base" in err


def test_converge(capsys):
    argv = ["converge", "--scheme", "interval-b2", "--m-min", "3", "--m-max", "7", "--replicates", "20"]
    code, out, _ = call(argv + ["--max-slope", "-2.0"], capsys)
    data = rows(out)
    assert code == 0 and len(data) == 10
    assert {r["method"] for r in data} == {"scrambled-geometric-net", "plain-MC"}
    code, _, err = call(argv + ["--max-slope", "-10"], capsys)
    assert code == 2 and "FAIL" in err


def test_converge_budget_guard(capsys):
    code, _, err = call(["converge", "--scheme", "interval-b2", "--m-min", "20", "--m-max", "26"], capsys)
    assert code == 1 and "budget" in err


def test_verify_measure(capsys):
    code, out, err = call(["verify-measure", "--scheme", "disk-aspect-b2", "--level", "3"], capsys)
    assert code == 0 and len(rows(out)) == 8 and "PASS" in err


def test_sphericity(capsys):
    code, out, _ = call(["sphericity", "--scheme", "interval-b2", "--depth", "5"], capsys)
    assert code == 0 and all(float(r["C_hat"]) == 1.0 for r in rows(out))


def test_out_file_and_determinism(tmp_path, capsys):
    p1 = tmp_path / "a.csv"
    argv = ["converge", "--scheme", "triangle-b2", "--m-min", "2", "--m-max", "4", "--replicates", "5",
            "--out", str(p1)]
    assert main(argv) == 0
    first = p1.read_bytes()
    assert main(argv) == 0
    capsys.readouterr()
    assert p1.read_bytes() == first
    cfg = ExperimentConfig.from_json(p1.read_text().splitlines()[0].removeprefix("# config: "))
    assert cfg.schemes == ("triangle-b2",) and cfg.m_max == 4 and cfg.replicates == 5


def test_config_round_trip():
    cfg = ExperimentConfig("converge", schemes=("triangle-b4", "triangle-b4"), s=2, b=4, m_min=2, m_max=6,
                           replicates=30, seed=2 ** 64 - 1, integrand="step", out="x.csv",
                           options={"methods": "plain-MC", "max_slope": -1.5})
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    code, text = run(ExperimentConfig("sphericity", schemes=("interval-b2",), s=1, options={"depth": 2}))
    assert code == 0 and text.count("\n") == 6


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "geonets.cli", "net", "-b", "3", "-s", "1", "-m", "1"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.count("\n") == 6
