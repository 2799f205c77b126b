import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from levy_passage import cli
from levy_passage.errors import NoConvergence

CFG = Path(__file__).resolve().parent.parent / "examples_cfg"


def _run(tmp_path, *args):
    return cli.run([*args, "--out", str(tmp_path)])


def _manifest(tmp_path):
    return json.loads((tmp_path / "manifest.json").read_text())


@pytest.mark.parametrize(
    "name,code",
    [(p.stem, 3 if p.stem == "power_tail" else 0) for p in sorted(CFG.glob("*.toml"))],
)
def test_validate_exit_codes(tmp_path, name, code):
    assert _run(tmp_path, "validate", str(CFG / f"{name}.toml")) == code


def test_manifest_contents(tmp_path):
    assert _run(tmp_path, "zeros", str(CFG / "mixture_b.toml"), "--strip-B", "0.49") == 0
    man = _manifest(tmp_path)
    assert man["subcommand"] == "zeros" and man["schema_version"] == 1
    assert man["outputs"] == ["zeros.json"] and man["seed"] == 12345
    z = json.loads((tmp_path / "zeros.json").read_text())
    assert z["gamma0"] > 0


def test_invert_brownian(tmp_path):
    assert _run(tmp_path, "invert", str(CFG / "brownian.toml"), "--x", "0:2:0.5") == 0
    rows = list(csv.DictReader(open(tmp_path / "invert.csv")))
    assert [float(r["x"]) for r in rows] == [0.0, 0.5, 1.0, 1.5, 2.0]
    for r in rows:
        assert float(r["F"]) == pytest.approx(math.exp(-2 * float(r["x"])), abs=1e-8)


def test_expand_and_eval(tmp_path):
    assert _run(tmp_path, "expand", str(CFG / "cramer_lundberg.toml")) == 0
    d = json.loads((tmp_path / "expand.json").read_text())
    assert d["leading"]["C0"] > 0
    assert _run(tmp_path, "eval", str(CFG / "cramer_lundberg.toml"), "--x", "1,5", "--terms", "0") == 0
    rows = list(csv.DictReader(open(tmp_path / "eval.csv")))
    assert len(rows) == 2


def test_limits(tmp_path):
    assert _run(tmp_path, "limits", str(CFG / "cramer_lundberg.toml")) == 0
    d = json.loads((tmp_path / "limits.json").read_text())
    assert d["time"]["law"] == "gaussian"
    assert d["overshoot"]["total_mass"] == pytest.approx(1.0, abs=1e-9)
    assert (tmp_path / "limits_L_cdf.csv").exists()
    assert _run(tmp_path, "limits", str(CFG / "two_sided.toml")) == 1
    assert _run(tmp_path, "limits", str(CFG / "cramer_lundberg.toml"), "--regime", "zero") == 1


def test_simulate(tmp_path):
    args = ["simulate", str(CFG / "cramer_lundberg.toml"), "--x", "1", "--paths", "500", "--seed", "3"]
    assert _run(tmp_path, *args) == 0
    rows = list(csv.DictReader(open(tmp_path / "samples.csv")))
    assert len(rows) == 500
    meta = json.loads((tmp_path / "simulate.json").read_text())
    assert meta["n_hits"] == sum(r["hit"] == "1" for r in rows)


def test_poly_bound(tmp_path):
    args = ["poly-bound", str(CFG / "power_tail.toml"), "--p", "4", "--grid", "1,2,5", "--paths", "5000"]
    assert _run(tmp_path, *args) == 0
    d = json.loads((tmp_path / "poly_bound.json").read_text())
    assert d["violations"] == []
    assert _run(tmp_path, "poly-bound", str(CFG / "power_tail.toml"), "--p", "6") == 2


def test_compare_brownian(tmp_path):
    args = ["compare", str(CFG / "brownian.toml"), "--x", "0.5,1,2", "--paths", "100000"]
    assert _run(tmp_path, *args) == 0
    rows = list(csv.DictReader(open(tmp_path / "compare.csv")))
    assert list(rows[0]) == ["x", "F_expansion", "F_bromwich", "F_mc", "SE", "flag"]
    assert all(r["flag"] == "0" for r in rows)


def test_usage_errors(tmp_path, capsys):
    assert _run(tmp_path, "frobnicate", "x.toml") == 2
    assert _run(tmp_path, "invert", str(CFG / "brownian.toml")) == 2
    assert _run(tmp_path, "validate", str(tmp_path / "missing.toml")) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('drift = "x"\n')
    assert _run(tmp_path, "validate", str(bad)) == 2
    assert "drift" in capsys.readouterr().err


def test_hypothesis_exit_code(tmp_path):
    assert _run(tmp_path, "invert", str(CFG / "power_tail.toml"), "--x", "1") == 3
    assert _run(tmp_path, "compare", str(CFG / "power_tail.toml")) == 3


def test_non_convergence_exit_code(tmp_path, monkeypatch):
    def fail(*a, **k):
        raise NoConvergence("stalled")

    monkeypatch.setattr("levy_passage.compare.solve_F_grid", fail)
    assert _run(tmp_path, "invert", str(CFG / "two_sided.toml"), "--x", "1") == 4


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "levy_passage.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
