from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from trotterbounds.cli import EXIT_OK, EXIT_USAGE, main
from trotterbounds.hamiltonian import load_matrix


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_build(tmp_path):
    assert main(["build", "--sides", "2x2", "--eta", "2", "--rs", "5",
                 "-o", str(tmp_path)]) == EXIT_OK
    header, T = load_matrix(tmp_path / "T.txt")
    assert T.shape == (8, 8)
    assert np.array_equal(T, T.T)
    assert json.loads((tmp_path / "system.json").read_text())["eta"] == 2


def test_bounds_reproducible(tmp_path):
    args = ["bounds", "--sides", "2x2", "--eta", "2", "--rs", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["-o", str(a)]) == EXIT_OK
    assert main(args + ["-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    rows = _rows(a)
    assert [r["method"] for r in rows] == ["spectral", "cholesky", "cosine", "shc"]
    assert all(not r["error"] for r in rows)
    assert (tmp_path / "a.telemetry.csv").exists()


def test_bounds_eta_zero(tmp_path):
    out = tmp_path / "z.csv"
    assert main(["bounds", "--sides", "2x2", "--eta", "0", "--methods", "cosine",
                 "-o", str(out)]) == EXIT_OK
    assert float(_rows(out)[0]["W2_best"]) == 0.0


def test_resources_given_w2(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["resources", "--sides", "2x2", "--eta", "2", "--W2", "1.5",
                 "-o", str(out)]) == EXIT_OK
    row = _rows(out)[0]
    assert int(row["aggregated"]) == int(row["N_T"]) + 4 * int(row["N_tof"])
    assert row["method"] == "given"


def test_config_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("sides: [2, 2]\neta: 2\nwigner_seitz: 10.0\nmethods: [cosine]\n")
    out = tmp_path / "o.csv"
    assert main(["bounds", "--config", str(cfg), "-o", str(out)]) == EXIT_OK
    assert _rows(out)[0]["r_s"] == "10.0"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"sides": [2, 2], "colour": "blue"}))
    assert main(["bounds", "--config", str(bad)]) == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["bounds", "--methods", "magic"],
    ["bounds", "--rs", "-1"],
    ["bounds", "--nonsense"],
    ["frobnicate"],
    ["sweep", "--sides", "2x2"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_verify_small():
    assert main(["verify", "--verify-n", "4", "--verify-rs", "5"]) == EXIT_OK


def test_sweep_resume(tmp_path):
    out = tmp_path / "s.csv"
    base = ["sweep", "--sides", "2x2", "--methods", "cosine", "-o", str(out)]
    assert main(base + ["--sweep-eta", "1,2"]) == EXIT_OK
    first = out.read_text()
    assert len(_rows(out)) == 2
    assert main(base + ["--sweep-eta", "1,2,3"]) == EXIT_OK
    rows = _rows(out)
    assert [r["eta"] for r in rows] == ["1", "2", "3"]
    assert out.read_text().startswith(first)


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "trotterbounds", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "bounds" in res.stdout
