"""End-to-end CLI runs compared against golden reports.

Set PERIMKIT_UPDATE_GOLDEN=1 to rewrite the files under tests/golden/.
"""
import csv
import io
import os
import subprocess
import sys
from pathlib import Path

import pytest

from perimkit.cli import EXIT_CAP, EXIT_FAIL, EXIT_INPUT, EXIT_OK, main

GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "audit_star4": ["audit", "--model", "star:4"],
    "audit_star3": ["audit", "--model", "star:3"],
    "audit_grid8": ["audit", "--model", "grid:8x8"],
    "decompose_blocks": ["decompose", "--model", "grid:5x5", "--set", "0,1,5,6,18,19,23,24"],
    "decompose_star4": ["decompose", "--model", "star:4", "--set", "e1,e2", "--algorithm", "brute"],
    "decompose_annulus": ["decompose", "--model", "grid:5x5", "--set", "6-8,11,13,16-18", "--saturate"],
    "decompose_variational": ["decompose", "--model", "grid:4x4", "--set", "0,1,4,10,11,15", "--algorithm", "variational", "--alpha", "1.25"],
    "extreme_pair": ["extreme", "--model", "grid:2x1", "--support", "0,1"],
    "extreme_star3": ["extreme", "--model", "star:3", "--support", "e1,e2"],
    "extreme_csv": ["extreme", "--model", "grid:3x1", "--support", "0-2", "--format", "csv"],
    "carpet_study": ["carpet-study", "--format", "csv"],
    "verify_grid4_cap4": ["verify", "--model", "grid:4x4", "--cap-brute", "4"],
}


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, capsys):
    code, out, err = run(CASES[name], capsys)
    assert code == EXIT_OK, err
    path = GOLDEN / f"{name}.txt"
    if os.environ.get("PERIMKIT_UPDATE_GOLDEN"):
        path.write_text(out)
    assert out == path.read_text()


@pytest.mark.parametrize("name", ["audit_grid8", "carpet_study", "extreme_star3"])
def test_byte_identical_reruns(name, capsys):
    first = run(CASES[name], capsys)[1]
    second = run(CASES[name], capsys)[1]
    assert first == second


def test_out_directory_is_written_atomically(tmp_path, capsys):
    code, out, _ = run(CASES["carpet_study"] + ["--out", str(tmp_path)], capsys)
    assert code == EXIT_OK and out == ""
    assert sorted(p.name for p in tmp_path.iterdir()) == ["carpet_study.csv"]
    rows = list(csv.reader(io.StringIO((tmp_path / "carpet_study.csv").read_text())))
    assert rows[0] == ["section", "level", "abscissa", "ratio", "components"]
    assert len(rows) == 1 + 4 * 3


def test_findings_exit_zero(capsys):
    code, out, _ = run(["audit", "--model", "star:3"], capsys)
    assert code == EXIT_OK and "counterexample" in out


def test_corrupt_spec_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"cells": [')
    code, _, err = run(["audit", "--model", f"file:{bad}"], capsys)
    assert code == EXIT_INPUT and "not valid JSON" in err


def test_spec_file_model(tmp_path, capsys):
    from perimkit import build_from_string, save_model

    path = tmp_path / "m.json"
    save_model(build_from_string("star:4"), path)
    code, out, _ = run(["decompose", "--model", f"file:{path}", "--set", "0,1"], capsys)
    assert code == EXIT_OK
    assert out.split("== components")[1] == GOLDEN.joinpath("decompose_star4.txt").read_text().split("== components")[1]


@pytest.mark.parametrize(
    "args",
    [
        ["decompose", "--model", "grid:2x2", "--set", "e1"],
        ["decompose", "--model", "star:3", "--set", "e9"],
        ["decompose", "--model", "torus:3", "--set", "0"],
        ["decompose", "--set", "0"],
        ["extreme", "--model", "grid:2x1:1", "--support", "0,1,2"],
    ],
)
def test_bad_input_exits_nonzero(args, capsys):
    assert run(args, capsys)[0] == EXIT_INPUT


def test_cap_exceeded_exit(capsys):
    args = ["decompose", "--model", "grid:2x2", "--set", "0-3", "--algorithm", "brute", "--cap-brute", "2"]
    code, _, err = run(args, capsys)
    assert code == EXIT_CAP and "cap" in err


def test_caps_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("PERIMKIT_CAPS", "free=2")
    assert run(["extreme", "--model", "grid:3x1", "--support", "0-2"], capsys)[0] == EXIT_CAP
    assert run(["extreme", "--model", "grid:3x1", "--support", "0-2", "--cap-free", "3"], capsys)[0] == EXIT_OK
    monkeypatch.setenv("PERIMKIT_CAPS", "bogus=1")
    assert run(["verify", "--model", "star:3"], capsys)[0] == EXIT_INPUT


def test_verify_reports_failure(monkeypatch, capsys):
    from perimkit import cli

    def broken(model, caps, seed, samples):
        return [["complementation", 1, 1, "FAIL"]]

    monkeypatch.setattr(cli, "_verify_suites", broken)
    code, out, _ = run(["verify", "--model", "star:3"], capsys)
    assert code == EXIT_FAIL and "FAIL" in out


def test_verify_shipped_models(capsys):
    code, out, _ = run(["verify", "--samples", "10"], capsys)
    assert code == EXIT_OK and "FAIL" not in out


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "perimkit.cli", "decompose", "--model", "star:4", "--set", "e1,e2", "--algorithm", "brute"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout == GOLDEN.joinpath("decompose_star4.txt").read_text()
