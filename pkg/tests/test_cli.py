"""Command-line interface: exit codes, formats, and rerun determinism."""

import json
import subprocess
import sys

import pytest

from slitflow.cli import main

RUN = [sys.executable, "-m", "slitflow.cli"]


def _run(args, **kw):
    return subprocess.run(RUN + args, capture_output=True, text=True, **kw)


def test_classify_exits_zero_and_emits_csv(capsys):
    rc = main(["classify", "--kappa", "4", "--alpha", "0.5"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("# slitflow")
    assert lines[1].startswith("# config")
    assert "family" in lines[2]
    assert any("chordal-drift" in ln for ln in lines[3:])


def test_classify_json_format(capsys):
    rc = main(["classify", "--kappa", "6", "--format", "json"])
    out = capsys.readouterr().out
    assert rc == 0
    payload = json.loads(out)
    names = {r["family"] for r in payload["rows"]}
    assert "radial6-drift" in names
    assert payload["header"]["tool"] == "slitflow"


def test_ndjson_format(capsys):
    rc = main(["classify", "--kappa", "3", "--format", "ndjson"])
    out = capsys.readouterr().out.strip().splitlines()
    assert rc == 0
    assert "header" in json.loads(out[0])
    json.loads(out[-1])


def test_stochastic_command_requires_seed():
    proc = _run(["simulate"])
    assert proc.returncode == 2
    assert "seed" in proc.stderr


def test_bad_flag_value_exits_two():
    proc = _run(["simulate", "--seed", "1", "--T", "-0.5"])
    assert proc.returncode == 2


def test_bad_complex_exits_two():
    proc = _run(["simulate", "--seed", "1", "--z", "zebra"])
    assert proc.returncode == 2


def test_unknown_subcommand_exits_two():
    proc = _run(["frobnicate"])
    assert proc.returncode == 2


def test_simulate_deterministic_rerun(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--seed", "7", "--z", "0.5+1.2i", "--n-paths", "6"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_merge_flags_win(tmp_path, capsys):
    cfgf = tmp_path / "c.json"
    cfgf.write_text(json.dumps({"kappa": 6.0, "alpha": 0.25}))
    rc = main(["classify", "--config", str(cfgf), "--kappa", "3"])
    out = capsys.readouterr().out
    assert rc == 0
    header = json.loads(out.splitlines()[1].removeprefix("# config "))
    assert header["kappa"] == 3          # flag overrides file
    assert header["alpha"] == 0.25       # file overrides default
    assert "threads" not in header       # runtime knob stripped


def test_config_file_invalid_json_exits_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    proc = _run(["classify", "--config", str(bad)])
    assert proc.returncode == 2


def test_sc_residual_passes(capsys):
    rc = main(["sc-residual", "--kappa", "6", "--alpha", "0.3",
               "--z", "0.5+0.8i"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "True" in out


def test_check_identities_exits_zero(capsys):
    rc = main(["check-identities", "--kappa", "4", "--alpha", "0.3",
               "--seed", "1", "--n-pairs", "50"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "lie_b_green" in out


def test_gff_couple_deterministic_across_threads(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["gff-couple", "--seed", "3", "--n-samples", "60",
            "--T", "0.05", "--dt", "1e-3"]
    assert main(base + ["--threads", "1", "--out", str(a)]) in (0, 1)
    assert main(base + ["--threads", "3", "--out", str(b)]) in (0, 1)
    assert a.read_bytes() == b.read_bytes()
