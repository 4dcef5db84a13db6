import json
import subprocess
import sys
from pathlib import Path

import pytest

from e0attack.cli import (EXIT_ASSERTION, EXIT_NOT_INVERTIBLE, EXIT_OK, EXIT_USAGE, OUTDIR_ENV,
                          main)
from e0attack.diffsys import DiffSystem
from e0attack.e0 import CipherState, Keystream
from e0attack.cnf import parse_dimacs

GOLDEN = Path(__file__).parent / "golden"
ZERO = "0" * 33


@pytest.fixture(autouse=True)
def _outdir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTDIR_ENV, str(tmp_path))
    return tmp_path


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:          # argparse usage errors
        code = e.code
    out, err = capsys.readouterr()
    return code, out, err


# -- keystream ------------------------------------------------------------------------------

def test_keystream_zero_state(capsys):
    assert run(["keystream", "--state", ZERO, "-n", "8"], capsys)[:2] == (EXIT_OK, "00000000\n")


def test_keystream_routes_agree(capsys):
    outs = [run(["keystream", "--random-key", "3", "-n", "200", "--route", r], capsys)[1]
            for r in ("oracle", "algebraic")]
    assert outs[0] == outs[1] and len(outs[0].strip()) == 200


def test_keystream_bad_hex(capsys):
    code, _, err = run(["keystream", "--state", "zz", "-n", "8"], capsys)
    assert code == EXIT_USAGE and "hex" in err


def test_keystream_needs_a_key(capsys):
    assert run(["keystream", "-n", "8"], capsys)[0] == EXIT_USAGE


def test_keystream_binary_file_and_manifest(capsys, _outdir):
    code, out, _ = run(["keystream", "--random-key", "1", "-n", "40", "--format", "binary",
                        "--start-clock", "200", "--out", "ks.bin"], capsys)
    assert code == EXIT_OK
    ks = Keystream.from_bytes((_outdir / "ks.bin").read_bytes())
    assert ks.start_clock == 200 and len(ks) == 40
    manifest = json.loads((_outdir / "keystream-manifest.json").read_text())
    assert manifest["command"] == "keystream" and manifest["seed"] == 1
    assert manifest["outputs"] == [str(_outdir / "ks.bin")]
    # rerun reproduces the artifact
    first = (_outdir / "ks.bin").read_bytes()
    run(["keystream", "--random-key", "1", "-n", "40", "--format", "binary",
         "--start-clock", "200", "--out", "ks.bin"], capsys)
    assert (_outdir / "ks.bin").read_bytes() == first


# -- invert -------------------------------------------------------------------------------------

def test_invert_preset_matches_golden(capsys):
    code, out, err = run(["invert", "--preset", "e0", "--roundtrip", "500"], capsys)
    assert code == EXIT_OK and "roundtrip ok" in err
    golden = DiffSystem.from_text((GOLDEN / "e0_inverse.txt").read_text())
    assert DiffSystem.from_text(out) == golden


def test_invert_toy_not_invertible(capsys, tmp_path):
    f = tmp_path / "toy.sys"
    f.write_text("x 1: x0*y0\ny 1: y0\n")
    code, _, err = run(["invert", str(f)], capsys)
    assert code == EXIT_NOT_INVERTIBLE and "not invertible" in err


def test_invert_file_roundtrip(capsys, tmp_path):
    f = tmp_path / "fib.sys"
    f.write_text("x 2: x0 + x1\n")
    code, out, _ = run(["invert", str(f), "--roundtrip", "20"], capsys)
    assert code == EXIT_OK and DiffSystem.from_text(out).feedback(0).degree() == 1


def test_invert_usage_errors(capsys, tmp_path):
    assert run(["invert"], capsys)[0] == EXIT_USAGE
    assert run(["invert", str(tmp_path / "missing.sys")], capsys)[0] == EXIT_USAGE


# -- gbalance -------------------------------------------------------------------------------------

def test_gbalance_single_and_all(capsys):
    code, out, _ = run(["gbalance", "0", "0", "0", "--check"], capsys)
    assert code == EXIT_OK and "zeros=8192" in out and "total=16384" in out
    code, out, _ = run(["gbalance", "--all", "--check"], capsys)
    lines = out.strip().splitlines()
    assert code == EXIT_OK and len(lines) == 8
    assert all("zeros=8192" in ln and "ones=8192" in ln for ln in lines)


def test_gbalance_usage(capsys):
    assert run(["gbalance", "0", "1"], capsys)[0] == EXIT_USAGE
    assert run(["gbalance", "0", "1", "2"], capsys)[0] == EXIT_USAGE


# -- attack ---------------------------------------------------------------------------------------

def test_attack_include_truth_k63(capsys, _outdir):
    code, out, _ = run(["attack", "--random-key", "7", "-K", "63", "--include-truth",
                        "--random", "8", "--seed", "1", "--offset", "200"], capsys)
    assert code == EXIT_OK
    assert "key recovered: True" in out and "survivors: 1" in out
    report = json.loads((_outdir / "attack-K63.json").read_text())
    assert report["key_recovered"] and report["survivors"] == 1
    assert report["recovered_keys"] == [CipherState.random(__import__("random").Random("key:7")).to_hex()]
    assert (_outdir / "attack-manifest.json").exists()


def test_attack_is_reproducible(capsys, _outdir):
    argv = ["attack", "--random-key", "2", "-K", "55", "--random", "20", "--seed", "4"]
    views = []
    for name in ("a.json", "b.json"):
        assert run(argv + ["--stats", name], capsys)[0] == EXIT_OK
        rep = json.loads((_outdir / name).read_text())
        for k in ("timing", "gb_times", "fast_times"):
            rep.pop(k)
        views.append(rep)
    assert views[0] == views[1]


def test_attack_exports_cnf(capsys, _outdir):
    code, _, _ = run(["attack", "--random-key", "2", "-K", "51", "--random", "2",
                      "--export-cnf", "2"], capsys)
    assert code == EXIT_OK
    base = parse_dimacs((_outdir / "attack-K51.cnf").read_text())
    g0 = parse_dimacs((_outdir / "attack-K51-guess00000.cnf").read_text())
    assert len(g0[1]) == len(base[1]) + 83
    assert (_outdir / "attack-K51-guess00001.cnf").exists()


def test_attack_needs_sampler(capsys):
    assert run(["attack", "--random-key", "1", "-K", "51"], capsys)[0] == EXIT_USAGE


def test_attack_bad_guess_file(capsys, tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("x25\n")
    code = run(["attack", "--random-key", "1", "-K", "51", "--random", "1",
                "--guess-vars", str(f)], capsys)[0]
    assert code == EXIT_USAGE


def test_attack_printed_g_form_can_miss_the_truth(capsys):
    # The printed G arrangement rejects the true guess for some keys, so the
    # include-truth assertion fires for at least one of a handful of keys.
    codes = {run(["attack", "--random-key", str(s), "-K", "51", "--include-truth",
                  "--g-form", "printed"], capsys)[0] for s in range(12)}
    assert EXIT_ASSERTION in codes


# -- cnf ----------------------------------------------------------------------------------------

def test_cnf_command(capsys, _outdir):
    code, out, _ = run(["cnf", "--random-key", "1", "-K", "12", "--guess", "truth"], capsys)
    assert code == EXIT_OK and "variables" in out
    nv, clauses, xors = parse_dimacs((_outdir / "instance-K12.cnf").read_text())
    assert nv > 0 and clauses and not xors
    assert (_outdir / "instance-K12.cnf.map").exists()
    code, _, _ = run(["cnf", "--random-key", "1", "-K", "12", "--xor", "--out", "x.cnf"], capsys)
    assert parse_dimacs((_outdir / "x.cnf").read_text())[2]


# -- entry point ---------------------------------------------------------------------------------

def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "e0attack.cli", "gbalance", "1", "1", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "zeros=8192" in res.stdout
    res = subprocess.run([sys.executable, "-m", "e0attack.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
