"""Front-end plumbing: dispatch,validation, records, caching, exit codes."""

import json

import pytest

from kahlerlab.cli import main
from kahlerlab.ckem import SWEEP_CSV_HEADER, b_kappa, sweep


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_pkappa_single_row_matches_library(workdir, capsys):
    code = main(["pkappa", "--kappa", "1.25", "--no-cache"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == SWEEP_CSV_HEADER
    row = sweep([1.25])[0]
    fields = out[1].split(",")
    assert float(fields[0]) == 1.25
    assert float(fields[1]) == pytest.approx(b_kappa(1.25), rel=1e-15)
    assert float(fields[2]) == pytest.approx(row.c, rel=1e-15)
    assert fields[6] == "ExistsCKEM"


def test_pkappa_rejects_bad_kappa(workdir, capsys):
    assert main(["pkappa", "--kappa", "0.5", "--no-cache"]) == 2
    assert main(["pkappa", "--no-cache"]) == 2  # neither --kappa nor range


def test_kappa0_record_and_cache_roundtrip(workdir):
    out1 = workdir / "a.json"
    out2 = workdir / "b.json"
    assert main(["kappa0", "--out", str(out1)]) == 0
    assert main(["kappa0", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rec1 = json.loads((workdir / "a.json.record.json").read_text())
    rec2 = json.loads((workdir / "b.json.record.json").read_text())
    assert rec1["input_hash"] == rec2["input_hash"]
    assert rec1["cache_hit"] is False and rec2["cache_hit"] is True
    verdict = json.loads(out1.read_text())
    assert verdict["label_below"] == "NegativeSomewhere"
    assert verdict["label_above"] == "ExistsCKEM"
    assert 1.0 < verdict["kappa0"] < 1.1


def test_quant_expansion_header_and_payload(workdir, capsys):
    code = main(
        ["quant-expansion", "--b0", "1", "--p", "4", "--k-range", "8,12,16,24", "--no-cache"]
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,residual_sup,slope_running"
    assert len(lines) == 6  # header + 4 rows + json trailer
    tail = json.loads(lines[-1])
    assert -2.3 < tail["slope"] < -1.7


def test_quant_balanced_round_start(workdir, capsys):
    code = main(
        ["quant-balanced", "--b0", "inf", "--p", "1", "--k-range", "4,8", "--no-cache"]
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,n_iter,residual,scal_dev"
    for line in lines[1:]:
        k, n_iter, resid, dev = line.split(",")
        assert int(n_iter) <= 2
        assert float(resid) < 1e-10


def test_quant_balanced_rejects_bad_b0(workdir):
    assert main(["quant-balanced", "--b0", "-2", "--no-cache"]) == 2
    assert main(["quant-balanced", "--b0", "what", "--no-cache"]) == 2


def test_verify_exit_codes(workdir, capsys):
    assert main(["verify", "--tags", "numerics", "--no-cache"]) == 0
    capsys.readouterr()
    assert main(["verify", "--tags", "numerics", "--breach", "quad-exactness", "--no-cache"]) == 1
    capsys.readouterr()
    assert main(["verify", "--tags", "bogus", "--no-cache"]) == 2
    assert main(["verify", "--breach", "bogus", "--no-cache"]) == 2


def test_mabuchi_probe_explicit_kappa(workdir, capsys):
    code = main(
        ["mabuchi-probe", "--kappa", "1.0135", "--k-range", "0,1,2,4,8", "--no-cache"]
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,energy,slope_fit"
    verdict = json.loads(lines[-1])
    assert verdict["label"] == "NegativeSomewhere"
    assert verdict["slope"] < 0.0
