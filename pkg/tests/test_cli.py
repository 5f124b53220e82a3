from __future__ import annotations

import json
from types import SimpleNamespace

import pytest

from nchodge import __version__, cli
from nchodge.cli import (
    EXIT_COMPUTATION,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    cmd_graph_enum,
    cmd_hrr,
    cmd_todd,
    main,
)
from nchodge.pairing import SymmetrySweep
from nchodge.scalars import TauScalar
from nchodge.tracing import RECORDER

NON_ASSOCIATIVE = {
    "name": "broken",
    "dimension": 3,
    "basis": [
        {"label": "1", "p": 0, "q": 0},
        {"label": "a", "p": 1, "q": 1},
        {"label": "b", "p": 1, "q": 1},
        {"label": "c", "p": 2, "q": 2},
        {"label": "pt", "p": 3, "q": 3},
    ],
    "top": "pt",
    "products": [
        {"left": x, "right": y, "result": [{"label": z, "coeff": 1}]}
        for x, y, z in [("a", "a", "c"), ("a", "c", "pt"), ("c", "a", "pt"), ("b", "c", "pt"), ("c", "b", "pt")]
    ],
}


@pytest.fixture(autouse=True)
def quiet_tracing(monkeypatch):
    monkeypatch.delenv("NCHODGE_TRACE", raising=False)
    monkeypatch.delenv("NCHODGE_EXPORT_OTLP", raising=False)
    RECORDER.clear()


def test_hrr_command(capsys):
    args = SimpleNamespace(ring="builtin:p1", e="O", f="O(2)")
    assert cmd_hrr(args) == EXIT_OK
    assert capsys.readouterr().out.strip() == "chi = 3"


def test_hrr_through_main(capsys):
    assert main(["hrr", "--ring", "builtin:p2", "--e", "O", "--f", "O(1)"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "chi = 3"


def test_todd_command(capsys):
    args = SimpleNamespace(ring="builtin:p1", order=2, modified=False, sqrt=False)
    assert cmd_todd(args) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == ["1 + 1 h", "series = 1 + 1/2*z + 1/12*z^2"]


def test_modified_todd_of_k3(capsys):
    assert main(["todd", "--ring", "builtin:k3", "--modified", "--sqrt"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "1 + 1 pt"


def test_ring_show(capsys):
    assert main(["ring", "show", "--ring", "builtin:e"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ring e: dimension 1, rank 4" in out
    assert "hochschild: HH_-1=1, HH_0=2, HH_1=1" in out
    assert "periodic cyclic: even=2, odd=2" in out


def test_ring_validate_builtin_json(capsys):
    assert main(["ring", "validate", "--ring", "builtin:k3", "--format", "json"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is True
    assert report["ring"] == "k3"


def test_ring_validate_reports_violated_invariant(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(NON_ASSOCIATIVE), encoding="utf-8")
    assert main(["ring", "validate", "--ring", str(path)]) == EXIT_VALIDATION
    captured = capsys.readouterr()
    assert "ring broken: FAILED" in captured.out
    assert "[nchodge] invariant associativity violated" in captured.err


def test_loading_an_invalid_ring_exits_with_validation_status(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(NON_ASSOCIATIVE), encoding="utf-8")
    assert main(["todd", "--ring", str(path)]) == EXIT_VALIDATION
    assert "invariant associativity violated" in capsys.readouterr().err


def test_missing_document(tmp_path, capsys):
    assert main(["ring", "show", "--ring", str(tmp_path / "missing.json")]) == EXIT_VALIDATION
    assert "DocumentError" in capsys.readouterr().err


def test_pair_commands(capsys):
    assert main(["pair", "--kind", "mukai", "--ring", "builtin:k3", "--a", "O", "--b", "O"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "mukai = 2"
    assert main(["pair", "--kind", "hres", "--ring", "builtin:e", "--a", "1", "--b", "pt"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "hres = 1"
    assert main(["pair", "--kind", "can", "--ring", "builtin:p1", "--a", "1", "--b", "1"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "can = -1"


def test_symmetry_command(capsys):
    assert main(["symmetry", "--ring", "builtin:e"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "symmetry e: ok (16 pairs)"


def test_symmetry_sweeps_the_whole_quintic(capsys):
    assert main(["symmetry", "--ring", "builtin:quintic", "--twist", "K"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "symmetry quintic-diamond: ok (42436 pairs)"


def test_symmetry_failures_exit_with_validation_status(monkeypatch, capsys):
    broken = SymmetrySweep("e", 16, (("1", "pt", TauScalar.rational(2)),))
    monkeypatch.setattr(cli, "symmetry_sweep", lambda ring, which: broken)
    assert main(["symmetry", "--ring", "builtin:e"]) == EXIT_VALIDATION
    captured = capsys.readouterr()
    assert captured.out.strip() == "symmetry e: FAILED on 1 of 16 pairs"
    assert "[nchodge] symmetry violated on 1, pt: 2" in captured.err


@pytest.mark.parametrize("bundle,chi", [("O(1)", "4"), ("O(1,2)", "6"), ("O(-1, 3)", "0"), ("O(2,0)", "3")])
def test_hrr_on_a_product_ring(capsys, bundle, chi):
    assert main(["hrr", "--ring", "builtin:p1xp1", "--e", "O", "--f", bundle]) == EXIT_OK
    assert capsys.readouterr().out.strip() == f"chi = {chi}"


def test_symmetry_on_non_calabi_yau_is_a_computation_error(capsys):
    assert main(["symmetry", "--ring", "builtin:p2"]) == EXIT_COMPUTATION
    assert "NotCalabiYau" in capsys.readouterr().err


def test_family_check(capsys):
    assert main(["family", "check", "--family", "builtin:k3-2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("family k3-2: ok")
    assert "[ok] flatness" in out


def test_family_check_failure_json(capsys):
    assert main(["family", "check", "--family", "builtin:quintic-noncommuting", "--format", "json"]) == EXIT_VALIDATION
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is False


def test_family_document_without_ring(tmp_path, capsys):
    path = tmp_path / "family.json"
    path.write_text(json.dumps({"mu": 1}), encoding="utf-8")
    assert main(["family", "check", "--family", str(path)]) == EXIT_COMPUTATION
    assert "FamilyError" in capsys.readouterr().err


def test_graph_weight_forced_zero(capsys):
    assert main(["graph", "weight", "--graph", "builtin:doubled", "--samples", "100", "--seed", "7"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == ["mean = 0", "std_error = 0", "samples = 0", "seed = 7", "reason = doubled-edge"]


def test_graph_weight_from_file(tmp_path, capsys):
    path = tmp_path / "wedge.json"
    path.write_text(json.dumps({"family": "disk", "aerial": 1, "boundary": 1, "edges": [[0, 1]]}), encoding="utf-8")
    assert main(["graph", "weight", "--graph", str(path), "--samples", "500", "--seed", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "mean = 1" in out
    assert "samples = 500" in out


def test_graph_weight_rejects_empty_budget(capsys):
    assert main(["graph", "weight", "--graph", "builtin:wedge", "--samples", "0"]) == EXIT_COMPUTATION
    assert "SampleBudgetZero" in capsys.readouterr().err


def test_graph_enum(capsys):
    args = SimpleNamespace(aerial=1, boundary=2, max_edges=2, family="disk")
    assert cmd_graph_enum(args) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    assert json.loads(lines[-1])["edges"] == [[0, 1], [0, 2]]


@pytest.mark.parametrize(
    "argv",
    [
        ["hrr", "--ring", "builtin:p1"],
        ["frobnicate"],
        ["pair", "--kind", "bogus", "--ring", "builtin:p1", "--a", "1", "--b", "1"],
        [],
    ],
)
def test_usage_errors_exit_64(argv, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == EXIT_USAGE


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_trace_flag_writes_spans_to_stderr(monkeypatch, capsys):
    monkeypatch.setenv("NCHODGE_TRACE", "1")
    monkeypatch.setenv("NCHODGE_EXPORT_OTLP", "0")
    monkeypatch.delenv("NCHODGE_TRACE_PATH", raising=False)
    assert main(["hrr", "--ring", "builtin:p1", "--e", "O", "--f", "O"]) == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out.strip() == "chi = 1"
    ops = [json.loads(line)["attrs"]["nchodge.op"] for line in captured.err.strip().splitlines()]
    assert "hrr_chi" in ops
