import json
from pathlib import Path

import pytest

from sgdlog import load_spec, make_handle, parse_word
from sgdlog.cli import main
from sgdlog.membership import evaluate_word

SPECS = Path(__file__).resolve().parent.parent / "scripts" / "specs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(out[-1]) if out else None


def test_rho_example(capsys):
    code, doc = run(capsys, "rho", "--spec", SPECS / "rho_t3_r4.json")
    assert code == 0
    assert (doc["t"], doc["r"], doc["schema_version"]) == (3, 4, 1)


@pytest.mark.parametrize("spec,word,want", [("rho_t5_r3.json", "g^2", 2), ("rho_t1_r1.json", "g", 1)])
def test_dlog_examples(capsys, spec, word, want):
    code, doc = run(capsys, "dlog", "--spec", SPECS / spec, "--x", word)
    assert code == 0 and doc["a"] == want


@pytest.mark.parametrize("mode", ["classical", "sampling", "statevector"])
@pytest.mark.parametrize("spec", ["rho_t5_r3.json", "transformation_n6.json", "matrix_2x2_mod5.json"])
@pytest.mark.parametrize("e", [1, 2, 5, 9])
def test_dlog_round_trip(capsys, mode, spec, e):
    code, doc = run(capsys, "dlog", "--spec", SPECS / spec, "--x", f"g^{e}", "--mode", mode, "--seed", e)
    assert code == 0
    h = make_handle(load_spec(SPECS / spec))
    g = h.generator("g")
    assert 1 <= doc["a"] <= e
    assert parse_word(h, f"g^{doc['a']}") == parse_word(h, f"g^{e}") == h.oracle.pow(g, e)


@pytest.mark.parametrize("x,y", [("g^7", "g^2"), ("g^4", "g"), ("g^3", "g^3")])
def test_shifted_round_trip(capsys, x, y):
    spec = SPECS / "transformation_n6.json"
    code, doc = run(capsys, "shifted-dlog", "--spec", spec, "--x", x, "--y", y, "--seed", 3)
    assert code == 0
    h = make_handle(load_spec(spec))
    assert h.oracle.mul(parse_word(h, y), parse_word(h, f"g^{doc['a']}")) == parse_word(h, x)


@pytest.mark.parametrize("word", ["g1", "g2", "g1^2*g2", "g1*g2^3", "g2^4"])
def test_membership_round_trip(capsys, word):
    spec = SPECS / "lowerbound_n4_k2.json"
    code, doc = run(capsys, "membership", "--spec", spec, "--x", word)
    assert code == 0
    h = make_handle(load_spec(spec))
    gens = [h.generator(n) for n in doc["generators"]]
    assert evaluate_word(h, gens, doc["a"]) == parse_word(h, word)


def test_not_a_power_exits_1(capsys, tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"family": "matrix", "dimension": 1, "modulus": 13, "generators": [[[3]], [[2]]]}))
    code, doc = run(capsys, "dlog", "--spec", p, "--x", "g2", "--g", "g1")
    assert code == 1 and doc["error"] == "NotAPower"


def test_not_member_exits_1(capsys, tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"family": "matrix", "dimension": 1, "modulus": 13, "generators": [[[3]], [[9]], [[2]]]}))
    code, doc = run(capsys, "membership", "--spec", p, "--x", "g3", "--generators", "g1,g2")
    assert code == 1 and doc["error"] == "NotMember"


@pytest.mark.parametrize("argv", [
    ["rho", "--spec", "/nonexistent.json"],
    ["dlog", "--spec", str(SPECS / "rho_t3_r4.json"), "--x", "h^2"],
    ["dlog", "--spec", str(SPECS / "rho_t3_r4.json"), "--x", "g^^2"],
])
def test_malformed_input_exits_2(capsys, argv):
    code, doc = run(capsys, *argv)
    assert code == 2 and "error" in doc


def test_bad_spec_exits_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run(capsys, "rho", "--spec", p)[0] == 2
    p.write_text(json.dumps({"family": "lowerbound", "n": 2, "k": 2, "pi": [[0], [0], [1]]}))
    assert run(capsys, "rho", "--spec", p, "--g", "g1")[0] == 2


def test_seed_env_fallback(capsys, monkeypatch):
    spec = SPECS / "matrix_2x2_mod5.json"
    monkeypatch.setenv("SGDLOG_SEED", "11")
    _, a = run(capsys, "rho", "--spec", spec)
    _, b = run(capsys, "rho", "--spec", spec, "--seed", 11)
    assert a == b
    monkeypatch.setenv("SGDLOG_SEED", "eleven")
    assert run(capsys, "rho", "--spec", spec)[0] == 2


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    _, doc = run(capsys, "rho", "--spec", SPECS / "rho_t3_r4.json", "--out", out)
    assert json.loads(out.read_text(encoding="utf-8")) == doc


def test_help_lists_csv_columns(capsys):
    with pytest.raises(SystemExit):
        main(["experiment", "--help"])
    text = capsys.readouterr().out
    assert "size,k,trial,product_queries,permutation_queries,charged_queries,success" in text
    assert "schema_version" in text


def test_experiment_byte_identical(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "perm-inversion", "k": 2, "sizes": [3, 5], "trials": 3, "seed": 4}))
    outs = []
    for jobs, name in ((1, "a"), (2, "b"), (1, "c")):
        code, doc = run(capsys, "experiment", "--config", cfg, "--out-dir", tmp_path / name, "--jobs", jobs)
        assert code == 0
        outs.append((tmp_path / name / "perm-inversion.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    summary = json.loads((tmp_path / "a" / "perm-inversion.summary.json").read_text(encoding="utf-8"))
    assert summary["schema_version"] == 1 and summary["success_rate"] == 1.0


def test_selftest_reports_every_fast_criterion(capsys):
    code, doc = run(capsys, "selftest")
    assert set(doc["criteria"]) == {"1", "2", "3", "4", "5", "7", "8", "10"}
    assert doc["passed"] == all(doc["criteria"].values())
    assert code == (0 if doc["passed"] else 1)
