import json

import numpy as np
import pytest

from charfact import cli
from charfact.cli import EXIT_FAIL, EXIT_INPUT, EXIT_PASS, main, recompute_pass
from charfact.factorize import julia_halmos


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def scalar_tuple(*xs):
    return [[[x]] for x in xs]


def generate(tmp_path, kind, seed=0, n=2, dims=(2, 1)):
    out = tmp_path / f"{kind}-{seed}.json"
    assert main(["generate", kind, "--seed", str(seed), "--n", str(n), "--dims",
                 *map(str, dims), "--out", str(out)]) == EXIT_PASS
    return str(out)


def run_json(capsys, argv):
    code = main(argv + ["--format", "json"])
    return code, json.loads(capsys.readouterr().out)


# -- check ---------------------------------------------------------------------

def test_check_exit_codes(tmp_path, capsys):
    ok = write(tmp_path / "ok.json", {"n": 2, "spaces": {"h": 1}, "T": scalar_tuple(0.6, 0.8)})
    assert main(["check", ok]) == EXIT_PASS
    assert "norm 1" in capsys.readouterr().out
    bad = write(tmp_path / "bad.json", {"n": 2, "spaces": {"h": 1}, "T": scalar_tuple(0.8, 0.8)})
    assert main(["check", bad]) == EXIT_FAIL
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["check", str(broken)]) == EXIT_INPUT


@pytest.mark.parametrize("doc", [
    {"n": 0, "spaces": {"h": 1}, "T": []},
    {"n": 1, "spaces": {"x": 1}, "T": [[[0]]]},
    {"n": 1, "spaces": {"h": 2}, "T": [[[0, 0], [0]]]},
    {"n": 2, "spaces": {"h": 1}, "T": [[[0]]]},
])
def test_malformed_instances(tmp_path, doc):
    assert main(["check", write(tmp_path / "m.json", doc)]) == EXIT_INPUT


def test_bad_trunc(tmp_path):
    ok = write(tmp_path / "ok.json", {"n": 1, "spaces": {"h": 1}, "T": scalar_tuple(0.5)})
    assert main(["charfun", ok, "--trunc", "0"]) == EXIT_INPUT


# -- charfun -------------------------------------------------------------------

def test_charfun_blaschke(tmp_path, capsys):
    path = write(tmp_path / "b.json", {"n": 1, "spaces": {"h": 1}, "T": scalar_tuple(0.5)})
    code, doc = run_json(capsys, ["charfun", path, "--trunc", "3"])
    assert code == EXIT_PASS and doc["pass"]
    assert doc["theorem"] == "3.1"
    c = doc["coefficients"]
    # complex entries are [re, im] pairs
    assert c[""] == [[[-0.5, 0]]]
    assert c["1"][0][0][0] == pytest.approx(0.75, abs=1e-14)
    assert c["111"][0][0][0] == pytest.approx(0.75 * 0.25, abs=1e-14)


def test_charfun_json_is_default(tmp_path, capsys):
    path = write(tmp_path / "b.json", {"n": 1, "spaces": {"h": 1}, "T": scalar_tuple(0.5)})
    main(["charfun", path, "--trunc", "1"])
    assert json.loads(capsys.readouterr().out)["pass"]


def test_charfun_trivial_defect(tmp_path, capsys):
    s = 2**-0.5
    path = write(tmp_path / "c.json", {"n": 2, "spaces": {"h": 1}, "T": scalar_tuple(s, s)})
    code, doc = run_json(capsys, ["charfun", path, "--trunc", "2"])
    assert code == EXIT_PASS and doc["coefficients"] == {}
    assert "trivial defect" in doc["note"]


def test_charfun_not_a_contraction(tmp_path, capsys):
    path = write(tmp_path / "x.json", {"n": 2, "spaces": {"h": 1}, "T": scalar_tuple(0.8, 0.8)})
    assert main(["charfun", path]) == EXIT_FAIL


# -- factorize -----------------------------------------------------------------

def test_factorize_scalar(tmp_path, capsys):
    doc = {"n": 1, "spaces": {"h1": 1, "h2": 1}, "A": [[[0]]], "B": [[[0]]], "L": [[0.5]]}
    code, cert = run_json(capsys, ["factorize", write(tmp_path / "s.json", doc)])
    assert code == EXIT_PASS
    assert cert["residuals"]["factorization"] <= 1e-12
    assert recompute_pass(cert) == cert["pass"] is True


def test_factorize_generated(tmp_path, capsys):
    code, cert = run_json(capsys, ["factorize", generate(tmp_path, "pair", 3), "--trunc", "3"])
    assert code == EXIT_PASS and cert["theorem"] == "3.2" and cert["seed"] == 3


def test_factorize_corrupted_T(tmp_path, capsys):
    doc = json.loads(open(generate(tmp_path, "pair", 4)).read())
    A = np.array([[[complex(*x) for x in row] for row in blk] for blk in doc["A"]])
    h1, h2 = doc["spaces"]["h1"], doc["spaces"]["h2"]
    T = np.zeros((2, h1 + h2, h1 + h2))
    T[:, :h1, :h1] = A.real
    doc["T"] = T.tolist()  # an unrelated tuple with zero coupling
    code, cert = run_json(capsys, ["factorize", write(tmp_path / "bad.json", doc)])
    assert code == EXIT_FAIL and not cert["pass"]


# -- converse ------------------------------------------------------------------

def test_converse_julia_halmos(tmp_path, capsys):
    w = julia_halmos([[0.5]]).matrix.conj().T
    doc = {"n": 1, "spaces": {"h1": 1, "h2": 1}, "A": [[[0]]], "B": [[[0]]], "w": w.real.tolist()}
    code, cert = run_json(capsys, ["converse", write(tmp_path / "w.json", doc)])
    assert code == EXIT_PASS and cert["residuals"]["coincidence"] <= 1e-10


def test_converse_rejects_vacuum_slice(tmp_path, capsys):
    w0 = julia_halmos([[0.5]]).matrix.T.real
    w = np.eye(3)
    w[:2, :2] = w0
    doc = {"n": 1, "spaces": {"h1": 1, "h2": 1}, "A": [[[0]]], "B": [[[0]]], "w": w.tolist()}
    code, cert = run_json(capsys, ["converse", write(tmp_path / "w.json", doc)])
    assert code == EXIT_FAIL and not cert["pass"]
    assert cert["residuals"]["fprime_dim"] >= 1


def test_converse_generated(tmp_path, capsys):
    code, cert = run_json(capsys, ["converse", generate(tmp_path, "converse", 1), "--trunc", "3"])
    assert code == EXIT_PASS and cert["theorem"] == "3.3"


# -- constrained ---------------------------------------------------------------

def test_constrained_commuting(tmp_path, capsys):
    code, cert = run_json(capsys, ["constrained", generate(tmp_path, "commuting", 2), "--grid", "8:0.9"])
    assert code == EXIT_PASS
    assert cert["residuals"]["factorization"] <= 1e-8 and cert["points"] == 8


def test_constrained_points_file(tmp_path, capsys):
    doc = {"n": 1, "spaces": {"h1": 1, "h2": 1}, "A": [[[0]]], "B": [[[0]]], "L": [[0.6]]}
    pts = write(tmp_path / "pts.json", [[[0.4, 0.0]]])
    code, cert = run_json(capsys, ["constrained", write(tmp_path / "s.json", doc), "--points", pts])
    assert code == EXIT_PASS and cert["residuals"]["factorization"] <= 1e-12


def test_constrained_rejects_noncommuting(tmp_path, capsys):
    T = [[[0, 0.5], [0, 0]], [[0, 0], [0.5, 0]]]
    path = write(tmp_path / "nc.json", {"n": 2, "spaces": {"h": 2}, "T": T})
    assert main(["constrained", path]) == EXIT_FAIL
    assert "commutator norm 0.25" in capsys.readouterr().err


def test_constrained_outside_ball(tmp_path):
    doc = {"n": 1, "spaces": {"h": 1}, "T": scalar_tuple(0.5)}
    pts = write(tmp_path / "pts.json", [[[1.5, 0.0]]])
    assert main(["constrained", write(tmp_path / "t.json", doc), "--points", pts]) == EXIT_INPUT


# -- selftest ------------------------------------------------------------------

def test_selftest_small(capsys):
    code, doc = run_json(capsys, ["selftest", "--seed", "5", "--count", "2", "--trunc", "2"])
    assert code == EXIT_PASS and doc["pass"] and doc["failing_seeds"] == []
    for inst in doc["instances"]:
        assert set(inst["certificates"]) == {"2.1", "2.2", "3.1", "3.2", "3.3", "4.x"}
        for cert in inst["certificates"].values():
            assert recompute_pass(cert) == cert["pass"]


def test_selftest_count_zero(capsys):
    assert main(["selftest", "--count", "0"]) == EXIT_PASS
    assert "nothing run" in capsys.readouterr().err


def test_selftest_replays_failing_seed(tmp_path, capsys):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("17\n")
    assert main(["selftest", "--seeds", str(seeds), "--trunc", "2", "--tol", "1e-300"]) == EXIT_FAIL
    assert "failing seeds: 17" in capsys.readouterr().out


# -- determinism ---------------------------------------------------------------

def test_byte_identical_reruns(tmp_path):
    src = generate(tmp_path, "pair", 9)
    outs = []
    for i in range(2):
        out = tmp_path / f"cert{i}.json"
        assert main(["factorize", src, "--trunc", "3", "--out", str(out)]) == EXIT_PASS
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    again = tmp_path / "again"
    again.mkdir()
    assert open(src, "rb").read() == open(generate(again, "pair", 9), "rb").read()


def test_dumps_canonical():
    text = cli.dumps({"b": 1.0, "a": [float("inf"), 0.1]})
    assert text.index('"a"') < text.index('"b"')
    assert "Infinity" in text
    assert json.loads(text)["a"][1] == 0.1
