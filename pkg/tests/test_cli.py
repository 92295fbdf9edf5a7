import json

import numpy as np
import pytest

from crnc import cli
from crnc.cases import d_latch_schedule
from crnc.circuits import XOR_SOURCE
from crnc.integrators import SimulationError
from crnc.model import IoCrn, Reaction, crn_to_json


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_compile_xor(tmp_path, capsys):
    (tmp_path / "xor.net").write_text(XOR_SOURCE)
    out = tmp_path / "crn.json"
    assert run("compile", tmp_path / "xor.net", "-o", out) == 0
    doc = json.loads(out.read_text())
    assert len(doc["reactions"]) == 15
    man = json.loads((tmp_path / "crn.manifest.json").read_text())
    assert man["command"] == "compile" and man["params"]["depth"] == 2
    assert len(man["inputs"]["netlist"]["sha256"]) == 64


def test_compile_cycle_exit_2(tmp_path, capsys):
    (tmp_path / "c.net").write_text("INPUTS A, B\nOUTPUTS Y\nY = NAND(A, Z)\nZ = NAND(Y, B)\n")
    assert run("compile", tmp_path / "c.net", "-o", tmp_path / "x.json") == 2
    assert "cycle" in capsys.readouterr().err
    assert not (tmp_path / "x.json").exists()


def test_single_gate_matches_demo_nand(tmp_path):
    (tmp_path / "n.net").write_text("INPUTS X1, X2\nOUTPUTS Y\nY = NAND(X1, X2)\n")
    assert run("compile", tmp_path / "n.net", "-o", tmp_path / "c.json") == 0
    assert run("demo", "nand", "--trials", 1, "-o", tmp_path / "demo") == 0
    a = json.loads((tmp_path / "c.json").read_text())
    b = json.loads((tmp_path / "demo" / "crn.json").read_text())
    assert a == b


def _decay(tmp_path):
    path = tmp_path / "decay.json"
    crn = IoCrn((), ("A", "B"), (Reaction.parse("A -> B", 1.0),))
    path.write_text(json.dumps(crn_to_json(crn, {"A": 1.0, "B": 0.0})))
    return path


def test_simulate_decay_csv(tmp_path):
    out = tmp_path / "t.csv"
    assert run("simulate", "--crn", _decay(tmp_path), "--horizon", 5, "--dt", 0.01, "-o", out) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.abs(data[:, 1] - np.exp(-data[:, 0])).max() < 1e-6


def test_simulate_zero_horizon(tmp_path):
    out = tmp_path / "t.csv"
    assert run("simulate", "--crn", _decay(tmp_path), "--horizon", 0, "-o", out) == 0
    assert out.read_text() == "t,A,B\n"


def test_simulate_is_reproducible(tmp_path):
    crn = _decay(tmp_path)
    for name in ("a.csv", "b.csv"):
        assert run("simulate", "--crn", crn, "--horizon", 2, "--noise", "random", "--seed", 3,
                   "-o", tmp_path / name) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_simulate_d_latch_timing(tmp_path):
    assert run("demo", "dlatch", "--trials", 1, "--noise", "none", "-o", tmp_path / "d") == 0
    out = tmp_path / "t.csv"
    svg = tmp_path / "t.svg"
    assert run("simulate", "--crn", tmp_path / "d" / "crn.json", "--schedule", tmp_path / "d" / "schedule.json",
               "-o", out, "--svg", svg) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    t, q = data[:, 0], data[:, 1]
    sched = d_latch_schedule()
    for seg in sched.segments:
        sel = (t >= seg.start + 1.0) & (t <= seg.end)
        if not sel.any():
            continue
        if seg.bits["E"] == 1:
            assert np.abs(q[sel] - seg.bits["D"]).max() < 0.03
    # held at 1 while disabled and D toggles (the last enabled value)
    hold = (t >= 11.5) & (t <= 17.0)
    assert q[hold].min() > 0.97
    assert svg.read_text().startswith("<svg")


def test_verify_exit_codes(tmp_path, capsys):
    d = tmp_path / "d"
    assert run("demo", "nand", "--trials", 1, "-o", d) == 0
    common = ["verify", "--crn", d / "crn.json", "--schedule", d / "schedule.json", "--intervals",
              d / "intervals.json", "--trials", 2, "--seed", 7]
    assert run(*common, "-o", tmp_path / "r.json") == 0
    assert json.loads((tmp_path / "r.json").read_text())["passed"] is True
    assert run(*common, "--eps", 0.001, "-o", tmp_path / "r2.json") == 1
    assert "FAIL" in capsys.readouterr().out


def test_input_errors(tmp_path, capsys):
    assert run("simulate", "--crn", tmp_path / "missing.json", "-o", tmp_path / "x.csv") == 2
    assert run("sweep", "nand", "--delta", "1,2", "--trials", 1, "-o", tmp_path / "x.json") == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert run("simulate", "--crn", tmp_path / "bad.json", "-o", tmp_path / "x.csv") == 2
    assert "error" in capsys.readouterr().err


def test_simulation_failure_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SimulationError("step size underflow", 0.5)

    monkeypatch.setattr(cli, "simulate", boom)
    assert run("simulate", "--crn", _decay(tmp_path), "--horizon", 1, "-o", tmp_path / "x.csv") == 3


def test_demo_xor_sinusoidal(tmp_path, capsys):
    d = tmp_path / "x"
    assert run("demo", "xor", "--noise", "sinusoidal", "--trials", 2, "-o", d) == 0
    ivs = json.loads((d / "intervals.json").read_text())
    assert sorted(iv["tag"] for iv in ivs) == ["phi_00", "phi_01", "phi_10", "phi_11"]
    names = {p.name for p in d.iterdir()}
    assert {"crn.json", "schedule.json", "intervals.json", "trace.csv", "timing.svg", "report.json",
            "manifest.json"} <= names


def test_demo_sr_random_seed7(tmp_path):
    d = tmp_path / "sr"
    assert run("demo", "sr", "--noise", "random", "--seed", 7, "--trials", 2, "-o", d) == 0
    rep = json.loads((d / "report.json").read_text())
    assert rep["passed"] and {r["tag"] for r in rep["results"]} == {"phi_set", "phi_reset"}


def test_demo_dff(tmp_path):
    d = tmp_path / "ff"
    assert run("demo", "dff", "--trials", 2, "-o", d) == 0
    rep = json.loads((d / "report.json").read_text())
    assert rep["flip_flop"]["passed"] and rep["flip_flop"]["worst_distance"] < 0.03


def test_demo_is_bit_reproducible(tmp_path):
    for name in ("a", "b"):
        assert run("demo", "nand", "--trials", 2, "--seed", 4, "-o", tmp_path / name) == 0
    for f in ("trace.csv", "report.json", "timing.svg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_lemmas_reports_phase2_failures(tmp_path, capsys):
    out = tmp_path / "l.json"
    code = run("lemmas", "--grid", "-o", out)
    rows = json.loads(out.read_text())
    assert len(rows) == 81 and all(r["lemma3_ok"] for r in rows)
    assert code == (0 if all(r["lemma4_ok"] for r in rows) else 1)
    assert "phase-1 bound: 81/81" in capsys.readouterr().out
