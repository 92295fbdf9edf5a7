import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnc.circuits import (
    XOR_SOURCE, NetlistError, all_vectors, compile_netlist, depth, eval_boolean, parse_netlist, random_netlist,
    subcircuit, wire_values,
)
from crnc.constructions import build_nand
from crnc.model import is_modular
from crnc.signals import make_rng


def test_parse_xor():
    nl = parse_netlist(XOR_SOURCE)
    assert nl.G == 3 and nl.n == 2 and nl.m == 1
    assert depth(nl) == 2


def test_gates_any_order():
    lines = XOR_SOURCE.splitlines()
    shuffled = "\n".join(lines[:2] + [lines[4], lines[2], lines[3]])
    nl = parse_netlist(shuffled)
    assert [g.out for g in nl.gates][-1] == "Y"
    assert eval_boolean(nl, "01") == "1"


def test_cycle_diagnostic():
    with pytest.raises(NetlistError) as e:
        parse_netlist("INPUTS A, B\nOUTPUTS Y\nY = NAND(A, Y)\n")
    assert any("cycle" in m for _, m in e.value.diagnostics)


def test_other_diagnostics():
    bad = "INPUTS A\nOUTPUTS Y, W\nY = NAND(A, B)\nY = NAND(A, A)\nZ = NAND(A)\n"
    with pytest.raises(NetlistError) as e:
        parse_netlist(bad)
    msgs = " | ".join(m for _, m in e.value.diagnostics)
    for word in ("undefined", "duplicate"):
        assert word in msgs
    lines = {line for line, _ in e.value.diagnostics}
    assert 3 in lines and 4 in lines


def test_identity_circuit():
    nl = parse_netlist("INPUTS A, B\nOUTPUTS A, B\n")
    assert nl.G == 0 and depth(nl) == 0
    for w in all_vectors(2):
        assert eval_boolean(nl, w) == w


def test_depth_examples():
    single = parse_netlist("INPUTS A, B\nOUTPUTS Y\nY = NAND(A, B)\n")
    assert depth(single) == 1
    chain = ["INPUTS A, B", "OUTPUTS G5", "G1 = NAND(A, B)"] + [f"G{i} = NAND(G{i - 1}, A)" for i in range(2, 6)]
    assert depth(parse_netlist("\n".join(chain))) == 5


def test_truth_tables():
    xor = parse_netlist(XOR_SOURCE)
    assert [eval_boolean(xor, w) for w in ("00", "01", "10", "11")] == ["0", "1", "1", "0"]
    nand = parse_netlist("INPUTS A, B\nOUTPUTS Y\nY = NAND(A, B)\n")
    assert [eval_boolean(nand, w) for w in all_vectors(2)] == ["1", "1", "1", "0"]
    assert eval_boolean(nand, (1, 1)) == (0,)
    assert wire_values(xor, "10") == {"X1": 1, "X2": 0, "Z1": 1, "Z2": 0, "Y": 1}


def test_negated_output():
    nl = parse_netlist("INPUTS A, B\nOUTPUTS ~Y\nY = NAND(A, B)\n")
    assert eval_boolean(nl, "11") == "1"


def test_compile_xor(params):
    cc = compile_netlist(parse_netlist(XOR_SOURCE), params)
    assert len(cc.crn.reactions) == 15
    assert cc.gate_tau == 0.5
    assert sorted({rx.k for rx in cc.crn.reactions}) == pytest.approx([36.0, 108.0])
    assert set(cc.crn.states) == {"Z1", "Z1_bar", "Z2", "Z2_bar", "Y", "Y_bar"}
    assert set(cc.crn.inputs) == {"X1", "X1_bar", "X2", "X2_bar"}


def test_compile_single_gate_equals_nand(params):
    cc = compile_netlist(parse_netlist("INPUTS X1, X2\nOUTPUTS Y\nY = NAND(X1, X2)\n"), params)
    g = build_nand("X1", "X2", "Y", params)
    assert cc.crn == g.crn and dict(cc.x0) == dict(g.x0)


def test_compile_rejects_degenerate(params):
    with pytest.raises(ValueError):
        compile_netlist(parse_netlist("INPUTS A, B\nOUTPUTS A\n"), params)


def test_random_eight_gate_dag(params):
    nl = random_netlist(make_rng(3), 4, 8)
    cc = compile_netlist(nl, params)
    assert len(cc.crn.reactions) == 40
    parts = [cc.crn.reactions[r.start:r.stop] for r in cc.gate_reactions.values()]
    assert len(parts) == 8


@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(1, 8))
def test_random_netlist_properties(seed, n, g):
    nl = random_netlist(make_rng(seed), n, g)
    d = depth(nl)
    assert 1 <= d <= g
    # roundtrip through text
    again = parse_netlist(nl.to_text())
    assert depth(again) == d
    for w in all_vectors(n):
        assert eval_boolean(again, w) == eval_boolean(nl, w)
    # depth is monotone: a sub-cone never gets deeper
    for ref in nl.outputs:
        assert depth(subcircuit(nl, [ref])) <= d


@given(st.integers(0, 10**6))
def test_depth_grows_by_one_when_appending(seed):
    nl = random_netlist(make_rng(seed), 3, 4)
    out = nl.outputs[0].wire
    text = nl.to_text().replace(f"OUTPUTS {', '.join(str(o) for o in nl.outputs)}", "OUTPUTS NEW")
    text += f"NEW = NAND({out}, X1)\n"
    bigger = parse_netlist(text)
    assert depth(bigger) >= depth(nl)
    assert depth(subcircuit(bigger, ["NEW"])) == depth(subcircuit(nl, [out])) + 1
