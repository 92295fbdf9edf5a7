import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnc.constructions import (
    DeltaVector, GateParams, build_d_flip_flop, build_d_latch, build_nand, build_sr_latch, rate_constant,
)
from crnc.model import net_effect


def test_rate_constant_values():
    assert rate_constant(GateParams(DeltaVector(0.03, 0, 0, 0.1), 1.0)) == pytest.approx(23.0)
    assert rate_constant(GateParams(DeltaVector(0.03, 0, 0, 0.0), 1.0)) == pytest.approx(13.0)
    assert rate_constant(GateParams(DeltaVector(0.03, 0, 0, 0.1), 0.5)) == pytest.approx(36.0)


def test_delta_vector():
    d = DeltaVector.parse("0.03,0.004,0.004,0.1")
    assert d.eps == 0.03 and d.admissible
    assert d.scaled(0.5).as_tuple() == (0.015, 0.002, 0.002, 0.05)
    assert d.scaled(0.5).eps == 0.03
    assert not DeltaVector(0.5, 0, 0, 0).admissible
    with pytest.raises(ValueError):
        DeltaVector.parse("1,2,3")
    with pytest.raises(ValueError):
        DeltaVector(-0.1, 0, 0, 0)


def test_nand_structure(params):
    g = build_nand("X1", "X2", "Y", params)
    ks = sorted(rx.k for rx in g.crn.reactions)
    assert len(ks) == 5
    assert ks == pytest.approx([23, 23, 23, 69, 69])
    assert set(g.crn.states) == {"Y", "Y_bar"}
    for rx in g.crn.reactions:
        for u in g.crn.inputs:
            assert net_effect(rx, u) == 0
        assert net_effect(rx, "Y") + net_effect(rx, "Y_bar") == 0
    assert g.x0 == {"Y": 1.0, "Y_bar": 0.0}


def test_nand_complement_rail_wiring(params):
    g = build_nand("~A", "B", "~Y", params)
    assert set(g.crn.inputs) == {"A", "A_bar", "B", "B_bar"}
    assert g.outputs == (("Y_bar", "Y"),)


def test_nand_rejects_bad_x0(params):
    with pytest.raises(ValueError, match="sums"):
        build_nand("X1", "X2", "Y", params, {"Y": 0.7, "Y_bar": 0.7})
    with pytest.raises(ValueError):
        build_nand("X1", "X1", "Y", params)


def test_sr_latch_structure(params):
    g = build_sr_latch("~S", "~R", "Q1", "~Q2", params)
    assert len(g.crn.reactions) == 10
    assert set(g.crn.states) == {"Q1", "Q1_bar", "Q2", "Q2_bar"}
    assert set(g.crn.inputs) == {"S", "S_bar", "R", "R_bar"}
    assert sorted({rx.k for rx in g.crn.reactions}) == pytest.approx([36.0, 108.0])
    for a, b in g.outputs:
        assert g.x0[a] + g.x0[b] == 1.0


def test_d_latch_structure(params):
    g = build_d_latch("D", "E", "Q", params)
    assert len(g.crn.reactions) == 4 and len(g.crn.states) == 2
    assert all("E_bar" not in dict(rx.reactants) for rx in g.crn.reactions)
    assert g.crn.unused_inputs() == ["E_bar"]
    assert g.notes == ("input E_bar is declared but unused",)
    for rx in g.crn.reactions:
        assert net_effect(rx, "Q") + net_effect(rx, "Q_bar") == 0


def test_flip_flop_composition(params):
    g = build_d_flip_flop("D", "CLK", "Q", "M", params)
    assert len(g.crn.reactions) == 8
    assert set(g.crn.states) == {"Q", "Q_bar", "M", "M_bar"}
    assert set(g.crn.inputs) == {"D", "D_bar", "CLK", "CLK_bar"}
    slave = [rx for rx in g.crn.reactions if "CLK_bar" in dict(rx.reactants)]
    assert len(slave) == 2


@given(st.floats(0.0, 0.5), st.floats(0.1, 5.0))
def test_rate_formula_property(d4, tau):
    k = rate_constant(GateParams(DeltaVector(0.03, 0, 0, d4), tau))
    assert k == pytest.approx(100 * d4 + 13 / tau)
    assert k > d4
