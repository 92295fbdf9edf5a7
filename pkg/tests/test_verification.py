import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crnc.cases import ACCEPTANCE_DELTA, demo_case, nand_schedule
from crnc.constructions import DeltaVector
from crnc.kinetics import SimConfig, measure, simulate
from crnc.model import Context
from crnc.signals import BitSchedule, ConstantSignal, SampledSignal, schedule_to_signal
from crnc.verification import (
    Condition, IntervalSpec, check_requirement, derive_intervals, encode_bits, intervals_from_json,
    intervals_to_json, nand_requirement, robust_sweep, sample_perturbation, thread_count,
)


def _const_output(y, ybar, horizon=5.0):
    t = np.linspace(0, horizon, 101)
    return SampledSignal(t, np.tile([y, ybar], (len(t), 1)), ("Y", "Y_bar"))


def test_condition_three_valued():
    c = Condition.of({"A": 1, "B": 1})
    assert c.evaluate({"A": 1, "B": 1}) is True
    assert c.evaluate({"A": 0, "B": None}) is False
    assert c.evaluate({"A": 1, "B": None}) is None
    d = Condition.of({"A": 0, "B": 0}, "any")
    assert d.evaluate({"A": 0, "B": None}) is True
    assert d.evaluate({"A": 1, "B": None}) is None
    assert Condition.of({"~A": 1}).holds({"A": 0})


def test_derive_nand_intervals():
    ivs = derive_intervals(nand_requirement(), nand_schedule(1.0), 1.0)
    got = [(iv.t1, iv.t2, iv.tag, dict(iv.expected)) for iv in ivs]
    assert got[0] == (0.0, 3.0, "phi11", {"Y": 0})
    assert got[1][0] == pytest.approx(3.1) and got[1][1:] == (9.0, "phi0", {"Y": 1})
    assert got[2][0] == pytest.approx(9.1) and got[2][1:] == (12.0, "phi0", {"Y": 1})


def test_short_trigger_gives_no_interval():
    s = BitSchedule.from_phases([(0.5, {"X1": 1, "X2": 1}), (3, {"X1": 0, "X2": 1})], 0.05)
    ivs = derive_intervals(nand_requirement(), s, 1.0)
    assert [iv.tag for iv in ivs] == ["phi0"]


def test_intervals_json_roundtrip():
    ivs = derive_intervals(nand_requirement(), nand_schedule(1.0), 1.0)
    assert intervals_from_json(intervals_to_json(ivs)) == ivs


def test_encode_bits():
    assert np.array_equal(encode_bits(("Y", "Y_bar", "Q_bar", "Q"), {"Y": 1, "Q": 0}), [1, 0, 1, 0])
    with pytest.raises(ValueError):
        encode_bits(("Z",), {"Y": 1})


def test_ideal_output_margin_equals_eps():
    iv = IntervalSpec(0.0, 5.0, "phi0", {"Y": 1})
    rep = check_requirement(_const_output(1.0, 0.0), [iv], eps=0.02, tau=1.0)
    assert rep.passed and rep.worst_margin == 0.02


def test_half_half_fails():
    iv = IntervalSpec(0.0, 5.0, "phi0", {"Y": 1})
    rep = check_requirement(_const_output(0.5, 0.5), [iv], eps=0.04, tau=1.0)
    assert not rep.passed
    assert rep.results[0].distance == pytest.approx(np.sqrt(0.5))


def test_check_requirement_validates_intervals():
    with pytest.raises(ValueError, match="shorter"):
        check_requirement(_const_output(1, 0), [IntervalSpec(0, 0.5, "x", {"Y": 1})], 0.03, 1.0)
    with pytest.raises(ValueError, match="horizon"):
        check_requirement(_const_output(1, 0), [IntervalSpec(0, 9, "x", {"Y": 1})], 0.03, 1.0)


def test_slack_is_separate_from_margin():
    iv = IntervalSpec(0.0, 5.0, "phi0", {"Y": 1})
    g = 0.03 / np.sqrt(2) + 1e-8
    rep = check_requirement(_const_output(1 - g, g), [iv], eps=0.03, tau=1.0)
    assert rep.worst_margin < 0 and rep.passed


def test_complementary_rail_bound():
    """A passing pair also bounds each rail separately."""
    case = demo_case("nand")
    rep = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA, 2, seed=1, keep_traces=True)
    assert rep.passed
    for tr in rep.traces:
        for iv in case.intervals:
            sel = (tr.times >= iv.t1 + 1.0) & (tr.times <= iv.t2)
            y = iv.expected["Y"]
            assert np.abs(tr["Y"][sel] - y).max() <= 0.03
            assert np.abs(tr["Y_bar"][sel] - (1 - y)).max() <= 0.03
            p = tr["Y"] + tr["Y_bar"]
            assert np.abs(p - p[0]).max() < 1e-6 and abs(p[0] - 1) <= ACCEPTANCE_DELTA.d3 * np.sqrt(2)


def test_trials_one_zero_noise_matches_deterministic():
    case = demo_case("nand")
    rep = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA, 1, seed=5,
                       noise="none", keep_traces=True)
    cfg = SimConfig.for_tau(1.0, case.schedule.horizon)
    base = schedule_to_signal(case.schedule, case.target.input_wires)
    tr = simulate(case.target.crn, case.target.x0, base, cfg)
    assert np.array_equal(rep.traces[0].values, tr.values)
    det = check_requirement(measure(tr, Context(base, case.target.output_species)), case.intervals, 0.03, 1.0)
    assert [r.distance for r in rep.results] == [r.distance for r in det.results]
    zero = DeltaVector(0, 0, 0, 0, eps=0.03)
    rep0 = robust_sweep(case.target, case.schedule, case.intervals, zero, 1, seed=9, keep_traces=True)
    assert np.array_equal(rep0.traces[0].values, tr.values)


def test_unperturbed_has_max_margin():
    case = demo_case("nand")
    zero = robust_sweep(case.target, case.schedule, case.intervals, DeltaVector(0, 0, 0, 0, eps=0.03), 1)
    full = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA, 3, seed=2)
    assert zero.passed and zero.worst_margin > full.worst_margin
    assert zero.worst_margin == pytest.approx(0.03, abs=1e-6)


def test_adversarial_delta_is_flagged_not_fatal():
    case = demo_case("nand")
    big = DeltaVector(0.5, 0.004, 0.004, 0.1)
    rep = robust_sweep(case.target, case.schedule, case.intervals, big, 2, seed=0)
    assert not rep.preconditions["d1<1/25"]
    assert "outside theorem preconditions" in rep.summary()
    assert len(rep.results) == 2 * len(case.intervals)


def test_rate_amplitude_clipping_flagged(params):
    case = demo_case("nand")
    huge = DeltaVector(0.03, 0.004, 0.004, 30.0)
    base = schedule_to_signal(case.schedule, case.target.input_wires)
    p = sample_perturbation(case.target, base, huge, 0, 0)
    assert p.rate_clipped
    assert all(rx.rate_fn.amplitude < rx.rate_fn.k for rx in p.crn.reactions)


@given(st.integers(0, 2**31), st.integers(0, 100), st.sampled_from(["sinusoidal", "random"]))
def test_perturbation_bounds(seed, trial, noise):
    case = demo_case("nand")
    d = ACCEPTANCE_DELTA
    base = schedule_to_signal(case.schedule, case.target.input_wires)
    p = sample_perturbation(case.target, base, d, seed, trial, noise)
    t = np.linspace(0, case.schedule.horizon, 3001)
    assert np.sqrt(((p.input_signal(t) - base(t)) ** 2).sum(axis=1)).max() <= d.d1 + 1e-12
    m = p.meas_noise(t)
    assert np.sqrt((m ** 2).sum(axis=1)).max() <= d.d2 + 1e-12
    dx = np.array([p.x0[s] - case.target.x0[s] for s in case.target.crn.states])
    assert np.linalg.norm(dx) <= d.d3 + 1e-12
    for rx, orig in zip(p.crn.reactions, case.target.crn.reactions):
        k = rx.rate_fn(t)
        assert np.abs(k - orig.k).max() <= d.d4 + 1e-12
        assert k.min() > 0


def test_sweep_is_thread_and_order_independent(monkeypatch):
    case = demo_case("nand")
    a = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA, 4, seed=11,
                     batch_size=2, threads=1)
    b = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA, 4, seed=11,
                     batch_size=2, threads=2)
    assert a.to_json() == b.to_json()
    c = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA, 4, seed=11, batch_size=4)
    assert np.allclose(a.trial_margins, c.trial_margins, rtol=0, atol=1e-12)
    monkeypatch.setenv("CRNC_THREADS", "1")
    assert thread_count(8) == 1


@settings(max_examples=4)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from(["sinusoidal", "random"]))
def test_monotone_margins(f1, f2, noise):
    """Shrinking every bound with the same noise shapes never lowers the margin."""
    lo, hi = sorted((f1, f2))
    case = demo_case("nand")
    kw = dict(trials=2, seed=4, noise=noise)
    small = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA.scaled(lo), **kw)
    large = robust_sweep(case.target, case.schedule, case.intervals, ACCEPTANCE_DELTA.scaled(hi), **kw)
    assert small.worst_margin >= large.worst_margin - 1e-9
    for a, b in zip(small.trial_margins, large.trial_margins):
        assert a >= b - 1e-9
