import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnc.signals import (
    BitSchedule, ConstantSignal, NoiseSpec, SampledSignal, add_noise, make_rng, schedule_to_signal, smoothstep,
    sup_distance,
)


def test_schedule_encoding():
    s = BitSchedule.from_phases([(10, {"X1": 1}), (10, {"X1": 0})], 0.2)
    sig = schedule_to_signal(s)
    assert np.allclose(sig(5.0), [1.0, 0.0])
    assert sig(10.1)[0] == pytest.approx(0.5)
    assert np.allclose(sig(15.0), [0.0, 1.0])


def test_two_wire_order():
    s = BitSchedule.from_phases([(4, {"X1": 1, "X2": 0})], 0.1)
    assert np.array_equal(schedule_to_signal(s, ["X1", "X2"])(1.0), [1, 0, 0, 1])
    assert schedule_to_signal(s, ["X1", "X2"]).species == ("X1", "X1_bar", "X2", "X2_bar")


def test_schedule_validation():
    with pytest.raises(ValueError):
        BitSchedule.from_phases([(1, {"A": 1}), (1, {"B": 0})], 0.1)
    with pytest.raises(ValueError):
        BitSchedule.from_phases([(1, {"A": 1})], 2.0)
    with pytest.raises(ValueError):
        BitSchedule.from_phases([(1, {"A": 2})], 0.1)


def test_schedule_pieces_mark_ramps():
    s = BitSchedule.from_phases([(3, {"A": 1, "B": 1}), (3, {"A": 0, "B": 1})], 0.3)
    pieces = s.pieces()
    assert pieces[0] == (0.0, 3.0, {"A": 1, "B": 1})
    assert pieces[1] == (3.0, 3.3, {"A": None, "B": 1})
    assert pieces[2][0] == pytest.approx(3.3) and pieces[2][2] == {"A": 0, "B": 1}


def test_schedule_json_roundtrip():
    s = BitSchedule.from_phases([(3, {"A": 1}), (2, {"A": 0})], 0.3)
    assert BitSchedule.from_json(s.to_json()) == s


@given(st.lists(st.integers(0, 1), min_size=2, max_size=6), st.floats(0.0, 12.0))
def test_rail_sum_invariant(bits, t):
    s = BitSchedule.from_phases([(2.0, {"W": b}) for b in bits], 0.25)
    v = schedule_to_signal(s)(t)
    assert v[0] + v[1] == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= v[0] <= 1.0


def test_smoothstep_midpoint():
    assert smoothstep(0.5) == 0.5 and smoothstep(-1) == 0 and smoothstep(2) == 1


def test_zero_noise_is_identity():
    base = ConstantSignal({"A": 1.0, "A_bar": 0.0})
    noisy = add_noise(base, NoiseSpec.zero(2))
    t = np.linspace(0, 5, 11)
    assert np.array_equal(noisy(t), base(t))


def test_single_sinusoid_on_constant_one():
    phi = 0.7
    spec = NoiseSpec.from_terms([[(5.0, phi, 0.03)]])
    base = ConstantSignal({"A": 1.0})
    noisy = add_noise(base, spec)
    t = np.linspace(0, 4, 4001)
    assert np.allclose(noisy(t)[:, 0], 1 + 0.03 * np.sin(5 * t + phi))
    assert sup_distance(noisy, base, (0, 4), 1e-3) == pytest.approx(0.03, rel=1e-4)


def test_noise_on_zero_rail_clamps():
    spec = NoiseSpec.sinusoidal(0.03, 1, 3)
    v = add_noise(ConstantSignal({"A": 0.0}), spec)(np.linspace(0, 10, 2001))
    assert v.min() >= 0.0 and v.max() <= 0.03 + 1e-15


@given(st.floats(0.0, 0.2), st.integers(1, 6), st.integers(0, 2**31), st.sampled_from(["sinusoidal", "random"]))
def test_noise_bound(amplitude, n, seed, kind):
    make = NoiseSpec.sinusoidal if kind == "sinusoidal" else NoiseSpec.random
    spec = make(amplitude, n, seed, 0)
    v = spec(np.linspace(0, 20, 4001))
    assert np.abs(v).max() <= amplitude * (1 + 1e-12)
    assert np.sqrt((v ** 2).sum(axis=1)).max() <= amplitude * np.sqrt(n) * (1 + 1e-12)


def test_noise_json_roundtrip():
    spec = NoiseSpec.random(0.02, 3, 11, 1)
    back = NoiseSpec.from_json(spec.to_json())
    t = np.linspace(0, 3, 50)
    assert np.allclose(back(t), spec(t), rtol=0, atol=1e-15)


def test_sup_distance_examples():
    a = ConstantSignal({"A": 1.0, "A_bar": 0.0})
    g = 0.1
    b = ConstantSignal({"A": 1 - g, "A_bar": g})
    assert sup_distance(a, a, (0, 1), 0.1) == 0.0
    assert sup_distance(a, b, (0, 1), 0.1) == pytest.approx(g * np.sqrt(2))


def test_sampled_signal_hits_grid_exactly():
    t = np.linspace(0, 1, 11)
    v = np.sin(t)[:, None]
    s = SampledSignal(t, v, ("A",))
    assert np.array_equal(s(t), v)
    assert s(0.05)[0] == pytest.approx((v[0, 0] + v[1, 0]) / 2)


def test_rng_streams_are_independent_of_order():
    a = make_rng(7, 3, 1).random(4)
    make_rng(7, 2, 1).random(100)
    assert np.array_equal(make_rng(7, 3, 1).random(4), a)
    assert not np.array_equal(make_rng(7, 3, 2).random(4), a)
