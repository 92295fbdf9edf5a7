import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnc.integrators import DopriStats, SimulationError, dopri5, dopri5_batch, rk4


def test_dopri5_exponential():
    t = np.array([0.0, 1.0, 2.0, 5.0])
    y, y1, _ = dopri5(lambda t, y: -y, 0.0, 5.0, np.array([1.0]), t, rtol=1e-10, atol=1e-12)
    assert np.allclose(y[:, 0], np.exp(-t), rtol=0, atol=1e-9)
    assert y1[0] == pytest.approx(np.exp(-5.0), abs=1e-9)


def test_dopri5_harmonic_oscillator_dense_output():
    def f(t, y):
        return np.array([y[1], -y[0]])

    t = np.linspace(0, 10, 101)
    y, _, _ = dopri5(f, 0.0, 10.0, np.array([0.0, 1.0]), t, rtol=1e-10, atol=1e-12)
    assert np.abs(y[:, 0] - np.sin(t)).max() < 1e-8


def test_rk4_order():
    errs = []
    for dt in (0.1, 0.05):
        n = int(round(1 / dt))
        y = rk4(lambda t, y: -y, 0.0, np.array([1.0]), dt, n, record_every=n)[-1, 0]
        errs.append(abs(y - np.exp(-1)))
    assert 14 < errs[0] / errs[1] < 18


def test_rk4_records_initial_state():
    out = rk4(lambda t, y: 0 * y, 0.0, np.array([2.0]), 0.1, 10, record_every=5)
    assert out.shape == (3, 1) and np.all(out == 2.0)


def test_blowup_raises():
    with pytest.raises(SimulationError):
        dopri5(lambda t, y: y * y, 0.0, 2.0, np.array([1.0]))


@given(st.lists(st.floats(0.2, 5.0), min_size=1, max_size=5))
def test_batch_members_are_independent(rates):
    """A member's solution matches its solo run up to rounding."""
    r = np.array(rates)

    def f(t, y):
        return -r[: len(y)][:, None] * y * (1 + 0.5 * np.sin(t))[:, None]

    t_out = np.linspace(0, 3, 7)
    y0 = np.ones((len(r), 1))
    yb, _ = dopri5_batch(f, 0.0, 3.0, y0, t_out, rtol=1e-9, atol=1e-12)
    for i in range(len(r)):
        def g(t, y, i=i):
            return -r[i] * y * (1 + 0.5 * np.sin(t))[:, None]

        yi, _ = dopri5_batch(g, 0.0, 3.0, y0[i:i + 1], t_out, rtol=1e-9, atol=1e-12)
        assert np.allclose(yb[:, i], yi[:, 0], rtol=1e-12, atol=1e-15)
        exact = np.exp(-r[i] * (t_out + 0.5 * (1 - np.cos(t_out))))
        assert np.allclose(yb[:, i, 0], exact, atol=1e-7)


def test_stats_are_counted():
    stats = DopriStats()
    dopri5(lambda t, y: -y, 0.0, 1.0, np.array([1.0]), stats=stats)
    assert stats.accepted > 0 and stats.nfev >= 6 * stats.accepted
