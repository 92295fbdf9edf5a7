"""Deterministic mass-action kinetics and trace generation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .integrators import DopriStats, SimulationError, dopri5_batch, rk4
from .model import Context, IoCrn, Reaction, TdIoCrn, TdReaction
from .signals import ConstantSignal, NoiseSpec, NoisySignal, SampledSignal, Signal

__all__ = [
    "SimConfig",
    "Trace",
    "MassActionSystem",
    "SimulationError",
    "reaction_rate",
    "mass_action_derivative",
    "simulate",
    "simulate_batch",
    "simulate_rk4",
    "measure",
]


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = np.inf
    output_dt: float = 0.005

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        for name in ("rel_tol", "abs_tol", "max_step", "output_dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.horizon > 0 and self.output_dt > self.horizon:
            raise ValueError("output_dt exceeds horizon")

    @classmethod
    def for_tau(cls, tau: float, horizon: float, **kw) -> SimConfig:
        """Defaults tied to the propagation delay: ``output_dt = tau / 200``."""
        kw.setdefault("output_dt", tau / 200)
        return cls(horizon=horizon, **kw)

    def grid(self) -> np.ndarray:
        if self.horizon == 0:
            return np.empty(0)
        n = int(np.floor(self.horizon / self.output_dt + 1e-9))
        return self.output_dt * np.arange(n + 1)

    def to_json(self) -> dict:
        return {"horizon": self.horizon, "rel_tol": self.rel_tol, "abs_tol": self.abs_tol,
                "max_step": None if np.isinf(self.max_step) else self.max_step, "output_dt": self.output_dt}


@dataclass
class Trace:
    """State samples on a uniform grid; ``values[i, j]`` is species ``j`` at ``times[i]``."""

    times: np.ndarray
    values: np.ndarray
    species: tuple[str, ...]
    config: SimConfig
    input_signal: Signal | None = None
    stats: DopriStats | None = field(default=None, repr=False)

    def __getitem__(self, species: str) -> np.ndarray:
        return self.values[:, self.species.index(species)]

    def state(self, i: int) -> dict[str, float]:
        return dict(zip(self.species, self.values[i].tolist()))

    def as_signal(self) -> SampledSignal:
        return SampledSignal(self.times, self.values, self.species)

    def to_csv(self, path_or_buf=None) -> str | None:
        """Write ``t,<species>...`` rows with 17 significant digits."""
        buf = io.StringIO() if path_or_buf is None else None
        fh = buf if buf is not None else (open(path_or_buf, "w", newline="") if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__") else path_or_buf)
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *self.species])
            for t, row in zip(self.times, self.values):
                w.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in row)])
        finally:
            if buf is None and fh is not path_or_buf:
                fh.close()
        return buf.getvalue() if buf is not None else None


class MassActionSystem:
    """Array form of one or more structurally identical I/O CRNs.

    State arrays have shape ``(batch, n_states)``; batch member ``b`` uses
    the rate constants of ``crns[b]``.
    """

    def __init__(self, crns: IoCrn | Sequence[IoCrn]):
        crns = [crns] if isinstance(crns, IoCrn) else list(crns)
        ref = crns[0]
        for c in crns[1:]:
            if (c.states, c.inputs) != (ref.states, ref.inputs) or len(c.reactions) != len(ref.reactions) or any(
                (a.reactants, a.products) != (b.reactants, b.products) for a, b in zip(c.reactions, ref.reactions)
            ):
                raise ValueError("batched networks must share species and stoichiometry")
        self.crns = crns
        self.states = ref.states
        self.inputs = ref.inputs
        glob = {s: i for i, s in enumerate(ref.states + ref.inputs)}
        pad = len(glob)
        order = max((sum(n for _, n in rx.reactants) for rx in ref.reactions), default=0)
        idx = np.full((len(ref.reactions), max(order, 1)), pad, dtype=int)
        net = np.zeros((len(ref.reactions), len(ref.states)))
        for j, rx in enumerate(ref.reactions):
            flat = [glob[s] for s, n in rx.reactants for _ in range(n)]
            idx[j, : len(flat)] = flat
            for s, n in rx.net().items():
                if s in ref.states:
                    net[j, ref.states.index(s)] = n
        self.idx = idx
        self.net = net
        self._rates = _RateTable(crns)

    @property
    def batch(self) -> int:
        return len(self.crns)

    def rate_constants(self, t) -> np.ndarray:
        """Shape ``(batch, n_reactions)``, or ``(len(t), batch, n_reactions)`` for array ``t``."""
        return self._rates(t)

    def rates(self, x, u, k) -> np.ndarray:
        """Reaction rates for states ``x``, inputs ``u`` and constants ``k`` (leading dims broadcast)."""
        u = np.broadcast_to(u, x.shape[:-1] + u.shape[-1:])
        z = np.concatenate([x, u, np.ones(x.shape[:-1] + (1,))], axis=-1)
        return k * np.prod(z[..., self.idx], axis=-1)

    def derivative(self, x, u, k) -> np.ndarray:
        return self.rates(x, u, k) @ self.net


class _RateTable:
    def __init__(self, crns):
        self.static = not any(isinstance(c, TdIoCrn) for c in crns)
        if self.static:
            self.k = np.array([[rx.k for rx in c.reactions] for c in crns])
            return
        fns = [[rx.rate_fn if isinstance(rx, TdReaction) else _const(rx.k) for rx in c.reactions] for c in crns]
        self.fns = fns
        from .model import ConstantRate, SinusoidalRate

        if all(isinstance(f, (SinusoidalRate, ConstantRate)) for row in fns for f in row):
            def arr(attr, default):
                return np.array([[getattr(f, attr, default) for f in row] for row in fns], dtype=float)

            self.k = arr("k", 0.0)
            self.amp, self.freq, self.phase = arr("amplitude", 0.0), arr("freq", 0.0), arr("phase", 0.0)
            self.vectorized = True
        else:
            self.vectorized = False

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.static:
            return self.k if t.ndim == 0 else np.broadcast_to(self.k, t.shape + self.k.shape)
        if self.vectorized:
            if t.ndim == 0:
                return self.k + self.amp * np.sin(self.freq * t + self.phase)
            tt = t[..., None, None]
            return self.k + self.amp * np.sin(self.freq * tt + self.phase)
        out = np.array([[f(t) for f in row] for row in self.fns], dtype=float)
        return out if t.ndim == 0 else np.moveaxis(out, -1, 0)

    def at(self, tb):
        """Rate constants with member ``b`` evaluated at ``tb[b]``; shape ``(batch, n_reactions)``."""
        if self.static:
            return self.k
        if self.vectorized:
            return self.k + self.amp * np.sin(self.freq * tb[:, None] + self.phase)
        return np.array([[f(float(t)) for f in row] for row, t in zip(self.fns, tb)], dtype=float)


def _const(k):
    from .model import ConstantRate

    return ConstantRate(k)


class _InputTable:
    """Evaluates a batch of input signals as an array ``(batch, n_inputs)``."""

    def __init__(self, signals: Sequence[Signal], inputs: Sequence[str]):
        self.signals = list(signals)
        self.inputs = tuple(inputs)
        self.n = len(self.inputs)
        for s in self.signals:
            missing = [u for u in self.inputs if u not in s.species]
            if missing:
                raise ValueError(f"input signal lacks species {missing}")
        self.perm = [np.array([s.species.index(u) for u in self.inputs], dtype=int) for s in self.signals]
        self.mode = "loop"
        if self.n == 0:
            self.mode = "empty"
        elif all(isinstance(s, ConstantSignal) for s in self.signals):
            self.mode = "const"
            self.const = np.stack([s.value[p] for s, p in zip(self.signals, self.perm)])
        elif all(isinstance(s, NoisySignal) for s in self.signals) and all(
            s.base is self.signals[0].base for s in self.signals
        ):
            self.mode = "noisy"
            self.base = self.signals[0].base
            self.base_perm = self.perm[0]
            m = max(s.noise.freq.shape[1] for s in self.signals)

            def stack(attr):
                out = np.zeros((len(self.signals), len(self.base.species), m))
                for b, s in enumerate(self.signals):
                    a = getattr(s.noise, attr)
                    out[b, :, : a.shape[1]] = a
                return out[:, self.base_perm]

            self.freq, self.phase, self.amp = stack("freq"), stack("phase"), stack("amp")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        B = len(self.signals)
        if self.mode == "empty":
            return np.zeros(t.shape + (B, 0))
        if self.mode == "const":
            return self.const if t.ndim == 0 else np.broadcast_to(self.const, t.shape + self.const.shape)
        if self.mode == "noisy":
            base = self.base(t)[..., self.base_perm]
            if t.ndim == 0:
                noise = (self.amp * np.sin(self.freq * t + self.phase)).sum(axis=-1)
                return np.maximum(0.0, base[None, :] + noise)
            tt = t[..., None, None, None]
            noise = (self.amp * np.sin(self.freq * tt + self.phase)).sum(axis=-1)
            return np.maximum(0.0, base[..., None, :] + noise)
        vals = [s(t)[..., p] for s, p in zip(self.signals, self.perm)]
        return np.stack(vals, axis=-2)

    def at(self, tb):
        """Inputs with member ``b`` evaluated at ``tb[b]``; shape ``(batch, n_inputs)``."""
        B = len(self.signals)
        if self.mode == "empty":
            return np.zeros((B, 0))
        if self.mode == "const":
            return self.const
        if self.mode == "noisy":
            base = self.base(tb)[:, self.base_perm]
            noise = (self.amp * np.sin(self.freq * tb[:, None, None] + self.phase)).sum(axis=-1)
            return np.maximum(0.0, base + noise)
        return np.stack([s(float(t))[p] for s, p, t in zip(self.signals, self.perm, tb)])

    def breakpoints(self) -> list[float]:
        return sorted({b for s in self.signals for b in s.breakpoints})


def _global_state_arrays(crn: IoCrn, global_state: Mapping[str, float]):
    x = np.array([float(global_state.get(s, 0.0)) for s in crn.states])
    u = np.array([float(global_state.get(s, 0.0)) for s in crn.inputs])
    return x, u


def reaction_rate(rx: Reaction | TdReaction, global_state: Mapping[str, float], t: float = 0.0) -> float:
    """Mass-action rate: rate constant (at ``t``) times the reactant monomial."""
    k = rx.k if isinstance(rx, Reaction) else float(rx.rate_fn(t))
    rate = k
    for sp, n in rx.reactants:
        rate *= float(global_state[sp]) ** n
    return rate


def mass_action_derivative(crn: IoCrn, x: Mapping[str, float], u: Mapping[str, float], t: float = 0.0) -> dict[str, float]:
    """``dx/dt`` for every state species (inputs have no entry)."""
    system = MassActionSystem(crn)
    xa, ua = _global_state_arrays(crn, {**u, **x})
    d = system.derivative(xa[None], ua[None], system.rate_constants(t))[0]
    return dict(zip(crn.states, d.tolist()))


def _x0_array(crn: IoCrn, x0: Mapping[str, float]) -> np.ndarray:
    extra = set(x0) - set(crn.states)
    if extra:
        raise ValueError(f"initial state names non-state species {sorted(extra)}")
    arr = np.array([float(x0.get(s, 0.0)) for s in crn.states])
    if np.any(arr < 0):
        raise ValueError("initial concentrations must be nonnegative")
    return arr


def _as_signal(inp, crn: IoCrn) -> Signal:
    if inp is None:
        if crn.inputs:
            raise ValueError("network has inputs but no input signal was given")
        return ConstantSignal({})
    if isinstance(inp, Mapping):
        return ConstantSignal(inp)
    return inp


def simulate_batch(crns: Sequence[IoCrn], x0s: Sequence[Mapping[str, float]], inputs: Sequence, cfg: SimConfig) -> list[Trace]:
    """Integrate several structurally identical networks as one vectorized system.

    Each member has its own adaptive step sequence, so its trace does not
    depend on what else is in the batch beyond ulp-level rounding.
    """
    system = MassActionSystem(crns)
    signals = [_as_signal(s, c) for s, c in zip(inputs, crns)]
    table = _InputTable(signals, system.inputs)
    y0 = np.stack([_x0_array(c, x) for c, x in zip(crns, x0s)])
    grid = cfg.grid()
    B, n = y0.shape
    if len(grid) == 0:
        return [Trace(grid, np.empty((0, n)), system.states, cfg, s) for s in signals]

    rates = system._rates

    def f(tb, y):
        return system.derivative(y, table.at(tb), rates.at(tb))

    knots = [0.0] + [b for b in table.breakpoints() if 0.0 < b < cfg.horizon] + [cfg.horizon]
    out = np.empty((len(grid), B, n))
    stats = DopriStats()
    y = y0
    k = 0
    for a, b in zip(knots[:-1], knots[1:]):
        j = k
        while j < len(grid) and grid[j] <= b:
            j += 1
        if j > k and grid[k] < a:
            raise AssertionError("output grid out of sync with breakpoints")
        seg_out, y = dopri5_batch(f, a, b, y, grid[k:j], rtol=cfg.rel_tol, atol=cfg.abs_tol,
                                  max_step=cfg.max_step, clamp_nonnegative=True, stats=stats)
        out[k:j] = seg_out
        k = j
    if stats.min_value < -cfg.abs_tol * 10:
        # negative excursions beyond tolerance slack indicate an integration problem
        raise SimulationError(f"concentration fell to {stats.min_value:.3g}", cfg.horizon)
    return [Trace(grid, out[:, b], system.states, cfg, signals[b], stats) for b in range(B)]


def simulate(crn: IoCrn, x0: Mapping[str, float], input_signal=None, cfg: SimConfig | None = None) -> Trace:
    """Solve ``x' = F(x, u(t))`` from ``x0`` and sample it on ``cfg``'s grid.

    Integration restarts at every input breakpoint, so no step straddles a
    ramp corner.
    """
    if cfg is None:
        raise ValueError("a SimConfig is required")
    return simulate_batch([crn], [x0], [input_signal], cfg)[0]


def simulate_rk4(crns: IoCrn | Sequence[IoCrn], x0s, inputs, cfg: SimConfig, dt: float = 1e-4) -> list[Trace] | Trace:
    """Fixed-step RK4 reference solution on the same output grid.

    ``cfg.output_dt`` must be an integer multiple of ``dt``.  Inputs and rate
    constants are tabulated per output interval, which keeps the inner loop
    free of signal evaluation.
    """
    single = isinstance(crns, IoCrn)
    if single:
        crns, x0s, inputs = [crns], [x0s], [inputs]
    system = MassActionSystem(crns)
    table = _InputTable([_as_signal(s, c) for s, c in zip(inputs, crns)], system.inputs)
    m = cfg.output_dt / dt
    if abs(m - round(m)) > 1e-9 * m:
        raise ValueError("output_dt must be a multiple of dt")
    m = int(round(m))
    grid = cfg.grid()
    y = np.stack([_x0_array(c, x) for c, x in zip(crns, x0s)])
    out = np.empty((len(grid),) + y.shape)
    if len(grid):
        out[0] = y
    half = 0.5 * dt
    for i in range(len(grid) - 1):
        t0 = grid[i]
        ts = t0 + half * np.arange(2 * m + 1)
        U = table(ts)
        K = system.rate_constants(ts)

        def f(t, yy, _t0=t0):
            j = int(round((t - _t0) / half))
            return system.derivative(yy, U[j], K[j])

        y = rk4(f, t0, y, dt, m, record_every=m)[-1]
        out[i + 1] = y
    traces = [Trace(grid, out[:, b], system.states, cfg, table.signals[b]) for b in range(len(crns))]
    return traces[0] if single else traces


def _project(trace: Trace, species: Sequence[str]) -> np.ndarray:
    cols = []
    for s in species:
        if s in trace.species:
            cols.append(trace[s])
        elif trace.input_signal is not None and s in trace.input_signal.species:
            cols.append(trace.input_signal.column(s, trace.times))
        else:
            raise KeyError(f"species {s} is not observable in this trace")
    return np.stack(cols, axis=1) if cols else np.empty((len(trace.times), 0))


def measure(trace: Trace, ctx: Context, meas_noise: NoiseSpec | None = None) -> Signal:
    """Output signal ``h(x(t))``, optionally with bounded additive noise (clamped at 0)."""
    species = ctx.output_species
    if ctx.measurement is None:
        values = _project(trace, species)
    else:
        glob = {s: trace[s] for s in trace.species}
        values = np.asarray(ctx.measurement(glob), dtype=float).reshape(len(trace.times), len(species))
    if meas_noise is not None:
        if meas_noise.n_coords != len(species):
            raise ValueError("measurement noise dimension does not match output species")
        values = np.maximum(0.0, values + meas_noise(trace.times))
    return SampledSignal(trace.times, values, species)
