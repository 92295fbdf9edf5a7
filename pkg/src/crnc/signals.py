"""Time signals: dual-rail bit schedules, bounded noise and sup-norm distances.

Every signal is a callable: a scalar time gives a vector of shape ``(n,)``,
an array of times gives shape ``(len(t), n)``.  Columns follow
``signal.species``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .model import BAR

__all__ = [
    "Signal",
    "ConstantSignal",
    "FunctionSignal",
    "SampledSignal",
    "ScheduleSignal",
    "NoisySignal",
    "Segment",
    "BitSchedule",
    "NoiseSpec",
    "make_rng",
    "schedule_to_signal",
    "add_noise",
    "sup_distance",
    "smoothstep",
]


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for ``(seed, stream...)``.

    Each trial gets its own stream, so results do not depend on the order in
    which trials run.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def smoothstep(s):
    """C1 ramp ``3s^2 - 2s^3`` on [0, 1], clamped outside."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


class Signal:
    species: tuple[str, ...] = ()
    breakpoints: tuple[float, ...] = ()
    horizon: float = np.inf

    def __call__(self, t):
        raise NotImplementedError

    def index(self, species: str) -> int:
        return self.species.index(species)

    def column(self, species: str, t):
        return np.asarray(self(np.asarray(t, dtype=float)))[..., self.index(species)]


class ConstantSignal(Signal):
    def __init__(self, values: Mapping[str, float]):
        self.species = tuple(values)
        self.value = np.array([float(values[s]) for s in self.species])
        self.breakpoints = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self.value.copy()
        return np.broadcast_to(self.value, t.shape + self.value.shape).copy()


class FunctionSignal(Signal):
    """Wraps ``fn(t) -> vector``; ``fn`` is called once per time point."""

    def __init__(self, species: Sequence[str], fn: Callable, breakpoints: Sequence[float] = (), horizon=np.inf):
        self.species = tuple(species)
        self.fn = fn
        self.breakpoints = tuple(sorted(breakpoints))
        self.horizon = horizon

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.asarray(self.fn(float(t)), dtype=float)
        return np.array([np.asarray(self.fn(float(s)), dtype=float) for s in t]).reshape(t.shape + (len(self.species),))


class SampledSignal(Signal):
    """Piecewise-linear interpolation of samples (used for traces and outputs)."""

    def __init__(self, times, values, species: Sequence[str]):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float).reshape(len(self.times), -1)
        self.species = tuple(species)
        self.breakpoints = ()
        self.horizon = float(self.times[-1]) if len(self.times) else 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        i = np.searchsorted(self.times, flat)
        exact = (i < len(self.times)) & (self.times[np.minimum(i, len(self.times) - 1)] == flat)
        out = np.empty((flat.size, self.values.shape[1]))
        for j in range(self.values.shape[1]):
            out[:, j] = np.interp(flat, self.times, self.values[:, j])
        # grid hits return stored samples bit-for-bit
        out[exact] = self.values[i[exact]]
        return out[0] if t.ndim == 0 else out.reshape(t.shape + (self.values.shape[1],))


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    bits: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "end", float(self.end))
        bits = {str(w): int(b) for w, b in dict(self.bits).items()}
        if any(b not in (0, 1) for b in bits.values()):
            raise ValueError(f"bits must be 0/1: {bits}")
        object.__setattr__(self, "bits", bits)
        if not self.end > self.start:
            raise ValueError(f"empty segment [{self.start}, {self.end}]")


@dataclass(frozen=True)
class BitSchedule:
    """Sequence of constant-bit segments joined by smoothstep ramps.

    A transition into segment ``i`` occupies ``[start_i, start_i + ramp_width]``.
    """

    segments: tuple[Segment, ...]
    ramp_width: float

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(**s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("schedule has no segments")
        if not self.ramp_width > 0:
            raise ValueError("ramp_width must be positive")
        for a, b in zip(segs, segs[1:]):
            if b.start < a.end:
                raise ValueError(f"overlapping segments at t={b.start}")
        if self.ramp_width >= min(s.end - s.start for s in segs):
            raise ValueError("ramp_width must be shorter than every segment")
        wires = set(segs[0].bits)
        for s in segs:
            if set(s.bits) != wires:
                raise ValueError(f"segment at t={s.start} does not set every wire")

    @classmethod
    def from_phases(cls, phases: Sequence[tuple[float, Mapping[str, int]]], ramp_width: float, t0: float = 0.0):
        """Back-to-back segments from ``(duration, bits)`` pairs."""
        segs, t = [], t0
        for duration, bits in phases:
            segs.append(Segment(t, t + duration, bits))
            t += duration
        return cls(tuple(segs), ramp_width)

    @property
    def wires(self) -> tuple[str, ...]:
        return tuple(self.segments[0].bits)

    @property
    def horizon(self) -> float:
        return self.segments[-1].end

    def pieces(self) -> list[tuple[float, float, dict[str, int | None]]]:
        """Cover ``[start, horizon]`` with pieces of known exact wire values.

        During a ramp the changing wires map to ``None``.
        """
        out = []
        prev = None
        for seg in self.segments:
            t0 = seg.start
            if prev is not None:
                if prev.end < seg.start:
                    out.append((prev.end, seg.start, dict(prev.bits)))
                changing = {w for w in seg.bits if seg.bits[w] != prev.bits[w]}
                if changing:
                    ramp = {w: (None if w in changing else b) for w, b in seg.bits.items()}
                    out.append((seg.start, seg.start + self.ramp_width, ramp))
                    t0 = seg.start + self.ramp_width
            out.append((t0, seg.end, dict(seg.bits)))
            prev = seg
        return out

    def to_json(self) -> dict:
        return {
            "ramp_width": self.ramp_width,
            "segments": [{"start": s.start, "end": s.end, "bits": dict(s.bits)} for s in self.segments],
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> BitSchedule:
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(tuple(Segment(**s) for s in doc["segments"]), float(doc["ramp_width"]))


class ScheduleSignal(Signal):
    """Dual-rail encoding of a :class:`BitSchedule` over the given wires."""

    def __init__(self, schedule: BitSchedule, wires: Sequence[str]):
        missing = [w for w in wires if w not in schedule.wires]
        if missing:
            raise ValueError(f"schedule does not drive wires {missing}")
        self.schedule = schedule
        self.wires = tuple(wires)
        self.species = tuple(s for w in self.wires for s in (w, w + BAR))
        segs = schedule.segments
        self._starts = np.array([s.start for s in segs[1:]])
        bits = np.array([[s.bits[w] for w in self.wires] for s in segs], dtype=float)
        self._from = bits[:-1]
        self._to = bits[1:]
        self._initial = bits[0]
        self._rw = schedule.ramp_width
        bps = set()
        for s, a, b in zip(self._starts, self._from, self._to):
            if np.any(a != b):
                bps.update((float(s), float(s) + self._rw))
        self.breakpoints = tuple(sorted(bps))
        self.horizon = schedule.horizon

    def values(self, t):
        """Values of the positive rails only, shape ``t.shape + (n_wires,)``."""
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        i = np.searchsorted(self._starts, flat, side="right") - 1
        out = np.empty((flat.size, len(self.wires)))
        before = i < 0
        out[before] = self._initial
        j = i[~before]
        if j.size:
            s = smoothstep((flat[~before] - self._starts[j]) / self._rw)[:, None]
            a, b = self._from[j], self._to[j]
            out[~before] = a + (b - a) * s
        return out[0] if t.ndim == 0 else out.reshape(t.shape + (len(self.wires),))

    def __call__(self, t):
        v = self.values(t)
        out = np.empty(v.shape[:-1] + (2 * v.shape[-1],))
        out[..., 0::2] = v
        out[..., 1::2] = 1.0 - v
        return out


def schedule_to_signal(schedule: BitSchedule, wires: Sequence[str] | None = None) -> ScheduleSignal:
    """Encode a schedule as a dual-rail signal ordered ``(W1, W1_bar, W2, ...)``."""
    return ScheduleSignal(schedule, schedule.wires if wires is None else wires)


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Per-coordinate sums of sinusoids ``sum_j a_j sin(w_j t + phi_j)``.

    ``freq``, ``phase`` and ``amp`` have shape ``(n_coords, n_terms)``;
    ``amplitude`` bounds ``sum_j |a_j|`` for every coordinate, hence the
    coordinate-wise sup norm of the noise.
    """

    amplitude: float
    freq: np.ndarray
    phase: np.ndarray
    amp: np.ndarray
    seed: int | None = None
    kind: str = "custom"

    def __post_init__(self):
        for name in ("freq", "phase", "amp"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        if self.amplitude < 0:
            raise ValueError("noise amplitude must be nonnegative")
        if self.amp.size and np.abs(self.amp).sum(axis=1).max() > self.amplitude * (1 + 1e-12):
            raise ValueError("term amplitudes exceed the amplitude bound")

    @property
    def n_coords(self) -> int:
        return self.amp.shape[0]

    @classmethod
    def from_terms(cls, terms: Sequence[Sequence[tuple[float, float, float]]], amplitude: float | None = None, seed=None):
        """From per-coordinate lists of ``(freq, phase, amp)``."""
        m = max((len(c) for c in terms), default=0)
        arr = np.zeros((len(terms), max(m, 1), 3))
        for i, coord in enumerate(terms):
            for j, term in enumerate(coord):
                arr[i, j] = term
        bound = np.abs(arr[..., 2]).sum(axis=1).max() if len(terms) else 0.0
        return cls(bound if amplitude is None else amplitude, arr[..., 0], arr[..., 1], arr[..., 2], seed)

    @classmethod
    def zero(cls, n_coords: int) -> NoiseSpec:
        z = np.zeros((n_coords, 1))
        return cls(0.0, z, z, z, kind="none")

    @classmethod
    def sinusoidal(cls, amplitude: float, n_coords: int, seed: int, *stream: int, freq_range=(1.0, 20.0)):
        """One full-amplitude sinusoid per coordinate with random frequency and phase."""
        rng = make_rng(seed, *stream)
        freq = rng.uniform(*freq_range, size=(n_coords, 1))
        phase = rng.uniform(0, 2 * np.pi, size=(n_coords, 1))
        amp = np.full((n_coords, 1), float(amplitude))
        return cls(float(amplitude), freq, phase, amp, seed, "sinusoidal")

    @classmethod
    def random(cls, amplitude: float, n_coords: int, seed: int, *stream: int, max_terms: int = 8, freq_range=(0.5, 20.0)):
        """Smooth random noise: up to ``max_terms`` sinusoids, amplitudes split by a Dirichlet draw."""
        rng = make_rng(seed, *stream)
        freq = rng.uniform(*freq_range, size=(n_coords, max_terms))
        phase = rng.uniform(0, 2 * np.pi, size=(n_coords, max_terms))
        counts = rng.integers(1, max_terms + 1, size=n_coords)
        weights = rng.dirichlet(np.ones(max_terms), size=n_coords)
        weights[np.arange(max_terms)[None, :] >= counts[:, None]] = 0.0
        weights /= weights.sum(axis=1, keepdims=True)
        return cls(float(amplitude), freq, phase, amplitude * weights, seed, "random")

    def scaled(self, factor: float) -> NoiseSpec:
        """Same shape, amplitudes multiplied by ``factor``."""
        return NoiseSpec(self.amplitude * factor, self.freq, self.phase, self.amp * factor, self.seed, self.kind)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return (self.amp * np.sin(self.freq * t + self.phase)).sum(axis=1)
        arg = self.freq[None] * t.reshape(-1, 1, 1) + self.phase[None]
        out = (self.amp[None] * np.sin(arg)).sum(axis=2)
        return out.reshape(t.shape + (self.n_coords,))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "amplitude": self.amplitude,
            "seed": self.seed,
            "terms": [
                [[float(f), float(p), float(a)] for f, p, a in zip(fr, ph, am) if a != 0.0]
                for fr, ph, am in zip(self.freq, self.phase, self.amp)
            ],
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> NoiseSpec:
        if isinstance(doc, str):
            doc = json.loads(doc)
        spec = cls.from_terms([[tuple(t) for t in c] for c in doc["terms"]], doc["amplitude"], doc.get("seed"))
        object.__setattr__(spec, "kind", doc.get("kind", "custom"))
        return spec


class NoisySignal(Signal):
    """``max(0, base(t) + noise(t))`` coordinate-wise."""

    def __init__(self, base: Signal, noise: NoiseSpec):
        if noise.n_coords != len(base.species):
            raise ValueError(f"noise has {noise.n_coords} coordinates, signal has {len(base.species)}")
        self.base = base
        self.noise = noise
        self.species = base.species
        self.breakpoints = base.breakpoints
        self.horizon = base.horizon

    def __call__(self, t):
        return np.maximum(0.0, self.base(t) + self.noise(t))


def add_noise(signal: Signal, spec: NoiseSpec) -> Signal:
    """Perturb a signal by bounded noise, clamping at zero."""
    return NoisySignal(signal, spec)


def _grid(window: tuple[float, float], dt: float) -> np.ndarray:
    t0, t1 = map(float, window)
    if t1 < t0:
        raise ValueError(f"empty window {window}")
    n = int(np.floor((t1 - t0) / dt + 1e-9))
    grid = t0 + dt * np.arange(n + 1)
    if t1 - grid[-1] > 1e-9 * max(1.0, abs(t1)):
        grid = np.append(grid, t1)
    return grid


def sup_distance(a: Signal, b: Signal, window: tuple[float, float], grid_dt: float) -> float:
    """Max Euclidean distance between two signals sampled every ``grid_dt``.

    A grid approximation of the sup norm over ``window`` (endpoints included).
    """
    if tuple(a.species) != tuple(b.species):
        raise ValueError(f"species orders differ: {a.species} vs {b.species}")
    t = _grid(window, grid_dt)
    return float(np.sqrt(((a(t) - b(t)) ** 2).sum(axis=1)).max())
