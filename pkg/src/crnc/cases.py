"""Canonical demo cases: a network, a driving schedule and (except for the
flip-flop) the requirement it should meet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import XOR_SOURCE, all_vectors, compile_netlist, parse_netlist
from .constructions import DeltaVector, GateParams, build_d_flip_flop, build_d_latch, build_nand, build_sr_latch
from .signals import BitSchedule, Signal, _grid
from .verification.requirements import (
    IntervalSpec,
    Requirement,
    circuit_requirement,
    d_latch_requirement,
    derive_intervals,
    encode_bits,
    nand_requirement,
    sr_requirement,
)

__all__ = [
    "ACCEPTANCE_DELTA",
    "CASE_NAMES",
    "DemoCase",
    "FlipFlopCheck",
    "demo_case",
    "nand_schedule",
    "xor_schedule",
    "sr_schedule",
    "d_latch_schedule",
    "dff_schedule",
    "check_flip_flop",
]

ACCEPTANCE_DELTA = DeltaVector(0.03, 0.004, 0.004, 0.1)
CASE_NAMES = ("nand", "xor", "sr", "dlatch", "dff")
DFF_PATTERN = (1, 0, 0, 1, 0)


@dataclass(frozen=True, eq=False)
class DemoCase:
    name: str
    target: object
    schedule: BitSchedule
    requirement: Requirement | None
    tau: float
    delta: DeltaVector
    extra: dict = field(default_factory=dict)

    @property
    def intervals(self) -> list[IntervalSpec]:
        if self.requirement is None:
            return []
        return derive_intervals(self.requirement, self.schedule, self.tau)


def nand_schedule(tau: float = 1.0, seg: float | None = None, wires=("X1", "X2")) -> BitSchedule:
    """Inputs 11, 00, 01, 10, each held ``3 tau``."""
    seg = 3 * tau if seg is None else seg
    a, b = wires
    phases = [(seg, {a: x, b: y}) for x, y in ((1, 1), (0, 0), (0, 1), (1, 0))]
    return BitSchedule.from_phases(phases, tau / 10)


def xor_schedule(tau: float = 1.0, wires=("X1", "X2")) -> BitSchedule:
    """All four input vectors in counting order, ``3 tau`` each."""
    phases = [(3 * tau, dict(zip(wires, map(int, w)))) for w in all_vectors(len(wires))]
    return BitSchedule.from_phases(phases, tau / 10)


def sr_schedule(tau: float = 1.0) -> BitSchedule:
    """Set ``2 tau``, hold ``6 tau``, reset ``2 tau``, hold ``6 tau`` (wires carry S and R)."""
    phases = [
        (2 * tau, {"S": 1, "R": 0}),
        (6 * tau, {"S": 0, "R": 0}),
        (2 * tau, {"S": 0, "R": 1}),
        (6 * tau, {"S": 0, "R": 0}),
    ]
    return BitSchedule.from_phases(phases, tau / 10)


def d_latch_schedule(tau: float = 1.0) -> BitSchedule:
    """Follow D while enabled (changes every ``3 tau``), then hold while D toggles."""
    de = [(3, 1, 1), (3, 0, 1), (3, 1, 1), (2, 1, 0), (2, 0, 0), (2, 1, 0), (2, 0, 0), (3, 0, 1)]
    return BitSchedule.from_phases([(n * tau, {"D": d, "E": e}) for n, d, e in de], tau / 10)


def dff_schedule(tau: float = 1.0, pattern=DFF_PATTERN) -> BitSchedule:
    """Clock period ``6 tau``; D changes only mid-way through the low phase."""
    phases = []
    for i, d in enumerate(pattern):
        nxt = pattern[i + 1] if i + 1 < len(pattern) else d
        phases += [(3 * tau, {"D": d, "CLK": 1}), (1.5 * tau, {"D": d, "CLK": 0}), (1.5 * tau, {"D": nxt, "CLK": 0})]
    return BitSchedule.from_phases(phases, tau / 10)


def demo_case(name: str, delta: DeltaVector = ACCEPTANCE_DELTA, tau: float = 1.0) -> DemoCase:
    params = GateParams(delta, tau)
    if name == "nand":
        return DemoCase(name, build_nand("X1", "X2", "Y", params), nand_schedule(tau), nand_requirement(), tau, delta)
    if name == "xor":
        nl = parse_netlist(XOR_SOURCE)
        return DemoCase(name, compile_netlist(nl, params), xor_schedule(tau), circuit_requirement(nl), tau, delta,
                        {"netlist": XOR_SOURCE})
    if name == "sr":
        return DemoCase(name, build_sr_latch("~S", "~R", "Q1", "~Q2", params), sr_schedule(tau), sr_requirement(),
                        tau, delta)
    if name == "dlatch":
        return DemoCase(name, build_d_latch("D", "E", "Q", params), d_latch_schedule(tau), d_latch_requirement(),
                        tau, delta)
    if name == "dff":
        return DemoCase(name, build_d_flip_flop("D", "CLK", "Q", "M", params), dff_schedule(tau), None, tau, delta,
                        {"pattern": DFF_PATTERN})
    raise ValueError(f"unknown demo {name!r}; choose from {', '.join(CASE_NAMES)}")


@dataclass(frozen=True)
class FlipFlopCheck:
    passed: bool
    worst_distance: float
    eps: float
    windows: tuple[tuple[float, float], ...]
    gaps: tuple[tuple[float, float, int, float], ...]


def check_flip_flop(output: Signal, schedule: BitSchedule, tau: float, eps: float, x0_q: int = 1,
                    q: str = "Q", grid_dt: float | None = None) -> FlipFlopCheck:
    """``Q`` may move only within ``tau`` after a falling clock ramp ends.

    Elsewhere the ``(Q, Q_bar)`` pair must stay within ``eps`` of the value
    sampled at the last falling edge (the initial value before the first).
    Returns per-gap ``(start, end, expected, distance)``.
    """
    grid_dt = tau / 200 if grid_dt is None else grid_dt
    rw = schedule.ramp_width
    segs = schedule.segments
    falls = [(s.start, prev.bits["D"]) for prev, s in zip(segs, segs[1:])
             if prev.bits["CLK"] == 1 and s.bits["CLK"] == 0]
    windows = tuple((t, t + rw + tau) for t, _ in falls)
    cols = [output.species.index(q), output.species.index(q + "_bar")]
    starts = [segs[0].start] + [w[1] for w in windows]
    ends = [w[0] for w in windows] + [schedule.horizon]
    levels = [x0_q] + [d for _, d in falls]
    gaps, worst = [], 0.0
    for a, b, level in zip(starts, ends, levels):
        if b <= a:
            continue
        t = _grid((a, b), grid_dt)
        target = encode_bits((q, q + "_bar"), {q: level})
        dist = float(np.sqrt(((output(t)[:, cols] - target) ** 2).sum(axis=1)).max())
        gaps.append((a, b, level, dist))
        worst = max(worst, dist)
    return FlipFlopCheck(worst <= eps, worst, eps, windows, tuple(gaps))
