"""Gate-level CRN builders: NAND, SR latch, D latch and a master-slave D flip-flop.

Every builder takes wire references, so ``"~S"`` wires a gate to the
complemented rail ``S_bar`` at no cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .model import IoCrn, Reaction, WireRef, dual, join

__all__ = [
    "DeltaVector",
    "GateParams",
    "GateInstance",
    "rate_constant",
    "build_nand",
    "build_sr_latch",
    "build_d_latch",
    "build_d_flip_flop",
    "canonical_x0",
]

RAIL_SUM_TOL = 1e-9


@dataclass(frozen=True)
class DeltaVector:
    """Perturbation bounds ``(d1, d2, d3, d4)`` on input, measurement, initial state and rates.

    ``eps`` defaults to ``d1``.
    """

    d1: float
    d2: float
    d3: float
    d4: float
    eps: float | None = None

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "d4"):
            v = float(getattr(self, name))
            if v < 0:
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "eps", self.d1 if self.eps is None else float(self.eps))
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @classmethod
    def parse(cls, text: str, eps: float | None = None) -> DeltaVector:
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected four comma-separated values, got {text!r}")
        return cls(*parts, eps=eps)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.d1, self.d2, self.d3, self.d4

    def scaled(self, factor: float) -> DeltaVector:
        """All four bounds times ``factor``; ``eps`` unchanged."""
        return DeltaVector(*(factor * v for v in self.as_tuple()), eps=self.eps)

    def theorem_preconditions(self) -> dict[str, bool]:
        s = self.d2 + self.d3
        return {
            "d2+d3<d1": s < self.d1,
            "d1<1/25": self.d1 < 1 / 25,
            "d2+d3<1/100": s < 1 / 100,
        }

    @property
    def admissible(self) -> bool:
        return all(self.theorem_preconditions().values())

    def to_json(self) -> dict:
        return {"d1": self.d1, "d2": self.d2, "d3": self.d3, "d4": self.d4, "eps": self.eps}


@dataclass(frozen=True)
class GateParams:
    delta: DeltaVector
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def with_tau(self, tau: float) -> GateParams:
        return GateParams(self.delta, tau)

    @property
    def k(self) -> float:
        return rate_constant(self)


def rate_constant(params: GateParams) -> float:
    """``100 * d4 + 13 / tau``."""
    return 100.0 * params.delta.d4 + 13.0 / params.tau


@dataclass(frozen=True, eq=False)
class GateInstance:
    """A built CRN plus the data needed to drive and observe it.

    ``outputs`` lists the observed rail pairs as ``(rail, dual)`` species;
    ``input_wires`` the external dual-rail wires in schedule order.
    """

    kind: str
    crn: IoCrn
    x0: Mapping[str, float]
    outputs: tuple[tuple[str, str], ...]
    input_wires: tuple[str, ...]
    params: GateParams
    notes: tuple[str, ...] = field(default=())

    @property
    def output_species(self) -> tuple[str, ...]:
        return tuple(s for pair in self.outputs for s in pair)

    def with_x0(self, x0: Mapping[str, float]) -> GateInstance:
        """Same instance with another initial state (rail sums checked)."""
        checked = _check_x0(self.crn, self.outputs, x0)
        return GateInstance(self.kind, self.crn, checked, self.outputs, self.input_wires, self.params, self.notes)


def _check_x0(crn: IoCrn, pairs, x0: Mapping[str, float]) -> dict[str, float]:
    unknown = set(x0) - set(crn.states)
    if unknown:
        raise ValueError(f"initial state names unknown species {sorted(unknown)}")
    out = {s: float(x0.get(s, 0.0)) for s in crn.states}
    if any(v < 0 for v in out.values()):
        raise ValueError("initial concentrations must be nonnegative")
    for a, b in pairs:
        if abs(out[a] + out[b] - 1.0) > RAIL_SUM_TOL:
            raise ValueError(f"rail pair ({a}, {b}) sums to {out[a] + out[b]}, expected 1")
    return out


def _distinct(*refs: WireRef):
    names = [r.wire for r in refs]
    if len(set(names)) != len(names):
        raise ValueError(f"wire names must be distinct: {names}")


def canonical_x0(*outputs: WireRef) -> dict[str, float]:
    """Each gate output rail at 1, its dual at 0."""
    x0 = {}
    for y in outputs:
        x0[y.species] = 1.0
        x0[y.dual_species] = 0.0
    return x0


def _nand_crn(x1: WireRef, x2: WireRef, y: WireRef, k: float) -> IoCrn:
    a, abar = x1.species, x1.dual_species
    b, bbar = x2.species, x2.dual_species
    Y, Ybar = y.species, y.dual_species
    reactions = (
        Reaction({a: 1, b: 1, Y: 1}, {a: 1, b: 1, Ybar: 1}, k),
        Reaction({abar: 1, Ybar: 1}, {abar: 1, Y: 1}, k),
        Reaction({bbar: 1, Ybar: 1}, {bbar: 1, Y: 1}, k),
        Reaction({Y: 2, Ybar: 1}, {Y: 3}, 3 * k),
        Reaction({Ybar: 2, Y: 1}, {Ybar: 3}, 3 * k),
    )
    inputs = tuple(dict.fromkeys((x1.wire, dual(x1.wire), x2.wire, dual(x2.wire))))
    return IoCrn(inputs, (Y, Ybar), reactions)


def build_nand(x1, x2, y, params: GateParams, x0: Mapping[str, float] | None = None) -> GateInstance:
    """Two-input NAND with five reactions: three input-driven, two majority (rate ``3k``)."""
    x1, x2, y = (WireRef.parse(w) for w in (x1, x2, y))
    _distinct(x1, x2, y)
    crn = _nand_crn(x1, x2, y, rate_constant(params))
    pairs = ((y.species, y.dual_species),)
    x0 = _check_x0(crn, pairs, canonical_x0(y) if x0 is None else x0)
    return GateInstance("NAND", crn, x0, pairs, (x1.wire, x2.wire), params)


def build_sr_latch(sbar="~S", rbar="~R", q1="Q1", q2bar="~Q2", params: GateParams | None = None,
                   x0: Mapping[str, float] | None = None) -> GateInstance:
    """Cross-coupled NAND pair, each gate with delay ``tau / 2``.

    Gate 1 computes ``q1 = NAND(sbar, q2bar)``, gate 2 ``q2bar = NAND(rbar, q1)``.
    """
    if params is None:
        raise ValueError("params are required")
    sbar, rbar, q1, q2bar = (WireRef.parse(w) for w in (sbar, rbar, q1, q2bar))
    _distinct(sbar, rbar, q1, q2bar)
    half = params.with_tau(params.tau / 2)
    k = rate_constant(half)
    crn = join(_nand_crn(sbar, q2bar, q1, k), _nand_crn(rbar, q1, q2bar, k), require_modular=True)
    q2 = ~q2bar
    pairs = ((q1.species, q1.dual_species), (q2.species, q2.dual_species))
    x0 = _check_x0(crn, pairs, canonical_x0(q1, q2bar) if x0 is None else x0)
    return GateInstance("SR", crn, x0, pairs, (sbar.wire, rbar.wire), params)


def _d_latch_crn(d: WireRef, e: WireRef, q: WireRef, k: float) -> IoCrn:
    D, Dbar, E = d.species, d.dual_species, e.species
    Q, Qbar = q.species, q.dual_species
    reactions = (
        Reaction({D: 1, E: 1, Qbar: 1}, {D: 1, E: 1, Q: 1}, k),
        Reaction({Dbar: 1, E: 1, Q: 1}, {Dbar: 1, E: 1, Qbar: 1}, k),
        Reaction({Q: 2, Qbar: 1}, {Q: 3}, 3 * k),
        Reaction({Qbar: 2, Q: 1}, {Qbar: 3}, 3 * k),
    )
    # the enable's dual rail is declared for interface uniformity but never read
    inputs = (d.wire, dual(d.wire), e.wire, dual(e.wire))
    return IoCrn(inputs, (Q, Qbar), reactions)


def build_d_latch(d="D", e="E", q="Q", params: GateParams | None = None,
                  x0: Mapping[str, float] | None = None) -> GateInstance:
    """Four-reaction D latch: while enabled, ``q`` is pulled toward ``d``."""
    if params is None:
        raise ValueError("params are required")
    d, e, q = (WireRef.parse(w) for w in (d, e, q))
    _distinct(d, e, q)
    crn = _d_latch_crn(d, e, q, rate_constant(params))
    pairs = ((q.species, q.dual_species),)
    x0 = _check_x0(crn, pairs, canonical_x0(q) if x0 is None else x0)
    notes = tuple(f"input {u} is declared but unused" for u in crn.unused_inputs())
    return GateInstance("DLATCH", crn, x0, pairs, (d.wire, e.wire), params, notes)


def build_d_flip_flop(d="D", clk="CLK", q="Q", master="M", params: GateParams | None = None,
                      x0: Mapping[str, float] | None = None) -> GateInstance:
    """Negative-edge-triggered master-slave flip-flop from two D latches.

    The master is transparent while ``clk = 1``; the slave, enabled by the
    clock's dual rail, copies the master once the clock falls.
    """
    if params is None:
        raise ValueError("params are required")
    d, clk, q, m = (WireRef.parse(w) for w in (d, clk, q, master))
    _distinct(d, clk, q, m)
    k = rate_constant(params)
    crn = join(_d_latch_crn(d, clk, m, k), _d_latch_crn(m, ~clk, q, k), require_modular=True)
    pairs = ((q.species, q.dual_species), (m.species, m.dual_species))
    x0 = _check_x0(crn, pairs, canonical_x0(q, m) if x0 is None else x0)
    return GateInstance("DFF", crn, x0, pairs, (d.wire, clk.wire), params)
