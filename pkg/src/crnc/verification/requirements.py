"""Requirement predicates over dual-rail signals and the interval checker.

A rule says: whenever ``trigger`` holds exactly on ``[t1, t1 + tau]`` and
``hold`` holds on all of ``I = [t1, t2]``, the outputs must encode
``expected`` on ``[t1 + tau, t2]``.  Triggers imply holds in every rule used
here, so for a given schedule it suffices to check one window per maximal
``hold`` run, starting ``tau`` after the first long-enough ``trigger`` run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..model import WireRef
from ..signals import BitSchedule, Signal, _grid

__all__ = [
    "Condition",
    "Rule",
    "Requirement",
    "IntervalSpec",
    "IntervalResult",
    "VerificationReport",
    "derive_intervals",
    "check_requirement",
    "encode_bits",
    "nand_requirement",
    "circuit_requirement",
    "sr_requirement",
    "d_latch_requirement",
    "intervals_to_json",
    "intervals_from_json",
    "DEFAULT_SLACK",
]

DEFAULT_SLACK = 1e-6


@dataclass(frozen=True)
class Condition:
    """Conjunction (``mode="all"``) or disjunction (``"any"``) of rail literals."""

    literals: tuple[tuple[WireRef, int], ...]
    mode: str = "all"

    @classmethod
    def all_of(cls, **bits) -> Condition:
        return cls(tuple((WireRef.parse(w), int(b)) for w, b in bits.items()), "all")

    @classmethod
    def any_of(cls, **bits) -> Condition:
        return cls(tuple((WireRef.parse(w), int(b)) for w, b in bits.items()), "any")

    @classmethod
    def of(cls, literals: Mapping[str, int], mode: str = "all") -> Condition:
        return cls(tuple((WireRef.parse(w), int(b)) for w, b in literals.items()), mode)

    def evaluate(self, bits: Mapping[str, int | None]) -> bool | None:
        """Three-valued: ``None`` when unknown wires decide the outcome."""
        vals = [None if (v := ref.value(bits)) is None else v == b for ref, b in self.literals]
        if self.mode == "all":
            if False in vals:
                return False
            return None if None in vals else True
        if True in vals:
            return True
        return None if None in vals else False

    def holds(self, bits) -> bool:
        return self.evaluate(bits) is True

    def __str__(self) -> str:
        op = " & " if self.mode == "all" else " | "
        return op.join(f"{r}={b}" for r, b in self.literals)


@dataclass(frozen=True)
class Rule:
    tag: str
    trigger: Condition
    hold: Condition
    expected: Mapping[str, int]


@dataclass(frozen=True)
class Requirement:
    name: str
    rules: tuple[Rule, ...]
    outputs: tuple[str, ...]


def nand_requirement(x1="X1", x2="X2", y="Y") -> Requirement:
    both = Condition.of({x1: 1, x2: 1})
    either0 = Condition.of({x1: 0, x2: 0}, "any")
    out = WireRef.parse(y)
    flip = int(out.negated)
    return Requirement("NAND", (
        Rule("phi11", both, both, {out.wire: 0 ^ flip}),
        Rule("phi0", either0, either0, {out.wire: 1 ^ flip}),
    ), (out.species, out.dual_species))


def circuit_requirement(netlist) -> Requirement:
    """One rule per input vector ``w``: inputs held at ``w`` imply outputs at ``C(w)``."""
    from ..circuits import all_vectors, eval_boolean

    rules = []
    for w in all_vectors(netlist.n):
        cond = Condition.of(dict(zip(netlist.inputs, map(int, w))))
        out = eval_boolean(netlist, w)
        expected = {}
        for ref, bit in zip(netlist.outputs, map(int, out)):
            expected[ref.wire] = 1 - bit if ref.negated else bit
        rules.append(Rule(f"phi_{w}", cond, cond, expected))
    species = tuple(dict.fromkeys(s for r in netlist.outputs for s in (r.species, r.dual_species)))
    return Requirement("CIRCUIT", tuple(rules), species)


def sr_requirement(sbar="~S", rbar="~R", q1="Q1", q2bar="~Q2") -> Requirement:
    """Set: ``sbar = 0`` for ``tau`` while ``rbar = 1`` throughout; reset symmetric."""
    q1r, q2 = WireRef.parse(q1), ~WireRef.parse(q2bar)

    def exp(a):
        return {q1r.wire: a if not q1r.negated else 1 - a, q2.wire: a if not q2.negated else 1 - a}

    set_ = Rule("phi_set", Condition.of({sbar: 0, rbar: 1}), Condition.of({rbar: 1}), exp(1))
    reset = Rule("phi_reset", Condition.of({rbar: 0, sbar: 1}), Condition.of({sbar: 1}), exp(0))
    species = (q1r.species, q1r.dual_species, q2.species, q2.dual_species)
    return Requirement("SR", (set_, reset), species)


def d_latch_requirement(d="D", e="E", q="Q") -> Requirement:
    """``D = a`` while enabled for ``tau``, then ``D = a`` or disabled: ``Q = a``."""
    qr = WireRef.parse(q)
    rules = tuple(
        Rule(f"phi_{a}", Condition.of({d: a, e: 1}), Condition.of({d: a, e: 0}, "any"),
             {qr.wire: a if not qr.negated else 1 - a})
        for a in (0, 1)
    )
    return Requirement("DLATCH", rules, (qr.species, qr.dual_species))


@dataclass(frozen=True)
class IntervalSpec:
    """Interval ``[t1, t2]`` with ``t2 - t1 >= tau``; outputs checked on ``[t1 + tau, t2]``."""

    t1: float
    t2: float
    tag: str
    expected: Mapping[str, int]

    def window(self, tau: float) -> tuple[float, float]:
        return self.t1 + tau, self.t2

    def to_json(self) -> dict:
        return {"t1": self.t1, "t2": self.t2, "tag": self.tag, "expected": dict(self.expected)}

    @classmethod
    def from_json(cls, doc: dict) -> IntervalSpec:
        return cls(float(doc["t1"]), float(doc["t2"]), str(doc["tag"]), {k: int(v) for k, v in doc["expected"].items()})


def intervals_to_json(intervals: Sequence[IntervalSpec]) -> list[dict]:
    return [iv.to_json() for iv in intervals]


def intervals_from_json(doc) -> list[IntervalSpec]:
    if isinstance(doc, str):
        doc = json.loads(doc)
    return [IntervalSpec.from_json(d) for d in doc]


def _runs(pieces, cond: Condition) -> list[tuple[float, float]]:
    """Maximal time spans where ``cond`` holds exactly, merging touching pieces."""
    runs: list[list[float]] = []
    for t0, t1, bits in pieces:
        if not cond.holds(bits):
            continue
        if runs and abs(runs[-1][1] - t0) <= 1e-12 * max(1.0, abs(t0)):
            runs[-1][1] = t1
        else:
            runs.append([t0, t1])
    return [(a, b) for a, b in runs]


def derive_intervals(req: Requirement, schedule: BitSchedule, tau: float) -> list[IntervalSpec]:
    """The maximal intervals of ``schedule`` on which each rule's premise holds.

    For every maximal ``hold`` run, the interval starts at the first
    ``trigger`` run inside it that lasts at least ``tau``.  Later starts give
    windows contained in this one, so checking it covers them all.
    """
    pieces = schedule.pieces()
    out = []
    for rule in req.rules:
        triggers = _runs(pieces, rule.trigger)
        for h0, h1 in _runs(pieces, rule.hold):
            for a0, a1 in triggers:
                if a0 >= h0 - 1e-12 and a1 <= h1 + 1e-12 and a1 - a0 >= tau - 1e-12:
                    out.append(IntervalSpec(a0, h1, rule.tag, dict(rule.expected)))
                    break
    return sorted(out, key=lambda iv: (iv.t1, iv.tag))


def encode_bits(species: Sequence[str], expected: Mapping[str, int]) -> np.ndarray:
    """Exact dual-rail vector for ``species`` given wire bits."""
    vals = []
    for s in species:
        v = WireRef.parse(s).value(expected)
        if v is None:
            raise ValueError(f"no expected value for {s}")
        vals.append(float(v))
    return np.array(vals)


@dataclass(frozen=True)
class IntervalResult:
    interval: IntervalSpec
    distance: float
    t_worst: float
    margin: float
    passed: bool
    trial: int | None = None

    def to_json(self) -> dict:
        doc = {**self.interval.to_json(), "distance": self.distance, "t_worst": self.t_worst,
               "margin": self.margin, "passed": self.passed}
        if self.trial is not None:
            doc["trial"] = self.trial
        return doc


@dataclass
class VerificationReport:
    """Per-interval outcomes; ``margin = eps - distance``.

    An interval passes iff ``margin > -slack``: the slack absorbs grid and
    integration error and is reported on its own.
    """

    results: list[IntervalResult]
    eps: float
    tau: float
    slack: float = DEFAULT_SLACK
    perturbations: list[dict] = field(default_factory=list)
    seeds: list = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    preconditions: dict[str, bool] = field(default_factory=dict)
    trial_margins: list[float] = field(default_factory=list)
    noise: str | None = None
    traces: list = field(default_factory=list, repr=False)

    @property
    def worst_margin(self) -> float:
        return min((r.margin for r in self.results), default=self.eps)

    @property
    def passed(self) -> bool:
        return not self.failures and all(r.passed for r in self.results)

    @property
    def n_failed(self) -> int:
        return sum(not r.passed for r in self.results)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "noise": self.noise,
            "eps": self.eps,
            "tau": self.tau,
            "slack": self.slack,
            "worst_margin": self.worst_margin,
            "n_intervals": len(self.results),
            "n_failed": self.n_failed,
            "preconditions": self.preconditions,
            "seeds": self.seeds,
            "trial_margins": self.trial_margins,
            "failures": self.failures,
            "perturbations": self.perturbations,
            "results": [r.to_json() for r in self.results],
        }

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        trials = f", {len(self.trial_margins)} trials" if self.trial_margins else ""
        lines = [f"{status}: {len(self.results)} interval checks{trials}, worst margin {self.worst_margin:.6g} "
                 f"(eps {self.eps:g}, slack {self.slack:g})"]
        for f in self.failures:
            lines.append(f"  trial {f.get('trial')}: {f.get('error')}")
        bad = [r for r in self.results if not r.passed]
        for r in bad[:10]:
            iv = r.interval
            where = "" if r.trial is None else f"trial {r.trial} "
            lines.append(f"  {where}{iv.tag} [{iv.t1:g}, {iv.t2:g}]: distance {r.distance:.6g} at t={r.t_worst:.6g}")
        if len(bad) > 10:
            lines.append(f"  ... {len(bad) - 10} more")
        if self.preconditions and not all(self.preconditions.values()):
            broken = [k for k, v in self.preconditions.items() if not v]
            lines.append(f"  outside theorem preconditions: {', '.join(broken)}")
        return "\n".join(lines)


def interval_distances(output: Signal, intervals: Sequence[IntervalSpec], tau: float, grid_dt: float):
    """``(distance, t_worst)`` per interval: grid sup of the Euclidean error on the checked window."""
    out = []
    for iv in intervals:
        lo, hi = iv.window(tau)
        t = _grid((lo, hi), grid_dt)
        target = encode_bits(output.species, iv.expected)
        err = np.sqrt(((output(t) - target) ** 2).sum(axis=1))
        i = int(np.argmax(err))
        out.append((float(err[i]), float(t[i])))
    return out


def check_requirement(output: Signal, intervals: Sequence[IntervalSpec], eps: float, tau: float,
                      grid_dt: float | None = None, slack: float = DEFAULT_SLACK) -> VerificationReport:
    """Check each interval's window against the exact encoding of its expected bits.

    Passing certifies a witness within ``eps``: the exact encoding on the
    checked windows, the measured signal elsewhere.
    """
    grid_dt = tau / 200 if grid_dt is None else grid_dt
    horizon = getattr(output, "horizon", np.inf)
    for iv in intervals:
        if iv.t2 - iv.t1 < tau - 1e-12:
            raise ValueError(f"interval [{iv.t1}, {iv.t2}] is shorter than tau")
        if iv.t2 > horizon + 1e-9:
            raise ValueError(f"interval [{iv.t1}, {iv.t2}] exceeds the trace horizon {horizon}")
    results = []
    for iv, (dist, tw) in zip(intervals, interval_distances(output, intervals, tau, grid_dt)):
        margin = eps - dist
        results.append(IntervalResult(iv, dist, tw, margin, margin > -slack))
    return VerificationReport(results, eps, tau, slack)
