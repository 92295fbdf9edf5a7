"""Scalar comparison ODEs that bound a NAND output rail, with closed forms and checks.

Phase 1 is the linear bound ``x' = k(-a + b(p - x) - c x)``, which must lift
the rail past 3/5 within ``tau/2``.  Phase 2 is the signal-restoration cubic
``x' = a x^2 (p - x) - b x (p - x)^2 - c x`` started from 3/5, which must
reach ``p - gamma`` within another ``tau/2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from ..integrators import dopri5, rk4
from .requirements import IntervalSpec

__all__ = [
    "LemmaParams",
    "LemmaPreconditionError",
    "Lemma4Constants",
    "GRID",
    "GRID_DELTA2",
    "GRID_DELTA3",
    "admissible_grid",
    "lemma3_constants",
    "lemma3_closed_form",
    "lemma3_holds",
    "lemma3_rk4",
    "lemma4_constants",
    "lemma4_convergence_time",
    "lemma4_rk4",
    "lemma4_crossing_ok",
    "DominationResult",
    "bounding_ode_dominates",
]

THRESHOLD = 3 / 5

GRID = {
    "delta1": (0.02, 0.03, 0.039),
    "d": (0.001, 0.005, 0.0099),
    "p": (0.99, 1.0, 1.01),
    "ktau": (13.0, 20.0, 50.0),
}
# the grid fixes neither d2 nor d3; p = 0.99 and 1.01 need d3 near 1/100
GRID_DELTA2 = 0.0
GRID_DELTA3 = 0.0099


class LemmaPreconditionError(ValueError):
    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        super().__init__(f"precondition {inequality} fails" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class LemmaParams:
    """Inputs to the comparison bounds; ``d = d4 / k``."""

    p: float
    d: float
    delta1: float
    delta3: float
    k: float
    tau: float = 1.0
    delta2: float = 0.0

    @classmethod
    def from_grid(cls, delta1, d, p, ktau, tau=1.0, delta2=GRID_DELTA2, delta3=GRID_DELTA3) -> LemmaParams:
        return cls(p=p, d=d, delta1=delta1, delta3=delta3, k=ktau / tau, tau=tau, delta2=delta2)

    @property
    def gamma(self) -> float:
        return self.delta1 - self.delta2 - self.delta3

    @property
    def p_in_band(self) -> bool:
        return abs(self.p - 1.0) <= self.delta3

    @property
    def ktau(self) -> float:
        return self.k * self.tau

    def describe(self) -> dict:
        return {"p": self.p, "d": self.d, "delta1": self.delta1, "delta2": self.delta2,
                "delta3": self.delta3, "k": self.k, "tau": self.tau, "gamma": self.gamma}


def admissible_grid(tau: float = 1.0, delta2: float = GRID_DELTA2, delta3: float = GRID_DELTA3) -> list[LemmaParams]:
    """The 81 corner points over ``delta1``, ``d``, ``p`` and ``k tau``."""
    return [
        LemmaParams.from_grid(d1, d, p, kt, tau, delta2, delta3)
        for d1, d, p, kt in itertools.product(GRID["delta1"], GRID["d"], GRID["p"], GRID["ktau"])
    ]


def lemma3_constants(lp: LemmaParams, rail: str = "bar") -> tuple[float, float, float]:
    """``(a, b, c)`` of the phase-1 bound.

    ``rail="bar"`` is the bound for the complemented output under
    inputs ``11``; ``rail="plain"`` the bound for the output under an input
    ``0``, where only one input factor enters ``b``.
    """
    d, e = lp.d, lp.delta1
    a = lp.p ** 3 / 18 * ((3 + d) ** 1.5 + 9 * d)
    b = (1 - d) * (1 - e) ** 2 if rail == "bar" else (1 - d) * (1 - e)
    c = 2 * e * (1 + d)
    return a, b, c


def lemma3_closed_form(lp: LemmaParams, t, x0: float = 0.0, rail: str = "bar"):
    """Solution of the phase-1 bound from ``x(0) = x0``."""
    a, b, c = lemma3_constants(lp, rail)
    if not b + c > 0:
        raise LemmaPreconditionError("b + c > 0")
    xs = (b * lp.p - a) / (b + c)
    return xs + (x0 - xs) * np.exp(-lp.k * (b + c) * np.asarray(t, dtype=float))


def lemma3_holds(lp: LemmaParams) -> bool:
    return float(lemma3_closed_form(lp, lp.tau / 2)) > THRESHOLD


def lemma3_rk4(lp: LemmaParams, t_end: float, n_steps: int = 2000, x0: float = 0.0, rail: str = "bar") -> float:
    a, b, c = lemma3_constants(lp, rail)
    k, p = lp.k, lp.p

    def f(t, x):
        return k * (-a + b * (p - x) - c * x)

    return float(rk4(f, 0.0, np.array([x0]), t_end / n_steps, n_steps, record_every=n_steps)[-1, 0])


@dataclass(frozen=True)
class Lemma4Constants:
    a: float
    b: float
    c: float
    cstar: float
    A: float
    E1: float
    E2: float


def lemma4_constants(lp: LemmaParams) -> Lemma4Constants:
    k, d, p = lp.k, lp.d, lp.p
    a, b, c = 3 * k * (1 - d), 3 * k * (1 + d), 2 * k * lp.delta1 * (1 + d)
    cstar = 4 * c * (a + b) / (p ** 2 * a ** 2)
    A = p / 2 * a / (a + b) * (1 - np.sqrt(max(0.0, 1 - cstar)))
    E1 = p * b / (a + b) + A
    return Lemma4Constants(a, b, c, cstar, A, E1, p - A)


def lemma4_rhs(lp: LemmaParams):
    C = lemma4_constants(lp)
    p = lp.p

    def f(t, x):
        return C.a * x * x * (p - x) - C.b * x * (p - x) ** 2 - C.c * x

    return f


def lemma4_convergence_time(lp: LemmaParams, x0: float = THRESHOLD) -> float:
    """Time for the restoration bound to climb from ``x0`` past ``p - gamma``.

    Raises :class:`LemmaPreconditionError` naming the inequality that fails:
    the bistability condition on ``c``, ``x(0) > E1``, ``gamma > 0``, or
    ``E2 > p - gamma`` (otherwise the target is never reached).
    """
    C = lemma4_constants(lp)
    p, g = lp.p, lp.gamma
    bound = p ** 2 * C.a ** 2 / (4 * (C.a + C.b))
    if not C.c < bound:
        raise LemmaPreconditionError("c < p^2 a^2 / (4 (a + b))", f"c={C.c:.6g}, bound={bound:.6g}")
    if not x0 > C.E1:
        raise LemmaPreconditionError("x(0) > E1", f"x(0)={x0:.6g}, E1={C.E1:.6g}")
    if not g > 0:
        raise LemmaPreconditionError("gamma > 0", f"gamma={g:.6g}")
    if not C.E2 > p - g:
        raise LemmaPreconditionError("E2 > p - gamma", f"E2={C.E2:.6g}, p-gamma={p - g:.6g}")
    u = ((p - g - C.E1) * (C.E2 - x0)) / ((x0 - C.E1) * (C.E2 - p + g))
    return (C.a + C.b) / (C.a * C.b * p ** 2 * (1 - C.cstar)) * np.log(u)


def lemma4_rk4(lp: LemmaParams, t_end: float, dt: float = 1e-5, x0: float = THRESHOLD) -> float:
    """``x(t_end)`` of the restoration bound by fixed-step RK4 (last step shortened)."""
    C = lemma4_constants(lp)
    a, b, c, p = float(C.a), float(C.b), float(C.c), float(lp.p)

    # scalar loop: far cheaper than array RK4 for a 1-D system
    def f(x):
        return a * x * x * (p - x) - b * x * (p - x) ** 2 - c * x

    def step(x, h):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    n = int(np.floor(t_end / dt))
    x = float(x0)
    for _ in range(n):
        x = step(x, dt)
    rest = t_end - n * dt
    if rest > 1e-15:
        x = step(x, rest)
    return x


def lemma4_crossing_ok(lp: LemmaParams, tol: float = 1e-6) -> tuple[bool, float, float]:
    """``(ok, T, x(T))``: the simulated bound is within ``tol`` of ``p - gamma`` or above at ``T``."""
    T = lemma4_convergence_time(lp)
    xT = lemma4_rk4(lp, max(T, 0.0))
    return xT >= lp.p - lp.gamma - tol, T, xT


@dataclass(frozen=True)
class DominationResult:
    which: str
    rail: str
    passed: bool
    phase1_margin: float
    phase2_margin: float
    p: float

    def __bool__(self) -> bool:
        return self.passed


_TAGS = {"lemma5": ("phi11", 1), "lemma6": ("phi0", 0)}


def bounding_ode_dominates(trace, lp: LemmaParams, interval: IntervalSpec, which: str,
                           pair: tuple[str, str] | None = None, slack: float = 1e-6) -> DominationResult:
    """Check that the output rail stays above both comparison solutions on ``interval``.

    ``which="lemma5"`` bounds the complemented rail under inputs ``11``;
    ``"lemma6"`` bounds the plain rail when some input is 0.  ``pair`` is
    the output ``(rail, dual)``, by default the first two state species.
    Phase 1 starts from the trace value at ``t1`` and runs for ``tau/2``;
    phase 2 starts from 3/5 at ``t1 + tau/2``.  ``lp.p`` is replaced by the
    rail-pair total at ``t1``.  Margins are minima of ``rail - comparison``
    over trace samples after each phase's start.
    """
    if which not in _TAGS:
        raise ValueError(f"which must be one of {sorted(_TAGS)}")
    tag, idx = _TAGS[which]
    if interval.tag != tag:
        raise ValueError(f"{which} applies to {tag} intervals, got {interval.tag}")
    pair = tuple(trace.species[:2]) if pair is None else pair
    rail = pair[idx]
    sig = trace.as_signal()
    cols = [trace.species.index(s) for s in pair]
    t1, t2, half = interval.t1, interval.t2, lp.tau / 2
    start = sig(t1)[cols]
    lp = replace(lp, p=float(start.sum()))
    x1 = float(start[idx])
    times, vals = trace.times, trace[rail]

    sel1 = (times > t1) & (times <= min(t1 + half, t2))
    comp1 = lemma3_closed_form(lp, times[sel1] - t1, x0=x1, rail="bar" if which == "lemma5" else "plain")
    m1 = float(np.min(vals[sel1] - comp1)) if sel1.any() else np.inf

    m2 = np.inf
    if t1 + half < t2:
        sel2 = (times > t1 + half) & (times <= t2)
        f = lemma4_rhs(lp)
        comp2, _, _ = dopri5(f, t1 + half, t2, np.array([THRESHOLD]), times[sel2], rtol=1e-10, atol=1e-12)
        x_half = float(sig(t1 + half)[cols[idx]])
        m2 = min(x_half - THRESHOLD, float(np.min(vals[sel2] - comp2[:, 0])) if sel2.any() else np.inf)
    passed = m1 >= -slack and m2 >= -slack
    return DominationResult(which, rail, passed, m1, m2, lp.p)
