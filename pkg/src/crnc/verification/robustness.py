"""Seeded perturbation sweeps: each trial draws one admissible perturbation of
input, measurement, initial state and rate constants, simulates, and checks
the requirement with ``eps``.

Trials are integrated in fixed-size batches (one ODE system per batch with a
leading trial axis), so results depend only on ``seed`` and ``batch_size``,
never on how batches are spread over threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..constructions import DeltaVector
from ..kinetics import SimConfig, SimulationError, measure, simulate_batch
from ..model import Context, SinusoidalRate, TdIoCrn, TdReaction
from ..signals import BitSchedule, NoiseSpec, NoisySignal, make_rng, schedule_to_signal
from .requirements import DEFAULT_SLACK, IntervalResult, IntervalSpec, VerificationReport, check_requirement

__all__ = ["NOISE_KINDS", "Perturbation", "sample_perturbation", "robust_sweep", "thread_count"]

NOISE_KINDS = ("none", "sinusoidal", "random")
RATE_FREQ = (1.0, 20.0)
_INPUT, _RATES, _X0, _MEAS = range(4)


def thread_count(requested: int | None = None) -> int:
    """``requested`` or the CPU count, capped by ``CRNC_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("CRNC_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass(frozen=True, eq=False)
class Perturbation:
    trial: int
    crn: object
    x0: dict
    input_signal: object
    meas_noise: NoiseSpec | None
    rate_clipped: bool = False

    def describe(self) -> dict:
        doc = {"trial": self.trial, "x0": self.x0}
        if isinstance(self.input_signal, NoisySignal):
            doc["input_noise"] = self.input_signal.noise.to_json()
        if isinstance(self.crn, TdIoCrn):
            doc["rates"] = [
                {"k": f.k, "amplitude": f.amplitude, "freq": f.freq, "phase": f.phase}
                for f in (rx.rate_fn for rx in self.crn.reactions)
            ]
        if self.meas_noise is not None:
            doc["measurement_noise"] = self.meas_noise.to_json()
        return doc


def _noise(kind, amplitude, n, seed, *stream):
    if kind == "random":
        return NoiseSpec.random(amplitude, n, seed, *stream)
    return NoiseSpec.sinusoidal(amplitude, n, seed, *stream)


def sample_perturbation(target, base_signal, delta: DeltaVector, seed: int, trial: int,
                        noise: str = "sinusoidal") -> Perturbation:
    """Draw trial ``trial``'s perturbation from independent ``(seed, trial, stream)`` generators.

    Per-coordinate noise amplitudes are ``d1 / sqrt(#inputs)`` and
    ``d2 / sqrt(#outputs)`` so the Euclidean sup bounds hold.  The initial
    state moves a distance ``d3`` in a uniformly random direction, then is
    clamped at zero.  Each reaction gets ``k + d4 sin(w t + phi)``.
    A zero bound leaves that component untouched.
    """
    if noise not in NOISE_KINDS:
        raise ValueError(f"noise must be one of {NOISE_KINDS}")
    crn, x0, signal, meas = target.crn, dict(target.x0), base_signal, None
    if noise == "none":
        return Perturbation(trial, crn, x0, signal, meas)
    n_in, n_out = len(base_signal.species), len(target.output_species)
    if delta.d1 > 0 and n_in:
        signal = NoisySignal(base_signal, _noise(noise, delta.d1 / np.sqrt(n_in), n_in, seed, trial, _INPUT))
    clipped = False
    if delta.d4 > 0:
        rng = make_rng(seed, trial, _RATES)
        reactions = []
        for rx in crn.reactions:
            w = rng.uniform(*RATE_FREQ)
            phi = rng.uniform(0.0, 2 * np.pi)
            amp = delta.d4
            if amp >= rx.k:
                amp, clipped = rx.k * (1 - 1e-9), True
            reactions.append(TdReaction.from_reaction(rx, SinusoidalRate(rx.k, amp, w, phi)))
        crn = TdIoCrn(crn.inputs, crn.states, tuple(reactions))
    if delta.d3 > 0:
        rng = make_rng(seed, trial, _X0)
        v = rng.standard_normal(len(crn.states))
        v *= delta.d3 / np.linalg.norm(v)
        x0 = {s: max(0.0, x0[s] + dv) for s, dv in zip(crn.states, v)}
    if delta.d2 > 0 and n_out:
        meas = _noise(noise, delta.d2 / np.sqrt(n_out), n_out, seed, trial, _MEAS)
    return Perturbation(trial, crn, x0, signal, meas, clipped)


def _simulate_chunk(perts: Sequence[Perturbation], cfg: SimConfig):
    """Traces for a batch, or per-trial errors if the batch fails."""
    try:
        return simulate_batch([p.crn for p in perts], [p.x0 for p in perts], [p.input_signal for p in perts], cfg)
    except SimulationError:
        if len(perts) == 1:
            raise
    out = []
    for p in perts:
        try:
            out.append(simulate_batch([p.crn], [p.x0], [p.input_signal], cfg)[0])
        except SimulationError as exc:
            out.append(exc)
    return out


def robust_sweep(target, schedule: BitSchedule, intervals: Sequence[IntervalSpec], delta: DeltaVector,
                 trials: int = 50, seed: int = 0, *, tau: float | None = None, noise: str = "sinusoidal",
                 cfg: SimConfig | None = None, eps: float | None = None, batch_size: int = 64,
                 threads: int | None = None, keep_traces: bool = False,
                 slack: float = DEFAULT_SLACK) -> VerificationReport:
    """Run ``trials`` perturbed simulations of ``target`` and check every interval in each.

    ``target`` is a gate instance or compiled circuit (anything with ``crn``,
    ``x0``, ``input_wires``, ``output_species`` and ``params``).  ``eps``
    defaults to ``delta.eps``.  With ``keep_traces`` the report carries the
    state traces in ``report.traces`` (``None`` for failed trials).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    tau = target.params.tau if tau is None else tau
    eps = delta.eps if eps is None else eps
    cfg = SimConfig.for_tau(tau, schedule.horizon) if cfg is None else cfg
    base = schedule_to_signal(schedule, target.input_wires)
    perts = [sample_perturbation(target, base, delta, seed, i, noise) for i in range(trials)]
    chunks = [perts[i:i + batch_size] for i in range(0, trials, batch_size)]
    n_threads = min(thread_count(threads), len(chunks))
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            sims = list(pool.map(lambda c: _simulate_chunk(c, cfg), chunks))
    else:
        sims = [_simulate_chunk(c, cfg) for c in chunks]
    traces = [t for chunk in sims for t in chunk]

    ctx = Context(base, target.output_species)
    results: list[IntervalResult] = []
    failures, margins = [], []
    for p, tr in zip(perts, traces):
        if isinstance(tr, SimulationError):
            failures.append({"trial": p.trial, "error": str(tr), "t": tr.t})
            margins.append(float("nan"))
            continue
        out = measure(tr, ctx, p.meas_noise)
        rep = check_requirement(out, intervals, eps, tau, grid_dt=cfg.output_dt, slack=slack)
        for r in rep.results:
            results.append(IntervalResult(r.interval, r.distance, r.t_worst, r.margin, r.passed, p.trial))
        margins.append(rep.worst_margin)

    pre = {**delta.theorem_preconditions(), "rate amplitude below k": not any(p.rate_clipped for p in perts)}
    report = VerificationReport(
        results, eps, tau, slack,
        perturbations=[p.describe() for p in perts],
        seeds=[{"seed": seed, "trial": p.trial} for p in perts],
        failures=failures,
        preconditions=pre,
        trial_margins=margins,
        noise=noise,
    )
    if keep_traces:
        report.traces = [None if isinstance(t, SimulationError) else t for t in traces]
    return report
