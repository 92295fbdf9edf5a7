"""``crnc`` command-line interface.

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 simulation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cases import ACCEPTANCE_DELTA, CASE_NAMES, check_flip_flop, demo_case
from .circuits import NetlistError, compile_netlist, parse_netlist
from .constructions import DeltaVector, GateParams
from .kinetics import SimConfig, SimulationError, measure, simulate
from .model import BAR, Context, InvalidCrnError, crn_from_json, crn_to_json
from .signals import BitSchedule, ConstantSignal, schedule_to_signal
from .timing import write_timing_svg
from .verification import (
    NOISE_KINDS,
    IntervalSpec,
    LemmaPreconditionError,
    admissible_grid,
    check_requirement,
    intervals_from_json,
    intervals_to_json,
    lemma3_closed_form,
    lemma3_rk4,
    lemma4_crossing_ok,
    robust_sweep,
    sample_perturbation,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SIM = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class FileTarget:
    """A network loaded from disk, shaped like a gate instance."""

    crn: object
    x0: dict
    input_wires: tuple
    output_species: tuple
    params: GateParams


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _manifest_path(primary: Path) -> Path:
    return primary / "manifest.json" if primary.is_dir() else primary.with_name(primary.stem + ".manifest.json")


def write_manifest(primary, args, command: str, inputs: dict, params: dict, outputs: list) -> Path:
    """Record everything needed to rerun ``command`` and get identical outputs."""
    doc = {
        "tool": "crnc",
        "version": __version__,
        "command": command,
        "argv": list(args.argv),
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items() if v},
        "params": params,
        "numpy": np.__version__,
        "outputs": [str(o) for o in outputs],
    }
    path = _manifest_path(Path(primary))
    _write_json(path, doc)
    return path


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})")


def _delta(args) -> DeltaVector:
    try:
        return DeltaVector.parse(args.delta, eps=args.eps)
    except ValueError as exc:
        raise InputError(f"--delta: {exc}")


def _cfg(args, horizon: float) -> SimConfig:
    kw = {"rel_tol": args.rtol, "abs_tol": args.atol}
    if args.dt is not None:
        kw["output_dt"] = args.dt
    return SimConfig.for_tau(args.tau, horizon, **kw)


def _cfg_json(cfg: SimConfig) -> dict:
    return cfg.to_json()


def _default_x0(crn) -> dict:
    """Each ``W``/``W_bar`` state pair at (1, 0); unpaired states at 0."""
    x0 = {s: 0.0 for s in crn.states}
    for s in crn.states:
        if not s.endswith(BAR) and s + BAR in x0:
            x0[s] = 1.0
    return x0


def _load_crn(path):
    try:
        crn, x0 = crn_from_json(_load_json(path))
    except (InvalidCrnError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}")
    return crn, (x0 if x0 is not None else _default_x0(crn))


def _input_wires(crn) -> tuple:
    return tuple(dict.fromkeys(u[: -len(BAR)] if u.endswith(BAR) else u for u in crn.inputs))


def _load_schedule(path) -> BitSchedule:
    try:
        return BitSchedule.from_json(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}")


# commands -----------------------------------------------------------------

def cmd_compile(args) -> int:
    try:
        text = Path(args.netlist).read_text()
    except FileNotFoundError:
        raise InputError(f"no such file: {args.netlist}")
    try:
        nl = parse_netlist(text)
        cc = compile_netlist(nl, GateParams(_delta(args), args.tau))
    except NetlistError as exc:
        for line, msg in exc.diagnostics:
            print(f"{args.netlist}:{line}: {msg}" if line else f"{args.netlist}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (InvalidCrnError, ValueError) as exc:
        raise InputError(str(exc))
    out = Path(args.output)
    _write_json(out, crn_to_json(cc.crn, cc.x0))
    m = write_manifest(out, args, "compile", {"netlist": args.netlist},
                       {"tau": args.tau, "delta": cc.params.delta.to_json(), "depth": cc.depth,
                        "gate_tau": cc.gate_tau}, [out])
    print(f"compiled {nl.G} gates (depth {cc.depth}) into {len(cc.crn.reactions)} reactions -> {out} ({m.name})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    crn, x0 = _load_crn(args.crn)
    sched = _load_schedule(args.schedule) if args.schedule else None
    if sched is None and crn.inputs:
        raise InputError("the network has inputs; pass --schedule")
    horizon = args.horizon if args.horizon is not None else (sched.horizon if sched else None)
    if horizon is None:
        raise InputError("pass --horizon or --schedule")
    try:
        cfg = _cfg(args, horizon)
        signal = schedule_to_signal(sched, _input_wires(crn)) if sched else None
    except ValueError as exc:
        raise InputError(str(exc))
    delta = _delta(args)
    params = {"tau": args.tau, "config": _cfg_json(cfg), "noise": args.noise, "seed": args.seed}
    if args.noise != "none":
        target = FileTarget(crn, x0, _input_wires(crn), crn.states, GateParams(delta, args.tau))
        base = signal if signal is not None else ConstantSignal({})
        p = sample_perturbation(target, base, delta, args.seed, 0, args.noise)
        crn, x0 = p.crn, p.x0
        signal = p.input_signal if signal is not None else None
        params["delta"] = delta.to_json()
    trace = simulate(crn, x0, signal, cfg)
    out = Path(args.output)
    trace.to_csv(out)
    outputs = [out]
    if args.svg:
        write_timing_svg(args.svg, trace)
        outputs.append(Path(args.svg))
    write_manifest(out, args, "simulate", {"crn": args.crn, "schedule": args.schedule}, params, outputs)
    print(f"{len(trace.times)} samples of {len(trace.species)} species -> {out}")
    return EXIT_OK


def _finish_report(report, out: Path) -> int:
    print(report.summary())
    if report.failures:
        return EXIT_SIM
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    crn, x0 = _load_crn(args.crn)
    sched = _load_schedule(args.schedule)
    try:
        intervals = intervals_from_json(_load_json(args.intervals))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.intervals}: {exc}")
    if not intervals:
        raise InputError("no intervals to check")
    wires = list(dict.fromkeys(w for iv in intervals for w in iv.expected))
    outputs = tuple(s for w in wires for s in (w, w + BAR))
    missing = [s for s in outputs if s not in crn.states]
    if missing:
        raise InputError(f"expected outputs are not state species: {missing}")
    delta = _delta(args)
    target = FileTarget(crn, x0, _input_wires(crn), outputs, GateParams(delta, args.tau))
    try:
        cfg = _cfg(args, sched.horizon)
        report = robust_sweep(target, sched, intervals, delta, args.trials, args.seed, tau=args.tau,
                              noise=args.noise, cfg=cfg)
    except ValueError as exc:
        raise InputError(str(exc))
    out = Path(args.output)
    _write_json(out, report.to_json())
    write_manifest(out, args, "verify", {"crn": args.crn, "schedule": args.schedule, "intervals": args.intervals},
                   {"tau": args.tau, "delta": delta.to_json(), "trials": args.trials, "seed": args.seed,
                    "noise": args.noise, "config": _cfg_json(cfg)}, [out])
    return _finish_report(report, out)


def _run_case(case, args, keep_traces=False):
    cfg = _cfg(args, case.schedule.horizon)
    report = robust_sweep(case.target, case.schedule, case.intervals, case.delta, args.trials, args.seed,
                          tau=case.tau, noise=args.noise, cfg=cfg, keep_traces=keep_traces or case.name == "dff")
    dff = None
    if case.name == "dff":
        base = schedule_to_signal(case.schedule, case.target.input_wires)
        ctx = Context(base, case.target.output_species)
        checks = []
        for i, tr in enumerate(report.traces):
            if tr is None:
                continue
            p = sample_perturbation(case.target, base, case.delta, args.seed, i, args.noise)
            checks.append(check_flip_flop(measure(tr, ctx, p.meas_noise), case.schedule, case.tau, case.delta.eps,
                                          x0_q=int(round(case.target.x0["Q"]))))
        dff = checks
    return cfg, report, dff


def _case_doc(report, dff) -> dict:
    doc = report.to_json()
    if dff is not None:
        doc["flip_flop"] = {
            "passed": all(c.passed for c in dff),
            "worst_distance": max((c.worst_distance for c in dff), default=0.0),
            "windows": [list(w) for w in (dff[0].windows if dff else ())],
        }
    return doc


def _case_exit(report, dff) -> int:
    if report.failures:
        return EXIT_SIM
    ok = report.passed and (dff is None or all(c.passed for c in dff))
    return EXIT_OK if ok else EXIT_FAIL


def _case_summary(report, dff) -> str:
    if dff is None:
        return report.summary()
    worst = max((c.worst_distance for c in dff), default=0.0)
    ok = all(c.passed for c in dff)
    return (f"{'PASS' if ok else 'FAIL'}: Q moved only within tau after falling edges in {len(dff)} trials; "
            f"worst out-of-window distance {worst:.6g} (band {dff[0].eps if dff else 0:g})")


def cmd_sweep(args) -> int:
    case = demo_case(args.name, _delta(args), args.tau)
    cfg, report, dff = _run_case(case, args)
    out = Path(args.output)
    _write_json(out, _case_doc(report, dff))
    write_manifest(out, args, "sweep", {}, {"case": args.name, "tau": args.tau, "delta": case.delta.to_json(),
                                            "trials": args.trials, "seed": args.seed, "noise": args.noise,
                                            "config": _cfg_json(cfg)}, [out])
    print(_case_summary(report, dff))
    return _case_exit(report, dff)


def cmd_demo(args) -> int:
    case = demo_case(args.name, _delta(args), args.tau)
    outdir = Path(args.output or f"demo-{args.name}")
    outdir.mkdir(parents=True, exist_ok=True)
    files = {
        "crn": outdir / "crn.json",
        "schedule": outdir / "schedule.json",
        "intervals": outdir / "intervals.json",
        "trace": outdir / "trace.csv",
        "svg": outdir / "timing.svg",
        "report": outdir / "report.json",
    }
    _write_json(files["crn"], crn_to_json(case.target.crn, case.target.x0))
    _write_json(files["schedule"], case.schedule.to_json())
    _write_json(files["intervals"], intervals_to_json(case.intervals))
    cfg, report, dff = _run_case(case, args, keep_traces=True)
    trace = report.traces[0] if report.traces else None
    if trace is not None:
        trace.to_csv(files["trace"])
        write_timing_svg(files["svg"], trace, title=f"{args.name} ({args.noise} noise, seed {args.seed}, trial 0)")
    _write_json(files["report"], _case_doc(report, dff))
    write_manifest(outdir, args, "demo", {}, {"case": args.name, "tau": args.tau, "delta": case.delta.to_json(),
                                              "trials": args.trials, "seed": args.seed, "noise": args.noise,
                                              "config": _cfg_json(cfg)}, list(files.values()))
    for note in getattr(case.target, "notes", ()):
        print(f"note: {note}")
    print(_case_summary(report, dff))
    print(f"artifacts in {outdir}/")
    return _case_exit(report, dff)


def lemma_grid_rows(delta2: float, delta3: float, tau: float = 1.0) -> list[dict]:
    rows = []
    for lp in admissible_grid(tau, delta2, delta3):
        x_half = float(lemma3_closed_form(lp, tau / 2))
        row = {**lp.describe(), "ktau": lp.ktau, "lemma3_x": x_half, "lemma3_ok": x_half > 0.6,
               "lemma3_rk4_err": abs(x_half - lemma3_rk4(lp, tau / 2))}
        try:
            ok, T, xT = lemma4_crossing_ok(lp)
            row.update(lemma4_T=T, lemma4_x_at_T=xT, lemma4_ok=bool(ok and T <= tau / 2), lemma4_error=None)
        except LemmaPreconditionError as exc:
            row.update(lemma4_T=None, lemma4_x_at_T=None, lemma4_ok=False, lemma4_error=str(exc))
        rows.append(row)
    return rows


def cmd_lemmas(args) -> int:
    rows = lemma_grid_rows(args.delta2, args.delta3, args.tau)
    print(f"{'d1':>6} {'d':>7} {'p':>5} {'ktau':>5} {'x(tau/2)':>9} {'T':>8}  status")
    for r in rows:
        T = "-" if r["lemma4_T"] is None else f"{r['lemma4_T']:.4f}"
        status = "ok" if r["lemma3_ok"] and r["lemma4_ok"] else (r["lemma4_error"] or "T > tau/2")
        print(f"{r['delta1']:>6g} {r['d']:>7g} {r['p']:>5g} {r['ktau']:>5g} {r['lemma3_x']:>9.5f} {T:>8}  {status}")
    n3 = sum(r["lemma3_ok"] for r in rows)
    n4 = sum(r["lemma4_ok"] for r in rows)
    print(f"phase-1 bound: {n3}/{len(rows)} points reach 3/5 by tau/2")
    print(f"phase-2 bound: {n4}/{len(rows)} points reach p - gamma by tau/2 (d2={args.delta2:g}, d3={args.delta3:g})")
    out = Path(args.output)
    _write_json(out, rows)
    write_manifest(out, args, "lemmas", {}, {"tau": args.tau, "delta2": args.delta2, "delta3": args.delta3}, [out])
    return EXIT_OK if n3 == n4 == len(rows) else EXIT_FAIL


# parser -------------------------------------------------------------------

def _common(p, *, noise_default="sinusoidal", trials=50):
    p.add_argument("--tau", type=float, default=1.0, help="propagation delay")
    p.add_argument("--delta", default=",".join(f"{v:g}" for v in ACCEPTANCE_DELTA.as_tuple()),
                   help="d1,d2,d3,d4 perturbation bounds")
    p.add_argument("--eps", type=float, default=None, help="tolerance (default d1)")
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=NOISE_KINDS, default=noise_default)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--dt", type=float, default=None, help="output sampling interval (default tau/200)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crnc", description="Compile, simulate and verify dual-rail CRN logic.")
    ap.add_argument("--version", action="version", version=f"crnc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a NAND netlist into a CRN")
    p.add_argument("netlist")
    _common(p)
    p.add_argument("-o", "--output", default="crn.json")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", help="simulate a CRN under a bit schedule")
    p.add_argument("--crn", required=True)
    p.add_argument("--schedule")
    p.add_argument("--horizon", type=float, default=None)
    _common(p, noise_default="none")
    p.add_argument("-o", "--output", default="trace.csv")
    p.add_argument("--svg", default=None, help="also write a timing diagram")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="robustness sweep of a CRN against declared intervals")
    p.add_argument("--crn", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--intervals", required=True)
    _common(p)
    p.add_argument("-o", "--output", default="report.json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="robustness sweep of a built-in case")
    p.add_argument("name", choices=CASE_NAMES)
    _common(p)
    p.add_argument("-o", "--output", default="report.json")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lemmas", help="check the comparison-bound lemmas on the parameter grid")
    p.add_argument("--grid", action="store_true", help="run the 81-point grid (the default)")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--delta2", type=float, default=0.0)
    p.add_argument("--delta3", type=float, default=0.0099)
    p.add_argument("-o", "--output", default="lemmas.json")
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("demo", help="end-to-end run of a built-in case")
    p.add_argument("name", choices=CASE_NAMES)
    _common(p, noise_default="random", trials=5)
    p.add_argument("-o", "--output", default=None, help="output directory (default demo-<name>)")
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except InputError as exc:
        print(f"crnc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SimulationError as exc:
        print(f"crnc: simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
