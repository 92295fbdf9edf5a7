"""NAND netlists: parsing, depth, boolean evaluation and compilation to a CRN.

Text format, one statement per line (``#`` starts a comment)::

    INPUTS X1, X2
    OUTPUTS Y
    Z1 = NAND(~X1, X2)
    Z2 = NAND(X1, ~X2)
    Y  = NAND(Z1, Z2)

``~W`` reads the complemented rail of ``W``.  Gates may appear in any order.
"""

from __future__ import annotations

import graphlib
import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .constructions import GateParams, _check_x0, _nand_crn, canonical_x0, rate_constant
from .model import IoCrn, WireRef, join

__all__ = [
    "Gate",
    "Netlist",
    "NetlistError",
    "CompiledCircuit",
    "parse_netlist",
    "depth",
    "subcircuit",
    "compile_netlist",
    "eval_boolean",
    "random_netlist",
    "all_vectors",
    "wire_values",
    "XOR_SOURCE",
]

XOR_SOURCE = """\
INPUTS X1, X2
OUTPUTS Y
Z1 = NAND(~X1, X2)
Z2 = NAND(X1, ~X2)
Y = NAND(Z1, Z2)
"""


class NetlistError(ValueError):
    """Carries ``(line, message)`` diagnostics; line 0 means the whole file."""

    def __init__(self, diagnostics: Sequence[tuple[int, str]]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(f"line {n}: {m}" if n else m for n, m in self.diagnostics))


@dataclass(frozen=True)
class Gate:
    out: str
    a: WireRef
    b: WireRef
    line: int = 0

    @property
    def id(self) -> str:
        return self.out

    def __str__(self) -> str:
        return f"{self.out} = NAND({self.a}, {self.b})"


@dataclass(frozen=True)
class Netlist:
    """Gates are stored in topological order."""

    inputs: tuple[str, ...]
    outputs: tuple[WireRef, ...]
    gates: tuple[Gate, ...]

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def m(self) -> int:
        return len(self.outputs)

    @property
    def G(self) -> int:
        return len(self.gates)

    def gate(self, out: str) -> Gate:
        for g in self.gates:
            if g.out == out:
                return g
        raise KeyError(out)

    def to_text(self) -> str:
        lines = [f"INPUTS {', '.join(self.inputs)}", f"OUTPUTS {', '.join(map(str, self.outputs))}"]
        lines += [str(g) for g in self.gates]
        return "\n".join(lines) + "\n"


_NAME = r"[A-Za-z][A-Za-z0-9_]*"
_GATE = re.compile(rf"^({_NAME})\s*=\s*NAND\s*\((.*)\)\s*$", re.IGNORECASE)
_HEADER = re.compile(r"^(INPUTS|OUTPUTS)\b(.*)$", re.IGNORECASE)


def _names(text: str) -> list[str]:
    return [t for t in re.split(r"[,\s]+", text.strip()) if t]


def parse_netlist(text: str) -> Netlist:
    """Parse and check a netlist; raises :class:`NetlistError` listing every problem found."""
    diags: list[tuple[int, str]] = []
    inputs: list[str] = []
    outputs: list[tuple[int, str]] = []
    raw_gates: list[tuple[int, str, list[str]]] = []
    seen_headers = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            kind = m.group(1).upper()
            if kind in seen_headers:
                diags.append((lineno, f"repeated {kind} line"))
            seen_headers.add(kind)
            names = _names(m.group(2))
            if kind == "INPUTS":
                inputs += names
            else:
                outputs += [(lineno, n) for n in names]
            continue
        m = _GATE.match(line)
        if not m:
            diags.append((lineno, f"cannot parse {line!r}"))
            continue
        args = [a.strip() for a in m.group(2).split(",")] if m.group(2).strip() else []
        raw_gates.append((lineno, m.group(1), args))
    if "INPUTS" not in seen_headers:
        diags.append((0, "missing INPUTS line"))
    if "OUTPUTS" not in seen_headers:
        diags.append((0, "missing OUTPUTS line"))

    defined: dict[str, int] = {}
    for w in inputs:
        if not re.fullmatch(_NAME, w) or w.endswith("_bar"):
            diags.append((0, f"invalid input name {w!r}"))
        if w in defined:
            diags.append((0, f"duplicate wire {w}"))
        defined[w] = 0
    gates: list[Gate] = []
    for lineno, out, args in raw_gates:
        if out.endswith("_bar"):
            diags.append((lineno, f"invalid gate output name {out!r}"))
        if out in defined:
            where = "an input" if defined[out] == 0 else f"line {defined[out]}"
            diags.append((lineno, f"duplicate wire {out} (already defined by {where})"))
            continue
        defined[out] = lineno
        if len(args) != 2:
            diags.append((lineno, f"NAND takes 2 inputs, got {len(args)}"))
            continue
        try:
            a, b = (WireRef.parse(x) for x in args)
        except ValueError as exc:
            diags.append((lineno, str(exc)))
            continue
        gates.append(Gate(out, a, b, lineno))

    for g in gates:
        for ref in (g.a, g.b):
            if ref.wire not in defined:
                diags.append((g.line, f"undefined wire {ref.wire}"))
        if g.a.wire == g.b.wire:
            diags.append((g.line, f"both inputs read wire {g.a.wire}"))
    out_refs = []
    for lineno, name in outputs:
        try:
            ref = WireRef.parse(name)
        except ValueError as exc:
            diags.append((lineno, str(exc)))
            continue
        if ref.wire not in defined:
            diags.append((lineno, f"undefined output wire {ref.wire}"))
        out_refs.append(ref)

    if not diags:
        by_out = {g.out: g for g in gates}
        ts = graphlib.TopologicalSorter({g.out: [r.wire for r in (g.a, g.b) if r.wire in by_out] for g in gates})
        try:
            ts.prepare()
        except graphlib.CycleError as exc:
            cycle = exc.args[1]
            lines = sorted({by_out[w].line for w in cycle if w in by_out})
            diags.append((lines[0], f"cycle detected: {' -> '.join(cycle)}"))
    if diags:
        raise NetlistError(sorted(diags))
    # stable order: among ready gates keep source order
    order = _stable_topo(gates)
    return Netlist(tuple(inputs), tuple(out_refs), tuple(order))


def _stable_topo(gates: Sequence[Gate]) -> list[Gate]:
    done: set[str] = set()
    outs = {g.out for g in gates}
    pending = list(gates)
    order = []
    while pending:
        for i, g in enumerate(pending):
            if all(r.wire not in outs or r.wire in done for r in (g.a, g.b)):
                order.append(pending.pop(i))
                done.add(g.out)
                break
    return order


def _levels(nl: Netlist) -> dict[str, int]:
    level = {w: 0 for w in nl.inputs}
    for g in nl.gates:
        level[g.out] = 1 + max(level[g.a.wire], level[g.b.wire])
    return level


def depth(nl: Netlist) -> int:
    """Longest input-to-output path, counted in gates.

    Gates that feed no output still count, since they share the delay budget.
    """
    level = _levels(nl)
    return max([level[r.wire] for r in nl.outputs] + [level[g.out] for g in nl.gates], default=0)


def subcircuit(nl: Netlist, outputs: Sequence[str | WireRef]) -> Netlist:
    """The cone of logic feeding ``outputs``."""
    refs = tuple(WireRef.parse(o) for o in outputs)
    need = {r.wire for r in refs}
    for g in reversed(nl.gates):
        if g.out in need:
            need |= {g.a.wire, g.b.wire}
    gates = tuple(g for g in nl.gates if g.out in need)
    return Netlist(tuple(w for w in nl.inputs if w in need), refs, gates)


def _bits_of(nl: Netlist, w) -> dict[str, int]:
    if isinstance(w, str):
        w = [int(c) for c in w]
    w = list(w)
    if len(w) != nl.n:
        raise ValueError(f"expected {nl.n} input bits, got {len(w)}")
    if any(b not in (0, 1) for b in w):
        raise ValueError("input bits must be 0 or 1")
    return dict(zip(nl.inputs, w))


def eval_boolean(nl: Netlist, w):
    """Evaluate the NAND DAG on input bits ``w`` (a string like ``"01"`` or a sequence).

    Returns the same kind: a bit string for string input, else a tuple.
    """
    val = _bits_of(nl, w)
    for g in nl.gates:
        val[g.out] = 1 - (g.a.value(val) & g.b.value(val))
    out = tuple(r.value(val) for r in nl.outputs)
    return "".join(map(str, out)) if isinstance(w, str) else out


def wire_values(nl: Netlist, w) -> dict[str, int]:
    """Bits on every wire (inputs and gate outputs) for input ``w``."""
    val = _bits_of(nl, w)
    for g in nl.gates:
        val[g.out] = 1 - (g.a.value(val) & g.b.value(val))
    return val


@dataclass(frozen=True, eq=False)
class CompiledCircuit:
    """A netlist joined from per-gate NAND networks with delay ``tau / depth`` each."""

    kind: str
    netlist: Netlist
    crn: IoCrn
    depth: int
    gate_tau: float
    gate_reactions: Mapping[str, range]
    x0: Mapping[str, float]
    outputs: tuple[tuple[str, str], ...]
    input_wires: tuple[str, ...]
    params: GateParams
    notes: tuple[str, ...] = field(default=())

    @property
    def output_species(self) -> tuple[str, ...]:
        return tuple(s for pair in self.outputs for s in pair)


def compile_netlist(nl: Netlist, params: GateParams, x0: Mapping[str, float] | None = None) -> CompiledCircuit:
    """Join one NAND network per gate, in topological order.

    Raises ``ValueError`` for circuits without gates or with an output that
    is a primary input: such outputs are not state species of any network.
    """
    if not nl.gates:
        raise ValueError("circuit has no gates; there is no network to compile")
    gate_outs = {g.out for g in nl.gates}
    direct = [str(r) for r in nl.outputs if r.wire not in gate_outs]
    if direct:
        raise ValueError(f"outputs {direct} are primary inputs, not gate outputs")
    d = depth(nl)
    gate_params = params.with_tau(params.tau / d)
    k = rate_constant(gate_params)
    parts, index, pos = [], {}, 0
    for g in nl.gates:
        parts.append(_nand_crn(g.a, g.b, WireRef(g.out), k))
        index[g.out] = range(pos, pos + 5)
        pos += 5
    crn = join(*parts, require_modular=True)
    assert len(crn.reactions) == 5 * nl.G
    pairs = tuple((r.species, r.dual_species) for r in nl.outputs)
    pairs = tuple(dict.fromkeys(pairs))
    canon = canonical_x0(*(WireRef(g.out) for g in nl.gates))
    all_pairs = tuple((g.out, WireRef(g.out).dual_species) for g in nl.gates)
    x0 = _check_x0(crn, all_pairs, canon if x0 is None else x0)
    used = {r.wire for g in nl.gates for r in (g.a, g.b)}
    notes = tuple(f"input {w} is not read by any gate" for w in nl.inputs if w not in used)
    return CompiledCircuit("CIRCUIT", nl, crn, d, gate_params.tau, index, x0, pairs, nl.inputs, params, notes)


def random_netlist(rng: np.random.Generator, n_inputs: int, n_gates: int, max_outputs: int = 2) -> Netlist:
    """Random NAND DAG; every gate reads two distinct earlier wires, rails chosen at random.

    Outputs are gate outputs with no fanout (at most ``max_outputs``, the
    deepest first) so most logic is observable.
    """
    if n_inputs < 2 and n_gates > 0:
        raise ValueError("need at least two inputs")
    inputs = tuple(f"X{i + 1}" for i in range(n_inputs))
    wires = list(inputs)
    gates = []
    for i in range(n_gates):
        a, b = rng.choice(len(wires), size=2, replace=False)
        refs = [WireRef(wires[j], bool(rng.integers(2))) for j in (a, b)]
        out = f"G{i + 1}"
        gates.append(Gate(out, refs[0], refs[1], i + 3))
        wires.append(out)
    read = {r.wire for g in gates for r in (g.a, g.b)}
    nl = Netlist(inputs, (), tuple(gates))
    level = _levels(nl)
    sinks = sorted((g.out for g in gates if g.out not in read), key=lambda o: -level[o])
    outs = tuple(WireRef(o) for o in sinks[:max_outputs]) or (WireRef(gates[-1].out),)
    return Netlist(inputs, outs, tuple(gates))


def all_vectors(n: int) -> list[str]:
    return ["".join(map(str, bits)) for bits in itertools.product((0, 1), repeat=n)]
