"""Input/output chemical reaction networks.

An I/O CRN is a triple ``(U, R, S)``: read-only input species ``U``, state
species ``S`` and a finite set of mass-action reactions ``R`` that may use
inputs only as catalysts.  Species are plain strings; the dual-rail partner of
``W`` is ``W_bar`` and vice versa.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

BAR = "_bar"

__all__ = [
    "BAR",
    "InvalidCrnError",
    "IoCrn",
    "Reaction",
    "TdIoCrn",
    "TdReaction",
    "Context",
    "WireRef",
    "dual",
    "join",
    "is_modular",
    "net_effect",
    "validate",
    "crn_to_json",
    "crn_from_json",
]


class InvalidCrnError(ValueError):
    """Raised when a network violates the I/O CRN invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def dual(species: str) -> str:
    """Dual-rail partner of a species name (``X`` <-> ``X_bar``)."""
    if species.endswith(BAR):
        return species[: -len(BAR)]
    return species + BAR


@dataclass(frozen=True)
class WireRef:
    """A reference to one rail of a dual-rail wire.

    ``WireRef.parse("~X1")`` selects the complemented rail ``X1_bar``.
    """

    wire: str
    negated: bool = False

    @classmethod
    def parse(cls, text: str | WireRef) -> WireRef:
        if isinstance(text, WireRef):
            return text
        text = text.strip()
        negated = False
        while text.startswith("~"):
            negated = not negated
            text = text[1:].strip()
        if text.endswith(BAR):
            negated = not negated
            text = text[: -len(BAR)]
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", text):
            raise ValueError(f"invalid wire name {text!r}")
        return cls(text, negated)

    @property
    def species(self) -> str:
        return self.wire + BAR if self.negated else self.wire

    @property
    def dual_species(self) -> str:
        return self.wire if self.negated else self.wire + BAR

    def __invert__(self) -> WireRef:
        return WireRef(self.wire, not self.negated)

    def value(self, bits: Mapping[str, int | None]) -> int | None:
        """Logical value of this rail given wire bits (``None`` = not exact)."""
        bit = bits.get(self.wire)
        if bit is None:
            return None
        return 1 - bit if self.negated else bit

    def __str__(self) -> str:
        return ("~" if self.negated else "") + self.wire


def _multiset(m: Mapping[str, int] | Iterable[tuple[str, int]]) -> tuple[tuple[str, int], ...]:
    items = m.items() if isinstance(m, Mapping) else m
    out: dict[str, int] = {}
    for sp, n in items:
        n = int(n)
        if n < 0:
            raise ValueError(f"negative stoichiometry for {sp}")
        if n:
            out[sp] = out.get(sp, 0) + n
    return tuple(sorted(out.items()))


_TERM = re.compile(r"^\s*(\d*)\s*([A-Za-z][A-Za-z0-9_]*)\s*$")


def _parse_side(text: str) -> dict[str, int]:
    text = text.strip()
    if text in ("", "0", "∅"):
        return {}
    side: dict[str, int] = {}
    for term in text.split("+"):
        m = _TERM.match(term)
        if not m:
            raise ValueError(f"cannot parse reaction term {term!r}")
        side[m.group(2)] = side.get(m.group(2), 0) + int(m.group(1) or 1)
    return side


class _ReactionShape:
    reactants: tuple[tuple[str, int], ...]
    products: tuple[tuple[str, int], ...]

    def r(self, species: str) -> int:
        return dict(self.reactants).get(species, 0)

    def p(self, species: str) -> int:
        return dict(self.products).get(species, 0)

    @property
    def species(self) -> set[str]:
        return {s for s, _ in self.reactants} | {s for s, _ in self.products}

    def net(self) -> dict[str, int]:
        """Nonzero entries of the net effect vector ``p - r``."""
        d: dict[str, int] = {}
        for s, n in self.products:
            d[s] = d.get(s, 0) + n
        for s, n in self.reactants:
            d[s] = d.get(s, 0) - n
        return {s: n for s, n in d.items() if n}

    def _equation(self) -> str:
        def side(ms):
            return " + ".join(f"{n if n > 1 else ''}{s}" for s, n in ms) or "0"

        return f"{side(self.reactants)} -> {side(self.products)}"


@dataclass(frozen=True)
class Reaction(_ReactionShape):
    """Mass-action reaction ``(r, p, k)`` with ``r != p`` and ``k > 0``."""

    reactants: tuple[tuple[str, int], ...]
    products: tuple[tuple[str, int], ...]
    k: float

    def __init__(self, reactants, products, k: float):
        object.__setattr__(self, "reactants", _multiset(reactants))
        object.__setattr__(self, "products", _multiset(products))
        object.__setattr__(self, "k", float(k))
        if not self.k > 0 or not np.isfinite(self.k):
            raise ValueError(f"rate constant must be positive, got {k}")
        if self.reactants == self.products:
            raise ValueError("reactant and product vectors must differ")

    @classmethod
    def parse(cls, equation: str, k: float) -> Reaction:
        """Build from chemistry notation, e.g. ``"2Y + Y_bar -> 3Y"``."""
        lhs, rhs = re.split(r"->|→", equation)
        return cls(_parse_side(lhs), _parse_side(rhs), k)

    def __str__(self) -> str:
        return f"{self._equation()}  (k={self.k:g})"


@dataclass(frozen=True, eq=False)
class TdReaction(_ReactionShape):
    """Reaction whose rate constant is a positive function of time.

    ``rate_fn`` must accept a float or a numpy array of times.
    """

    reactants: tuple[tuple[str, int], ...]
    products: tuple[tuple[str, int], ...]
    rate_fn: Callable

    def __init__(self, reactants, products, rate_fn: Callable):
        object.__setattr__(self, "reactants", _multiset(reactants))
        object.__setattr__(self, "products", _multiset(products))
        object.__setattr__(self, "rate_fn", rate_fn)
        if self.reactants == self.products:
            raise ValueError("reactant and product vectors must differ")

    @classmethod
    def from_reaction(cls, rx: Reaction, rate_fn: Callable | None = None) -> TdReaction:
        if rate_fn is None:
            rate_fn = ConstantRate(rx.k)
        return cls(rx.reactants, rx.products, rate_fn)


@dataclass(frozen=True)
class ConstantRate:
    k: float

    def __call__(self, t):
        return self.k + 0.0 * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class SinusoidalRate:
    """``k + amplitude * sin(freq * t + phase)``; bounded within ``amplitude`` of ``k``."""

    k: float
    amplitude: float
    freq: float
    phase: float

    def __post_init__(self):
        if self.amplitude >= self.k:
            raise ValueError("rate modulation would reach zero")

    def __call__(self, t):
        return self.k + self.amplitude * np.sin(self.freq * np.asarray(t, dtype=float) + self.phase)


def net_effect(rx: _ReactionShape, species: str) -> int:
    """``p(species) - r(species)``; zero for species absent from the reaction."""
    return rx.p(species) - rx.r(species)


def _ordered_unique(items: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True, eq=False)
class IoCrn:
    """An I/O CRN ``(U, R, S)``.

    Species sets keep insertion order (it fixes the column order of traces)
    but compare as sets.  Invariants are checked on construction unless
    ``check=False``; use :func:`validate` to list violations.
    """

    inputs: tuple[str, ...]
    states: tuple[str, ...]
    reactions: tuple = ()
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", _ordered_unique(self.inputs))
        object.__setattr__(self, "states", _ordered_unique(self.states))
        object.__setattr__(self, "reactions", tuple(dict.fromkeys(self.reactions)))
        if self.check:
            problems = validate(self)
            if problems:
                raise InvalidCrnError(problems)

    @property
    def species(self) -> tuple[str, ...]:
        return self.states + self.inputs

    def unused_inputs(self) -> list[str]:
        """Declared inputs that no reaction reads."""
        used = set().union(*(rx.species for rx in self.reactions)) if self.reactions else set()
        return [u for u in self.inputs if u not in used]

    def key(self):
        return frozenset(self.inputs), frozenset(self.states), frozenset(self.reactions)

    def __eq__(self, other):
        if not isinstance(other, IoCrn):
            return NotImplemented
        return type(self) is type(other) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __str__(self) -> str:
        lines = [f"inputs: {', '.join(self.inputs)}", f"states: {', '.join(self.states)}"]
        lines += [f"  {rx}" for rx in self.reactions]
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class TdIoCrn(IoCrn):
    """An I/O CRN whose reactions carry time-dependent rate functions."""

    def key(self):
        return frozenset(self.inputs), frozenset(self.states), tuple(id(r) for r in self.reactions)


def validate(crn: IoCrn) -> list[str]:
    """Return the list of I/O CRN invariant violations (empty iff valid)."""
    problems = []
    inputs, states = set(crn.inputs), set(crn.states)
    for sp in sorted(inputs & states):
        problems.append(f"overlap: {sp} is both an input and a state species")
    known = inputs | states
    for i, rx in enumerate(crn.reactions):
        label = f"reaction {i} ({rx._equation()})"
        for sp in sorted(rx.species - known):
            problems.append(f"undeclared species: {label} uses {sp}")
        for sp in sorted(inputs):
            if sp not in states and net_effect(rx, sp) != 0:
                problems.append(f"input consumed: {label} changes input {sp}")
    return problems


def is_modular(*crns: IoCrn) -> bool:
    """True iff the networks have pairwise disjoint state species."""
    seen: set[str] = set()
    for crn in crns:
        if seen & set(crn.states):
            return False
        seen |= set(crn.states)
    return True


def join(*crns: IoCrn, require_modular: bool = False) -> IoCrn:
    """Join networks: ``U = (U1 | U2) - (S1 | S2)``, ``R = R1 | R2``, ``S = S1 | S2``.

    Raises :class:`InvalidCrnError` if the result is not a valid I/O CRN or,
    with ``require_modular``, if two operands share state species.
    """
    if not crns:
        raise ValueError("join needs at least one network")
    if require_modular and not is_modular(*crns):
        shared = sorted(
            {s for i, a in enumerate(crns) for b in crns[i + 1:] for s in set(a.states) & set(b.states)}
        )
        raise InvalidCrnError([f"non-modular join: shared state species {', '.join(shared)}"])
    states = _ordered_unique(s for c in crns for s in c.states)
    inputs = tuple(u for u in _ordered_unique(u for c in crns for u in c.inputs) if u not in states)
    reactions = tuple(rx for c in crns for rx in c.reactions)
    cls = TdIoCrn if any(isinstance(c, TdIoCrn) for c in crns) else IoCrn
    return cls(inputs, states, reactions)


@dataclass(frozen=True)
class Context:
    """Operating context ``(u, V, h)``.

    ``measurement`` maps a dict of species -> concentration arrays to an
    array of shape ``(n_times, len(output_species))``; ``None`` means the
    zero-error projection.
    """

    input_signal: object
    output_species: tuple[str, ...]
    measurement: Callable | None = None

    def __post_init__(self):
        object.__setattr__(self, "output_species", tuple(self.output_species))


def crn_to_json(crn: IoCrn, x0: Mapping[str, float] | None = None) -> dict:
    """Serialize a (static) I/O CRN; ``x0`` is stored under an optional key."""
    if isinstance(crn, TdIoCrn):
        raise TypeError("time-dependent networks are not serialized")
    doc = {
        "inputs": list(crn.inputs),
        "states": list(crn.states),
        "reactions": [
            {"reactants": dict(rx.reactants), "products": dict(rx.products), "k": rx.k}
            for rx in crn.reactions
        ],
    }
    if x0 is not None:
        doc["x0"] = {s: float(v) for s, v in x0.items()}
    return doc


def crn_from_json(doc: dict | str) -> tuple[IoCrn, dict[str, float] | None]:
    """Inverse of :func:`crn_to_json`; returns ``(crn, x0 or None)``."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    reactions = [Reaction(r.get("reactants", {}), r.get("products", {}), r["k"]) for r in doc["reactions"]]
    crn = IoCrn(tuple(doc["inputs"]), tuple(doc["states"]), tuple(reactions))
    x0 = doc.get("x0")
    return crn, (None if x0 is None else {s: float(v) for s, v in x0.items()})
