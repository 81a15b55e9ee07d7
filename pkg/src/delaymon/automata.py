"""Timed Büchi automata: data model, text format, symbolic successors.

Guards are conjunctions of atomic constraints ``x ~ n`` against single
clocks (no clock differences).  All constants are stored as scaled
integers; the parser owns the decimal-to-integer scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .dbm import DBM, bound

RELATIONS = ("<", "<=", "=", ">=", ">")


class TBAError(Exception):
    """Problem with an automaton definition."""


class TBAParseError(TBAError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class AtomicConstraint:
    """One conjunct ``clock ~ constant`` of a transition guard."""

    clock: str
    relation: str
    constant: int  # scaled, non-negative

    def __post_init__(self) -> None:
        if self.relation not in RELATIONS:
            raise TBAError(f"unknown relation {self.relation!r}")
        if self.constant < 0:
            raise TBAError("guard constants must be non-negative")

    def holds(self, value: int) -> bool:
        r = self.relation
        c = self.constant
        if r == "<":
            return value < c
        if r == "<=":
            return value <= c
        if r == "=":
            return value == c
        if r == ">=":
            return value >= c
        return value > c


@dataclass(frozen=True, slots=True)
class Transition:
    src: str
    dst: str
    label: str
    resets: frozenset[str] = frozenset()
    guard: tuple[AtomicConstraint, ...] = ()


@dataclass(frozen=True)
class TBA:
    """A timed Büchi automaton (Q, Q0, Σ, C, Δ, F).

    ``inputs``/``outputs`` optionally partition the alphabet for testing.
    """

    alphabet: frozenset[str]
    locations: frozenset[str]
    initial: frozenset[str]
    clocks: tuple[str, ...]
    transitions: tuple[Transition, ...]
    accepting: frozenset[str]
    inputs: frozenset[str] = frozenset()
    outputs: frozenset[str] = frozenset()
    _edges: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        errors = self.validate()
        if errors:
            raise TBAError("; ".join(errors))
        by_key: dict[tuple[str, str], list[Transition]] = {}
        for t in self.transitions:
            by_key.setdefault((t.src, t.label), []).append(t)
        object.__setattr__(self, "_edges", by_key)

    def validate(self) -> list[str]:
        errs: list[str] = []
        if not self.locations:
            errs.append("automaton has no locations")
        if not self.initial:
            errs.append("automaton has no initial location")
        errs.extend(
            f"initial location {q!r} undeclared"
            for q in sorted(self.initial - self.locations)
        )
        errs.extend(
            f"accepting location {q!r} undeclared"
            for q in sorted(self.accepting - self.locations)
        )
        clockset = set(self.clocks)
        for t in self.transitions:
            where = f"edge {t.src}->{t.dst} on {t.label}"
            if t.src not in self.locations:
                errs.append(f"{where}: unknown source location {t.src!r}")
            if t.dst not in self.locations:
                errs.append(f"{where}: unknown target location {t.dst!r}")
            if t.label not in self.alphabet:
                errs.append(f"{where}: symbol {t.label!r} not in alphabet")
            for c in t.resets - clockset:
                errs.append(f"{where}: reset of unknown clock {c!r}")
            for g in t.guard:
                if g.clock not in clockset:
                    errs.append(f"{where}: guard on unknown clock {g.clock!r}")
        if self.inputs or self.outputs:
            if self.inputs & self.outputs:
                errs.append("inputs and outputs overlap")
            if self.inputs | self.outputs != self.alphabet:
                errs.append("inputs/outputs do not cover the alphabet")
        return errs

    @property
    def has_io_partition(self) -> bool:
        return bool(self.inputs or self.outputs)

    def edges(self, src: str, label: str) -> Sequence[Transition]:
        return self._edges.get((src, label), ())

    def max_constant(self, clock: str) -> int:
        return max(
            (g.constant for t in self.transitions for g in t.guard
             if g.clock == clock),
            default=0,
        )


@dataclass(frozen=True, slots=True)
class SymbolicState:
    location: str
    zone: DBM


# -- clock layout ------------------------------------------------------------


@dataclass(frozen=True)
class ClockLayout:
    """Mapping of named clocks to DBM indices.

    Index 0 is the reference clock; automaton clocks come first, then
    auxiliary clocks (time, event-time, ...).  Auxiliary clocks listed in
    ``unsigned`` are allowed to go negative.
    """

    automaton_clocks: tuple[str, ...]
    aux_clocks: tuple[str, ...] = ()
    unsigned: frozenset[str] = frozenset()

    @property
    def dim(self) -> int:
        return 1 + len(self.automaton_clocks) + len(self.aux_clocks)

    def index(self, clock: str) -> int:
        try:
            return 1 + self.automaton_clocks.index(clock)
        except ValueError:
            pass
        try:
            return 1 + len(self.automaton_clocks) + self.aux_clocks.index(clock)
        except ValueError:
            raise KeyError(f"unknown clock {clock!r}") from None

    def automaton_indices(self) -> list[int]:
        return list(range(1, 1 + len(self.automaton_clocks)))

    def aux_indices(self) -> list[int]:
        base = 1 + len(self.automaton_clocks)
        return list(range(base, base + len(self.aux_clocks)))

    def universal_zone(self) -> DBM:
        nonneg = set(range(1, self.dim))
        for c in self.unsigned:
            nonneg.discard(self.index(c))
        return DBM.universal(self.dim, nonneg=nonneg)


def guard_constraints(
    guard: Iterable[AtomicConstraint], layout: ClockLayout
) -> list[tuple[int, int, int]]:
    """Translate a guard into encoded DBM constraints."""
    out: list[tuple[int, int, int]] = []
    for g in guard:
        i = layout.index(g.clock)
        c = g.constant
        if g.relation in ("<", "<="):
            out.append((i, 0, bound(c, strict=g.relation == "<")))
        elif g.relation in (">", ">="):
            out.append((0, i, bound(-c, strict=g.relation == ">")))
        else:  # =
            out.append((i, 0, bound(c)))
            out.append((0, i, bound(-c)))
    return out


# -- symbolic successor operators -------------------------------------------


def post(
    s: SymbolicState, a: str, automaton: TBA, layout: ClockLayout
) -> list[SymbolicState]:
    """Discrete-plus-delay successor: up, guard, reset, per a-edge."""
    if a not in automaton.alphabet:
        raise TBAError(f"symbol {a!r} not in alphabet")
    up = s.zone.up()
    out: list[SymbolicState] = []
    for t in automaton.edges(s.location, a):
        z = up.and_constraints(guard_constraints(t.guard, layout))
        if z.is_empty():
            continue
        z = z.reset([layout.index(c) for c in t.resets])
        out.append(SymbolicState(t.dst, z))
    return out


def prune_included(states: Iterable[SymbolicState]) -> list[SymbolicState]:
    """Drop states whose zone is included in a sibling at the same location."""
    by_loc: dict[str, list[DBM]] = {}
    for s in states:
        by_loc.setdefault(s.location, []).append(s.zone)
    out: list[SymbolicState] = []
    for loc, zones in by_loc.items():
        kept: list[DBM] = []
        for z in zones:
            if any(o.includes(z) for o in kept):
                continue
            kept = [o for o in kept if not z.includes(o)]
            kept.append(z)
        out.extend(SymbolicState(loc, z) for z in kept)
    return out


def succ(
    states: Iterable[SymbolicState],
    a: str,
    tau: int,
    automaton: TBA,
    layout: ClockLayout,
    time_clock: str = "time",
) -> list[SymbolicState]:
    """Timestamped successor set: post then pin ``time_clock`` to τ."""
    if tau < 0:
        raise ValueError("timestamps must be non-negative")
    ti = layout.index(time_clock)
    pinned = [(ti, 0, bound(tau)), (0, ti, bound(-tau))]
    out: list[SymbolicState] = []
    for s in states:
        for p in post(s, a, automaton, layout):
            z = p.zone.and_constraints(pinned)
            if not z.is_empty():
                out.append(SymbolicState(p.location, z))
    return prune_included(out)


# -- IO alternation product --------------------------------------------------

INPUT_PHASE = "?i"
OUTPUT_PHASE = "?o"


def io_alternation_product(automaton: TBA) -> TBA:
    """Restrict the language to strictly IO-alternating words.

    The result's locations are ``q{phase}`` pairs; words must start with an
    input and alternate input/output thereafter.
    """
    if not automaton.has_io_partition:
        raise TBAError("io_alternation_product requires an input/output partition")
    locs: set[str] = set()
    trans: list[Transition] = []
    for q in automaton.locations:
        locs.add(q + INPUT_PHASE)
        locs.add(q + OUTPUT_PHASE)
    for t in automaton.transitions:
        if t.label in automaton.inputs:
            trans.append(Transition(t.src + INPUT_PHASE, t.dst + OUTPUT_PHASE,
                                    t.label, t.resets, t.guard))
        else:
            trans.append(Transition(t.src + OUTPUT_PHASE, t.dst + INPUT_PHASE,
                                    t.label, t.resets, t.guard))
    accepting = {q + p for q in automaton.accepting
                 for p in (INPUT_PHASE, OUTPUT_PHASE)}
    return TBA(
        alphabet=automaton.alphabet,
        locations=frozenset(locs),
        initial=frozenset(q + INPUT_PHASE for q in automaton.initial),
        clocks=automaton.clocks,
        transitions=tuple(trans),
        accepting=frozenset(accepting),
        inputs=automaton.inputs,
        outputs=automaton.outputs,
    )


# -- text format -------------------------------------------------------------


def scale_decimal(text: str, scale: int, line: int, column: int) -> int:
    try:
        f = Fraction(text) * scale
    except (ValueError, ZeroDivisionError):
        raise TBAParseError(f"bad number {text!r}", line, column) from None
    if f.denominator != 1:
        raise TBAParseError(
            f"constant {text!r} is not representable at scale {scale}",
            line, column)
    return int(f)


def _parse_guard(text: str, scale: int, line: int, column: int
                 ) -> tuple[AtomicConstraint, ...]:
    out = []
    for part in text.split("&&"):
        part = part.strip()
        for rel in ("<=", ">=", "<", ">", "="):
            if rel in part:
                clock, _, num = part.partition(rel)
                clock, num = clock.strip(), num.strip()
                if not clock or not num:
                    raise TBAParseError(
                        f"malformed guard atom {part!r}", line, column)
                const = scale_decimal(num, scale, line, column)
                if const < 0:
                    raise TBAParseError(
                        "guard constants must be non-negative", line, column)
                out.append(AtomicConstraint(clock, rel, const))
                break
        else:
            raise TBAParseError(f"malformed guard atom {part!r}", line, column)
    return tuple(out)


def parse_tba(text: str, scale: int = 10) -> TBA:
    """Parse the line-oriented automaton format.

    One declaration per line; ``#`` starts a comment.  See the package
    documentation for the grammar.  Raises :class:`TBAParseError` on the
    first syntax error and :class:`TBAError` listing all semantic errors.
    """
    alphabet: list[str] = []
    inputs: list[str] = []
    outputs: list[str] = []
    clocks: list[str] = []
    locations: list[str] = []
    initial: list[str] = []
    accepting: list[str] = []
    transitions: list[Transition] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        kw = words[0]
        if kw == "alphabet":
            alphabet.extend(words[1:])
        elif kw == "inputs":
            inputs.extend(words[1:])
        elif kw == "outputs":
            outputs.extend(words[1:])
        elif kw == "clocks":
            clocks.extend(words[1:])
        elif kw == "location":
            if len(words) < 2:
                raise TBAParseError("location needs a name", lineno)
            name = words[1]
            locations.append(name)
            for flag in words[2:]:
                if flag == "initial":
                    initial.append(name)
                elif flag == "accepting":
                    accepting.append(name)
                else:
                    raise TBAParseError(
                        f"unknown location flag {flag!r}", lineno,
                        raw.index(flag) + 1)
        elif kw == "edge":
            transitions.append(_parse_edge(raw, line, scale, lineno))
        else:
            raise TBAParseError(f"unknown declaration {kw!r}", lineno,
                                raw.index(kw) + 1)

    try:
        return TBA(
            alphabet=frozenset(alphabet),
            locations=frozenset(locations),
            initial=frozenset(initial),
            clocks=tuple(dict.fromkeys(clocks)),
            transitions=tuple(transitions),
            accepting=frozenset(accepting),
            inputs=frozenset(inputs),
            outputs=frozenset(outputs),
        )
    except TBAError:
        raise


def _parse_edge(raw: str, line: str, scale: int, lineno: int) -> Transition:
    body = line[len("edge"):].strip()
    if "->" not in body:
        raise TBAParseError("edge needs 'src -> dst'", lineno)
    src_part, _, rest = body.partition("->")
    src = src_part.strip()
    rest = rest.strip()
    words = rest.split()
    if len(words) < 3 or words[1] != "on":
        raise TBAParseError("edge needs 'on <symbol>'", lineno)
    dst, label = words[0], words[2]
    tail = " ".join(words[3:])
    guard: tuple[AtomicConstraint, ...] = ()
    resets: frozenset[str] = frozenset()
    if tail:
        when_part, reset_part = tail, ""
        if " reset " in f" {tail} ":
            idx = f" {tail} ".index(" reset ")
            when_part = tail[: idx].strip() if idx > 0 else ""
            reset_part = f" {tail} "[idx + len(" reset "):].strip()
        if when_part:
            if not when_part.startswith("when"):
                raise TBAParseError(
                    f"unexpected edge clause {when_part.split()[0]!r}", lineno,
                    raw.index(when_part.split()[0]) + 1)
            guard = _parse_guard(when_part[len("when"):], scale, lineno,
                                 raw.index("when") + 1)
        if reset_part:
            resets = frozenset(reset_part.split())
    if not src or not dst or not label:
        raise TBAParseError("malformed edge", lineno)
    return Transition(src, dst, label, resets, guard)


def serialize_tba(automaton: TBA, scale: int = 10) -> str:
    """Inverse of :func:`parse_tba` (up to declaration order)."""

    def unscale(c: int) -> str:
        f = Fraction(c, scale)
        return str(f.numerator) if f.denominator == 1 else str(float(f))

    lines = ["alphabet " + " ".join(sorted(automaton.alphabet))]
    if automaton.inputs:
        lines.append("inputs " + " ".join(sorted(automaton.inputs)))
    if automaton.outputs:
        lines.append("outputs " + " ".join(sorted(automaton.outputs)))
    if automaton.clocks:
        lines.append("clocks " + " ".join(automaton.clocks))
    for q in sorted(automaton.locations):
        flags = ""
        if q in automaton.initial:
            flags += " initial"
        if q in automaton.accepting:
            flags += " accepting"
        lines.append(f"location {q}{flags}")
    for t in sorted(automaton.transitions,
                    key=lambda t: (t.src, t.label, t.dst)):
        parts = [f"edge {t.src} -> {t.dst} on {t.label}"]
        if t.guard:
            parts.append("when " + " && ".join(
                f"{g.clock}{g.relation}{unscale(g.constant)}" for g in t.guard))
        if t.resets:
            parts.append("reset " + " ".join(sorted(t.resets)))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
