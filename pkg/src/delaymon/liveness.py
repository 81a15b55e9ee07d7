"""Language-nonemptiness analysis: from which states does a time-divergent
accepting run exist?

The computation is a two-level fixpoint over federations (per-location zone
lists): a greatest fixpoint shrinks the set of accepting states that admit
infinitely many "productive" revisits (at least one time unit elapsing per
lap, tracked with an auxiliary clock), and a final backward reachability
collects every state that can reach that recurrent core.  Backward preimages
are exact — no extrapolation — which is what the monitor's verdicts rely on.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .automata import (
    TBA,
    ClockLayout,
    SymbolicState,
    Transition,
    guard_constraints,
)
from .dbm import (
    DBM,
    LE_ZERO,
    bound,
    bound_is_strict,
    bound_value,
    INF,
    included_in_union,
    reduce_union,
)

DIVERGENCE_CLOCK = "_z"


@dataclass(frozen=True)
class NonEmptyMap:
    """Per-location federation of zones over the automaton clocks."""

    clocks: tuple[str, ...]
    zones: dict[str, tuple[DBM, ...]]

    def covers(self, location: str, zone: DBM) -> bool:
        return included_in_union(zone, self.zones.get(location, ()))

    def contains_point(self, location: str, valuation: tuple[int, ...]) -> bool:
        """Membership of a concrete valuation (no leading reference 0)."""
        v = (0, *valuation)
        return any(z.contains(v) for z in self.zones.get(location, ()))


def _pre_edge(t: Transition, zone: DBM, layout: ClockLayout) -> DBM | None:
    """States that can delay and take ``t`` into ``zone``."""
    lam = [layout.index(c) for c in t.resets]
    z = zone.and_constraints(
        [(i, 0, LE_ZERO) for i in lam] + [(0, i, LE_ZERO) for i in lam])
    if z.is_empty():
        return None
    if lam:
        z = z.free(lam)
    z = z.and_constraints(guard_constraints(t.guard, layout))
    if z.is_empty():
        return None
    return z.down()


def _backward_reach(
    automaton: TBA,
    layout: ClockLayout,
    targets: dict[str, list[DBM]],
    include_targets: bool,
    max_insertions: int,
) -> dict[str, list[DBM]]:
    by_dst: dict[str, list[Transition]] = {}
    for t in automaton.transitions:
        by_dst.setdefault(t.dst, []).append(t)
    result: dict[str, list[DBM]] = (
        {q: list(zs) for q, zs in targets.items()} if include_targets else {})
    queue: deque[tuple[str, DBM]] = deque(
        (q, z) for q, zs in targets.items() for z in zs)
    inserted = 0
    while queue:
        loc, zone = queue.popleft()
        for t in by_dst.get(loc, ()):
            p = _pre_edge(t, zone, layout)
            if p is None:
                continue
            have = result.setdefault(t.src, [])
            if included_in_union(p, have):
                continue
            have[:] = [z for z in have if not p.includes(z)]
            have.append(p)
            queue.append((t.src, p))
            inserted += 1
            if inserted > max_insertions:
                raise RuntimeError(
                    "backward reachability exceeded the iteration budget; "
                    "the automaton's constants may be too large for exact "
                    "analysis")
    return result


def _federations_equal(a: dict[str, list[DBM]],
                       b: dict[str, list[DBM]]) -> bool:
    for q in set(a) | set(b):
        za, zb = a.get(q, []), b.get(q, [])
        if not all(included_in_union(z, zb) for z in za):
            return False
        if not all(included_in_union(z, za) for z in zb):
            return False
    return True


def nonempty_states(
    automaton: TBA,
    require_divergence: bool = True,
    max_insertions: int = 200_000,
    max_rounds: int = 1_000,
) -> NonEmptyMap:
    """Compute the states admitting an accepting run.

    With ``require_divergence`` (the default, matching the infinite-word
    semantics) the witness run must let time grow beyond every bound;
    switching it off is a debugging aid only.
    """
    n_c = len(automaton.clocks)
    if require_divergence:
        layout = ClockLayout(automaton.clocks + (DIVERGENCE_CLOCK,))
        zi = layout.index(DIVERGENCE_CLOCK)
        one = 1  # the divergence clock counts raw scaled units
    else:
        layout = ClockLayout(automaton.clocks)

    # greatest fixpoint: accepting states allowing one more productive lap
    core: dict[str, list[DBM]] = {
        q: [DBM.universal(1 + n_c)] for q in automaton.accepting}
    for _ in range(max_rounds):
        if require_divergence:
            targets = {
                q: [
                    z.embed(1).and_constraints([(0, zi, bound(-one))])
                    for z in zs
                ]
                for q, zs in core.items()
            }
        else:
            targets = {q: list(zs) for q, zs in core.items()}
        targets = {q: [z for z in zs if not z.is_empty()]
                   for q, zs in targets.items()}
        back = _backward_reach(automaton, layout, targets,
                               include_targets=False,
                               max_insertions=max_insertions)
        refreshed: dict[str, list[DBM]] = {}
        for q in automaton.accepting:
            zs = []
            for z in back.get(q, []):
                if require_divergence:
                    pinned = z.and_constraints(
                        [(zi, 0, LE_ZERO), (0, zi, LE_ZERO)])
                    if pinned.is_empty():
                        continue
                    zs.append(pinned.restrict(range(1, 1 + n_c)))
                else:
                    zs.append(z)
            zs = reduce_union(zs)
            if zs:
                refreshed[q] = zs
        if _federations_equal(refreshed, core):
            core = refreshed
            break
        core = refreshed
    else:
        raise RuntimeError("recurrence fixpoint did not stabilize")

    # collect everything that can reach the recurrent core
    plain = ClockLayout(automaton.clocks)
    targets = {q: [z.down() for z in zs] for q, zs in core.items()}
    reach = _backward_reach(automaton, plain, targets,
                            include_targets=True,
                            max_insertions=max_insertions)
    return NonEmptyMap(
        clocks=automaton.clocks,
        zones={q: tuple(reduce_union(zs)) for q, zs in reach.items() if zs},
    )


def intersects_nonempty(
    states: list[SymbolicState] | tuple[SymbolicState, ...],
    nonempty: NonEmptyMap,
    layout: ClockLayout,
) -> bool:
    """True iff some reach-set state overlaps the nonempty-language states."""
    if layout.automaton_clocks != nonempty.clocks:
        raise ValueError("clock layout does not match the nonempty map")
    idx = layout.automaton_indices()
    for s in states:
        zs = nonempty.zones.get(s.location)
        if not zs:
            continue
        proj = s.zone.restrict(idx)
        for z in zs:
            if not proj.intersect(z).is_empty():
                return True
    return False


def dump_map(nonempty: NonEmptyMap, scale: int = 1) -> str:
    """Human-readable rendering, one line per (location, zone)."""
    names = ("0",) + nonempty.clocks

    def val(enc: int) -> str:
        v = bound_value(enc)
        return str(v / scale if scale != 1 else v)

    lines = []
    for q in sorted(nonempty.zones):
        for z in nonempty.zones[q]:
            atoms = []
            for i in range(z.dim):
                for j in range(z.dim):
                    if i == j or z.m[i][j] == INF:
                        continue
                    if i == 0 and z.m[i][j] == LE_ZERO:
                        continue  # plain non-negativity
                    rel = "<" if bound_is_strict(z.m[i][j]) else "<="
                    lhs = names[i] if j == 0 else (
                        f"{names[i]}-{names[j]}" if i else f"-{names[j]}")
                    atoms.append(f"{lhs}{rel}{val(z.m[i][j])}")
            lines.append(f"{q}: {' && '.join(atoms) if atoms else 'true'}")
    return "\n".join(lines) + ("\n" if lines else "")
