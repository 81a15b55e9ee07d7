"""Online monitoring of a delayed event stream against a property/complement
automaton pair.

The channel delays every event by an unknown-but-bounded latency
``δ ∈ [ℓ, u]`` plus a per-event jitter in ``[0, ε]``.  The monitor tracks,
for both automata, the symbolic set of states reachable under *some*
consistent ground truth, using two auxiliary clocks: ``time`` (emission time
of the last event) and ``etime`` (emission time plus latency).  Verdicts are
three-valued: a polarity becomes impossible exactly when its reach-set stops
intersecting the corresponding nonempty-language states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .automata import (
    TBA,
    ClockLayout,
    SymbolicState,
    post,
    prune_included,
)
from .dbm import (
    DBM,
    INF,
    Interval,
    bound,
    merge_intervals,
)
from .liveness import NonEmptyMap, intersects_nonempty, nonempty_states

TIME = "time"
ETIME = "etime"


class Verdict(enum.Enum):
    TRUE = "TRUE"
    FALSE = "FALSE"
    INCONCLUSIVE = "INCONCLUSIVE"

    @property
    def conclusive(self) -> bool:
        return self is not Verdict.INCONCLUSIVE


class MonitorError(Exception):
    """Base class for monitor usage errors."""


class OrderingError(MonitorError):
    """Observation timestamps must be non-decreasing."""


class ObservationError(MonitorError):
    """The observed trace is not a valid delayed observation: no latency in
    the declared bounds can explain it."""


class ComplementViolationError(MonitorError):
    """Both reach-sets died — the supplied automata are not complements."""


@dataclass(frozen=True)
class DelayBounds:
    """Channel model: latency in [latency_low, latency_high], jitter in
    [0, jitter].  ``latency_high`` may be :data:`delaymon.dbm.INF`."""

    latency_low: int
    latency_high: int
    jitter: int

    def __post_init__(self) -> None:
        if self.latency_low < 0 or self.jitter < 0:
            raise ValueError("delay bounds must be non-negative")
        if self.latency_high != INF and self.latency_high < self.latency_low:
            raise ValueError("latency_high must be at least latency_low")


@dataclass(frozen=True)
class LatencyReport:
    positive: tuple[Interval, ...]
    negative: tuple[Interval, ...]
    jitter: int


@dataclass
class _Side:
    """One automaton's half of the monitor."""

    automaton: TBA
    layout: ClockLayout
    nonempty: NonEmptyMap
    reach: list[SymbolicState]


def _initial_zone(layout: ClockLayout, bounds: DelayBounds) -> DBM:
    ti, ei = layout.index(TIME), layout.index(ETIME)
    cons = [(i, 0, bound(0)) for i in layout.automaton_indices()]
    cons += [(ti, 0, bound(0))]
    cons += [(ti, ei, bound(-bounds.latency_low))]
    if bounds.latency_high != INF:
        cons.append((ei, ti, bound(bounds.latency_high)))
    return layout.universal_zone().and_constraints(cons)


def _advance(side: _Side, t: int, jitter: int) -> list[SymbolicState]:
    """Reach-set at query time t: zones whose observation budget has run
    out advance until etime = t - ε; the rest stay put."""
    ei = side.layout.index(ETIME)
    cutoff = t - jitter
    out: list[SymbolicState] = []
    for s in side.reach:
        if cutoff >= 0:
            adv = s.zone.up().and_constraints(
                [(ei, 0, bound(cutoff)), (0, ei, bound(-cutoff))])
            if not adv.is_empty():
                out.append(SymbolicState(s.location, adv))
        stay = s.zone.and_constraint(0, ei, bound(-cutoff, strict=True))
        if not stay.is_empty():
            out.append(SymbolicState(s.location, stay))
    return prune_included(out)


class Monitor:
    """Monitor one stream; mutate via :meth:`observe` only."""

    def __init__(self, spec: TBA, complement: TBA, bounds: DelayBounds):
        if spec.alphabet != complement.alphabet:
            raise MonitorError(
                "property and complement automata use different alphabets")
        self.bounds = bounds
        self.pos = _make_side(spec, bounds)
        self.neg = _make_side(complement, bounds)
        self.last_obs_time = 0
        self.observation_count = 0
        self._verdict = self._compute_verdict(0)

    # -- queries -------------------------------------------------------------

    @property
    def verdict(self) -> Verdict:
        return self._verdict

    def verdict_at(self, t: int) -> Verdict:
        if t < self.last_obs_time:
            raise OrderingError(
                f"query time {t} precedes last observation "
                f"{self.last_obs_time}")
        if self._verdict.conclusive:
            return self._verdict
        return self._compute_verdict(t)

    def latency_report(self) -> LatencyReport:
        return LatencyReport(
            positive=tuple(self._latencies(self.pos)),
            negative=tuple(self._latencies(self.neg)),
            jitter=self.bounds.jitter,
        )

    # -- updates -------------------------------------------------------------

    def observe(self, symbol: str, tau: int) -> Verdict:
        if self._verdict.conclusive:
            return self._verdict
        if tau < self.last_obs_time:
            raise OrderingError(
                f"observation at {tau} precedes {self.last_obs_time}")
        if self.observation_count == 0 and tau < self.bounds.latency_low:
            raise ObservationError(
                f"first observation at {tau} is earlier than the minimum "
                f"latency {self.bounds.latency_low}")
        for side in (self.pos, self.neg):
            side.reach = self._step(side, symbol, tau)
        self.last_obs_time = tau
        self.observation_count += 1
        self._verdict = self._compute_verdict(tau)
        return self._verdict

    # -- internals -----------------------------------------------------------

    def _step(self, side: _Side, symbol: str, tau: int
              ) -> list[SymbolicState]:
        ei = side.layout.index(ETIME)
        cons = [(ei, 0, bound(tau))]
        low = tau - self.bounds.jitter
        if low > 0:
            cons.append((0, ei, bound(-low)))
        out: list[SymbolicState] = []
        for s in side.reach:
            for p in post(s, symbol, side.automaton, side.layout):
                z = p.zone.and_constraints(cons)
                if not z.is_empty():
                    out.append(SymbolicState(p.location, z))
        return prune_included(out)

    def _compute_verdict(self, t: int) -> Verdict:
        pos_live = intersects_nonempty(
            _advance(self.pos, t, self.bounds.jitter),
            self.pos.nonempty, self.pos.layout)
        neg_live = intersects_nonempty(
            _advance(self.neg, t, self.bounds.jitter),
            self.neg.nonempty, self.neg.layout)
        if not pos_live and not neg_live:
            raise ComplementViolationError(
                "no ground truth fits either automaton; the complement "
                "automaton does not complement the property")
        if not pos_live:
            return Verdict.FALSE
        if not neg_live:
            return Verdict.TRUE
        return Verdict.INCONCLUSIVE

    def _latencies(self, side: _Side) -> list[Interval]:
        """Latency values δ = etime - time consistent with this polarity."""
        ti, ei = side.layout.index(TIME), side.layout.index(ETIME)
        n_aux = len(side.layout.aux_clocks)
        ivs: list[Interval] = []
        for s in side.reach:
            for zm in side.nonempty.zones.get(s.location, ()):
                z = s.zone.intersect(zm.embed(n_aux))
                if not z.is_empty():
                    ivs.append(z.difference_bounds(ei, ti).clip(
                        self.bounds.latency_low, self.bounds.latency_high))
        return merge_intervals(ivs)


def _make_side(automaton: TBA, bounds: DelayBounds) -> _Side:
    layout = ClockLayout(automaton.clocks, (TIME, ETIME))
    side = _Side(
        automaton=automaton,
        layout=layout,
        nonempty=nonempty_states(automaton),
        reach=[],
    )
    z0 = _initial_zone(layout, bounds)
    side.reach = [SymbolicState(q, z0) for q in automaton.initial]
    return side
