"""Difference-bound matrices over scaled-integer time.

A zone is a conjunction of constraints ``x_i - x_j <= c`` / ``< c`` over a
fixed clock vector whose index 0 is the constant-zero reference clock.  All
constants are scaled integers; bounds are encoded in a single int as
``2*c | 1`` for a weak bound (<=) and ``2*c`` for a strict one (<), so that
the natural int order coincides with bound tightness and the canonicalization
loop stays branch-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

INF = 2 ** 62  # absorbing +infinity bound


def bound(value: int, strict: bool = False) -> int:
    """Encode the bound ``x - y < value`` (strict) or ``x - y <= value``."""
    return (value << 1) | (0 if strict else 1)


LE_ZERO = bound(0)   # <= 0
LT_ZERO = bound(0, strict=True)


def bound_value(b: int) -> int:
    return b >> 1


def bound_is_strict(b: int) -> bool:
    return not (b & 1)


def add_bounds(a: int, b: int) -> int:
    if a == INF or b == INF:
        return INF
    # strict wins: result weak only if both weak
    return (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)


@dataclass(frozen=True)
class Interval:
    """Interval of scaled-integer values with per-endpoint strictness.

    ``lo = -INF`` / ``hi = INF`` denote unbounded endpoints (their strictness
    flags are then meaningless but kept True by convention).
    """

    lo: int
    lo_strict: bool
    hi: int
    hi_strict: bool
    empty: bool = False

    @staticmethod
    def make_empty() -> "Interval":
        return Interval(0, True, 0, True, empty=True)

    def is_empty(self) -> bool:
        if self.empty:
            return True
        if self.lo == -INF or self.hi == INF:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_strict or self.hi_strict)

    def clip(self, lo: int, hi: int) -> "Interval":
        """Intersect with the closed interval [lo, hi] (hi may be INF)."""
        if self.is_empty():
            return Interval.make_empty()
        nlo, nlo_s = self.lo, self.lo_strict
        nhi, nhi_s = self.hi, self.hi_strict
        if nlo == -INF or lo > nlo:
            nlo, nlo_s = lo, False
        elif lo == nlo:
            nlo_s = nlo_s  # closed clip endpoint never tightens strictness
        if hi != INF and (nhi == INF or hi < nhi):
            nhi, nhi_s = hi, False
        out = Interval(nlo, nlo_s, nhi, nhi_s)
        return Interval.make_empty() if out.is_empty() else out

    def contains(self, value: int) -> bool:
        if self.is_empty():
            return False
        if self.lo != -INF:
            if value < self.lo or (value == self.lo and self.lo_strict):
                return False
        if self.hi != INF:
            if value > self.hi or (value == self.hi and self.hi_strict):
                return False
        return True

    def negate(self) -> "Interval":
        """The interval {-v | v in self}."""
        if self.is_empty():
            return Interval.make_empty()
        nlo = -self.hi if self.hi != INF else -INF
        nhi = -self.lo if self.lo != -INF else INF
        return Interval(nlo, self.hi_strict, nhi, self.lo_strict)


class DBM:
    """Canonical difference-bound matrix; immutable from the caller's side.

    ``m[i][j]`` bounds ``x_i - x_j``.  Construct via :meth:`universal` /
    :meth:`zero` and refine with the pure operations below; every operation
    returns a fresh, canonical DBM.
    """

    __slots__ = ("dim", "m", "_empty", "_hash")

    def __init__(self, dim: int, m: list[list[int]], _closed: bool = False):
        self.dim = dim
        self.m = m
        self._empty: bool | None = None
        self._hash: int | None = None
        if not _closed:
            self._close_in_place()

    # -- construction -------------------------------------------------------

    @classmethod
    def universal(cls, dim: int, nonneg: Iterable[int] | None = None) -> "DBM":
        """Unconstrained zone; clocks in ``nonneg`` (default: all) are >= 0."""
        idx = set(range(1, dim)) if nonneg is None else set(nonneg)
        m = [[INF] * dim for _ in range(dim)]
        for i in range(dim):
            m[i][i] = LE_ZERO
        for i in range(1, dim):
            if i in idx:
                m[0][i] = LE_ZERO
        d = cls(dim, m, _closed=True)
        d._empty = False
        return d

    @classmethod
    def zero(cls, dim: int) -> "DBM":
        """The single valuation with every clock equal to 0."""
        m = [[LE_ZERO] * dim for _ in range(dim)]
        d = cls(dim, m, _closed=True)
        d._empty = False
        return d

    def copy_matrix(self) -> list[list[int]]:
        return [row[:] for row in self.m]

    # -- canonical form ------------------------------------------------------

    def _close_in_place(self) -> None:
        n, m = self.dim, self.m
        for k in range(n):
            mk = m[k]
            for i in range(n):
                mik = m[i][k]
                if mik == INF:
                    continue
                mi = m[i]
                for j in range(n):
                    if mk[j] == INF:
                        continue
                    b = (((mik >> 1) + (mk[j] >> 1)) << 1) | (mik & mk[j] & 1)
                    if b < mi[j]:
                        mi[j] = b
        empty = False
        for i in range(n):
            if m[i][i] < LE_ZERO:
                empty = True
            m[i][i] = LE_ZERO
        self._empty = empty

    def is_empty(self) -> bool:
        assert self._empty is not None
        return self._empty

    # -- comparison / hashing -----------------------------------------------

    def _key(self) -> tuple:
        if self.is_empty():
            return ("empty", self.dim)
        return tuple(tuple(row) for row in self.m)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DBM) and self._key() == other._key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    # -- operations ----------------------------------------------------------

    def close(self) -> "DBM":
        """Re-canonicalize (idempotent on canonical input)."""
        return DBM(self.dim, self.copy_matrix())

    def up(self) -> "DBM":
        """Future operator: drop upper bounds on individual clocks."""
        if self.is_empty():
            return self
        m = self.copy_matrix()
        for i in range(1, self.dim):
            m[i][0] = INF
        # differences and lower bounds are untouched, result stays canonical:
        # m[i][0]=INF only relaxes, and m[i][j] <= m[i][0]+m[0][j] trivially.
        d = DBM(self.dim, m, _closed=True)
        d._empty = False
        return d

    def down(self) -> "DBM":
        """Past operator: valuations from which a delay leads into the zone.

        Assumes all clocks are non-negative (lower bounds relax toward 0 and
        are re-tightened by the closure using difference constraints).
        """
        if self.is_empty():
            return self
        m = self.copy_matrix()
        for i in range(1, self.dim):
            if m[0][i] < LE_ZERO:
                m[0][i] = LE_ZERO
        return DBM(self.dim, m)

    def reset(self, clocks: Iterable[int]) -> "DBM":
        """Set each clock in ``clocks`` to 0, project its old value away."""
        cs = sorted(set(clocks))
        if not cs:
            return self
        if 0 in cs:
            raise ValueError("cannot reset the reference clock")
        if self.is_empty():
            return self
        m = self.copy_matrix()
        for x in cs:
            for j in range(self.dim):
                m[x][j] = m[0][j]
                m[j][x] = m[j][0]
            m[x][x] = LE_ZERO
            m[x][0] = LE_ZERO
            m[0][x] = LE_ZERO
        return DBM(self.dim, m)

    def free(self, clocks: int | Iterable[int], nonneg: bool = True) -> "DBM":
        """Remove every constraint on the given clock(s).

        With ``nonneg`` the freed clocks keep their >= 0 bound.  Other
        clocks retain the closure-tightened constraints among themselves.
        """
        cs = sorted({clocks} if isinstance(clocks, int) else set(clocks))
        if 0 in cs:
            raise ValueError("cannot free the reference clock")
        if self.is_empty():
            return self
        m = self.copy_matrix()
        for x in cs:
            for j in range(self.dim):
                if j != x:
                    m[x][j] = INF
                    m[j][x] = m[j][0] if j != 0 else (LE_ZERO if nonneg else INF)
        return DBM(self.dim, m)

    def and_constraint(self, i: int, j: int, b: int) -> "DBM":
        """Intersect with ``x_i - x_j (<|<=) c`` for encoded bound ``b``."""
        if self.is_empty():
            return self
        if b >= self.m[i][j]:
            return self
        m = self.copy_matrix()
        m[i][j] = b
        return DBM(self.dim, m)

    def and_constraints(self, cons: Iterable[tuple[int, int, int]]) -> "DBM":
        if self.is_empty():
            return self
        m = self.copy_matrix()
        changed = False
        for i, j, b in cons:
            if b < m[i][j]:
                m[i][j] = b
                changed = True
        if not changed:
            return self
        return DBM(self.dim, m)

    def intersect(self, other: "DBM") -> "DBM":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        if self.is_empty() or other.is_empty():
            return self if self.is_empty() else other
        m = [
            [min(a, b) for a, b in zip(ra, rb)]
            for ra, rb in zip(self.m, other.m)
        ]
        return DBM(self.dim, m)

    def includes(self, other: "DBM") -> bool:
        """True iff every valuation of ``other`` satisfies ``self``."""
        if other.is_empty():
            return True
        if self.is_empty():
            return False
        for ra, rb in zip(self.m, other.m):
            for a, b in zip(ra, rb):
                if b > a:
                    return False
        return True

    def difference_bounds(self, x: int, y: int) -> Interval:
        """Tightest interval containing {v(x) - v(y) | v in zone}."""
        if self.is_empty():
            return Interval.make_empty()
        up_b = self.m[x][y]
        lo_b = self.m[y][x]
        hi = INF if up_b == INF else bound_value(up_b)
        hi_s = bound_is_strict(up_b) if up_b != INF else True
        lo = -INF if lo_b == INF else -bound_value(lo_b)
        lo_s = bound_is_strict(lo_b) if lo_b != INF else True
        return Interval(lo, lo_s, hi, hi_s)

    def extrapolate(self, ceilings: Sequence[int]) -> "DBM":
        """Classic per-clock maximal-constant normalization.

        ``ceilings[i]`` must dominate every constant compared against clock i
        in the automaton (ceilings[0] is ignored and treated as 0).
        """
        if self.is_empty():
            return self
        ceil = list(ceilings)
        ceil[0] = 0
        m = self.copy_matrix()
        changed = False
        for i in range(self.dim):
            for j in range(self.dim):
                if i == j:
                    continue
                b = m[i][j]
                if b == INF:
                    continue
                if bound_value(b) > ceil[i]:
                    m[i][j] = INF
                    changed = True
                elif bound_value(b) < -ceil[j]:
                    m[i][j] = bound(-ceil[j], strict=True)
                    changed = True
        if not changed:
            return self
        return DBM(self.dim, m)

    # -- queries -------------------------------------------------------------

    def contains(self, valuation: Sequence[int]) -> bool:
        """Membership of a scaled-integer valuation (index 0 must be 0)."""
        if self.is_empty():
            return False
        for i in range(self.dim):
            for j in range(self.dim):
                b = self.m[i][j]
                if b == INF:
                    continue
                d = valuation[i] - valuation[j]
                if bound_is_strict(b):
                    if not d < bound_value(b):
                        return False
                elif not d <= bound_value(b):
                    return False
        return True

    def restrict(self, keep: Sequence[int]) -> "DBM":
        """Project onto the clocks in ``keep`` (0 is always kept first).

        On a canonical DBM the projection is the sub-matrix.
        """
        idx = [0] + [i for i in keep if i != 0]
        m = [[self.m[i][j] for j in idx] for i in idx]
        d = DBM(len(idx), m, _closed=True)
        d._empty = self.is_empty()
        return d

    def embed(self, extra: int) -> "DBM":
        """Lift to ``extra`` more trailing, fully unconstrained clocks (no
        sign assumption; the intersecting zone supplies it)."""
        if extra == 0:
            return self
        base = DBM.universal(self.dim + extra,
                             nonneg=range(1, self.dim))
        if self.is_empty():
            return base.and_constraint(1, 0, bound(0, strict=True))
        cons = [
            (i, j, self.m[i][j])
            for i in range(self.dim)
            for j in range(self.dim)
            if i != j and self.m[i][j] != INF
        ]
        return base.and_constraints(cons)

    def subtract(self, other: "DBM") -> list["DBM"]:
        """Zone difference self \\ other as a list of disjoint zones."""
        if self.is_empty():
            return []
        if other.is_empty():
            return [self]
        out: list[DBM] = []
        rest = self
        for i in range(other.dim):
            for j in range(other.dim):
                if i == j:
                    continue
                b = other.m[i][j]
                if b == INF:
                    continue
                # negate x_i - x_j (<|<=) c  ->  x_j - x_i (<|<=) -c with
                # flipped strictness
                neg = bound(-bound_value(b), strict=not bound_is_strict(b))
                piece = rest.and_constraint(j, i, neg)
                if not piece.is_empty():
                    out.append(piece)
                rest = rest.and_constraint(i, j, b)
                if rest.is_empty():
                    return out
        return out

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.is_empty():
            return f"DBM(dim={self.dim}, empty)"

        def fmt(b: int) -> str:
            if b == INF:
                return "inf"
            return f"{'<' if bound_is_strict(b) else '<='}{bound_value(b)}"

        rows = ["[" + ", ".join(fmt(b) for b in row) + "]" for row in self.m]
        return "DBM(dim=%d,\n  %s)" % (self.dim, "\n  ".join(rows))


def included_in_union(zone: DBM, zones: Iterable[DBM]) -> bool:
    """Exact test whether ``zone`` is covered by a union of zones."""
    remains = [zone]
    for z in zones:
        nxt: list[DBM] = []
        for r in remains:
            nxt.extend(r.subtract(z))
        remains = nxt
        if not remains:
            return True
    return not remains


def merge_intervals(intervals: Iterable[Interval]) -> list[Interval]:
    """Union of intervals as a sorted list of maximal disjoint intervals."""
    ivs = sorted(
        (iv for iv in intervals if not iv.is_empty()),
        key=lambda iv: (iv.lo, iv.lo_strict),
    )
    out: list[Interval] = []
    for iv in ivs:
        if out:
            last = out[-1]
            touches = (
                last.hi == INF
                or iv.lo < last.hi
                or (iv.lo == last.hi and not (iv.lo_strict and last.hi_strict))
            )
            if touches:
                new_hi, new_hi_s = last.hi, last.hi_strict
                if last.hi != INF and (
                        iv.hi == INF or iv.hi > last.hi
                        or (iv.hi == last.hi and last.hi_strict
                            and not iv.hi_strict)):
                    new_hi, new_hi_s = iv.hi, iv.hi_strict
                out[-1] = Interval(last.lo, last.lo_strict, new_hi, new_hi_s)
                continue
        out.append(iv)
    return out


def reduce_union(zones: Iterable[DBM]) -> list[DBM]:
    """Drop zones included in a sibling (pairwise inclusion only)."""
    zs = [z for z in zones if not z.is_empty()]
    out: list[DBM] = []
    for z in zs:
        if any(o.includes(z) for o in out):
            continue
        out = [o for o in out if not z.includes(o)]
        out.append(z)
    return out
