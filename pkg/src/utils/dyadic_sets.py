"""
Exact dyadic subsets of [0,1): canonical DSet values, Boolean algebra, and Lebesgue measure.

Workflow position: Library module, bottom of the stack. sigma_algebras, cond_expect and
everything in src/lab build on DSet. No prerequisites, no data files.

Provides:
  Dyadic helpers: dyadic, dyadic_parts, is_dyadic, parse_dyadic, format_dyadic,
  parse_rat, format_rat.
  Sets: DSet, make_set, boolean_combine, measure, EMPTY, FULL.

A Dyadic is a fractions.Fraction whose denominator is a power of two; Rat is any
Fraction. Endpoints serialize as "k/2^j" reduced strings ("7/8", "0", "1").
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import pairwise
from typing import Callable, Iterable, Sequence

from .validate import ValidationError, require

ZERO = Fraction(0)
ONE = Fraction(1)


# -----------------------------------------------------------------------------
# Dyadic / Rat helpers
# -----------------------------------------------------------------------------

def is_dyadic(x: Fraction) -> bool:
    """True when the reduced denominator of x is a power of two."""
    q = x.denominator
    return q & (q - 1) == 0


def dyadic(num: int, level: int = 0) -> Fraction:
    """Return num / 2^level as a Fraction."""
    require(level >= 0, f"dyadic level must be non-negative, got {level}")
    return Fraction(num, 1 << level)


def dyadic_parts(x: Fraction) -> tuple[int, int]:
    """Return the normalized (num, level) of a dyadic x: level = 0 or num odd."""
    require(is_dyadic(x), f"not a dyadic rational: {x}")
    return x.numerator, x.denominator.bit_length() - 1


def parse_rat(text: str | int | Fraction) -> Fraction:
    """Parse "p/q", "p" or an int into a Fraction; "k/2^j" is accepted as well."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool) or not isinstance(text, (int, str)):
        raise ValidationError(f"expected a rational string, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    s = text.strip()
    if "^" in s:
        num, _, den = s.partition("/")
        base, _, exp = den.partition("^")
        try:
            if base.strip() != "2":
                raise ValueError(base)
            return Fraction(int(num), 1 << int(exp))
        except ValueError as e:
            raise ValidationError(f"malformed dyadic string {text!r}") from e
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"malformed rational string {text!r}") from e


def parse_dyadic(text: str | int | Fraction) -> Fraction:
    """Parse a dyadic endpoint in [0,1]."""
    x = parse_rat(text)
    require(is_dyadic(x), f"endpoint is not dyadic: {text!r}")
    require(ZERO <= x <= ONE, f"endpoint outside [0,1]: {text!r}")
    return x


def format_rat(x: Fraction) -> str:
    """Canonical string for a Rat ("2/9", "0", "-1/2")."""
    return str(x)


format_dyadic = format_rat


# -----------------------------------------------------------------------------
# DSet
# -----------------------------------------------------------------------------

Interval = tuple[Fraction, Fraction]


def _check_canonical(intervals: Sequence[Interval]) -> None:
    prev_end: Fraction | None = None
    for a, b in intervals:
        if not (isinstance(a, Fraction) and isinstance(b, Fraction)):
            raise ValidationError(f"interval endpoints must be Fractions: ({a!r}, {b!r})")
        require(is_dyadic(a) and is_dyadic(b), f"non-dyadic interval [{a}, {b})")
        require(ZERO <= a < b <= ONE, f"empty, reversed or out-of-range interval [{a}, {b})")
        if prev_end is not None:
            require(prev_end < a, f"intervals not disjoint, sorted and merged at {a}")
        prev_end = b


@dataclass(frozen=True, slots=True)
class DSet:
    """
    Finite union of half-open dyadic intervals [a,b) inside [0,1), in canonical form.

    Canonical form (sorted, disjoint, adjacent pieces merged) is checked on every
    construction, so structural equality is equality of sets. Build from loose
    input with make_set().
    """

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self) -> None:
        _check_canonical(self.intervals)

    @property
    def points(self) -> tuple[Fraction, ...]:
        """Flattened endpoints a_0, b_0, a_1, b_1, ..."""
        return tuple(x for iv in self.intervals for x in iv)

    @property
    def left(self) -> Fraction:
        """Leftmost point; 1 for the empty set so it sorts last."""
        return self.intervals[0][0] if self.intervals else ONE

    def is_empty(self) -> bool:
        return not self.intervals

    def contains_point(self, x: Fraction) -> bool:
        """Membership of a point, honouring the half-open convention."""
        return bisect_right(self.points, x) % 2 == 1

    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), ZERO)

    def __or__(self, other: DSet) -> DSet:
        return _sweep(self, other, lambda p, q: p or q)

    def __and__(self, other: DSet) -> DSet:
        return _sweep(self, other, lambda p, q: p and q)

    def __sub__(self, other: DSet) -> DSet:
        return _sweep(self, other, lambda p, q: p and not q)

    def __xor__(self, other: DSet) -> DSet:
        return _sweep(self, other, lambda p, q: p != q)

    def __invert__(self) -> DSet:
        return FULL - self

    def issubset(self, other: DSet) -> bool:
        return (self - other).is_empty()

    def __repr__(self) -> str:
        if not self.intervals:
            return "DSet(∅)"
        return "DSet(" + " ∪ ".join(f"[{a},{b})" for a, b in self.intervals) + ")"


EMPTY = DSet(())
FULL = DSet(((ZERO, ONE),))


def _merge(pieces: Iterable[Interval]) -> tuple[Interval, ...]:
    """Merge sorted, possibly overlapping or touching intervals into canonical form."""
    out: list[list[Fraction]] = []
    for a, b in pieces:
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1][1] = b
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def _sweep(left: DSet, right: DSet, keep: Callable[[bool, bool], bool]) -> DSet:
    """Evaluate a Boolean combination segment by segment between all breakpoints."""
    if not left.intervals and not right.intervals:
        return FULL if keep(False, False) else EMPTY
    lp, rp = left.points, right.points
    cuts = sorted({ZERO, ONE, *lp, *rp})
    kept = []
    for lo, hi in pairwise(cuts):
        mid = (lo + hi) / 2
        if keep(bisect_right(lp, mid) % 2 == 1, bisect_right(rp, mid) % 2 == 1):
            kept.append((lo, hi))
    return DSet(_merge(kept))


def make_set(intervals: Iterable[Sequence[Fraction | str | int]]) -> DSet:
    """
    Canonical DSet from loose (a, b) pairs; overlaps and adjacency are allowed.

    Endpoints may be Fractions or dyadic strings. A degenerate pair a == b contributes
    nothing (the counterexample's A_1 = [1/2, 1/2) is the empty set). Reversed or
    out-of-range endpoints raise ValidationError.
    """
    pairs: list[Interval] = []
    for item in intervals:
        require(len(item) == 2, f"interval must have two endpoints, got {item!r}")
        a, b = parse_dyadic(item[0]), parse_dyadic(item[1])
        require(a <= b, f"reversed interval [{a}, {b})")
        if a < b:
            pairs.append((a, b))
    pairs.sort()
    return DSet(_merge(pairs))


BOOLEAN_OPS = ("union", "intersect", "complement", "sym_diff", "difference")


def boolean_combine(op: str, a: DSet, b: DSet | None = None) -> DSet:
    """Named Boolean combination; complement takes one operand, the rest take two."""
    if op == "complement":
        require(b is None, "complement takes exactly one operand")
        return ~a
    require(op in BOOLEAN_OPS, f"unknown Boolean operation {op!r}")
    require(b is not None, f"{op} takes two operands")
    if op == "union":
        return a | b
    if op == "intersect":
        return a & b
    if op == "sym_diff":
        return a ^ b
    return a - b


def measure(a: DSet) -> Fraction:
    """Lebesgue measure of a DSet, exact."""
    return a.measure()


def union_all(sets: Iterable[DSet]) -> DSet:
    """Union of many DSets in one merge pass."""
    pieces = sorted(iv for s in sets for iv in s.intervals)
    return DSet(_merge(pieces))
