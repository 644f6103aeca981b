"""
Finite σ-subalgebras of [0,1) represented by their atom partitions.

Workflow position: Library module. Depends on dyadic_sets; used by cond_expect,
src/lab (gallery, sequence_lab, convergence) and the CLI.

Provides:
  Partition, TRIVIAL, partition_from_atoms, overlay
  generate, join, meet, contains, is_refinement
  AlgebraSeq, explicit_sequence
  liminf_algebra, limsup_algebra, liminf_limsup_table, is_monotone

Lattice operations work on the overlay of the inputs: the elementary segments
between all breakpoints, each labelled with the atom it falls in for every input
partition. A partition with m intervals costs O(m log m) per overlay.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, partial
from itertools import pairwise
from typing import Any, Callable, Iterable, Mapping, Sequence

from .dyadic_sets import FULL, ONE, ZERO, DSet, _merge, union_all
from .validate import HorizonError, ValidationError, check_cap, require

# -----------------------------------------------------------------------------
# Config
# -----------------------------------------------------------------------------

GENERATE_CAP = 20  # generators accepted by generate()
DEFAULT_MAX_HORIZON = 1_000_000  # builtin sequences


# -----------------------------------------------------------------------------
# Partition
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """
    Atoms of a finite σ-algebra: nonempty, pairwise disjoint DSets covering [0,1),
    sorted by leftmost endpoint. Structural equality is σ-algebra equality.
    """

    atoms: tuple[DSet, ...]

    def __post_init__(self) -> None:
        require(len(self.atoms) > 0, "a partition needs at least one atom")
        lefts = [atom.left for atom in self.atoms]
        require(all(not atom.is_empty() for atom in self.atoms), "partition atoms must be nonempty")
        require(lefts == sorted(lefts), "partition atoms must be sorted by leftmost endpoint")
        pieces = sorted(iv for atom in self.atoms for iv in atom.intervals)
        expected = ZERO
        for a, b in pieces:
            require(a == expected, f"atoms overlap or leave a gap at {min(a, expected)}")
            expected = b
        require(expected == ONE, "atoms do not cover [0,1)")

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def _locator(self) -> tuple[list[Fraction], list[int]]:
        pieces = sorted((a, idx) for idx, atom in enumerate(self.atoms) for a, _ in atom.intervals)
        return [a for a, _ in pieces], [idx for _, idx in pieces]

    @cached_property
    def points(self) -> list[Fraction]:
        """All breakpoints of the atoms, sorted, including 0 and 1."""
        return sorted({ZERO, ONE, *(x for atom in self.atoms for x in atom.points)})

    def atom_index(self, x: Fraction) -> int:
        """Index of the atom containing the point x ∈ [0,1)."""
        require(ZERO <= x < ONE, f"point outside [0,1): {x}")
        starts, owner = self._locator
        return owner[bisect_right(starts, x) - 1]

    def measures(self) -> list[Fraction]:
        return [atom.measure() for atom in self.atoms]


TRIVIAL = Partition((FULL,))


def partition_from_atoms(atoms: Iterable[DSet]) -> Partition:
    """Sort atoms into canonical order and validate; empty atoms are rejected."""
    atoms = list(atoms)
    require(all(not a.is_empty() for a in atoms), "partition atoms must be nonempty")
    return Partition(tuple(sorted(atoms, key=lambda a: a.left)))


def overlay(
    partitions: Sequence[Partition],
    sets: Sequence[DSet] = (),
) -> list[tuple[Fraction, Fraction, tuple[int, ...], tuple[bool, ...]]]:
    """
    Elementary segments [lo, hi) of the common refinement of *partitions* and *sets*.

    Each segment carries the atom index it lies in for every partition and its
    membership in every set.
    """
    cuts = {ZERO, ONE}
    for p in partitions:
        cuts.update(p.points)
    for s in sets:
        cuts.update(s.points)
    set_points = [s.points for s in sets]
    segments = []
    for lo, hi in pairwise(sorted(cuts)):
        labels = tuple(p.atom_index(lo) for p in partitions)
        inside = tuple(bisect_right(pts, lo) % 2 == 1 for pts in set_points)
        segments.append((lo, hi, labels, inside))
    return segments


def _group_segments(segments: Iterable[tuple[Fraction, Fraction, Any]]) -> list[DSet]:
    groups: dict[Any, list[tuple[Fraction, Fraction]]] = {}
    for lo, hi, key in segments:
        groups.setdefault(key, []).append((lo, hi))
    return [DSet(_merge(pieces)) for pieces in groups.values()]


# -----------------------------------------------------------------------------
# Generation and lattice operations
# -----------------------------------------------------------------------------

def generate(sets: Sequence[DSet], cap: int = GENERATE_CAP) -> Partition:
    """
    Atoms of the smallest σ-algebra containing *sets*.

    The atoms are the nonempty sign-pattern cells ⋂ S_i^{±}; they are produced by
    splitting every current cell on each generator in turn, so empty patterns are
    never materialized. More than *cap* generators raises CapExceededError.
    """
    check_cap(len(sets), cap, "generators")
    cells = [FULL]
    for s in sets:
        split = []
        for cell in cells:
            for piece in (cell & s, cell - s):
                if not piece.is_empty():
                    split.append(piece)
        cells = split
    return partition_from_atoms(cells)


def join(p: Partition, q: Partition) -> Partition:
    """Common refinement p ∨ q: atoms are the nonempty p_i ∩ q_j."""
    if p == q:
        return p
    segments = overlay([p, q])
    return partition_from_atoms(_group_segments((lo, hi, labels) for lo, hi, labels, _ in segments))


def join_all(partitions: Sequence[Partition]) -> Partition:
    """Common refinement of several partitions in one overlay."""
    if not partitions:
        return TRIVIAL
    distinct = list(dict.fromkeys(partitions))
    if len(distinct) == 1:
        return distinct[0]
    segments = overlay(distinct)
    return partition_from_atoms(_group_segments((lo, hi, labels) for lo, hi, labels, _ in segments))


class _DisjointSet:
    """Union-find over integer ids with path compression."""

    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def meet(p: Partition, q: Partition) -> Partition:
    """
    σ(p) ∩ σ(q): connected components of the overlap graph between atoms.

    Atoms p_i and q_j are linked when μ(p_i ∩ q_j) > 0; the union of each component
    is one atom of the meet.
    """
    if p == q:
        return p
    ds = _DisjointSet(len(p) + len(q))
    for _, _, (i, j), _ in overlay([p, q]):
        ds.union(i, len(p) + j)
    groups: dict[int, list[DSet]] = {}
    for i, atom in enumerate(p.atoms):
        groups.setdefault(ds.find(i), []).append(atom)
    return partition_from_atoms(union_all(atoms) for atoms in groups.values())


def contains(p: Partition, a: DSet) -> bool:
    """True iff a is a union of atoms of p."""
    seen: dict[int, bool] = {}
    for _, _, (i,), (inside,) in overlay([p], [a]):
        if seen.setdefault(i, inside) != inside:
            return False
    return True


def is_refinement(p: Partition, q: Partition) -> bool:
    """True iff every atom of p lies inside one atom of q, i.e. σ(q) ⊆ σ(p)."""
    owner: dict[int, int] = {}
    for _, _, (i, j), _ in overlay([p, q]):
        if owner.setdefault(i, j) != j:
            return False
    return True


# -----------------------------------------------------------------------------
# Sequences of σ-algebras
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class AlgebraSeq:
    """
    Deterministic sequence n -> 𝔄_n for 0 <= n <= max_horizon.

    generator must be picklable (a module-level function or a functools.partial of
    one) so terms can be evaluated in worker processes. block_starts optionally
    maps a horizon to the first index of each natural block of the sequence; the
    convergence engine uses it to pick window starts.
    """

    name: str
    params: Mapping[str, Any]
    generator: Callable[[int], Partition] = field(compare=False)
    max_horizon: int = DEFAULT_MAX_HORIZON
    block_starts: Callable[[int], list[int]] | None = field(default=None, compare=False)

    def check_horizon(self, horizon: int) -> None:
        if isinstance(horizon, bool) or not isinstance(horizon, int):
            raise HorizonError(f"horizon must be an integer, got {horizon!r}")
        if horizon < 1:
            raise HorizonError(f"horizon must be >= 1, got {horizon}")
        if horizon > self.max_horizon:
            raise HorizonError(f"horizon {horizon} exceeds max_horizon {self.max_horizon} of {self.name}")

    def term(self, n: int) -> Partition:
        if isinstance(n, bool) or not isinstance(n, int) or not 0 <= n <= self.max_horizon:
            raise ValidationError(f"index {n!r} outside 0..{self.max_horizon} for {self.name}")
        return self.generator(n)

    def terms(self, horizon: int) -> list[Partition]:
        """Partitions 𝔄_0 .. 𝔄_H."""
        self.check_horizon(horizon)
        return [self.generator(n) for n in range(horizon + 1)]


def _explicit_term(partitions: tuple[Partition, ...], cycle: bool, n: int) -> Partition:
    if cycle:
        return partitions[n % len(partitions)]
    return partitions[n]


def explicit_sequence(
    name: str,
    partitions: Sequence[Partition],
    cycle: bool,
    params: Mapping[str, Any] | None = None,
    max_horizon: int = DEFAULT_MAX_HORIZON,
) -> AlgebraSeq:
    """AlgebraSeq over a fixed list; cycled lists repeat, plain lists end at len - 1."""
    require(len(partitions) > 0, "explicit sequence needs at least one partition")
    limit = max_horizon if cycle else min(max_horizon, len(partitions) - 1)
    return AlgebraSeq(
        name=name,
        params=dict(params or {}),
        generator=partial(_explicit_term, tuple(partitions), cycle),
        max_horizon=limit,
    )


def _tail_tables(terms: Sequence[Partition], min_tail: int) -> tuple[list[Partition], list[Partition]]:
    """Suffix meets and joins over windows [m, H] with at least min_tail terms."""
    horizon = len(terms) - 1
    last = horizon - min_tail + 1
    require(last >= 0, f"min_tail {min_tail} longer than the {horizon + 1} available terms")
    meets: list[Partition] = [terms[horizon]] * (horizon + 1)
    joins: list[Partition] = [terms[horizon]] * (horizon + 1)
    for m in range(horizon - 1, -1, -1):
        meets[m] = meet(terms[m], meets[m + 1])
        joins[m] = join(terms[m], joins[m + 1])
    return meets[: last + 1], joins[: last + 1]


def liminf_algebra(seq: AlgebraSeq, horizon: int, min_tail: int = 1) -> Partition:
    """
    Horizon approximant ⋁_{m} ⋂_{m<=n<=H} 𝔄_n over windows with >= min_tail terms.

    With min_tail=1 the last window is {𝔄_H} itself; larger min_tail drops the
    shortest windows so that periodic patterns show up (alternating P, Q with
    min_tail=2 gives meet(P, Q)).
    """
    meets, _ = _tail_tables(seq.terms(horizon), min_tail)
    return join_all(meets)


def limsup_algebra(seq: AlgebraSeq, horizon: int, min_tail: int = 1) -> Partition:
    """Horizon approximant ⋂_{m} ⋁_{m<=n<=H} 𝔄_n over windows with >= min_tail terms."""
    _, joins = _tail_tables(seq.terms(horizon), min_tail)
    result = joins[0]
    for p in joins[1:]:
        result = meet(result, p)
    return result


def liminf_limsup_table(seq: AlgebraSeq, horizon: int, min_tail: int = 1) -> dict[str, Any]:
    """
    Per-window table behind liminf_algebra / limsup_algebra.

    Returns {"rows": [{"m", "tail_meet", "tail_join"}...], "liminf", "limsup"} with
    Partition values; the report writers serialize them.
    """
    meets, joins = _tail_tables(seq.terms(horizon), min_tail)
    liminf = join_all(meets)
    limsup = joins[0]
    for p in joins[1:]:
        limsup = meet(limsup, p)
    rows = [{"m": m, "tail_meet": tm, "tail_join": tj} for m, (tm, tj) in enumerate(zip(meets, joins))]
    return {"rows": rows, "liminf": liminf, "limsup": limsup, "min_tail": min_tail}


def is_monotone(seq: AlgebraSeq, horizon: int) -> str | None:
    """"constant", "increasing", "decreasing", or None across 𝔄_0 .. 𝔄_H."""
    terms = seq.terms(horizon)
    increasing = decreasing = True
    for prev, nxt in pairwise(terms):
        if prev == nxt:
            continue
        increasing = increasing and is_refinement(nxt, prev)
        decreasing = decreasing and is_refinement(prev, nxt)
        if not (increasing or decreasing):
            return None
    if all(t == terms[0] for t in terms):
        return "constant"
    return "increasing" if increasing else "decreasing"
