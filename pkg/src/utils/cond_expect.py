"""
Step functions and exact conditional expectation onto finite σ-algebras.

Workflow position: Library module. Depends on dyadic_sets and sigma_algebras; used by
src/lab (sequence_lab, convergence, reports) and the CLI.

Provides:
  Step, step_from_values, constant, indicator, evaluate, canonical_display, refine
  add, subtract, scale, product, absolute, maximum, minimum
  integrate, inner, lp_dist, norm, l2_root_approx
  cond_exp, cond_exp_perp, seminorm, indicator_seminorm_ratio
  overlap_measures, best_approx

All values are fractions.Fraction. lp_dist(..., 2) returns the squared L² distance so
results stay rational; l2_root_approx turns it into a (lossy) Decimal.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .dyadic_sets import ONE, ZERO, DSet, _merge, parse_rat, union_all
from .sigma_algebras import TRIVIAL, Partition, generate, is_refinement, overlay, partition_from_atoms
from .validate import ValidationError, require

L2_ROOT_DIGITS = 30


@dataclass(frozen=True)
class Step:
    """Step function: one exact value per atom of the carrier, aligned by atom order."""

    carrier: Partition
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        require(
            len(self.values) == len(self.carrier.atoms),
            f"step has {len(self.values)} values for {len(self.carrier.atoms)} atoms",
        )
        require(all(isinstance(v, Fraction) for v in self.values), "step values must be Fractions")

    def pieces(self) -> list[tuple[DSet, Fraction]]:
        return list(zip(self.carrier.atoms, self.values))


def step_from_values(carrier: Partition, values: Sequence[Fraction | int | str]) -> Step:
    """Step from loose values (ints, "p/q" strings, Fractions)."""
    return Step(carrier, tuple(parse_rat(v) for v in values))


def constant(c: Fraction | int) -> Step:
    return Step(TRIVIAL, (Fraction(c),))


def indicator(a: DSet) -> Step:
    """χ_A on the carrier generate([A])."""
    carrier = generate([a])
    return Step(carrier, tuple(ONE if atom.issubset(a) else ZERO for atom in carrier.atoms))


def evaluate(f: Step, x: Fraction) -> Fraction:
    """Value of f at the point x ∈ [0,1)."""
    return f.values[f.carrier.atom_index(x)]


def canonical_display(f: Step) -> list[tuple[Fraction, Fraction, Fraction]]:
    """(a, b, value) pieces in left-to-right order, adjacent equal values merged. Display only."""
    pieces = sorted((a, b, v) for atom, v in f.pieces() for a, b in atom.intervals)
    out: list[list[Fraction]] = []
    for a, b, v in pieces:
        if out and out[-1][2] == v and out[-1][1] == a:
            out[-1][1] = b
        else:
            out.append([a, b, v])
    return [(a, b, v) for a, b, v in out]


def refine(f: Step, finer: Partition) -> Step:
    """The same function carried on a partition that refines f's carrier."""
    require(is_refinement(finer, f.carrier), "target partition does not refine the step's carrier")
    return Step(finer, tuple(evaluate(f, atom.left) for atom in finer.atoms))


# -----------------------------------------------------------------------------
# Pointwise arithmetic on the join of carriers
# -----------------------------------------------------------------------------

def _pointwise(f: Step, g: Step, op: Callable[[Fraction, Fraction], Fraction]) -> Step:
    if f.carrier == g.carrier:
        return Step(f.carrier, tuple(op(x, y) for x, y in zip(f.values, g.values)))
    groups: dict[tuple[int, int], list[tuple[Fraction, Fraction]]] = {}
    for lo, hi, labels, _ in overlay([f.carrier, g.carrier]):
        groups.setdefault(labels, []).append((lo, hi))
    pieces = sorted(
        ((DSet(_merge(ivs)), op(f.values[i], g.values[j])) for (i, j), ivs in groups.items()),
        key=lambda item: item[0].left,
    )
    return Step(partition_from_atoms(atom for atom, _ in pieces), tuple(v for _, v in pieces))


def add(f: Step, g: Step) -> Step:
    return _pointwise(f, g, lambda x, y: x + y)


def subtract(f: Step, g: Step) -> Step:
    return _pointwise(f, g, lambda x, y: x - y)


def product(f: Step, g: Step) -> Step:
    return _pointwise(f, g, lambda x, y: x * y)


def maximum(f: Step, g: Step) -> Step:
    return _pointwise(f, g, max)


def minimum(f: Step, g: Step) -> Step:
    return _pointwise(f, g, min)


def scale(f: Step, c: Fraction | int) -> Step:
    c = Fraction(c)
    return Step(f.carrier, tuple(c * v for v in f.values))


def absolute(f: Step) -> Step:
    return Step(f.carrier, tuple(abs(v) for v in f.values))


# -----------------------------------------------------------------------------
# Integrals and norms
# -----------------------------------------------------------------------------

def integrate(f: Step) -> Fraction:
    """∫ f dμ = Σ value · μ(atom)."""
    return sum((v * m for v, m in zip(f.values, f.carrier.measures())), ZERO)


def inner(f: Step, g: Step) -> Fraction:
    """⟨f, g⟩ = ∫ f·g dμ, evaluated segment by segment on the overlay of carriers."""
    total = ZERO
    for lo, hi, (i, j), _ in overlay([f.carrier, g.carrier]):
        total += (hi - lo) * f.values[i] * g.values[j]
    return total


def _parse_p(p: int | str | float) -> str:
    if p in (1, "1"):
        return "1"
    if p in (2, "2"):
        return "2"
    if p in ("inf", "∞") or p == float("inf"):
        return "inf"
    raise ValidationError(f"p must be 1, 2 or 'inf', got {p!r}")


def lp_dist(f: Step, g: Step, p: int | str | float) -> Fraction:
    """
    ‖f − g‖ for p in {1, 2, "inf"}.

    p=2 returns the SQUARED distance ‖f − g‖_2². The sup norm is the max over
    segments, which is the essential sup since every atom has positive measure.
    """
    kind = _parse_p(p)
    total = ZERO
    for lo, hi, (i, j), _ in overlay([f.carrier, g.carrier]):
        d = abs(f.values[i] - g.values[j])
        if kind == "1":
            total += (hi - lo) * d
        elif kind == "2":
            total += (hi - lo) * d * d
        elif d > total:
            total = d
    return total


def norm(f: Step, p: int | str | float) -> Fraction:
    """‖f‖_p (squared for p=2)."""
    return lp_dist(f, constant(0), p)


def l2_root_approx(squared: Fraction, digits: int = L2_ROOT_DIGITS) -> decimal.Decimal:
    """Decimal square root of a squared L² value. Lossy."""
    require(squared >= 0, f"cannot take the root of a negative value {squared}")
    ctx = decimal.Context(prec=digits)
    return ctx.sqrt(ctx.divide(decimal.Decimal(squared.numerator), decimal.Decimal(squared.denominator)))


# -----------------------------------------------------------------------------
# Conditional expectation
# -----------------------------------------------------------------------------

def cond_exp(f: Step, b: Partition) -> Step:
    """ℰ(f|σ(b)): on each atom the average ⟨f, χ_atom⟩ / μ(atom)."""
    if f.carrier == b:
        return f
    mass = [ZERO] * len(b)
    for lo, hi, (i, j), _ in overlay([b, f.carrier]):
        mass[i] += (hi - lo) * f.values[j]
    return Step(b, tuple(m / mu for m, mu in zip(mass, b.measures())))


def cond_exp_perp(f: Step, b: Partition) -> Step:
    """ℰ^⊥(f|σ(b)) = f − ℰ(f|σ(b)), carried on the join."""
    return subtract(f, cond_exp(f, b))


def seminorm(f: Step, b: Partition) -> Fraction:
    """‖f‖_b = ‖ℰ(f|σ(b))‖_∞."""
    return max(abs(v) for v in cond_exp(f, b).values)


def overlap_measures(a: DSet, p: Partition) -> list[Fraction]:
    """μ(p_i ∩ A) for every atom p_i, in atom order."""
    inside = [ZERO] * len(p)
    for lo, hi, (i,), (member,) in overlay([p], [a]):
        if member:
            inside[i] += hi - lo
    return inside


def indicator_seminorm_ratio(a: DSet, p: Partition) -> Fraction:
    """max_i μ(A ∩ p_i) / μ(p_i), the seminorm of χ_A without building the step."""
    return max(m / mu for m, mu in zip(overlap_measures(a, p), p.measures()))


def best_approx(a: DSet, p: Partition) -> DSet:
    """
    Member of σ(p) closest to A in μ(A △ ·): atoms more than half covered by A.

    Atoms covered exactly half are left out; either choice gives the same distance.
    """
    chosen = [
        atom
        for atom, m, mu in zip(p.atoms, overlap_measures(a, p), p.measures())
        if 2 * m > mu
    ]
    return union_all(chosen)
