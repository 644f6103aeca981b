"""
Named deterministic sequences of σ-algebras and the sets they are built from.

Workflow position: Library module. Used by the CLI demos, the scenario driver
(`from_spec`) and the tests. No data files.

Provides:
  Counterexample pieces: a_n, j_n, i_nk, b_nk, c_nk, flat_index, unflatten,
  counterexample_s3, counterexample_horizon, counterexample_sequence.
  Dyadic martingales: dyadic_partition, dyadic_step, dyadic_martingale, martingale_sequence.
  Others: constant_sequence, alternating_sequence, from_spec, BUILTINS.

Counterexample (typewriter) sequence, for n >= 2 and 0 <= k < 2·2^n:
  A_n = [1/2, 1 − 2^-n), J_n = [1 − 2^-(n+1), 1), I_{n,k} = [k/(4·2^n), (k+1)/(4·2^n)),
  B_{n,k} = I_{n,k} ∪ J_n, C_{n,k} = (A_n ∪ B_{n,k})^c, algebra atoms {A_n, B_{n,k}, C_{n,k}}.
Indices are flattened n-major, k-minor; flat index 0 is (n, k) = (2, 0). n = 1 is skipped
because A_1 is empty and the three-atom structure collapses.
"""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from functools import lru_cache, partial
from typing import Any, Callable

from src.utils.cond_expect import Step
from src.utils.dyadic_sets import DSet, dyadic, make_set
from src.utils.sigma_algebras import (
    DEFAULT_MAX_HORIZON,
    GENERATE_CAP,
    AlgebraSeq,
    Partition,
    explicit_sequence,
    generate,
    partition_from_atoms,
)
from src.utils.validate import ValidationError, require

from .scenario import ScenarioSpec

# -----------------------------------------------------------------------------
# Config
# -----------------------------------------------------------------------------

COUNTEREXAMPLE_FIRST_N = 2
DEMO_N_MAX = 14
MARTINGALE_MAX_LEVEL = 16  # 2^16 atoms in the finest dyadic partition offered


# -----------------------------------------------------------------------------
# Counterexample pieces
# -----------------------------------------------------------------------------

def _check_nk(n: int, k: int | None = None) -> None:
    require(isinstance(n, int) and n >= 1, f"n must be an integer >= 1, got {n!r}")
    if k is not None:
        require(isinstance(k, int) and 0 <= k < 2 << n, f"k must satisfy 0 <= k < {2 << n}, got {k!r}")


def a_n(n: int) -> DSet:
    """A_n = [1/2, 1 − 2^-n); empty for n = 1."""
    _check_nk(n)
    return make_set([(Fraction(1, 2), 1 - dyadic(1, n))])


def j_n(n: int) -> DSet:
    """J_n = [1 − 2^-(n+1), 1)."""
    _check_nk(n)
    return make_set([(1 - dyadic(1, n + 1), Fraction(1))])


def i_nk(n: int, k: int) -> DSet:
    """I_{n,k} = [k/(4·2^n), (k+1)/(4·2^n)), sweeping [0, 1/2) as k runs over a block."""
    _check_nk(n, k)
    return make_set([(dyadic(k, n + 2), dyadic(k + 1, n + 2))])


def b_nk(n: int, k: int) -> DSet:
    return i_nk(n, k) | j_n(n)


def c_nk(n: int, k: int) -> DSet:
    return ~(a_n(n) | b_nk(n, k))


def flat_index(n: int, k: int) -> int:
    """Position of (n, k) in the n-major enumeration starting at (2, 0)."""
    require(n >= COUNTEREXAMPLE_FIRST_N, f"counterexample starts at n = {COUNTEREXAMPLE_FIRST_N}, got {n}")
    _check_nk(n, k)
    return (1 << (n + 1)) - 8 + k


def unflatten(index: int) -> tuple[int, int]:
    """Inverse of flat_index."""
    require(isinstance(index, int) and index >= 0, f"flat index must be a non-negative integer, got {index!r}")
    shifted = index + 8
    n = shifted.bit_length() - 2
    return n, shifted - (1 << (n + 1))


@lru_cache(maxsize=4096)
def counterexample_s3(index: int) -> Partition:
    """The three-atom partition {A_n, B_{n,k}, C_{n,k}} at a flat index."""
    n, k = unflatten(index)
    return partition_from_atoms([a_n(n), b_nk(n, k), c_nk(n, k)])


def counterexample_horizon(n_max: int) -> int:
    """Last flat index of block n_max, i.e. flat_index(n_max, 2·2^n_max − 1)."""
    return flat_index(n_max, (2 << n_max) - 1)


def counterexample_block_starts(horizon: int) -> list[int]:
    """First flat index of every n-block that starts at or before horizon."""
    starts = []
    n = COUNTEREXAMPLE_FIRST_N
    while (start := flat_index(n, 0)) <= horizon:
        starts.append(start)
        n += 1
    return starts


def counterexample_sequence(max_horizon: int = DEFAULT_MAX_HORIZON) -> AlgebraSeq:
    return AlgebraSeq(
        name="counterexample_s3",
        params={},
        generator=counterexample_s3,
        max_horizon=max_horizon,
        block_starts=counterexample_block_starts,
    )


# -----------------------------------------------------------------------------
# Dyadic martingales
# -----------------------------------------------------------------------------

@lru_cache(maxsize=None)
def dyadic_partition(level: int) -> Partition:
    """Level-l dyadic partition: 2^l intervals of length 2^-l."""
    require(0 <= level <= MARTINGALE_MAX_LEVEL, f"dyadic level must lie in 0..{MARTINGALE_MAX_LEVEL}, got {level}")
    return Partition(tuple(DSet(((dyadic(i, level), dyadic(i + 1, level)),)) for i in range(1 << level)))


def dyadic_step(level: int, values: list[Fraction | int]) -> Step:
    """Step on the level-l dyadic partition with the given per-interval values."""
    require(len(values) == 1 << level, f"a level-{level} step needs {1 << level} values")
    return Step(dyadic_partition(level), tuple(Fraction(v) for v in values))


def dyadic_martingale(n: int, direction: str = "increasing", top_level: int = 0) -> Partition:
    """D_n for increasing sequences, D_max(top_level − n, 0) for decreasing ones."""
    require(n >= 0, f"index must be >= 0, got {n}")
    if direction == "increasing":
        return dyadic_partition(n)
    if direction == "decreasing":
        return dyadic_partition(max(top_level - n, 0))
    raise ValidationError(f"direction must be 'increasing' or 'decreasing', got {direction!r}")


def martingale_sequence(direction: str = "increasing", top_level: int = 0) -> AlgebraSeq:
    if direction == "increasing":
        return AlgebraSeq(
            name="dyadic_martingale_inc",
            params={},
            generator=partial(dyadic_martingale, direction="increasing"),
            max_horizon=MARTINGALE_MAX_LEVEL,
        )
    require(0 <= top_level <= MARTINGALE_MAX_LEVEL, f"top_level must lie in 0..{MARTINGALE_MAX_LEVEL}")
    return AlgebraSeq(
        name="dyadic_martingale_dec",
        params={"top_level": top_level},
        generator=partial(dyadic_martingale, direction="decreasing", top_level=top_level),
    )


# -----------------------------------------------------------------------------
# Constant / alternating / from scenario
# -----------------------------------------------------------------------------

def constant_sequence(sets: list[DSet], cap: int = GENERATE_CAP) -> AlgebraSeq:
    seq = explicit_sequence("constant", [generate(sets, cap)], cycle=True)
    return replace(seq, params={"sets": list(sets)})


def alternating_sequence(first: list[DSet], second: list[DSet], cap: int = GENERATE_CAP) -> AlgebraSeq:
    seq = explicit_sequence("alternating", [generate(first, cap), generate(second, cap)], cycle=True)
    return replace(seq, params={"first": list(first), "second": list(second)})


BUILTINS: dict[str, Callable[[dict[str, Any], int], AlgebraSeq]] = {
    "counterexample_s3": lambda params, cap: counterexample_sequence(),
    "dyadic_martingale_inc": lambda params, cap: martingale_sequence("increasing"),
    "dyadic_martingale_dec": lambda params, cap: martingale_sequence("decreasing", params["top_level"]),
    "constant": lambda params, cap: constant_sequence(params["sets"], cap),
    "alternating": lambda params, cap: alternating_sequence(params["first"], params["second"], cap),
}


def from_spec(spec: ScenarioSpec) -> AlgebraSeq:
    """Build the scenario's sequence; a max_horizon cap lowers the sequence's own limit."""
    cap = spec.caps.get("generate_cap", GENERATE_CAP)
    desc = spec.sequence
    if "builtin" in desc:
        seq = BUILTINS[desc["builtin"]](desc["params"], cap)
    else:
        partitions = [generate(term, cap) for term in desc["explicit"]]
        seq = explicit_sequence("explicit", partitions, cycle=desc["cycle"], params={"cycle": desc["cycle"]})
    if "max_horizon" in spec.caps:
        seq = replace(seq, max_horizon=min(seq.max_horizon, spec.caps["max_horizon"]))
    seq.check_horizon(spec.horizon)
    return seq
