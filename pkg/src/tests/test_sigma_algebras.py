"""
Reusable test functions for finite σ-algebras: generation, lattice operations, membership,
and the horizon liminf / limsup algebras.

Result format: each test returns a dict with "passed", "message", and optional "details".
"""

from __future__ import annotations

from typing import Any

from src.lab.gallery import a_n, alternating_sequence, b_nk, c_nk, constant_sequence, dyadic_partition, martingale_sequence
from src.tests.oracles import (
    DEFAULT_CASES,
    DEFAULT_SEED,
    _result,
    meet_oracle,
    random_dset,
    random_partition,
    rng_for,
    summarize,
)
from src.utils.dyadic_sets import EMPTY, FULL, make_set
from src.utils.sigma_algebras import (
    TRIVIAL,
    Partition,
    contains,
    explicit_sequence,
    generate,
    is_monotone,
    is_refinement,
    join,
    liminf_algebra,
    liminf_limsup_table,
    limsup_algebra,
    meet,
    partition_from_atoms,
)
from src.utils.validate import CapExceededError, HorizonError, ValidationError


def _p(*atoms: list[tuple[str, str]]) -> Partition:
    return partition_from_atoms(make_set(a) for a in atoms)


HALVES = _p([("0", "1/2")], [("1/2", "1")])


def _raises(fn, exc=ValidationError) -> bool:
    try:
        fn()
    except exc:
        return True
    return False


# -----------------------------------------------------------------------------
# Partition and generate
# -----------------------------------------------------------------------------

def test_partition_validation() -> list[dict[str, Any]]:
    half, rest = make_set([("0", "1/2")]), make_set([("1/2", "1")])
    overlap = make_set([("1/4", "1")])
    return [
        _result(_raises(lambda: Partition((rest, half))), "atoms out of order rejected"),
        _result(_raises(lambda: Partition((half, overlap))), "overlapping atoms rejected"),
        _result(_raises(lambda: Partition((half,))), "atoms that miss part of [0,1) rejected"),
        _result(_raises(lambda: partition_from_atoms([half, rest, EMPTY])), "empty atom rejected"),
    ]


def test_generate_examples() -> list[dict[str, Any]]:
    a2, b20 = a_n(2), b_nk(2, 0)
    expected = partition_from_atoms([a2, b20, c_nk(2, 0)])
    return [
        _result(generate([]) == TRIVIAL, "generate([]) is trivial"),
        _result(generate([a2, b20]) == expected, "generate([A_2, B_(2,0)]) gives the three-atom partition",
                actual=[repr(x) for x in generate([a2, b20]).atoms]),
        _result(generate([make_set([("0", "1/2")])]) == HALVES, "generate([[0,1/2)]) gives the halves"),
        _result(_raises(lambda: generate([FULL] * 21), CapExceededError), "more than 20 generators exceed the cap"),
    ]


def test_generate_atoms_roundtrip_random(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, Any]:
    """generate(atoms of P) = P."""
    rng = rng_for(seed)
    results = []
    for case in range(cases):
        p = random_partition(rng)
        results.append(_result(generate(list(p.atoms)) == p, f"case {case}"))
    return summarize(results, "generate(atoms(P)) = P", seed=seed)


# -----------------------------------------------------------------------------
# Lattice
# -----------------------------------------------------------------------------

def test_join_examples() -> list[dict[str, Any]]:
    middle = _p([("0", "1/4"), ("3/4", "1")], [("1/4", "3/4")])
    return [
        _result(join(HALVES, HALVES) == HALVES, "join is idempotent"),
        _result(join(HALVES, middle) == dyadic_partition(2), "join(halves, {[1/4,3/4), rest}) is the quarters"),
        _result(join(TRIVIAL, middle) == middle, "trivial is the identity of join"),
    ]


def test_meet_examples() -> list[dict[str, Any]]:
    p = _p([("0", "1/4")], [("1/4", "1/2")], [("1/2", "1")])
    q = _p([("0", "1/2")], [("1/2", "3/4")], [("3/4", "1")])
    return [
        _result(meet(p, p) == p, "meet is idempotent"),
        _result(meet(p, TRIVIAL) == TRIVIAL, "trivial absorbs meet"),
        _result(meet(p, q) == HALVES, "meet of two three-atom partitions is the halves"),
        _result(meet_oracle(p, q) == HALVES, "oracle agrees on the worked example"),
    ]


def test_meet_matches_oracle_random(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, Any]:
    rng = rng_for(seed + 1)
    results = []
    for case in range(cases):
        p, q = random_partition(rng, 6), random_partition(rng, 6)
        got, want = meet(p, q), meet_oracle(p, q)
        results.append(_result(got == want, f"case {case}", got=len(got), want=len(want)))
    return summarize(results, "meet equals the σ-algebra intersection oracle", seed=seed)


def test_lattice_laws_random(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, Any]:
    rng = rng_for(seed + 2)
    results = []
    for case in range(cases):
        p, q, r = (random_partition(rng, 5) for _ in range(3))
        a = random_dset(rng)
        checks = {
            "join_commutes": join(p, q) == join(q, p),
            "meet_commutes": meet(p, q) == meet(q, p),
            "join_associates": join(join(p, q), r) == join(p, join(q, r)),
            "meet_associates": meet(meet(p, q), r) == meet(p, meet(q, r)),
            "absorption_join": join(p, meet(p, q)) == p,
            "absorption_meet": meet(p, join(p, q)) == p,
            "join_refines": is_refinement(join(p, q), p) and is_refinement(join(p, q), q),
            "meet_coarsens": is_refinement(p, meet(p, q)) and is_refinement(q, meet(p, q)),
            "meet_membership": not (contains(p, a) and contains(q, a)) or contains(meet(p, q), a),
            "join_membership": not contains(p, a) or contains(join(p, q), a),
        }
        failed = [k for k, ok in checks.items() if not ok]
        results.append(_result(not failed, f"case {case}", failed=failed))
    return summarize(results, "lattice laws and membership", seed=seed)


def test_contains_examples() -> list[dict[str, Any]]:
    s3 = partition_from_atoms([a_n(2), b_nk(2, 0), c_nk(2, 0)])
    return [
        _result(contains(HALVES, make_set([("0", "1/2")])), "[0,1/2) ∈ σ(halves)"),
        _result(not contains(HALVES, make_set([("0", "1/4")])), "[0,1/4) ∉ σ(halves)"),
        _result(contains(s3, a_n(2) | b_nk(2, 0)), "A_2 ∪ B_(2,0) ∈ 𝔄_(2,0)"),
        _result(contains(s3, EMPTY) and contains(s3, FULL), "∅ and X are members"),
    ]


# -----------------------------------------------------------------------------
# Sequences, liminf / limsup
# -----------------------------------------------------------------------------

def test_liminf_limsup_constant() -> dict[str, Any]:
    seq = constant_sequence([make_set([("0", "1/4")]), make_set([("1/2", "3/4")])])
    p = seq.term(0)
    passed = all(liminf_algebra(seq, h) == p and limsup_algebra(seq, h) == p for h in (1, 2, 5))
    return _result(passed, "constant sequence: liminf = limsup = P")


def test_liminf_limsup_alternating() -> list[dict[str, Any]]:
    first = [make_set([("0", "1/2")])]
    second = [make_set([("0", "1/4"), ("1/2", "3/4")])]
    seq = alternating_sequence(first, second)
    p, q = seq.term(0), seq.term(1)
    results = []
    for h in (2, 3, 6, 9):
        results.append(_result(
            liminf_algebra(seq, h, min_tail=2) == meet(p, q) and limsup_algebra(seq, h, min_tail=2) == join(p, q),
            f"alternating, H = {h}, windows of >= 2 terms: meet / join",
        ))
    results.append(_result(
        liminf_algebra(seq, 9) == seq.term(9) and limsup_algebra(seq, 9) == seq.term(9),
        "alternating with single-term windows collapses to the last term",
    ))
    return results


def test_liminf_limsup_martingales() -> list[dict[str, Any]]:
    inc = martingale_sequence("increasing")
    dec = martingale_sequence("decreasing", top_level=4)
    results = [
        _result(liminf_algebra(inc, h) == dyadic_partition(h) == limsup_algebra(inc, h), f"increasing D_n, H = {h}: D_H")
        for h in (1, 3, 6)
    ]
    results.append(_result(
        liminf_algebra(dec, 7) == limsup_algebra(dec, 7) == TRIVIAL,
        "decreasing sequence collapsing to trivial: liminf = limsup",
    ))
    return results


def test_liminf_limsup_table_rows() -> dict[str, Any]:
    seq = martingale_sequence("increasing")
    table = liminf_limsup_table(seq, 4)
    passed = (
        [r["m"] for r in table["rows"]] == [0, 1, 2, 3, 4]
        and all(r["tail_meet"] == dyadic_partition(r["m"]) for r in table["rows"])
        and all(r["tail_join"] == dyadic_partition(4) for r in table["rows"])
        and table["liminf"] == table["limsup"] == dyadic_partition(4)
    )
    return _result(passed, "per-window table for D_n: tail meet D_m, tail join D_H")


def test_is_monotone() -> list[dict[str, Any]]:
    alt = alternating_sequence([make_set([("0", "1/2")])], [make_set([("0", "1/4")])])
    return [
        _result(is_monotone(martingale_sequence("increasing"), 5) == "increasing", "D_n is increasing"),
        _result(is_monotone(martingale_sequence("decreasing", 3), 6) == "decreasing", "decreasing martingale"),
        _result(is_monotone(constant_sequence([]), 3) == "constant", "constant trivial sequence"),
        _result(is_monotone(alt, 4) is None, "alternating sequence is not monotone"),
    ]


def test_monotone_sequences_have_equal_limits_random(seed: int = DEFAULT_SEED, cases: int = 50) -> dict[str, Any]:
    """For refinement chains built from random partitions, liminf = limsup at every horizon."""
    rng = rng_for(seed + 3)
    results = []
    for case in range(cases):
        chain = [random_partition(rng, 3)]
        for _ in range(4):
            chain.append(join(chain[-1], random_partition(rng, 3)))
        for label, terms in (("increasing", chain), ("decreasing", chain[::-1])):
            seq = explicit_sequence(label, terms, cycle=False)
            ok = all(liminf_algebra(seq, h) == limsup_algebra(seq, h) for h in range(1, len(terms)))
            results.append(_result(ok, f"case {case} {label}"))
    return summarize(results, "monotone chains: liminf = limsup", seed=seed)


def test_horizon_checks() -> list[dict[str, Any]]:
    seq = explicit_sequence("short", [TRIVIAL, HALVES], cycle=False)
    return [
        _result(_raises(lambda: seq.terms(2), HorizonError), "non-cycled list ends at its last term"),
        _result(_raises(lambda: seq.terms(0), HorizonError), "horizon 0 rejected"),
        _result(_raises(lambda: seq.term(-1)), "negative index rejected"),
        _result(seq.terms(1) == [TRIVIAL, HALVES], "terms(H) returns 𝔄_0..𝔄_H"),
    ]


def test_is_refinement_examples() -> list[dict[str, Any]]:
    return [
        _result(is_refinement(dyadic_partition(2), HALVES), "quarters refine halves"),
        _result(not is_refinement(HALVES, dyadic_partition(2)), "halves do not refine quarters"),
        _result(is_refinement(HALVES, TRIVIAL), "everything refines trivial"),
    ]


# -----------------------------------------------------------------------------
# Run all
# -----------------------------------------------------------------------------

def run_unit_tests(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, list[dict[str, Any]]]:
    groups: dict[str, list[dict[str, Any]]] = {}
    groups["partitions"] = [
        *test_partition_validation(),
        *test_generate_examples(),
        test_generate_atoms_roundtrip_random(seed, cases),
        *test_contains_examples(),
        *test_is_refinement_examples(),
    ]
    groups["lattice"] = [
        *test_join_examples(),
        *test_meet_examples(),
        test_meet_matches_oracle_random(seed, cases),
        test_lattice_laws_random(seed, cases),
    ]
    groups["limits"] = [
        test_liminf_limsup_constant(),
        *test_liminf_limsup_alternating(),
        *test_liminf_limsup_martingales(),
        test_liminf_limsup_table_rows(),
        *test_is_monotone(),
        test_monotone_sequences_have_equal_limits_random(seed, max(1, cases // 4)),
        *test_horizon_checks(),
    ]
    return groups
