"""
Reusable test functions for step functions and conditional expectation.

Covers the worked counterexample values, the norms against the piecewise oracle,
the seminorm / best-approximation oracles, and the operator identities of ℰ(·|σ(B)).

Result format: each test returns a dict with "passed", "message", and optional "details".
"""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from typing import Any

from src.lab.gallery import a_n, b_nk, c_nk, counterexample_s3, dyadic_partition
from src.tests.oracles import (
    DEFAULT_CASES,
    DEFAULT_SEED,
    OPERATOR_CASES,
    _result,
    best_distance_oracle,
    piecewise_lp,
    random_dset,
    random_nonnegative_step,
    random_partition,
    random_step,
    rng_for,
    seminorm_sup_oracle,
    summarize,
)
from src.utils.cond_expect import (
    Step,
    absolute,
    add,
    best_approx,
    canonical_display,
    cond_exp,
    cond_exp_perp,
    constant,
    evaluate,
    indicator,
    indicator_seminorm_ratio,
    inner,
    integrate,
    l2_root_approx,
    lp_dist,
    maximum,
    minimum,
    norm,
    product,
    refine,
    scale,
    seminorm,
    step_from_values,
    subtract,
)
from src.utils.dyadic_sets import FULL, make_set
from src.utils.sigma_algebras import TRIVIAL, join, meet
from src.utils.validate import ValidationError

HALF_UP = make_set([("1/2", "1")])


def _raises(fn, exc=ValidationError) -> bool:
    try:
        fn()
    except exc:
        return True
    return False


def _value_on(f: Step, atom) -> Fraction:
    return evaluate(f, atom.left)


# -----------------------------------------------------------------------------
# Worked examples
# -----------------------------------------------------------------------------

def test_counterexample_cond_exp_values() -> dict[str, Any]:
    p = counterexample_s3(0)
    e = cond_exp(indicator(HALF_UP), p)
    got = {
        "A": _value_on(e, a_n(2)),
        "B": _value_on(e, b_nk(2, 0)),
        "C": _value_on(e, c_nk(2, 0)),
    }
    want = {"A": Fraction(1), "B": Fraction(2, 3), "C": Fraction(2, 9)}
    return _result(got == want, "ℰ(χ_[1/2,1) | 𝔄_(2,0)) = 1, 2/3, 2/9 by atom", got={k: str(v) for k, v in got.items()})


def test_counterexample_seminorm() -> dict[str, Any]:
    value = seminorm(indicator(HALF_UP), counterexample_s3(0))
    return _result(value == 1, "seminorm of χ_[1/2,1) on 𝔄_(2,0) is 1", actual=str(value))


def test_counterexample_l1_distance() -> list[dict[str, Any]]:
    f = indicator(HALF_UP)
    e = cond_exp(f, counterexample_s3(0))
    fast = lp_dist(e, f, 1)
    return [
        _result(fast == Fraction(5, 18), "‖ℰ(f|𝔄_(2,0)) − f‖_1 = 5/18", actual=str(fast)),
        _result(fast == piecewise_lp(e, f, "1"), "fast L1 path agrees with the piecewise oracle"),
    ]


def test_cond_exp_trivial_is_mean() -> dict[str, Any]:
    f = step_from_values(dyadic_partition(2), ["1", "0", "1/2", "3/2"])
    e = cond_exp(f, TRIVIAL)
    return _result(e.values == (Fraction(3, 4),) and e.carrier == TRIVIAL, "ℰ(f|trivial) is the constant ∫f", actual=str(e.values))


def test_cond_exp_same_carrier_is_identity() -> dict[str, Any]:
    f = step_from_values(dyadic_partition(2), [1, 2, 3, 4])
    return _result(cond_exp(f, dyadic_partition(2)) == f, "ℰ(f|σ(carrier)) = f")


def test_cond_exp_perp_example() -> dict[str, Any]:
    f = step_from_values(dyadic_partition(1), [1, 0])
    perp = cond_exp_perp(f, TRIVIAL)
    passed = perp.values == (Fraction(1, 2), Fraction(-1, 2)) and integrate(perp) == 0
    return _result(passed, "ℰ^⊥(χ_[0,1/2) | trivial) = ±1/2", actual=str(perp.values))


def test_step_construction_and_display() -> list[dict[str, Any]]:
    quarters = dyadic_partition(2)
    f = step_from_values(quarters, [1, 1, "1/2", 1])
    return [
        _result(
            canonical_display(f) == [
                (Fraction(0), Fraction(1, 2), Fraction(1)),
                (Fraction(1, 2), Fraction(3, 4), Fraction(1, 2)),
                (Fraction(3, 4), Fraction(1), Fraction(1)),
            ],
            "display merges adjacent equal values",
        ),
        _result(_raises(lambda: step_from_values(quarters, [1, 2])), "value count must match atoms"),
        _result(_raises(lambda: Step(quarters, (1, 2, 3, 4))), "raw ints rejected by Step()"),
        _result(refine(constant(2), quarters).values == (Fraction(2),) * 4, "refine copies the value onto every atom"),
        _result(_raises(lambda: refine(f, dyadic_partition(1))), "refining onto a coarser partition raises"),
        _result(indicator(FULL).values == (Fraction(1),), "χ_X is the constant 1"),
    ]


def test_arithmetic_examples() -> list[dict[str, Any]]:
    f = step_from_values(dyadic_partition(1), [1, -2])
    g = step_from_values(TRIVIAL, ["1/2"])
    return [
        _result(add(f, g).values == (Fraction(3, 2), Fraction(-3, 2)), "add"),
        _result(subtract(f, g).values == (Fraction(1, 2), Fraction(-5, 2)), "subtract"),
        _result(product(f, g).values == (Fraction(1, 2), Fraction(-1)), "product"),
        _result(maximum(f, g).values == (Fraction(1), Fraction(1, 2)), "maximum"),
        _result(minimum(f, g).values == (Fraction(1, 2), Fraction(-2)), "minimum"),
        _result(scale(f, -1).values == (Fraction(-1), Fraction(2)), "scale"),
        _result(absolute(f).values == (Fraction(1), Fraction(2)), "absolute"),
        _result(integrate(f) == Fraction(-1, 2), "integrate"),
        _result(inner(f, f) == Fraction(5, 2), "inner"),
    ]


def test_norms_examples() -> list[dict[str, Any]]:
    f = step_from_values(dyadic_partition(1), [1, -2])
    return [
        _result(norm(f, 1) == Fraction(3, 2), "‖f‖_1"),
        _result(norm(f, 2) == Fraction(5, 2), "‖f‖_2 is reported squared"),
        _result(norm(f, "inf") == 2, "‖f‖_∞"),
        _result(_raises(lambda: norm(f, 3)), "p outside {1, 2, inf} raises"),
        _result(l2_root_approx(Fraction(1, 4)) == Decimal("0.5"), "√(1/4) = 0.5"),
        _result(_raises(lambda: l2_root_approx(Fraction(-1))), "negative squared norm raises"),
    ]


def test_norms_match_piecewise_random(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, Any]:
    rng = rng_for(seed + 10)
    results = []
    for case in range(cases):
        f = random_step(rng, random_partition(rng))
        g = random_step(rng, random_partition(rng))
        failed = [p for p in ("1", "2", "inf") if lp_dist(f, g, p) != piecewise_lp(f, g, p)]
        results.append(_result(not failed, f"case {case}", failed=failed))
    return summarize(results, "lp_dist equals the piecewise oracle", seed=seed)


# -----------------------------------------------------------------------------
# Seminorm and best approximation
# -----------------------------------------------------------------------------

def test_seminorm_matches_oracles_random(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, Any]:
    """‖χ_A‖_B = max_i μ(A ∩ B_i)/μ(B_i) = sup over members S of μ(A ∩ S)/μ(S)."""
    rng = rng_for(seed + 11)
    results = []
    for case in range(cases):
        a, b = random_dset(rng), random_partition(rng, 8)
        via_cond = seminorm(indicator(a), b)
        via_ratio = indicator_seminorm_ratio(a, b)
        via_sup = seminorm_sup_oracle(a, b)
        results.append(_result(via_cond == via_ratio == via_sup, f"case {case}",
                               cond=str(via_cond), ratio=str(via_ratio), sup=str(via_sup)))
    return summarize(results, "indicator seminorm agrees three ways", seed=seed)


def test_best_approx_matches_oracle_random(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, Any]:
    rng = rng_for(seed + 12)
    results = []
    for case in range(cases):
        a, p = random_dset(rng), random_partition(rng, 6)
        got = (a ^ best_approx(a, p)).measure()
        results.append(_result(got == best_distance_oracle(a, p), f"case {case}", got=str(got)))
    return summarize(results, "best_approx attains min μ(A △ S) over σ(P)", seed=seed)


def test_best_approx_examples() -> list[dict[str, Any]]:
    quarters = dyadic_partition(2)
    return [
        _result(best_approx(make_set([("0", "3/8")]), quarters) == make_set([("0", "1/4")]), "half-covered atom left out"),
        _result(best_approx(make_set([("0", "7/16")]), quarters) == make_set([("0", "1/2")]), "more than half covered atom kept"),
        _result(best_approx(HALF_UP, TRIVIAL).is_empty(), "exactly half of X gives ∅"),
    ]


# -----------------------------------------------------------------------------
# Operator identities
# -----------------------------------------------------------------------------

def test_operator_properties_random(seed: int = DEFAULT_SEED, cases: int = OPERATOR_CASES) -> dict[str, Any]:
    """Linearity, tower, contraction, positivity, mean, adjointness and orthogonality of ℰ(·|σ(B))."""
    rng = rng_for(seed + 13)
    results = []
    for case in range(cases):
        carrier = random_partition(rng, 6)
        f, g = random_step(rng, carrier), random_step(rng, random_partition(rng, 6))
        b = random_partition(rng, 5)
        c = meet(b, random_partition(rng, 4))
        e_f, e_g = cond_exp(f, b), cond_exp(g, b)
        nonneg = random_nonnegative_step(rng, carrier)
        checks = {
            "linearity": lp_dist(cond_exp(add(scale(f, 3), g), b), add(scale(e_f, 3), e_g), "inf") == 0,
            "tower": lp_dist(cond_exp(e_f, c), cond_exp(f, c), "inf") == 0,
            "idempotent": lp_dist(cond_exp(e_f, b), e_f, "inf") == 0,
            "contraction_l1": norm(e_f, 1) <= norm(f, 1),
            "contraction_l2": norm(e_f, 2) <= norm(f, 2),
            "contraction_inf": norm(e_f, "inf") <= norm(f, "inf"),
            "positivity": all(v >= 0 for v in cond_exp(nonneg, b).values),
            "mean": integrate(e_f) == integrate(f),
            "adjoint": inner(e_f, g) == inner(f, e_g),
            "orthogonal": inner(cond_exp_perp(f, b), e_g) == 0,
            "join_carrier": cond_exp(f, join(b, carrier)).carrier == join(b, carrier),
        }
        failed = [k for k, ok in checks.items() if not ok]
        results.append(_result(not failed, f"case {case}", failed=failed))
    return summarize(results, "conditional expectation operator identities", seed=seed)


# -----------------------------------------------------------------------------
# Run all
# -----------------------------------------------------------------------------

def run_unit_tests(seed: int = DEFAULT_SEED, cases: int = DEFAULT_CASES) -> dict[str, list[dict[str, Any]]]:
    groups: dict[str, list[dict[str, Any]]] = {}
    groups["steps"] = [
        *test_step_construction_and_display(),
        *test_arithmetic_examples(),
        *test_norms_examples(),
        test_norms_match_piecewise_random(seed, cases),
    ]
    groups["cond_exp"] = [
        test_counterexample_cond_exp_values(),
        test_counterexample_seminorm(),
        *test_counterexample_l1_distance(),
        test_cond_exp_trivial_is_mean(),
        test_cond_exp_same_carrier_is_identity(),
        test_cond_exp_perp_example(),
        test_seminorm_matches_oracles_random(seed, cases),
        *test_best_approx_examples(),
        test_best_approx_matches_oracle_random(seed, cases),
        test_operator_properties_random(seed, max(cases, OPERATOR_CASES)),
    ]
    return groups
