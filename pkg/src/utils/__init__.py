"""
Exact dyadic sets, finite σ-algebras and conditional expectation on [0,1).

Workflow: Library only; no run order and no data prerequisites. Used by src/lab (gallery,
convergence, sequence_lab, reports), the CLI (sigma_lab) and the tests.

Sets: DSet, make_set, boolean_combine, measure, union_all, EMPTY, FULL, parse_rat, format_rat.
σ-algebras: Partition, TRIVIAL, generate, join, meet, contains, is_refinement, AlgebraSeq,
explicit_sequence, liminf_algebra, limsup_algebra, liminf_limsup_table, is_monotone.
Functions: Step, step_from_values, indicator, constant, cond_exp, cond_exp_perp, seminorm,
lp_dist, norm, inner, integrate, best_approx.
Errors and report comparison: validate (LabError family, compare_reports).
"""

from .dyadic_sets import (
    DSet,
    make_set,
    boolean_combine,
    measure,
    union_all,
    parse_rat,
    format_rat,
    EMPTY,
    FULL,
)
from .sigma_algebras import (
    Partition,
    TRIVIAL,
    generate,
    join,
    meet,
    contains,
    is_refinement,
    AlgebraSeq,
    explicit_sequence,
    liminf_algebra,
    limsup_algebra,
    liminf_limsup_table,
    is_monotone,
)
from .cond_expect import (
    Step,
    step_from_values,
    indicator,
    constant,
    cond_exp,
    cond_exp_perp,
    seminorm,
    lp_dist,
    norm,
    inner,
    integrate,
    best_approx,
)
from . import validate

__all__ = [
    "DSet",
    "make_set",
    "boolean_combine",
    "measure",
    "union_all",
    "parse_rat",
    "format_rat",
    "EMPTY",
    "FULL",
    "Partition",
    "TRIVIAL",
    "generate",
    "join",
    "meet",
    "contains",
    "is_refinement",
    "AlgebraSeq",
    "explicit_sequence",
    "liminf_algebra",
    "limsup_algebra",
    "liminf_limsup_table",
    "is_monotone",
    "Step",
    "step_from_values",
    "indicator",
    "constant",
    "cond_exp",
    "cond_exp_perp",
    "seminorm",
    "lp_dist",
    "norm",
    "inner",
    "integrate",
    "best_approx",
    "validate",
]
