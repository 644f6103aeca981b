"""
Sequence-level diagnostics at a finite horizon.

Workflow position: Library module. Depends on src/utils and on convergence.py; driven by
reports.run_analyses (scenario analyses) and by the CLI demos.

Provides:
  Boylan metric        boylan_inf, boylan_distance, boylan_table
  Tail set statistics  tail_symdiff_profile, tail_limit_crosscheck, mu_approach_profile,
                       fset_horizon_diagnostic
  Uniform covering     CoverWitness, uniform_cover_witness, check_uniform_cover,
                       combine_witnesses, enlarge_witness, monotone_cover_shortcut,
                       complement_union_witness, relaxed_cover_check, mu_ae_membership,
                       ae_cover_crosscheck
  Pairing witnesses    CNElement, cn_element, wperp_witness, pairing_profile

Every "→ 0" statement becomes a horizon diagnostic: maxima over the last quartile of
indices compared against an explicit tolerance. Nothing here certifies a limit.

Index conventions: terms are 𝔄_0..𝔄_H; tail unions use N < n <= H, tail sups use
N <= n <= H; set lists are indexed the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from src.utils.cond_expect import (
    Step,
    absolute,
    add,
    best_approx,
    cond_exp,
    constant,
    indicator,
    indicator_seminorm_ratio,
    inner,
    integrate,
    norm,
    overlap_measures,
)
from src.utils.dyadic_sets import EMPTY, FULL, ZERO, DSet, union_all
from src.utils.sigma_algebras import AlgebraSeq, Partition, contains, is_monotone
from src.utils.validate import ValidationError, check_cap, ensure, require

from .convergence import (
    GRID_CAP,
    ae_report,
    conditional_expectations,
    default_window_starts,
    quartile_start,
    tail_statistics,
    trend,
)

# -----------------------------------------------------------------------------
# Config
# -----------------------------------------------------------------------------

BOYLAN_ATOM_CAP = 20
BOYLAN_BLOCK_BITS = 16  # subsets enumerated per numpy block


# -----------------------------------------------------------------------------
# Boylan metric
# -----------------------------------------------------------------------------

def boylan_inf(a: DSet, q: Partition) -> Fraction:
    """inf_{B ∈ σ(q)} μ(A △ B) = Σ_j min(μ(q_j ∩ A), μ(q_j ∖ A))."""
    return sum(
        (min(m, mu - m) for m, mu in zip(overlap_measures(a, q), q.measures())),
        ZERO,
    )


def _overlap_matrix(p: Partition, q: Partition) -> tuple[np.ndarray, np.ndarray, int]:
    """μ(p_i ∩ q_j) and μ(q_j) as integers in units of 2^-level."""
    points = set(p.points) | set(q.points)
    level = max(x.denominator.bit_length() - 1 for x in points)
    scale = 1 << level
    dtype = np.int64 if level <= 56 else object
    matrix = np.zeros((len(p), len(q)), dtype=dtype)
    for i, atom in enumerate(p.atoms):
        for j, m in enumerate(overlap_measures(atom, q)):
            matrix[i, j] = int(m * scale)
    q_mu = np.array([int(mu * scale) for mu in q.measures()], dtype=dtype)
    return matrix, q_mu, level


def _boylan_sup(p: Partition, q: Partition) -> Fraction:
    """sup over unions S of p-atoms of boylan_inf(S, q), by exhaustive enumeration."""
    matrix, q_mu, level = _overlap_matrix(p, q)
    k = len(p)
    # inf(S) == inf(S^c): enumerate only unions without the last atom
    free = k - 1
    low = min(free, BOYLAN_BLOCK_BITS)
    sums = np.zeros((1, len(q)), dtype=matrix.dtype)
    for i in range(low):
        sums = np.vstack([sums, sums + matrix[i]])
    best = 0
    for pattern in range(1 << (free - low)):
        offset = np.zeros(len(q), dtype=matrix.dtype)
        for bit in range(free - low):
            if pattern >> bit & 1:
                offset = offset + matrix[low + bit]
        block = sums + offset
        value = np.minimum(block, q_mu - block).sum(axis=1).max()
        best = max(best, int(value))
    return Fraction(best, 1 << level)


def boylan_distance(p: Partition, q: Partition, cap: int = BOYLAN_ATOM_CAP) -> Fraction:
    """
    d(σ(p), σ(q)) = sup_{A∈σ(p)} inf_{B∈σ(q)} μ(A△B) + sup_{B∈σ(q)} inf_{A∈σ(p)} μ(A△B).

    Exact and exponential in the atom count; more than *cap* atoms raises CapExceededError.
    """
    check_cap(len(p), cap, "Boylan atoms (first partition)")
    check_cap(len(q), cap, "Boylan atoms (second partition)")
    if p == q:
        return ZERO
    return _boylan_sup(p, q) + _boylan_sup(q, p)


def boylan_table(seq: AlgebraSeq, indices: Sequence[int], cap: int = BOYLAN_ATOM_CAP) -> dict[tuple[int, int], Fraction]:
    """d(𝔄_i, 𝔄_j) for all i <= j in indices."""
    terms = {n: seq.term(n) for n in indices}
    table = {}
    for a, i in enumerate(indices):
        for j in indices[a:]:
            table[(i, j)] = boylan_distance(terms[i], terms[j], cap)
    return table


# -----------------------------------------------------------------------------
# Tail set statistics
# -----------------------------------------------------------------------------

def tail_symdiff_profile(sets: Sequence[DSet], a: DSet, horizon: int) -> dict[int, Fraction]:
    """N -> μ(⋃_{N<n<=H}(A_n △ A)) for N = 0..H-1; non-increasing in N."""
    require(len(sets) == horizon + 1, f"need sets for indices 0..{horizon}, got {len(sets)}")
    profile: dict[int, Fraction] = {}
    tail = EMPTY
    for n in range(horizon, 0, -1):
        tail = tail | (sets[n] ^ a)
        profile[n - 1] = tail.measure()
    return dict(sorted(profile.items()))


def tail_limit_crosscheck(sets: Sequence[DSet], a: DSet, horizon: int, min_tail: int = 2, tol: Fraction = ZERO) -> dict[str, Any]:
    """
    Horizon versions of the three equivalent statements for a selection A_n.

    inner = ⋃_N ⋂_{N<n<=H} A_n and outer = ⋂_N ⋃_{N<n<=H} A_n over windows holding at
    least min_tail terms (with a single-term window both collapse to A_H). Reports the
    distances μ(A △ inner), μ(A △ outer), the tail profile at the last-quartile start,
    and whether the set statement and the profile statement agree within tol.
    """
    require(1 <= min_tail <= horizon, f"min_tail must lie in 1..{horizon}")
    profile = tail_symdiff_profile(sets, a, horizon)
    inner_set, outer_set = EMPTY, FULL
    tail_cap, tail_cup = FULL, EMPTY
    for n in range(horizon, 0, -1):
        tail_cap = tail_cap & sets[n]
        tail_cup = tail_cup | sets[n]
        if horizon - n + 1 >= min_tail:
            inner_set = inner_set | tail_cap
            outer_set = outer_set & tail_cup
    inner_gap = (a ^ inner_set).measure()
    outer_gap = (a ^ outer_set).measure()
    q = quartile_start(horizon)
    sets_hold = inner_gap <= tol and outer_gap <= tol
    profile_holds = profile[q] <= tol
    return {
        "inner": inner_set,
        "outer": outer_set,
        "inner_gap": inner_gap,
        "outer_gap": outer_gap,
        "limits_agree": inner_set == outer_set,
        "profile": profile,
        "profile_at_quartile": profile[q],
        "sets_hold": sets_hold,
        "profile_holds": profile_holds,
        "consistent": sets_hold == profile_holds,
    }


def mu_approach_profile(seq: AlgebraSeq, a: DSet, horizon: int) -> list[Fraction]:
    """μ(A △ best_approx(A, 𝔄_n)) for n = 0..H."""
    return [(a ^ best_approx(a, p)).measure() for p in seq.terms(horizon)]


# -----------------------------------------------------------------------------
# Uniform covering witnesses
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverWitness:
    """
    Selection A_n ∈ 𝔄_n for a target set, with its tail and seminorm profiles.

    bounds[n] records the per-index bound named by bound_kind: "strict_r" (seminorm < r
    for super-level witnesses), "subadditive" (combined witnesses), "enlarged"
    (seminorm not above the original's), or "none".
    """

    seq: AlgebraSeq
    target: DSet
    r: Fraction | None
    sets: tuple[DSet, ...]
    tail_symdiff: dict[int, Fraction]
    seminorms: tuple[Fraction, ...]
    bounds: tuple[bool, ...]
    bound_kind: str = "none"

    @property
    def horizon(self) -> int:
        return len(self.sets) - 1


def _witness(
    seq: AlgebraSeq,
    target: DSet,
    sets: Sequence[DSet],
    terms: Sequence[Partition],
    r: Fraction | None = None,
    bounds: Sequence[bool] | None = None,
    bound_kind: str = "none",
) -> CoverWitness:
    horizon = len(sets) - 1
    for n, (s, p) in enumerate(zip(sets, terms)):
        require(contains(p, s), f"witness set at index {n} is not a member of 𝔄_{n}")
    seminorms = tuple(indicator_seminorm_ratio(target - s, p) for s, p in zip(sets, terms))
    return CoverWitness(
        seq=seq,
        target=target,
        r=r,
        sets=tuple(sets),
        tail_symdiff=tail_symdiff_profile(sets, target, horizon),
        seminorms=seminorms,
        bounds=tuple(bounds) if bounds is not None else tuple(True for _ in sets),
        bound_kind=bound_kind,
    )


def uniform_cover_witness(
    seq: AlgebraSeq,
    a: DSet,
    r: Fraction,
    horizon: int,
    terms: Sequence[Partition] | None = None,
) -> CoverWitness:
    """
    Super-level witness A_n = {ℰ(χ_A|𝔄_n) >= r}, a union of atoms of 𝔄_n.

    Off A_n every atom has ℰ(χ_A|𝔄_n) < r, so ‖χ_{A∖A_n}‖_{𝔄_n} < r; the bound is
    recorded per index and a violation raises InvariantViolation.
    """
    r = Fraction(r)
    require(0 < r < 1, f"r must lie in (0,1), got {r}")
    terms = list(terms) if terms is not None else seq.terms(horizon)
    require(len(terms) == horizon + 1, "terms must cover 0..H")
    sets = []
    for p in terms:
        ratios = [m / mu for m, mu in zip(overlap_measures(a, p), p.measures())]
        sets.append(union_all(atom for atom, ratio in zip(p.atoms, ratios) if ratio >= r))
    w = _witness(seq, a, sets, terms, r=r, bound_kind="strict_r")
    bounds = tuple(s < r for s in w.seminorms)
    ensure(all(bounds), f"super-level witness seminorm reached r = {r}")
    return replace(w, bounds=bounds)


def check_uniform_cover(w: CoverWitness, a: DSet, eps: Fraction) -> dict[str, Any]:
    """Both covering conditions over the last quartile of indices, against tolerance eps."""
    require(w.target == a, "witness was built for a different set")
    eps = Fraction(eps)
    q = quartile_start(w.horizon)
    max_tail = max(w.tail_symdiff[n] for n in range(q, w.horizon))
    max_seminorm = max(w.seminorms[q:])
    cond_sets = max_tail <= eps
    cond_seminorm = max_seminorm <= eps
    return {
        "quartile_start": q,
        "eps": eps,
        "max_tail_symdiff": max_tail,
        "max_seminorm": max_seminorm,
        "tail_sets_condition": cond_sets,
        "seminorm_condition": cond_seminorm,
        "passed": cond_sets and cond_seminorm,
    }


def combine_witnesses(w1: CoverWitness, w2: CoverWitness, mode: str) -> CoverWitness:
    """Per-index intersection or union of two witnesses over the same sequence and horizon."""
    require(mode in ("intersect", "union"), f"mode must be 'intersect' or 'union', got {mode!r}")
    require(w1.horizon == w2.horizon, f"witness horizons differ: {w1.horizon} vs {w2.horizon}")
    require(w1.seq == w2.seq, "witnesses belong to different sequences")
    if mode == "intersect":
        target = w1.target & w2.target
        sets = [s & t for s, t in zip(w1.sets, w2.sets)]
    else:
        target = w1.target | w2.target
        sets = [s | t for s, t in zip(w1.sets, w2.sets)]
    w = _witness(w1.seq, target, sets, w1.seq.terms(w1.horizon), bound_kind="subadditive")
    bounds = tuple(s <= a + b for s, a, b in zip(w.seminorms, w1.seminorms, w2.seminorms))
    ensure(all(bounds), "combined witness seminorm exceeds the sum of its parts")
    return replace(w, bounds=bounds)


def enlarge_witness(w: CoverWitness, larger_sets: Sequence[DSet]) -> CoverWitness:
    """Replace A_n by members A'_n ⊇ A_n of 𝔄_n; seminorms can only drop."""
    require(len(larger_sets) == len(w.sets), "enlarged selection must cover the same indices")
    for n, (s, t) in enumerate(zip(w.sets, larger_sets)):
        require(s.issubset(t), f"enlarged set at index {n} does not contain the original")
    e = _witness(w.seq, w.target, larger_sets, w.seq.terms(w.horizon), r=w.r, bound_kind="enlarged")
    bounds = tuple(new <= old for new, old in zip(e.seminorms, w.seminorms))
    ensure(all(bounds), "enlarging a witness increased a seminorm")
    return replace(e, bounds=bounds)


def monotone_cover_shortcut(seq: AlgebraSeq, a: DSet, horizon: int) -> CoverWitness | None:
    """
    Constant selection A_n = A when the sequence is decreasing (or constant) and A ∈ 𝔄_n
    for every n; the witness is exact. Returns None when the shortcut does not apply.
    """
    terms = seq.terms(horizon)
    if is_monotone(seq, horizon) not in ("decreasing", "constant"):
        return None
    if not all(contains(p, a) for p in terms):
        return None
    return _witness(seq, a, [a] * (horizon + 1), terms, bound_kind="none")


def complement_union_witness(wa: CoverWitness, wac: CoverWitness) -> dict[str, Any]:
    """
    Joint diagnostic for witnesses of A and A^c: A_n ∪ C_n should exhaust X and
    A_n ∩ C_n should vanish in the tail.
    """
    require(wac.target == ~wa.target, "second witness must be built for the complement")
    require(wa.horizon == wac.horizon, "witness horizons differ")
    horizon = wa.horizon
    unions = [s | t for s, t in zip(wa.sets, wac.sets)]
    overlaps = [s & t for s, t in zip(wa.sets, wac.sets)]
    return {
        "union_profile": tail_symdiff_profile(unions, FULL, horizon),
        "overlap_profile": tail_symdiff_profile(overlaps, EMPTY, horizon),
    }


def mu_ae_membership(seq: AlgebraSeq, a: DSet, r: Fraction, horizon: int, eps: Fraction) -> dict[str, Any]:
    """
    Horizon report for the family of sets A with both A and A^c uniformly covered
    (written 𝔄_{w.a.e.} in some places and 𝔄_{μ.a.e.} in others; one object here).
    """
    terms = seq.terms(horizon)
    wa = uniform_cover_witness(seq, a, r, horizon, terms)
    wac = uniform_cover_witness(seq, ~a, r, horizon, terms)
    check_a = check_uniform_cover(wa, a, eps)
    check_ac = check_uniform_cover(wac, ~a, eps)
    return {
        "witness": wa,
        "complement_witness": wac,
        "check": check_a,
        "complement_check": check_ac,
        "complement_union": complement_union_witness(wa, wac),
        "member": check_a["passed"] and check_ac["passed"],
    }


def relaxed_cover_check(
    seq: AlgebraSeq,
    a: DSet,
    witness: CoverWitness,
    horizon: int,
    eps: Fraction,
    grid_cap: int = GRID_CAP,
) -> dict[str, Any]:
    """
    Covering check with the seminorm condition relaxed to pointwise convergence:
    sup_{n>=N_q} ℰ(χ_{A∖A_n}|𝔄_n)(x) < eps for almost every x, next to the uniform verdict.
    """
    require(witness.target == a and witness.horizon == horizon, "witness does not match A and H")
    terms = seq.terms(horizon)
    q = quartile_start(horizon)
    residuals = [cond_exp(indicator(a - s), p) for s, p in zip(witness.sets, terms)]
    tails = tail_statistics(residuals, [q], grid_cap=grid_cap)
    exceed = tails.measure_at_least(q, Fraction(eps))
    uniform = check_uniform_cover(witness, a, eps)
    return {
        "quartile_start": q,
        "pointwise_exceedance": exceed,
        "pointwise_condition": exceed == 0,
        "relaxed_passed": uniform["tail_sets_condition"] and exceed == 0,
        "uniform_passed": uniform["passed"],
    }


def fset_horizon_diagnostic(
    seq: AlgebraSeq,
    a: DSet,
    horizon: int,
    r_grid: Sequence[Fraction],
    level: Fraction = Fraction(1, 2),
) -> dict[str, Any]:
    """
    For each r, the least N < H with μ(⋃_{N<n<=H}(A_n △ A)) < r, for the best-approximation
    selection and the super-level selection at *level*; None when no N qualifies.
    """
    terms = seq.terms(horizon)
    selections = {
        "best_approx": [best_approx(a, p) for p in terms],
        "super_level": list(uniform_cover_witness(seq, a, level, horizon, terms).sets),
    }
    out: dict[str, Any] = {}
    for name, sets in selections.items():
        profile = tail_symdiff_profile(sets, a, horizon)
        first = {}
        for r in r_grid:
            r = Fraction(r)
            first[r] = next((n for n, v in profile.items() if v < r), None)
        out[name] = {"profile": profile, "first_index": first}
    return out


def ae_cover_crosscheck(
    seq: AlgebraSeq,
    a: DSet,
    r: Fraction,
    horizon: int,
    eps: Fraction,
    grid_cap: int = GRID_CAP,
    workers: int | None = 1,
    strict: bool = False,
) -> dict[str, Any]:
    """
    a.e. convergence of ℰ(χ_A|𝔄_n) versus covering of A and A^c, both at horizon.

    consistent is True when ae_pass equals (both witnesses pass). The record is returned
    either way; with strict=True an inconsistent pair raises InvariantViolation.
    """
    chi = indicator(a)
    report = ae_report(seq, chi, chi, horizon, [eps], grid_cap=grid_cap, workers=workers)
    membership = mu_ae_membership(seq, a, r, horizon, eps)
    ae_pass = report.verdicts["ae_pass"]
    consistent = ae_pass == membership["member"]
    if strict:
        ensure(consistent, f"a.e. verdict {ae_pass} disagrees with covering verdict {membership['member']} at H = {horizon}")
    return {
        "ae_pass": ae_pass,
        "persistent_exceedance": report.verdicts["persistent_exceedance"][Fraction(eps)],
        "cover_pass": membership["check"]["passed"],
        "complement_cover_pass": membership["complement_check"]["passed"],
        "consistent": consistent,
        "report": report,
        "membership": membership,
    }


# -----------------------------------------------------------------------------
# C_N elements and pairing witnesses
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class CNElement:
    """h = Σ_k ℰ(χ_{B_k}|𝔄_k) over disjoint B_k with N <= k < M."""

    window: tuple[int, int]
    parts: tuple[tuple[int, DSet], ...]
    h: Step
    l1: Fraction
    l2sq: Fraction


def cn_element(
    seq: AlgebraSeq,
    window: tuple[int, int],
    parts: Sequence[tuple[int, DSet]],
    terms: dict[int, Partition] | None = None,
) -> CNElement:
    """Build h and check ‖h‖_1 = μ(⋃ B_k) <= 1 exactly."""
    n_lo, m_hi = window
    require(0 <= n_lo < m_hi, f"window must satisfy 0 <= N < M, got {window}")
    covered = EMPTY
    h = constant(0)
    for k, b in parts:
        require(n_lo <= k < m_hi, f"part index {k} outside window [{n_lo}, {m_hi})")
        require((covered & b).is_empty(), f"part at index {k} overlaps an earlier part")
        covered = covered | b
        if b.is_empty():
            continue
        p = terms[k] if terms is not None and k in terms else seq.term(k)
        h = add(h, cond_exp(indicator(b), p))
    l1 = integrate(absolute(h))
    ensure(l1 == covered.measure(), f"‖h‖_1 = {l1} differs from μ(⋃B_k) = {covered.measure()}")
    ensure(l1 <= 1, f"‖h‖_1 = {l1} exceeds 1")
    return CNElement(window=(n_lo, m_hi), parts=tuple(parts), h=h, l1=l1, l2sq=norm(h, 2))


def _level_set(g: Step, eps: Fraction, sign: str) -> DSet:
    if sign == "abs":
        keep = [abs(v) > eps for v in g.values]
    elif sign == "pos":
        keep = [v > eps for v in g.values]
    else:
        keep = [v < -eps for v in g.values]
    return union_all(atom for atom, k in zip(g.carrier.atoms, keep) if k)


def wperp_witness(
    seq: AlgebraSeq,
    f: Step,
    eps: Fraction,
    start: int,
    end: int,
    sign: str = "abs",
    expectations: Sequence[Step] | None = None,
) -> tuple[CNElement, Fraction]:
    """
    Pairing witness over the window [start, end): A_k = {|ℰ(f|𝔄_k)| > eps},
    B_start = A_start, B_k = A_k ∖ ⋃_{j<k} B_j. Returns the C_N element and ⟨h, f⟩.

    ⟨h, f⟩ = Σ_k ⟨χ_{B_k}, ℰ(f|𝔄_k)⟩ is verified exactly. With sign "pos" ("neg") the
    sets are {ℰ > eps} ({ℰ < −eps}) and ⟨h, ±f⟩ > eps·μ(⋃B_k) is verified too.
    """
    eps = Fraction(eps)
    require(eps > 0, "eps must be positive")
    require(sign in ("abs", "pos", "neg"), f"sign must be abs, pos or neg, got {sign!r}")
    require(0 <= start < end, f"window must satisfy 0 <= N < M, got ({start}, {end})")
    covered = EMPTY
    parts: list[tuple[int, DSet]] = []
    pieces = ZERO
    terms: dict[int, Partition] = {}
    for k in range(start, end):
        g = expectations[k] if expectations is not None else cond_exp(f, seq.term(k))
        terms[k] = g.carrier
        b = _level_set(g, eps, sign) - covered
        if b.is_empty():
            continue
        parts.append((k, b))
        pieces += inner(indicator(b), g)
        covered = covered | b
        if covered == FULL:
            break
    element = cn_element(seq, (start, end), parts, terms)
    pairing = inner(element.h, f)
    ensure(pairing == pieces, f"⟨h, f⟩ = {pairing} differs from Σ⟨χ_B, ℰ(f)⟩ = {pieces}")
    if sign != "abs" and element.l1 > 0:
        signed = pairing if sign == "pos" else -pairing
        ensure(signed > eps * element.l1, f"signed pairing {signed} not above eps·μ(⋃B_k)")
    return element, pairing


def pairing_profile(
    seq: AlgebraSeq,
    f: Step,
    eps: Fraction,
    horizon: int,
    starts: Sequence[int] | None = None,
    sign: str = "abs",
    workers: int | None = 1,
) -> dict[str, Any]:
    """⟨h_N, f⟩ for windows [N, H) at each start N < H, with the trend of the values."""
    seq.check_horizon(horizon)
    if starts is None:
        starts = [n for n in default_window_starts(seq, horizon) if n < horizon]
    require(len(starts) > 0, "pairing_profile needs at least one window start")
    expectations = conditional_expectations(seq, f, horizon, workers=workers)
    pairings: dict[int, Fraction] = {}
    covers: dict[int, Fraction] = {}
    for n in starts:
        if not 0 <= n < horizon:
            raise ValidationError(f"window start {n} outside 0..{horizon - 1}")
        element, pairing = wperp_witness(seq, f, eps, n, horizon, sign=sign, expectations=expectations)
        pairings[n] = pairing
        covers[n] = element.l1
    values = list(pairings.values())
    return {"pairing": pairings, "covered": covers, "trend": trend(values), "min": min(values), "max": max(values)}
