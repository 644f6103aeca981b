"""
Per-index conditional expectations and exact pointwise tail statistics.

Workflow position: Library module. Used by sequence_lab (ae_cover_crosscheck,
relaxed_cover_check), reports (ae / l1 analyses) and the CLI demos.

Prerequisites: an AlgebraSeq (gallery or scenario) and Step functions.

Provides:
  conditional_expectations   ℰ(f|𝔄_n) for n = 0..H, optionally on a process pool
  distance_series            exact L1 / squared-L2 / sup distances to a target
  tail_statistics            pointwise sup_{N<=n<=H} of per-index Steps on a dyadic grid
  ae_report                  ConvergenceReport: distances, tail sups, exceedance, verdicts
  limsup_bound_check         pointwise tail-limsup bound from a covering witness
  default_window_starts, quartile_start, trend

Grid engine: every breakpoint up to H is mapped to an integer coordinate at the finest
dyadic level L; the elementary cells between consecutive breakpoints refine the join of
all carriers. Exact Fraction values are replaced by their rank in the sorted table of
distinct values, so running max/min over the tail is integer numpy work while every
reported value and measure stays exact. GRID_CAP bounds the number of cells.
"""

from __future__ import annotations

import os
from bisect import bisect_left
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from src.utils.cond_expect import Step, absolute, cond_exp, subtract
from src.utils.dyadic_sets import ZERO, DSet, union_all
from src.utils.sigma_algebras import AlgebraSeq, partition_from_atoms
from src.utils.validate import ValidationError, check_cap, ensure, require

# -----------------------------------------------------------------------------
# Config
# -----------------------------------------------------------------------------

GRID_CAP = 2**20  # elementary grid cells
FULL_WINDOW_LIMIT = 512  # every index is a window start up to this horizon
SAMPLED_WINDOWS = 128
MAX_WORKERS = 1  # None = CPU count - 1
INT64_LEVEL_LIMIT = 62


def quartile_start(horizon: int) -> int:
    """First index of the last quartile 0..H."""
    return (3 * horizon) // 4


def default_window_starts(seq: AlgebraSeq, horizon: int) -> list[int]:
    """Every index for small horizons, else block starts or evenly spaced starts, plus the quartile start."""
    if horizon <= FULL_WINDOW_LIMIT:
        return list(range(horizon + 1))
    if seq.block_starts is not None:
        starts = set(seq.block_starts(horizon))
    else:
        starts = {(i * horizon) // SAMPLED_WINDOWS for i in range(SAMPLED_WINDOWS)}
    starts.add(quartile_start(horizon))
    return sorted(s for s in starts if 0 <= s <= horizon)


def trend(values: Sequence[Fraction]) -> str:
    """"constant", "non-increasing", "non-decreasing" or "mixed"."""
    pairs = list(zip(values, values[1:]))
    if all(a == b for a, b in pairs):
        return "constant"
    if all(a >= b for a, b in pairs):
        return "non-increasing"
    if all(a <= b for a, b in pairs):
        return "non-decreasing"
    return "mixed"


# -----------------------------------------------------------------------------
# Per-index evaluation (optionally parallel)
# -----------------------------------------------------------------------------

def _split_indices(count: int, n_parts: int) -> list[range]:
    """Split 0..count-1 into n_parts contiguous ranges (order preserved)."""
    if n_parts <= 1 or count <= n_parts:
        return [range(count)]
    k = (count + n_parts - 1) // n_parts
    return [range(i * k, min((i + 1) * k, count)) for i in range(n_parts) if i * k < count]


def _evaluate_chunk(seq: AlgebraSeq, f: Step, indices: range) -> list[Step]:
    """Worker: ℰ(f|𝔄_n) for a contiguous index range. Must be top-level for pickling."""
    return [cond_exp(f, seq.term(n)) for n in indices]


def conditional_expectations(
    seq: AlgebraSeq,
    f: Step,
    horizon: int,
    workers: int | None = MAX_WORKERS,
) -> list[Step]:
    """
    g_n = ℰ(f|𝔄_n) for n = 0..H. Each g_n is carried on 𝔄_n itself.

    With workers > 1 the index range is split into contiguous chunks evaluated on one
    ProcessPoolExecutor; results are merged in index order.
    """
    seq.check_horizon(horizon)
    n_workers = workers if workers is not None else max(1, (os.cpu_count() or 2) - 1)
    parts = _split_indices(horizon + 1, n_workers)
    if len(parts) == 1:
        return _evaluate_chunk(seq, f, parts[0])
    pool = ProcessPoolExecutor(max_workers=n_workers)
    try:
        futures = [pool.submit(_evaluate_chunk, seq, f, part) for part in parts]
        results = [fut.result() for fut in futures]
    finally:
        pool.shutdown(wait=False)
    return [g for chunk in results for g in chunk]


def _distances(diffs: Sequence[Step]) -> dict[str, list[Fraction]]:
    out: dict[str, list[Fraction]] = {"l1": [], "l2sq": [], "sup": []}
    for d in diffs:
        measures = d.carrier.measures()
        out["l1"].append(sum((v * m for v, m in zip(d.values, measures)), ZERO))
        out["l2sq"].append(sum((v * v * m for v, m in zip(d.values, measures)), ZERO))
        out["sup"].append(max(d.values))
    return out


def distance_series(steps: Sequence[Step], target: Step) -> dict[str, list[Fraction]]:
    """Exact ‖g_n − target‖ for p = 1, squared 2 and ∞, per index."""
    return _distances([absolute(subtract(g, target)) for g in steps])


# -----------------------------------------------------------------------------
# Grid engine
# -----------------------------------------------------------------------------

def _level(x: Fraction) -> int:
    return x.denominator.bit_length() - 1


@dataclass
class TailStatistics:
    """Running tail extrema of per-index Steps, snapshotted at window starts."""

    level: int
    cuts: list[int]  # integer grid coordinates, cell i = [cuts[i], cuts[i+1]) / 2^level
    widths: np.ndarray
    table: list[Fraction]  # rank -> exact value
    window_starts: list[int]
    sup_ranks: dict[int, np.ndarray]
    max_ranks: dict[int, np.ndarray] = field(default_factory=dict)
    min_ranks: dict[int, np.ndarray] = field(default_factory=dict)
    # eps -> {N: μ{sup_{N<=n<=H} d_n >= eps}} for every N from the first window start to H
    exceedance_profile: dict[Fraction, dict[int, Fraction]] = field(default_factory=dict)

    @property
    def cell_count(self) -> int:
        return len(self.cuts) - 1

    def _coord_index(self) -> dict[int, int]:
        return {c: i for i, c in enumerate(self.cuts)}

    def _measure(self, mask: np.ndarray) -> Fraction:
        return Fraction(int(self.widths[mask].sum()), 1 << self.level)

    def measure_at_least(self, start: int, eps: Fraction) -> Fraction:
        """μ{x : sup_{N<=n<=H} d_n(x) >= eps} for the window starting at N = start."""
        threshold = bisect_left(self.table, eps)
        return self._measure(self.sup_ranks[start] >= threshold)

    def cell_mask(self, a: DSet) -> np.ndarray:
        """Boolean mask of the cells inside a; a's breakpoints must lie on the grid."""
        index = self._coord_index()
        mask = np.zeros(self.cell_count, dtype=bool)
        for lo, hi in a.intervals:
            try:
                i = index[lo.numerator << (self.level - _level(lo))]
                j = index[hi.numerator << (self.level - _level(hi))]
            except (KeyError, ValueError) as e:
                raise ValidationError(f"set {a!r} is not resolved by the grid") from e
            mask[i:j] = True
        return mask

    def values(self, ranks: np.ndarray) -> list[Fraction]:
        return [self.table[r] for r in ranks.tolist()]

    def pieces(self, ranks: np.ndarray) -> list[tuple[Fraction, Fraction, Fraction]]:
        """(a, b, value) display pieces with adjacent equal values merged."""
        out: list[list[Any]] = []
        scale = 1 << self.level
        for i, r in enumerate(ranks.tolist()):
            if out and out[-1][2] == r:
                out[-1][1] = self.cuts[i + 1]
            else:
                out.append([self.cuts[i], self.cuts[i + 1], r])
        return [(Fraction(a, scale), Fraction(b, scale), self.table[r]) for a, b, r in out]

    def step(self, ranks: np.ndarray) -> Step:
        """The statistic as a Step on the grid partition (one atom per cell)."""
        scale = 1 << self.level
        atoms = [DSet(((Fraction(a, scale), Fraction(b, scale)),)) for a, b in zip(self.cuts, self.cuts[1:])]
        return Step(partition_from_atoms(atoms), tuple(self.values(ranks)))


def tail_statistics(
    diffs: Sequence[Step],
    window_starts: Sequence[int],
    values: Sequence[Step] | None = None,
    grid_cap: int = GRID_CAP,
    extra_points: Sequence[Fraction] = (),
    profile_eps: Sequence[Fraction] = (),
) -> TailStatistics:
    """
    Pointwise sup_{N<=n<=H} diffs[n] (and max/min of values[n]) for every N in window_starts.

    For each eps in profile_eps the exceedance μ{sup >= eps} is also recorded at every index
    from the first window start to H, without snapshotting the grid there.

    Raises CapExceededError when the grid needs more than grid_cap cells.
    """
    horizon = len(diffs) - 1
    require(horizon >= 0, "tail statistics need at least one index")
    require(values is None or len(values) == len(diffs), "values and diffs must cover the same indices")
    starts = sorted(set(window_starts))
    require(all(0 <= s <= horizon for s in starts), f"window starts must lie in 0..{horizon}")

    all_steps = list(diffs) + list(values or [])
    points: set[Fraction] = set(extra_points)
    carriers = {id(s.carrier): s.carrier for s in all_steps}
    for carrier in carriers.values():
        points.update(carrier.points)
    level = max(_level(x) for x in points)
    cuts = sorted({x.numerator << (level - _level(x)) for x in points})
    check_cap(len(cuts) - 1, grid_cap, "grid cells")
    dtype = np.int64 if level <= INT64_LEVEL_LIMIT else object
    widths = np.diff(np.array(cuts, dtype=dtype))
    index = {c: i for i, c in enumerate(cuts)}

    table = sorted({v for s in all_steps for v in s.values})
    rank = {v: i for i, v in enumerate(table)}

    slices: dict[int, list[tuple[int, int, int]]] = {}

    def _slices(step: Step) -> list[tuple[int, int, int]]:
        key = id(step)
        if key not in slices:
            out = []
            for atom, v in step.pieces():
                r = rank[v]
                for lo, hi in atom.intervals:
                    out.append((index[lo.numerator << (level - _level(lo))], index[hi.numerator << (level - _level(hi))], r))
            slices[key] = out
        return slices[key]

    n_cells = len(cuts) - 1
    running_sup = np.full(n_cells, -1, dtype=np.int32)
    running_max = np.full(n_cells, -1, dtype=np.int32)
    running_min = np.full(n_cells, len(table), dtype=np.int32)
    sup_ranks: dict[int, np.ndarray] = {}
    max_ranks: dict[int, np.ndarray] = {}
    min_ranks: dict[int, np.ndarray] = {}
    thresholds = {Fraction(e): bisect_left(table, Fraction(e)) for e in profile_eps}
    above = dict.fromkeys(thresholds, 0)  # numerators over 2^level
    profile: dict[Fraction, dict[int, Fraction]] = {e: {} for e in thresholds}
    wanted = set(starts)
    for n in range(horizon, starts[0] - 1 if starts else -1, -1):
        for i, j, r in _slices(diffs[n]):
            for e, t in thresholds.items():
                if r >= t:
                    above[e] += int(widths[i:j][running_sup[i:j] < t].sum())
            np.maximum(running_sup[i:j], r, out=running_sup[i:j])
        if values is not None:
            for i, j, r in _slices(values[n]):
                np.maximum(running_max[i:j], r, out=running_max[i:j])
                np.minimum(running_min[i:j], r, out=running_min[i:j])
        slices.pop(id(diffs[n]), None)
        for e in thresholds:
            profile[e][n] = Fraction(above[e], 1 << level)
        if n in wanted:
            sup_ranks[n] = running_sup.copy()
            if values is not None:
                max_ranks[n] = running_max.copy()
                min_ranks[n] = running_min.copy()

    return TailStatistics(
        level=level,
        cuts=cuts,
        widths=widths,
        table=table,
        window_starts=starts,
        sup_ranks=sup_ranks,
        max_ranks=max_ranks,
        min_ranks=min_ranks,
        exceedance_profile=profile,
    )


# -----------------------------------------------------------------------------
# Convergence report
# -----------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    """Distances, pointwise tail statistics, exceedance measures and verdicts up to horizon H."""

    sequence: str
    horizon: int
    eps_grid: list[Fraction]
    tol: Fraction
    distances: dict[str, list[Fraction]]
    tails: TailStatistics
    exceedance: dict[tuple[int, Fraction], Fraction]
    verdicts: dict[str, Any]
    expectations: list[Step] = field(repr=False, default_factory=list)

    @property
    def window_starts(self) -> list[int]:
        return self.tails.window_starts

    def tail_sup(self, start: int) -> Step:
        return self.tails.step(self.tails.sup_ranks[start])

    def tail_sup_pieces(self, start: int) -> list[tuple[Fraction, Fraction, Fraction]]:
        return self.tails.pieces(self.tails.sup_ranks[start])

    def limsup_pieces(self, start: int) -> list[tuple[Fraction, Fraction, Fraction]]:
        """Pointwise max of g_n over the window [N, H]."""
        return self.tails.pieces(self.tails.max_ranks[start])

    def liminf_pieces(self, start: int) -> list[tuple[Fraction, Fraction, Fraction]]:
        """Pointwise min of g_n over the window [N, H]."""
        return self.tails.pieces(self.tails.min_ranks[start])


def ae_report(
    seq: AlgebraSeq,
    f: Step,
    target: Step,
    horizon: int,
    eps_grid: Sequence[Fraction],
    window_starts: Sequence[int] | None = None,
    grid_cap: int = GRID_CAP,
    workers: int | None = MAX_WORKERS,
    tol: Fraction | None = None,
    track_values: bool = True,
    profile_eps: Sequence[Fraction] = (),
    expectations: Sequence[Step] | None = None,
    progress: Callable[[str], None] | None = None,
) -> ConvergenceReport:
    """
    Compare g_n = ℰ(f|𝔄_n) with target over n = 0..H, exactly.

    Verdicts (at the last-quartile start N_q = quartile_start(H)):
      ae_pass[eps]   μ{sup_{N_q<=n<=H} |g_n − target| >= eps} == 0
      l1_pass        max_{n>=N_q} ‖g_n − target‖_1 <= tol (tol defaults to min(eps_grid))
      l1_trend       trend of the per-quartile L1 maxima
    """
    require(len(eps_grid) > 0, "eps_grid must not be empty")
    eps_grid = sorted(Fraction(e) for e in eps_grid)
    require(eps_grid[0] > 0, "epsilons must be positive")
    seq.check_horizon(horizon)
    tol = eps_grid[0] if tol is None else Fraction(tol)
    starts = list(window_starts) if window_starts is not None else default_window_starts(seq, horizon)
    q = quartile_start(horizon)
    if q not in starts:
        starts.append(q)

    if expectations is None:
        if progress:
            progress(f"conditional expectations for n = 0..{horizon}")
        expectations = conditional_expectations(seq, f, horizon, workers=workers)
    else:
        require(len(expectations) == horizon + 1, "expectations must cover 0..H")
        expectations = list(expectations)
    diffs = [absolute(subtract(g, target)) for g in expectations]

    if progress:
        progress("distance series")
    distances = _distances(diffs)

    if progress:
        progress(f"pointwise tail statistics over {len(set(starts))} window starts")
    tails = tail_statistics(
        diffs,
        starts,
        values=expectations if track_values else None,
        grid_cap=grid_cap,
        extra_points=target.carrier.points,
        profile_eps=profile_eps,
    )
    exceedance = {(n, eps): tails.measure_at_least(n, eps) for n in tails.window_starts for eps in eps_grid}

    for eps in eps_grid:
        column = [exceedance[(n, eps)] for n in tails.window_starts]
        ensure(trend(column) in ("constant", "non-increasing"), f"exceedance increased with N at eps={eps}")
    for n in tails.window_starts:
        row = [exceedance[(n, eps)] for eps in eps_grid]
        ensure(trend(row) in ("constant", "non-increasing"), f"exceedance increased with eps at N={n}")

    ae_by_eps = {eps: exceedance[(q, eps)] == 0 for eps in eps_grid}
    l1 = distances["l1"]
    tail_l1 = max(l1[q:])
    bounds = [0, horizon // 4, horizon // 2, q, horizon + 1]
    quartile_max = [max(l1[a:b]) for a, b in zip(bounds, bounds[1:]) if a < b]
    verdicts = {
        "quartile_start": q,
        "ae_pass_by_eps": ae_by_eps,
        "ae_pass": all(ae_by_eps.values()),
        "persistent_exceedance": {eps: exceedance[(q, eps)] for eps in eps_grid},
        "min_exceedance": {eps: min(exceedance[(n, eps)] for n in tails.window_starts) for eps in eps_grid},
        "l1_last_quartile_max": tail_l1,
        "l1_pass": tail_l1 <= tol,
        "l1_quartile_max": quartile_max,
        "l1_trend": trend(quartile_max),
    }
    return ConvergenceReport(
        sequence=seq.name,
        horizon=horizon,
        eps_grid=eps_grid,
        tol=tol,
        distances=distances,
        tails=tails,
        exceedance=exceedance,
        verdicts=verdicts,
        expectations=expectations,
    )


def limsup_bound_check(report: ConvergenceReport, witness: Any, start: int | None = None) -> dict[str, Any]:
    """
    Pointwise bound behind the covering characterisation, at horizon.

    With s = max_{n>=N} ‖χ_{A∖A_n}‖_{𝔄_n}, the window max of ℰ(χ_A|𝔄_n) can exceed
    χ_A + s only on ⋃_{n>=N}(A_n △ A). The report must be an ae_report of χ_A with
    values tracked; *witness* is a CoverWitness for A over the same horizon.
    """
    tails = report.tails
    n0 = report.verdicts["quartile_start"] if start is None else start
    require(n0 in tails.max_ranks, f"window start {n0} has no tracked values in this report")
    require(witness.horizon == report.horizon, "witness and report horizons differ")
    slack = max(witness.seminorms[n0:])
    in_a = tails.cell_mask(witness.target)
    window_max = tails.values(tails.max_ranks[n0])
    over = np.array(
        [v > (1 if inside else 0) + slack for v, inside in zip(window_max, in_a.tolist())],
        dtype=bool,
    )
    exceptional = tails._measure(over)
    bound = union_all(s ^ witness.target for s in witness.sets[n0:]).measure()
    ensure(exceptional <= bound, f"tail limsup exceeds χ_A + {slack} on measure {exceptional} > {bound}")
    return {"start": n0, "slack": slack, "exceptional_measure": exceptional, "symdiff_bound": bound, "passed": True}
