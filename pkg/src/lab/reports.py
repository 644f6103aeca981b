"""
Scenario analyses and their output files.

Workflow position: Called by `sigma_lab.py analyze` (run_analyses + write_outputs) and by the
demos (write_outputs). Library code: no printing; progress goes through a callback.

Outputs (per run directory):
  <analysis>.json       exact report (Rat values as "p/q" strings), one per analysis
  <analysis>_<table>.csv  decimal view of the per-index tables (15 significant digits)
  summary.md            one section per analysis with the headline verdicts

Analyses: ae, l1, boylan, cover, liminf_limsup, mu_approach, wperp, mu_ae, fset.
Set-level analyses (cover, mu_approach, mu_ae, fset) need the scenario function to be an
indicator χ_A.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from src.utils.cond_expect import Step, best_approx
from src.utils.serialize import write_csv, write_json
from src.utils.sigma_algebras import AlgebraSeq, liminf_limsup_table
from src.utils.validate import ValidationError, require

from .convergence import (
    GRID_CAP,
    ae_report,
    conditional_expectations,
    distance_series,
    limsup_bound_check,
    quartile_start,
    trend,
)
from .scenario import ScenarioSpec
from .sequence_lab import (
    BOYLAN_ATOM_CAP,
    ae_cover_crosscheck,
    boylan_distance,
    check_uniform_cover,
    fset_horizon_diagnostic,
    monotone_cover_shortcut,
    mu_ae_membership,
    mu_approach_profile,
    pairing_profile,
    relaxed_cover_check,
    tail_limit_crosscheck,
    uniform_cover_witness,
)

# -----------------------------------------------------------------------------
# Config
# -----------------------------------------------------------------------------

FORMATS = ("json", "csv")
SUMMARY_FILE = "summary.md"
DEFAULT_R_GRID = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16))


@dataclass
class AnalysisResult:
    """One analysis: its JSON report, named CSV tables and summary lines."""

    name: str
    report: dict[str, Any]
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)


@dataclass
class _Context:
    spec: ScenarioSpec
    seq: AlgebraSeq
    workers: int | None
    grid_cap: int
    progress: Callable[[str], None]
    _expectations: list[Step] | None = None

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    def expectations(self) -> list[Step]:
        if self._expectations is None:
            self.progress(f"conditional expectations for n = 0..{self.horizon}")
            self._expectations = conditional_expectations(self.seq, self.spec.function, self.horizon, workers=self.workers)
        return self._expectations

    def indicator_set(self, analysis: str):
        if self.spec.indicator_set is None:
            raise ValidationError(f"analysis {analysis!r} needs the function to be an indicator")
        return self.spec.indicator_set

    def header(self, analysis: str) -> dict[str, Any]:
        return {
            "analysis": analysis,
            "scenario": self.spec.name,
            "sequence": self.seq.name,
            "horizon": self.horizon,
        }


def _pieces(pieces: Sequence[tuple[Fraction, Fraction, Fraction]]) -> list[list[Fraction]]:
    return [[a, b, v] for a, b, v in pieces]


# -----------------------------------------------------------------------------
# Analyses
# -----------------------------------------------------------------------------

def _analysis_ae(ctx: _Context) -> AnalysisResult:
    spec = ctx.spec
    report = ae_report(
        ctx.seq,
        spec.function,
        spec.target,
        ctx.horizon,
        spec.epsilons,
        grid_cap=ctx.grid_cap,
        expectations=ctx.expectations(),
        progress=ctx.progress,
    )
    q = report.verdicts["quartile_start"]
    out = ctx.header("ae")
    out.update({
        "eps_grid": report.eps_grid,
        "tol": report.tol,
        "verdicts": report.verdicts,
        "window_starts": report.window_starts,
        "exceedance": [
            {"window_start": n, "eps": eps, "measure": report.exceedance[(n, eps)]}
            for n in report.window_starts
            for eps in report.eps_grid
        ],
        "tail_sup_at_quartile": _pieces(report.tail_sup_pieces(q)),
        "window_max_at_quartile": _pieces(report.limsup_pieces(q)),
        "window_min_at_quartile": _pieces(report.liminf_pieces(q)),
        "distances": report.distances,
    })
    if spec.indicator_set is not None and spec.target == spec.function:
        ctx.progress("tail limsup bound from the super-level witness")
        witness = uniform_cover_witness(ctx.seq, spec.indicator_set, spec.cover_r, ctx.horizon)
        out["limsup_bound"] = limsup_bound_check(report, witness)

    worst = {eps: report.verdicts["persistent_exceedance"][eps] for eps in report.eps_grid}
    summary = [
        f"- a.e. verdict at N_q = {q}: **{'pass' if report.verdicts['ae_pass'] else 'fail'}**",
        *(f"  - μ{{tail_sup ≥ {eps}}} = {m}" for eps, m in worst.items()),
    ]
    tables = {
        "exceedance": out["exceedance"],
        "distances": [
            {"index": n, "l1": report.distances["l1"][n], "l2sq": report.distances["l2sq"][n], "sup": report.distances["sup"][n]}
            for n in range(ctx.horizon + 1)
        ],
    }
    return AnalysisResult("ae", out, tables, summary)


def _analysis_l1(ctx: _Context) -> AnalysisResult:
    distances = distance_series(ctx.expectations(), ctx.spec.target)
    l1 = distances["l1"]
    h = ctx.horizon
    q = quartile_start(h)
    tol = min(ctx.spec.epsilons)
    bounds = [0, h // 4, h // 2, q, h + 1]
    quartile_max = [max(l1[a:b]) for a, b in zip(bounds, bounds[1:]) if a < b]
    verdicts = {
        "quartile_start": q,
        "tol": tol,
        "l1_last_quartile_max": max(l1[q:]),
        "l1_pass": max(l1[q:]) <= tol,
        "l1_quartile_max": quartile_max,
        "l1_trend": trend(quartile_max),
    }
    out = ctx.header("l1")
    out.update({"verdicts": verdicts, "distances": distances})
    summary = [
        f"- last-quartile max ‖g_n − f‖_1 = {verdicts['l1_last_quartile_max']} (tol {tol}): "
        f"**{'pass' if verdicts['l1_pass'] else 'fail'}**, quartile trend {verdicts['l1_trend']}",
    ]
    rows = [{"index": n, "l1": l1[n], "l2sq": distances["l2sq"][n], "sup": distances["sup"][n]} for n in range(h + 1)]
    return AnalysisResult("l1", out, {"distances": rows}, summary)


def _analysis_boylan(ctx: _Context) -> AnalysisResult:
    h = ctx.horizon
    pairs = list(ctx.spec.boylan_pairs) or [(quartile_start(h), h)]
    for i, j in pairs:
        require(0 <= i <= h and 0 <= j <= h, f"boylan pair ({i}, {j}) outside 0..{h}")
    cap = ctx.spec.caps.get("boylan_atom_cap", BOYLAN_ATOM_CAP)
    rows = []
    for i, j in pairs:
        ctx.progress(f"Boylan distance d(𝔄_{i}, 𝔄_{j})")
        rows.append({"i": i, "j": j, "distance": boylan_distance(ctx.seq.term(i), ctx.seq.term(j), cap)})
    out = ctx.header("boylan")
    out["pairs"] = rows
    summary = [f"- d(𝔄_{r['i']}, 𝔄_{r['j']}) = {r['distance']}" for r in rows]
    return AnalysisResult("boylan", out, {"pairs": rows}, summary)


def _analysis_cover(ctx: _Context) -> AnalysisResult:
    a = ctx.indicator_set("cover")
    spec = ctx.spec
    h = ctx.horizon
    witness = uniform_cover_witness(ctx.seq, a, spec.cover_r, h)
    checks = [check_uniform_cover(witness, a, eps) for eps in spec.epsilons]
    relaxed = relaxed_cover_check(ctx.seq, a, witness, h, min(spec.epsilons), grid_cap=ctx.grid_cap)
    shortcut = monotone_cover_shortcut(ctx.seq, a, h)
    out = ctx.header("cover")
    out.update({
        "r": spec.cover_r,
        "bound_kind": witness.bound_kind,
        "checks": checks,
        "relaxed": relaxed,
        "monotone_shortcut": None if shortcut is None else check_uniform_cover(shortcut, a, min(spec.epsilons)),
        "sets": list(witness.sets),
    })
    rows = [
        {
            "index": n,
            "set_measure": witness.sets[n].measure(),
            "seminorm": witness.seminorms[n],
            "seminorm_below_r": witness.bounds[n],
            "tail_symdiff": witness.tail_symdiff.get(n),
        }
        for n in range(h + 1)
    ]
    summary = [
        f"- super-level witness at r = {spec.cover_r}, eps = {c['eps']}: tail sets "
        f"{'ok' if c['tail_sets_condition'] else 'fail'} (max {c['max_tail_symdiff']}), seminorm "
        f"{'ok' if c['seminorm_condition'] else 'fail'} (max {c['max_seminorm']})"
        for c in checks
    ]
    summary.append(f"- relaxed (pointwise) check: **{'pass' if relaxed['relaxed_passed'] else 'fail'}**")
    return AnalysisResult("cover", out, {"witness": rows}, summary)


def _analysis_liminf_limsup(ctx: _Context) -> AnalysisResult:
    table = liminf_limsup_table(ctx.seq, ctx.horizon, ctx.spec.min_tail)
    out = ctx.header("liminf_limsup")
    out.update({
        "min_tail": table["min_tail"],
        "liminf": table["liminf"],
        "limsup": table["limsup"],
        "rows": [
            {"m": r["m"], "tail_meet_atoms": len(r["tail_meet"]), "tail_join_atoms": len(r["tail_join"])}
            for r in table["rows"]
        ],
    })
    summary = [
        f"- liminf: {len(table['liminf'])} atoms, limsup: {len(table['limsup'])} atoms "
        f"(windows with at least {table['min_tail']} terms)",
    ]
    return AnalysisResult("liminf_limsup", out, {"tail": out["rows"]}, summary)


def _analysis_mu_approach(ctx: _Context) -> AnalysisResult:
    a = ctx.indicator_set("mu_approach")
    h = ctx.horizon
    profile = mu_approach_profile(ctx.seq, a, h)
    selection = [best_approx(a, p) for p in ctx.seq.terms(h)]
    check = tail_limit_crosscheck(selection, a, h, min_tail=min(2, h))
    q = quartile_start(h)
    out = ctx.header("mu_approach")
    out.update({
        "profile": profile,
        "trend": trend(profile[q:]),
        "last_quartile_max": max(profile[q:]),
        "best_approx_tail": {k: v for k, v in check.items() if k != "profile"},
        "best_approx_tail_profile": check["profile"],
    })
    summary = [
        f"- last-quartile max μ(A △ best_approx) = {out['last_quartile_max']}",
        f"- best-approximation selection: tail profile at N_q = {check['profile_at_quartile']}, "
        f"limit sets agree: {check['limits_agree']}",
    ]
    rows = [{"index": n, "mu_symdiff": v} for n, v in enumerate(profile)]
    return AnalysisResult("mu_approach", out, {"profile": rows}, summary)


def _analysis_wperp(ctx: _Context) -> AnalysisResult:
    spec = ctx.spec
    ctx.progress(f"pairing witnesses at eps = {spec.wperp_eps}")
    profile = pairing_profile(ctx.seq, spec.function, spec.wperp_eps, ctx.horizon, sign=spec.wperp_sign, workers=ctx.workers)
    out = ctx.header("wperp")
    out.update({"eps": spec.wperp_eps, "sign": spec.wperp_sign, **profile})
    rows = [{"window_start": n, "pairing": v, "covered": profile["covered"][n]} for n, v in profile["pairing"].items()]
    summary = [f"- pairing ⟨h_N, f⟩ over windows [N, H): min {profile['min']}, max {profile['max']}, trend {profile['trend']}"]
    return AnalysisResult("wperp", out, {"pairing": rows}, summary)


def _analysis_mu_ae(ctx: _Context) -> AnalysisResult:
    a = ctx.indicator_set("mu_ae")
    spec = ctx.spec
    eps = min(spec.epsilons)
    membership = mu_ae_membership(ctx.seq, a, spec.cover_r, ctx.horizon, eps)
    cross = ae_cover_crosscheck(ctx.seq, a, spec.cover_r, ctx.horizon, eps, grid_cap=ctx.grid_cap, workers=ctx.workers)
    out = ctx.header("mu_ae")
    out.update({
        "r": spec.cover_r,
        "eps": eps,
        "check": membership["check"],
        "complement_check": membership["complement_check"],
        "complement_union": membership["complement_union"],
        "member": membership["member"],
        "crosscheck": {k: v for k, v in cross.items() if k not in ("report", "membership")},
    })
    summary = [
        f"- A and A^c covered: **{'yes' if membership['member'] else 'no'}**; "
        f"a.e. convergence of ℰ(χ_A|𝔄_n): {'pass' if cross['ae_pass'] else 'fail'}; "
        f"consistent: {cross['consistent']}",
    ]
    return AnalysisResult("mu_ae", out, {}, summary)


def _analysis_fset(ctx: _Context) -> AnalysisResult:
    a = ctx.indicator_set("fset")
    r_grid = ctx.spec.r_grid or DEFAULT_R_GRID
    diag = fset_horizon_diagnostic(ctx.seq, a, ctx.horizon, r_grid, level=ctx.spec.cover_r)
    out = ctx.header("fset")
    out.update({"r_grid": list(r_grid), "selections": diag})
    rows = [
        {"selection": name, "r": r, "first_index": first}
        for name, body in diag.items()
        for r, first in body["first_index"].items()
    ]
    summary = [
        f"- {name}: " + ", ".join(f"r={r} → N={first}" for r, first in body["first_index"].items())
        for name, body in diag.items()
    ]
    return AnalysisResult("fset", out, {"first_index": rows}, summary)


ANALYSIS_RUNNERS: dict[str, Callable[[_Context], AnalysisResult]] = {
    "ae": _analysis_ae,
    "l1": _analysis_l1,
    "boylan": _analysis_boylan,
    "cover": _analysis_cover,
    "liminf_limsup": _analysis_liminf_limsup,
    "mu_approach": _analysis_mu_approach,
    "wperp": _analysis_wperp,
    "mu_ae": _analysis_mu_ae,
    "fset": _analysis_fset,
}


def run_analyses(
    spec: ScenarioSpec,
    seq: AlgebraSeq,
    workers: int | None = 1,
    progress: Callable[[str], None] | None = None,
) -> list[AnalysisResult]:
    """Run the scenario's analyses in file order; conditional expectations are shared."""
    ctx = _Context(
        spec=spec,
        seq=seq,
        workers=workers,
        grid_cap=spec.caps.get("grid_cap", GRID_CAP),
        progress=progress or (lambda _msg: None),
    )
    results = []
    for name in spec.analyses:
        ctx.progress(f"analysis {name}")
        results.append(ANALYSIS_RUNNERS[name](ctx))
    return results


# -----------------------------------------------------------------------------
# Writers
# -----------------------------------------------------------------------------

def summary_markdown(title: str, results: Sequence[AnalysisResult], preamble: Sequence[str] = ()) -> str:
    lines = [f"# {title}", ""]
    if preamble:
        lines.extend([*preamble, ""])
    for r in results:
        lines.extend([f"## {r.name}", "", *r.summary, ""])
    return "\n".join(lines)


def write_outputs(
    results: Sequence[AnalysisResult],
    out_dir: str,
    formats: Sequence[str] = ("json",),
    title: str = "Analysis summary",
    preamble: Sequence[str] = (),
) -> list[str]:
    """Write JSON / CSV files and summary.md; returns the written paths in order."""
    for fmt in formats:
        require(fmt in FORMATS, f"unknown format {fmt!r}; expected one of {FORMATS}")
    require(len(formats) > 0, "at least one output format is required")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for r in results:
        if "json" in formats:
            path = os.path.join(out_dir, f"{r.name}.json")
            write_json(path, r.report)
            written.append(path)
        if "csv" in formats:
            for table, rows in r.tables.items():
                path = os.path.join(out_dir, f"{r.name}_{table}.csv")
                write_csv(path, rows)
                written.append(path)
    path = os.path.join(out_dir, SUMMARY_FILE)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(summary_markdown(title, results, preamble))
    written.append(path)
    return written
