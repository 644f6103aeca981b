"""
CLI for the σ-subalgebra lab: run scenario analyses, Boylan distances and the built-in demos.

Subcommands:
  demo counterexample  Typewriter counterexample: L1 convergence without a.e. convergence.
  demo martingale      Increasing dyadic martingale: ℰ(f|D_n) = f from level L on.
  analyze              Run the analyses listed in a scenario file and write reports.
  boylan               Exact Boylan distance between two terms of a scenario's sequence.

Exit codes: 0 success, 1 usage / parse / validation, 2 internal invariant violation,
3 cap exceeded. Run from project root, e.g.:
  python3 src/sigma_lab.py demo counterexample --n-max 6 --out results/counterexample
  python3 src/sigma_lab.py analyze --scenario data/scenarios/martingale.json --out results/martingale --formats json,csv
  python3 src/sigma_lab.py boylan --scenario data/scenarios/counterexample.json --i 0 --j 1
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from fractions import Fraction

project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.append(project_root)

from src.lab.convergence import GRID_CAP, ae_report
from src.lab.gallery import (
    DEMO_N_MAX,
    MARTINGALE_MAX_LEVEL,
    a_n,
    b_nk,
    c_nk,
    counterexample_block_starts,
    counterexample_horizon,
    counterexample_sequence,
    dyadic_step,
    from_spec,
    martingale_sequence,
    unflatten,
)
from src.lab.reports import FORMATS, AnalysisResult, run_analyses, write_outputs
from src.lab.scenario import load_scenario
from src.lab.sequence_lab import BOYLAN_ATOM_CAP, boylan_distance, boylan_table
from src.utils.cond_expect import indicator, lp_dist
from src.utils.dyadic_sets import make_set
from src.utils.validate import (
    EXIT_OK,
    EXIT_USAGE,
    CapExceededError,
    LabError,
    ensure,
    require,
)

# -----------------------------------------------------------------------------
# Config
# -----------------------------------------------------------------------------

DEFAULT_OUT = os.path.join(project_root, 'results')
DEMO_EPS = Fraction(2, 3)
L1_BOUND_FACTOR = 4  # demo check: block L1 <= 4·2^-n
MARTINGALE_DEFAULT_LEVEL = 5
MARTINGALE_DEFAULT_N_MAX = 8
MARTINGALE_BOYLAN_LEVELS = 4  # D_4 has 16 atoms, under the Boylan atom cap


class _Parser(argparse.ArgumentParser):
    """argparse with the lab's usage exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"Error: {message}")
        sys.exit(EXIT_USAGE)


class _Progress:
    def __init__(self, quiet: bool = False, verbose: bool = False):
        self.quiet = quiet
        self.verbose = verbose

    def stage(self, message: str) -> None:
        if not self.quiet:
            print(message, flush=True)

    def detail(self, message: str) -> None:
        if not self.quiet:
            print(f"  {message}", flush=True)

    def debug(self, message: str) -> None:
        if self.verbose and not self.quiet:
            print(f"    {message}", flush=True)


def _summary_block(progress: _Progress, title: str, lines: list[str]) -> None:
    progress.stage("")
    progress.stage("=" * 60)
    progress.stage(title)
    progress.stage("=" * 60)
    for line in lines:
        progress.stage(line)


# -----------------------------------------------------------------------------
# demo counterexample
# -----------------------------------------------------------------------------

def demo_counterexample(args, progress: _Progress) -> int:
    n_max = args.n_max
    require(n_max >= 2, f"--n-max must be >= 2, got {n_max}")
    if n_max > DEMO_N_MAX:
        raise CapExceededError(f"--n-max {n_max} exceeds the demo cap {DEMO_N_MAX}")
    horizon = counterexample_horizon(n_max)
    seq = counterexample_sequence()
    a = make_set([("1/2", "1")])
    chi = indicator(a)
    block_starts = counterexample_block_starts(horizon)

    progress.stage(f"[1/3] Conditional expectations for {horizon + 1} indices (n = 2..{n_max})...")
    report = ae_report(
        seq,
        chi,
        chi,
        horizon,
        [DEMO_EPS],
        window_starts=block_starts,
        grid_cap=args.grid_cap,
        workers=args.workers,
        track_values=False,
        profile_eps=[DEMO_EPS],
        progress=progress.detail,
    )

    progress.stage("[2/3] Checking atom values against the closed form...")
    rows = []
    blocks: dict[int, dict] = {}
    for index, g in enumerate(report.expectations):
        n, k = unflatten(index)
        by_atom = dict(zip(g.carrier.atoms, g.values))
        values = (by_atom[a_n(n)], by_atom[b_nk(n, k)], by_atom[c_nk(n, k)])
        expected = (Fraction(1), Fraction(2, 3), Fraction(2, 1 + 2 ** (n + 1)))
        ensure(values == expected, f"ℰ(χ_A|𝔄_({n},{k})) = {values}, expected {expected}")
        l1 = report.distances["l1"][index]
        rows.append({"index": index, "n": n, "k": k, "on_A": values[0], "on_B": values[1], "on_C": values[2], "l1": l1})
        block = blocks.setdefault(n, {"n": n, "first_index": index, "values": list(values), "l1": set()})
        block["l1"].add(l1)
        progress.debug(f"({n},{k}) values {values} L1 {l1}")

    block_rows = []
    for n, block in blocks.items():
        ensure(len(block["l1"]) == 1, f"L1 distance varies within block n = {n}")
        l1 = block["l1"].pop()
        ensure(l1 <= Fraction(L1_BOUND_FACTOR, 2**n), f"block n = {n}: L1 {l1} above {L1_BOUND_FACTOR}·2^-{n}")
        block_rows.append({"n": n, "first_index": block["first_index"], "values": block["values"], "l1": l1})
    block_l1 = [b["l1"] for b in block_rows]
    l1_decreasing = all(x > y for x, y in zip(block_l1, block_l1[1:]))
    # every window up to the start of block n_max still contains a whole block
    profile = report.tails.exceedance_profile[DEMO_EPS]
    checked_through = block_starts[-1]
    exceed = [
        {"window_start": s, "block_start": s in block_starts, "measure": profile[s]}
        for s in range(horizon + 1)
    ]
    held = [profile[s] for s in range(checked_through + 1)]
    ae_fail = all(m >= Fraction(1, 2) for m in held)
    ensure(l1_decreasing, "block L1 series is not strictly decreasing")
    ensure(ae_fail, f"exceedance dropped below 1/2 at some window start N <= {checked_through}")

    progress.stage(f"[3/3] Writing reports to {args.out}...")
    out = {
        "demo": "counterexample",
        "n_max": n_max,
        "horizon": horizon,
        "eps": DEMO_EPS,
        "blocks": block_rows,
        "values": rows,
        "l1_series": report.distances["l1"],
        "exceedance": exceed,
        "verdicts": {
            "l1_trend": "pass" if l1_decreasing else "fail",
            "ae": "pass" if report.verdicts["ae_pass"] else "fail",
            "persistent_exceedance": report.verdicts["persistent_exceedance"][DEMO_EPS],
            "exceedance_checked_through": checked_through,
            "min_exceedance": min(held),
        },
    }
    result = AnalysisResult(
        "counterexample",
        out,
        {"values": rows, "exceedance": exceed},
        [
            f"- L1 → 0 trend: **{out['verdicts']['l1_trend']}** (block L1 from {block_l1[0]} to {block_l1[-1]})",
            f"- a.e.: **{out['verdicts']['ae']}**, μ{{tail_sup ≥ {DEMO_EPS}}} ≥ {out['verdicts']['min_exceedance']} "
            f"at every window start N ≤ {checked_through}",
        ],
    )
    written = write_outputs([result], args.out, args.formats, title=f"Counterexample demo (n_max = {n_max})")
    _summary_block(progress, "Counterexample demo", [
        f"Indices:            {horizon + 1}",
        f"L1 → 0 trend:       {out['verdicts']['l1_trend']}",
        f"a.e.:               {out['verdicts']['ae']}",
        f"Min exceedance:     {out['verdicts']['min_exceedance']}",
        f"Files written:      {len(written)}",
    ])
    return EXIT_OK


# -----------------------------------------------------------------------------
# demo martingale
# -----------------------------------------------------------------------------

def demo_martingale(args, progress: _Progress) -> int:
    level, n_max = args.level, args.n_max
    require(0 <= level <= n_max, f"--level must lie in 0..--n-max, got {level}")
    if n_max > MARTINGALE_MAX_LEVEL:
        raise CapExceededError(f"--n-max {n_max} exceeds the dyadic level cap {MARTINGALE_MAX_LEVEL}")
    seq = martingale_sequence("increasing")
    f = dyadic_step(level, [Fraction(i % 3, 2) for i in range(1 << level)])
    eps = Fraction(1, 1 << (level + 1))

    progress.stage(f"[1/2] ℰ(f|D_n) for n = 0..{n_max} (f on level {level})...")
    report = ae_report(seq, f, f, n_max, [eps], workers=args.workers, progress=progress.detail)
    exact_from = [n for n, g in enumerate(report.expectations) if lp_dist(g, f, "inf") == 0]
    ensure(all(n in exact_from for n in range(level, n_max + 1)), f"ℰ(f|D_n) differs from f for some n >= {level}")
    ensure(all(v == 0 for _, _, v in report.tail_sup_pieces(level)), f"tail sup from N = {level} is not 0")

    progress.stage("[2/2] Boylan distances d(D_n, D_m)...")
    indices = list(range(min(n_max, MARTINGALE_BOYLAN_LEVELS) + 1))
    table = boylan_table(seq, indices)
    out = {
        "demo": "martingale",
        "level": level,
        "n_max": n_max,
        "function": f,
        "exact_from": min(exact_from),
        "distances": report.distances,
        "tail_sup_zero_from": level,
        "boylan": [{"i": i, "j": j, "distance": d} for (i, j), d in table.items()],
    }
    result = AnalysisResult(
        "martingale",
        out,
        {"boylan": out["boylan"], "distances": [{"index": n, "l1": v} for n, v in enumerate(report.distances["l1"])]},
        [
            f"- ℰ(f|D_n) = f for n ≥ {min(exact_from)}; tail sup from N = {level} is 0",
            "- Boylan d(D_n, D_m) for n ≠ m: " + ", ".join(sorted({str(d) for (i, j), d in table.items() if i != j})),
        ],
    )
    written = write_outputs([result], args.out, args.formats, title=f"Martingale demo (level {level})")
    _summary_block(progress, "Martingale demo", [
        f"Exact from n:       {min(exact_from)}",
        f"Boylan table size:  {len(table)}",
        f"Files written:      {len(written)}",
    ])
    return EXIT_OK


# -----------------------------------------------------------------------------
# analyze / boylan
# -----------------------------------------------------------------------------

def _load(args):
    spec = load_scenario(args.scenario)
    caps = dict(spec.caps)
    if args.grid_cap != GRID_CAP:
        caps["grid_cap"] = args.grid_cap
    if args.max_horizon is not None:
        caps["max_horizon"] = args.max_horizon
    spec = replace(spec, caps=caps)
    return spec, from_spec(spec)


def analyze(args, progress: _Progress) -> int:
    progress.stage(f"[1/3] Loading scenario {args.scenario}...")
    spec, seq = _load(args)
    progress.detail(f"sequence {seq.name}, horizon {spec.horizon}, analyses {', '.join(spec.analyses)}")

    progress.stage("[2/3] Running analyses...")
    results = run_analyses(spec, seq, workers=args.workers, progress=progress.detail)

    progress.stage(f"[3/3] Writing reports to {args.out}...")
    written = write_outputs(
        results,
        args.out,
        args.formats,
        title=f"Scenario {spec.name}",
        preamble=[f"- Sequence: `{seq.name}`", f"- Horizon: {spec.horizon}"],
    )
    lines = [line for r in results for line in [f"[{r.name}]", *r.summary]]
    lines.append(f"Files written: {len(written)}")
    _summary_block(progress, f"Scenario {spec.name}", lines)
    return EXIT_OK


def boylan(args, progress: _Progress) -> int:
    spec, seq = _load(args)
    for index in (args.i, args.j):
        require(0 <= index <= spec.horizon, f"index {index} outside 0..{spec.horizon}")
    cap = spec.caps.get("boylan_atom_cap", BOYLAN_ATOM_CAP)
    d = boylan_distance(seq.term(args.i), seq.term(args.j), cap)
    print(f"d(𝔄_{args.i}, 𝔄_{args.j}) = {d}")
    print(f"decimal: {float(d):.15g}")
    return EXIT_OK


# -----------------------------------------------------------------------------
# Entry point
# -----------------------------------------------------------------------------

def _formats(text: str) -> tuple[str, ...]:
    formats = tuple(f.strip() for f in text.split(',') if f.strip())
    for fmt in formats:
        if fmt not in FORMATS:
            raise argparse.ArgumentTypeError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if not formats:
        raise argparse.ArgumentTypeError("at least one format is required")
    return formats


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--workers', type=int, default=1, help='Worker processes for per-index evaluation')
    common.add_argument('--quiet', action='store_true', help='Suppress progress output')
    common.add_argument('--verbose', action='store_true', help='Print per-index detail')
    common.add_argument('--grid-cap', type=int, default=GRID_CAP, help='Maximum grid cells for pointwise statistics')
    common.add_argument('--max-horizon', type=int, default=None, help='Lower the sequence horizon limit')
    common.add_argument('--formats', type=_formats, default=('json',), help='Comma-separated output formats (json,csv)')

    parser = _Parser(description='Exact σ-subalgebra sequence lab on [0,1).')
    subparsers = parser.add_subparsers(dest='command', help='Subcommands')

    parser_demo = subparsers.add_parser('demo', help='Built-in demos')
    demos = parser_demo.add_subparsers(dest='demo', help='Demo name')
    parser_ce = demos.add_parser('counterexample', parents=[common], help='Typewriter counterexample')
    parser_ce.add_argument('--n-max', type=int, required=True, help=f'Last block n (2..{DEMO_N_MAX})')
    parser_ce.add_argument('--out', default=os.path.join(DEFAULT_OUT, 'counterexample'), help='Output directory')
    parser_mg = demos.add_parser('martingale', parents=[common], help='Dyadic martingale')
    parser_mg.add_argument('--level', type=int, default=MARTINGALE_DEFAULT_LEVEL, help='Dyadic level of f')
    parser_mg.add_argument('--n-max', type=int, default=MARTINGALE_DEFAULT_N_MAX, help='Horizon')
    parser_mg.add_argument('--out', default=os.path.join(DEFAULT_OUT, 'martingale'), help='Output directory')

    parser_an = subparsers.add_parser('analyze', parents=[common], help='Run a scenario')
    parser_an.add_argument('--scenario', required=True, help='Path to the scenario JSON file')
    parser_an.add_argument('--out', default=DEFAULT_OUT, help='Output directory')

    parser_by = subparsers.add_parser('boylan', parents=[common], help='Boylan distance between two terms')
    parser_by.add_argument('--scenario', required=True, help='Path to the scenario JSON file')
    parser_by.add_argument('--i', type=int, required=True, help='First index')
    parser_by.add_argument('--j', type=int, required=True, help='Second index')
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == 'demo' and args.demo is None:
        parser.error("demo needs a name: counterexample or martingale")
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    progress = _Progress(quiet=args.quiet, verbose=args.verbose)
    try:
        if args.command == 'demo' and args.demo == 'counterexample':
            return demo_counterexample(args, progress)
        if args.command == 'demo':
            return demo_martingale(args, progress)
        if args.command == 'analyze':
            return analyze(args, progress)
        return boylan(args, progress)
    except LabError as e:
        print(f"Error: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
