"""
Scenario files: the JSON description of one analysis run.

Workflow position: Library module read by `sigma_lab.py analyze` and `sigma_lab.py boylan`.
Prerequisites: a scenario JSON file (see SCENARIO_GUIDE.md and data/scenarios/).
Outputs: a validated ScenarioSpec; gallery.from_spec turns it into an AlgebraSeq.

Schema (abridged):
  {"sequence": {"builtin": name, "params": {...}} | {"explicit": [[DSet...]...], "cycle": bool},
   "horizon": H, "function": {"indicator": DSet} | {"step": {...}}, "target": optional,
   "epsilons": ["2/3"], "analyses": [...], "cover": {"r": "1/2"},
   "wperp": {"eps": "1/2", "sign": "abs"}, "boylan": {"pairs": [[i, j]]},
   "liminf_limsup": {"min_tail": 1}, "fset": {"r_grid": [...]}, "caps": {...}}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from src.utils.cond_expect import Step
from src.utils.dyadic_sets import DSet
from src.utils.serialize import dset_from_json, rat_from_json, step_from_json
from src.utils.validate import ValidationError, require

# -----------------------------------------------------------------------------
# Config
# -----------------------------------------------------------------------------

BUILTIN_NAMES = (
    "counterexample_s3",
    "dyadic_martingale_inc",
    "dyadic_martingale_dec",
    "constant",
    "alternating",
)
ANALYSES = ("ae", "l1", "boylan", "cover", "liminf_limsup", "mu_approach", "wperp", "mu_ae", "fset")
CAP_KEYS = ("grid_cap", "boylan_atom_cap", "generate_cap", "max_horizon")
WPERP_SIGNS = ("abs", "pos", "neg")

DEFAULT_EPSILONS = ("1/2",)
DEFAULT_COVER_R = Fraction(1, 2)
DEFAULT_WPERP_EPS = Fraction(1, 2)


@dataclass(frozen=True)
class ScenarioSpec:
    """Validated scenario. Sequence descriptions stay decoded-but-unbuilt until from_spec."""

    sequence: dict[str, Any]
    horizon: int
    function: Step
    target: Step
    epsilons: tuple[Fraction, ...]
    analyses: tuple[str, ...]
    cover_r: Fraction = DEFAULT_COVER_R
    wperp_eps: Fraction = DEFAULT_WPERP_EPS
    wperp_sign: str = "abs"
    boylan_pairs: tuple[tuple[int, int], ...] = ()
    min_tail: int = 1
    r_grid: tuple[Fraction, ...] = ()
    caps: dict[str, int] = field(default_factory=dict)
    name: str = "scenario"
    # A when the function is given as an indicator χ_A; set-level analyses need it
    indicator_set: DSet | None = None


def _int(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    return value


def _section(obj: dict[str, Any], key: str) -> dict[str, Any]:
    section = obj.get(key, {})
    require(isinstance(section, dict), f"{key} must be a JSON object")
    return section


def _parse_sequence(obj: Any) -> dict[str, Any]:
    require(isinstance(obj, dict), "sequence must be a JSON object")
    if "builtin" in obj:
        name = obj["builtin"]
        require(name in BUILTIN_NAMES, f"unknown builtin sequence {name!r}; expected one of {BUILTIN_NAMES}")
        params = obj.get("params", {})
        require(isinstance(params, dict), "sequence params must be an object")
        decoded: dict[str, Any] = {}
        if name == "dyadic_martingale_dec":
            decoded["top_level"] = _int(params.get("top_level"), "top_level")
            require(decoded["top_level"] >= 0, "top_level must be >= 0")
        elif name == "constant":
            decoded["sets"] = [dset_from_json(s) for s in params.get("sets", [])]
        elif name == "alternating":
            decoded["first"] = [dset_from_json(s) for s in params.get("first", [])]
            decoded["second"] = [dset_from_json(s) for s in params.get("second", [])]
        return {"builtin": name, "params": decoded}
    if "explicit" in obj:
        terms = obj["explicit"]
        require(isinstance(terms, list) and terms, "explicit sequence must be a nonempty list of generator lists")
        cycle = obj.get("cycle", False)
        require(isinstance(cycle, bool), "cycle must be true or false")
        generators = []
        for term in terms:
            require(isinstance(term, list), "each explicit term must be a list of sets")
            generators.append([dset_from_json(s) for s in term])
        return {"explicit": generators, "cycle": cycle}
    raise ValidationError("sequence needs a 'builtin' or an 'explicit' key")


def parse_scenario(obj: Any, name: str = "scenario") -> ScenarioSpec:
    """Validate a decoded scenario object."""
    require(isinstance(obj, dict), "scenario must be a JSON object")
    sequence = _parse_sequence(obj.get("sequence"))
    horizon = _int(obj.get("horizon"), "horizon")
    require(horizon >= 1, f"horizon must be >= 1, got {horizon}")
    if "explicit" in sequence and not sequence["cycle"]:
        require(
            len(sequence["explicit"]) >= horizon + 1,
            f"explicit sequence without cycle needs {horizon + 1} terms for horizon {horizon}",
        )

    require("function" in obj, "scenario needs a 'function'")
    function = step_from_json(obj["function"])
    target = step_from_json(obj["target"]) if "target" in obj else function
    indicator_set = None
    if isinstance(obj["function"], dict) and "indicator" in obj["function"]:
        indicator_set = dset_from_json(obj["function"]["indicator"])

    epsilons = tuple(rat_from_json(e) for e in obj.get("epsilons", DEFAULT_EPSILONS))
    require(all(e > 0 for e in epsilons), "epsilons must be positive")

    analyses = tuple(obj.get("analyses", ["ae"]))
    for a in analyses:
        require(a in ANALYSES, f"unknown analysis {a!r}; expected one of {ANALYSES}")

    cover = _section(obj, "cover")
    cover_r = rat_from_json(cover.get("r", DEFAULT_COVER_R))
    require(0 < cover_r < 1, f"cover.r must lie in (0,1), got {cover_r}")

    wperp = _section(obj, "wperp")
    wperp_eps = rat_from_json(wperp.get("eps", DEFAULT_WPERP_EPS))
    require(wperp_eps > 0, "wperp.eps must be positive")
    wperp_sign = wperp.get("sign", "abs")
    require(wperp_sign in WPERP_SIGNS, f"wperp.sign must be one of {WPERP_SIGNS}")

    pairs = []
    for pair in _section(obj, "boylan").get("pairs", []):
        require(isinstance(pair, list) and len(pair) == 2, f"boylan pair must be [i, j], got {pair!r}")
        pairs.append((_int(pair[0], "boylan index"), _int(pair[1], "boylan index")))

    min_tail = _int(_section(obj, "liminf_limsup").get("min_tail", 1), "min_tail")
    require(min_tail >= 1, "min_tail must be >= 1")
    r_grid = tuple(rat_from_json(r) for r in _section(obj, "fset").get("r_grid", []))

    caps = obj.get("caps", {})
    require(isinstance(caps, dict), "caps must be an object")
    for key, value in caps.items():
        require(key in CAP_KEYS, f"unknown cap {key!r}; expected one of {CAP_KEYS}")
        require(_int(value, key) >= 1, f"cap {key} must be >= 1")

    return ScenarioSpec(
        sequence=sequence,
        horizon=horizon,
        function=function,
        target=target,
        epsilons=epsilons,
        analyses=analyses,
        cover_r=cover_r,
        wperp_eps=wperp_eps,
        wperp_sign=wperp_sign,
        boylan_pairs=tuple(pairs),
        min_tail=min_tail,
        r_grid=r_grid,
        caps=dict(caps),
        name=name,
        indicator_set=indicator_set,
    )


def load_scenario(path: str) -> ScenarioSpec:
    """Read and validate a scenario file; JSON errors become ValidationError."""
    if not os.path.exists(path):
        raise ValidationError(f"scenario file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"scenario is not valid JSON: {e}") from e
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_scenario(obj, name=name)
