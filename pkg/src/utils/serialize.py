"""
JSON and CSV codecs for DSet, Partition, Step and report records.

Workflow position: Library module. Used by src/lab/scenario.py (reading scenario files)
and src/lab/reports.py (writing JSON/CSV outputs).

JSON is exact: Rat values are canonical "p/q" strings, DSets are [["a","b"], ...],
Partitions are lists of DSets, Steps are {"carrier": [...], "values": [...]}.
CSV is a lossy decimal view (15 significant digits) built with pandas for plotting.
"""

from __future__ import annotations

import decimal
import json
import os
from fractions import Fraction
from typing import Any, Iterable, Mapping

import numpy as np
import pandas as pd

from .cond_expect import Step, indicator, step_from_values
from .dyadic_sets import DSet, format_rat, make_set, parse_rat
from .sigma_algebras import Partition, partition_from_atoms
from .validate import ValidationError, require

CSV_FLOAT_FORMAT = "%.15g"


# -----------------------------------------------------------------------------
# Decoders (scenario input)
# -----------------------------------------------------------------------------

def dset_from_json(obj: Any) -> DSet:
    """Decode [["a","b"], ...] into a canonical DSet."""
    require(isinstance(obj, list), f"a set must be a JSON list of [a, b] pairs, got {obj!r}")
    for pair in obj:
        require(isinstance(pair, list) and len(pair) == 2, f"malformed interval {pair!r}")
    return make_set(obj)


def partition_from_json(obj: Any) -> Partition:
    require(isinstance(obj, list) and obj, "a partition must be a nonempty JSON list of sets")
    return partition_from_atoms(dset_from_json(atom) for atom in obj)


def step_from_json(obj: Any) -> Step:
    """Decode {"indicator": DSet} or {"step": {"carrier": [...], "values": [...]}}."""
    require(isinstance(obj, dict), f"a function must be a JSON object, got {obj!r}")
    if "indicator" in obj:
        return indicator(dset_from_json(obj["indicator"]))
    if "step" in obj:
        body = obj["step"]
        require(isinstance(body, dict), "step must be an object with carrier and values")
        carrier = partition_from_json(body.get("carrier"))
        values = body.get("values")
        require(isinstance(values, list), "step values must be a list of rational strings")
        return step_from_values(carrier, values)
    raise ValidationError("a function needs an 'indicator' or a 'step' key")


def rat_from_json(obj: Any) -> Fraction:
    return parse_rat(obj)


# -----------------------------------------------------------------------------
# Encoders (report output)
# -----------------------------------------------------------------------------

def dset_to_json(a: DSet) -> list[list[str]]:
    return [[format_rat(x), format_rat(y)] for x, y in a.intervals]


def partition_to_json(p: Partition) -> list[list[list[str]]]:
    return [dset_to_json(atom) for atom in p.atoms]


def step_to_json(f: Step) -> dict[str, Any]:
    return {"carrier": partition_to_json(f.carrier), "values": [format_rat(v) for v in f.values]}


def to_jsonable(obj: Any) -> Any:
    """Recursively convert report values (Fractions, DSets, Partitions, Steps, numpy scalars)."""
    if isinstance(obj, Fraction):
        return format_rat(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, decimal.Decimal):
        return str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, DSet):
        return dset_to_json(obj)
    if isinstance(obj, Partition):
        return partition_to_json(obj)
    if isinstance(obj, Step):
        return step_to_json(obj)
    if isinstance(obj, Mapping):
        return {_key(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise ValidationError(f"cannot serialize {type(obj).__name__} to JSON")


def _key(k: Any) -> str:
    if isinstance(k, Fraction):
        return format_rat(k)
    if isinstance(k, tuple):
        return ",".join(_key(x) for x in k)
    return str(k)


def dumps(obj: Any) -> str:
    """Deterministic JSON text: insertion-ordered keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def write_json(path: str, obj: Any) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(obj))


def _decimal_view(value: Any) -> Any:
    if isinstance(value, Fraction):
        return float(value)
    return value


def rows_to_frame(rows: Iterable[Mapping[str, Any]]) -> pd.DataFrame:
    """DataFrame with Fractions converted to floats (lossy view)."""
    return pd.DataFrame([{k: _decimal_view(v) for k, v in row.items()} for row in rows])


def write_csv(path: str, rows: Iterable[Mapping[str, Any]]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    rows_to_frame(rows).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
