"""
Exception family, canonical-form checks, and report comparison.

Workflow position: Library + CLI. No run order; every constructor in src/utils and
src/lab raises the errors defined here, and the CLI (src/sigma_lab.py) maps them
to exit codes. The CLI entry point compares two JSON reports written by
`sigma_lab.py analyze` or `sigma_lab.py demo` (e.g. to confirm byte-determinism).

Prerequisites:
  - None for the exception classes.
  - Two JSON report files for the comparison CLI.

Exit-code contract used by the CLI:
  0 success, 1 usage/parse/validation, 2 invariant violation, 3 cap exceeded.

CLI: python3 src/utils/validate.py <predicted_report.json> <reference_report.json>
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2
EXIT_CAP = 3


class LabError(Exception):
    """Base class for every error raised by the laboratory."""

    exit_code = EXIT_USAGE


class ValidationError(LabError, ValueError):
    """Malformed input: reversed endpoints, bad arity, overlapping parts, bad index."""

    exit_code = EXIT_USAGE


class HorizonError(ValidationError):
    """Horizon below 1 or beyond the sequence's max_horizon."""


class CapExceededError(LabError):
    """A configured size cap (generators, atoms, grid cells, n_max) was exceeded."""

    exit_code = EXIT_CAP


class InvariantViolation(LabError, AssertionError):
    """An identity that must hold exactly (adjointness, C_N norm, strict bounds) failed."""

    exit_code = EXIT_INVARIANT


def require(condition: bool, message: str) -> None:
    """Raise ValidationError with *message* unless *condition* holds."""
    if not condition:
        raise ValidationError(message)


def ensure(condition: bool, message: str) -> None:
    """Raise InvariantViolation with *message* unless *condition* holds."""
    if not condition:
        raise InvariantViolation(message)


def check_cap(value: int, cap: int, what: str) -> None:
    """Raise CapExceededError when *value* exceeds *cap*."""
    if value > cap:
        raise CapExceededError(f"{what}: {value} exceeds cap {cap}")


# -----------------------------------------------------------------------------
# Report comparison (predicted vs reference JSON)
# -----------------------------------------------------------------------------

def _flatten(obj: Any, prefix: str = "") -> dict[str, Any]:
    """Flatten nested dicts/lists into {"a.b[3].c": leaf} for key-by-key comparison."""
    out: dict[str, Any] = {}
    if isinstance(obj, dict):
        for key, value in obj.items():
            out.update(_flatten(value, f"{prefix}.{key}" if prefix else str(key)))
    elif isinstance(obj, list):
        for i, value in enumerate(obj):
            out.update(_flatten(value, f"{prefix}[{i}]"))
    else:
        out[prefix] = obj
    return out


def compare_reports(predicted: Any, reference: Any, max_report: int = 50) -> dict[str, Any]:
    """
    Compare two decoded JSON reports leaf by leaf.

    Returns {"total", "matches", "mismatches": [(key, predicted, reference)], "missing",
    "extra"}. Rat values are compared as their canonical strings, so "2/9" and "4/18"
    differ on purpose: reports must be written canonically.
    """
    pred = _flatten(predicted)
    ref = _flatten(reference)
    mismatches = []
    matches = 0
    for key, ref_value in ref.items():
        if key not in pred:
            continue
        if pred[key] == ref_value:
            matches += 1
        elif len(mismatches) < max_report:
            mismatches.append((key, pred[key], ref_value))
    missing = sorted(set(ref) - set(pred))
    extra = sorted(set(pred) - set(ref))
    return {
        "total": len(ref),
        "matches": matches,
        "mismatches": mismatches,
        "missing": missing[:max_report],
        "extra": extra[:max_report],
    }


def main() -> None:
    parser = argparse.ArgumentParser(description="Compare a produced JSON report with a reference report")
    parser.add_argument("predicted", help="Path to the produced report (Predicted)")
    parser.add_argument("reference", help="Path to the reference report (Actual)")
    args = parser.parse_args()

    for path in (args.predicted, args.reference):
        if not os.path.exists(path):
            print(f"Error: Report file not found: {path}")
            sys.exit(EXIT_USAGE)

    try:
        with open(args.predicted, "r", encoding="utf-8") as f:
            predicted = json.load(f)
        with open(args.reference, "r", encoding="utf-8") as f:
            reference = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        print(f"Error reading reports: {e}")
        sys.exit(EXIT_USAGE)

    result = compare_reports(predicted, reference)
    for key, got, want in result["mismatches"]:
        print(f"Mismatch on {key}: <{got}> <{want}>")
    for key in result["missing"]:
        print(f"Missing in predicted: {key}")
    for key in result["extra"]:
        print(f"Extra in predicted: {key}")

    total = result["total"]
    if total == 0:
        print("\nResult: reference report has no values to compare.")
        sys.exit(EXIT_USAGE)
    pct = 100 * result["matches"] / total
    print(f"\nFinal match rate: {pct:.2f}% ({result['matches']}/{total} values)")
    if result["mismatches"] or result["missing"] or result["extra"]:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
