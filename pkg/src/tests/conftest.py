"""
pytest adapter for the result-dict test functions.

The test_* functions return one result dict or a list of them instead of asserting;
this hook calls each one and fails the test when any returned result has passed=False.
run_lab_tests.py runs the same functions without pytest.
"""

from __future__ import annotations

import os
import sys

import pytest

_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)


def _failures(outcome) -> list[dict]:
    if outcome is None:
        return []
    results = outcome if isinstance(outcome, list) else [outcome]
    return [r for r in results if not r["passed"]]


@pytest.hookimpl(tryfirst=True)
def pytest_pyfunc_call(pyfuncitem):
    funcargs = pyfuncitem.funcargs
    kwargs = {name: funcargs[name] for name in pyfuncitem._fixtureinfo.argnames}
    failures = _failures(pyfuncitem.obj(**kwargs))
    if failures:
        lines = [f"{r['message']} {r.get('details', {})}" for r in failures[:10]]
        pytest.fail("\n".join(lines), pytrace=False)
    return True
