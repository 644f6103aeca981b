"""
Tests for the σ-subalgebra lab.

Workflow: each test_*.py module provides reusable test functions returning result dicts
and a run_unit_tests() that groups them; oracles.py holds the brute-force oracles and
seeded generators. run_lab_tests.py runs every module (no data prerequisites); pytest
runs the same functions through conftest.py.
"""
