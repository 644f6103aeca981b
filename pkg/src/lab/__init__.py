"""
Sequence laboratory: named sequences, the exact convergence engine, sequence diagnostics
and scenario-driven reports.

Workflow: Library; the CLI (src/sigma_lab.py) is the entry point. Scenario files live in
data/scenarios/ (see SCENARIO_GUIDE.md).

Modules: gallery (sequences), scenario (scenario files), convergence (ae_report),
sequence_lab (Boylan metric, covering and pairing witnesses), reports (analyses and writers).
"""
