"""Scenario files and the command line.

The same checks run from a config file; the CLI writes CSV and exits 1 if
an expected verdict is not met.  Equivalent shell commands:

    weakchain run  $(python3 -c "from weakchain.scenario import bundled; print(bundled('winding_2d.cfg'))")
    weakchain sweep <path to radial_sweep_2d.cfg> --out sweep.csv
    weakchain selftest

Run:  python3 demos/07_scenarios.py
"""
from weakchain.scenario import bundled, csv_text, expectation_failures, load, run_checks, summarize

sc = load(bundled("winding_2d.cfg"))
outcomes = run_checks(sc)
print("\n".join(summarize(outcomes)))
print("mismatches:", expectation_failures(sc, outcomes) or "none")
print(csv_text([r for o in outcomes for r in o.rows]).splitlines()[0])
