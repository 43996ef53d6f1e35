"""Command line: ``weakchain run|sweep|selftest``.

Exit codes: 0 when every expectation is met, 1 on a verdict mismatch (or a
failing self-test property), 2 on a configuration error.  The thread count
for quadrature is read from ``WEAKCHAIN_THREADS``.
"""
from __future__ import annotations

import argparse
import sys

from . import scenario as sc_mod
from . import selftest as st_mod

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG = 0, 1, 2


def _emit(rows, out, lines) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            sc_mod.write_csv(rows, fh)
        report = sys.stdout
    else:
        sc_mod.write_csv(rows, sys.stdout)
        report = sys.stderr
    for line in lines:
        print(line, file=report)


def cmd_run(args) -> int:
    sc = sc_mod.load(args.scenario)
    outcomes = sc_mod.run_checks(sc)
    rows = [r for o in outcomes for r in o.rows]
    bad = sc_mod.expectation_failures(sc, outcomes)
    lines = [f"scenario {sc.id}"] + sc_mod.summarize(outcomes)
    lines += [f"MISMATCH {b}" for b in bad] or ["all expectations met" if sc.expect else "no expectations declared"]
    _emit(rows, args.out, lines)
    return EXIT_MISMATCH if bad else EXIT_OK


def cmd_sweep(args) -> int:
    sc = sc_mod.load(args.scenario)
    if "sweep" not in sc.raw:
        raise sc_mod.ConfigError("scenario has no [sweep] section", None, sc.path)
    points = sc_mod.sweep_points(sc)
    rows, lines, bad = [], [f"sweep {sc.id}"], []
    cache: dict = {}
    for label, pt in points:
        outcomes = sc_mod.run_checks(pt, label, cache)
        rows += [r for o in outcomes for r in o.rows]
        lines += sc_mod.summarize(outcomes, label)
        bad += [f"{label}: {b}" for b in sc_mod.expectation_failures(pt, outcomes)]
    lines += [f"MISMATCH {b}" for b in bad] or ["all expectations met" if sc.expect else "no expectations declared"]
    _emit(rows, args.out, lines)
    return EXIT_MISMATCH if bad else EXIT_OK


def cmd_selftest(args) -> int:
    results = st_mod.run_all(args.inject_fault)
    lines = [f"{r.name:<26} {r.trials - r.violations:>6}/{r.trials:<6} passed  worst={r.worst:.3e}"
             f"  {'ok' if r.passed else 'FAIL'}" for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} properties passed")
    if args.out:
        _emit(st_mod.rows(results), args.out, lines)
    else:
        print("\n".join(lines))
    return EXIT_MISMATCH if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weakchain", description="Weak chain-rule checks for pullbacks under Sobolev maps")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario")
    r.add_argument("--out", help="CSV output path (default: stdout)")
    r.set_defaults(fn=cmd_run)
    s = sub.add_parser("sweep", help="run a scenario over its [sweep] values")
    s.add_argument("scenario")
    s.add_argument("--out", help="CSV output path (default: stdout)")
    s.set_defaults(fn=cmd_sweep)
    t = sub.add_parser("selftest", help="run the invariant suite")
    t.add_argument("--out", help="also write the results as CSV")
    t.add_argument("--inject-fault", choices=["sign"], help="drop wedge signs to show the suite notices")
    t.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except sc_mod.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
