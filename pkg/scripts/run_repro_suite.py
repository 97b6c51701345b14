#!/usr/bin/env python3
"""
Run a set of named repro experiments and collect their verdicts.

This script:
1. Runs every requested catalog experiment (all of them by default)
2. Writes each experiment's reports under <out>/<name>/
3. Writes a JSON summary of values, failures and wall times
4. Exits non-zero when any experiment fails

Usage:
    python scripts/run_repro_suite.py --out runs/suite
    python scripts/run_repro_suite.py kpp-headline allen-cahn --seed 1 --threads 8 --plot
"""

import argparse
import json
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from kiro_leno.operator_learning.cli.repro import REPRO_CATALOG, run_repro
from kiro_leno.operator_learning.errors import LenoError
from kiro_leno.operator_learning.logs import configure_logging


def main() -> int:
    parser = argparse.ArgumentParser(description="Run repro experiments and summarise the results")
    parser.add_argument("names", nargs="*", help="Experiments to run (default: all)")
    parser.add_argument("--out", type=Path, default=Path("runs/suite"), help="Output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--plot", action="store_true", help="Also write SVG plots")
    parser.add_argument("--log-level", default="INFO")
    args = parser.parse_args()

    configure_logging(args.log_level)
    names = args.names or list(REPRO_CATALOG)
    unknown = [n for n in names if n not in REPRO_CATALOG]
    if unknown:
        print(f"Unknown experiments: {unknown}; available: {sorted(REPRO_CATALOG)}")
        return 1

    summary = {}
    for name in names:
        print(f"\n{'='*80}")
        print(f"Experiment: {name}")
        print(f"{'='*80}\n")
        try:
            outcome = run_repro(name, args.seed, args.threads, args.out / name, args.plot)
            summary[name] = outcome.to_json()
            print(outcome.line())
        except LenoError as e:
            summary[name] = {"name": name, "passed": False, "error": str(e)}
            print(f"{name}: ERROR {e}")

    args.out.mkdir(parents=True, exist_ok=True)
    summary_path = args.out / "suite_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    failed = [name for name, result in summary.items() if not result["passed"]]
    print(f"\n{len(names) - len(failed)}/{len(names)} experiments passed; summary in {summary_path}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
