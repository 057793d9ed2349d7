#!/usr/bin/env python3
"""Run the three walk experiments at acceptance scale and print a table.

The sign-conditioned calibration rows are expected to land near 0.3x the
nominal rate (see README); their pass flags record the acceptance band
verdict, not a bug.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from stst.bench import TheoryConfig, run_theory_suite, theory_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bridge-trials", type=int, default=100_000)
    parser.add_argument("--stop-error-trials", type=int, default=120_000)
    parser.add_argument("--stopping-trials", type=int, default=10_000)
    parser.add_argument("--output", default="theory_suite.csv")
    args = parser.parse_args()

    config = TheoryConfig(
        bridge_trials=args.bridge_trials,
        stop_error_trials=args.stop_error_trials,
        stopping_trials=args.stopping_trials,
    )
    results = run_theory_suite(config)

    width = max(len(r.experiment) for r, _ in results)
    print(f"{'experiment':<{width}}  {'n':>6}  {'delta':>6}  {'estimate':>12}  {'closed form':>12}  {'stderr':>10}  ok")
    for row, ok in results:
        delta = "" if row.delta is None else f"{row.delta:g}"
        print(
            f"{row.experiment:<{width}}  {row.n:>6}  {delta:>6}  {row.estimate:>12.6f}  "
            f"{row.closed_form:>12.6f}  {row.stderr:>10.2e}  {'yes' if ok else 'NO'}"
        )
    with open(args.output, "w", encoding="utf-8", newline="\n") as stream:
        theory_csv(results, stream)
    print(f"\nwrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
