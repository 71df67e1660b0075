"""Recompute table averages and expert totals from the bundled reference rows.

    python scripts/reproduce_tables.py [--tol 5e-5]
"""

import argparse

from panobench.metrics import DEFAULT_CLASSES, ConsistencyReport
from panobench.reference_tables import EXPERT_EVAL, SPATIAL_TABLES
from panobench.scoring import ScoreCard, display_round, expert_total, grade


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tol", type=float, default=5e-5)
    args = ap.parse_args()

    mismatches = 0
    for table, rows in SPATIAL_TABLES.items():
        print(f"\n{table}")
        print(f"  {'row':<32}{'mean':>10}{'printed':>10}{'diff':>11}")
        for name, (values, printed) in rows.items():
            avg = ConsistencyReport.from_values(dict(zip(DEFAULT_CLASSES, values))).average
            diff = avg - printed
            flag = "" if abs(diff) <= args.tol else "  <-- mismatch"
            mismatches += bool(flag)
            print(f"  {name:<32}{avg:>10.6f}{printed:>10.4f}{diff:>+11.2e}{flag}")

    print("\nexpert totals")
    for name, ((spatial, aesthetic, plaus), printed, tier) in EXPERT_EVAL.items():
        total = expert_total(ScoreCard(aesthetic, spatial, plaus))
        print(f"  {name:<32}{total:>8.4f} -> {display_round(total):.2f} {grade(total)}"
              f"  (printed {printed:.2f} {tier})")

    print(f"\n{mismatches} average(s) outside +-{args.tol:g}")


if __name__ == "__main__":
    main()
