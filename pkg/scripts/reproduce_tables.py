"""Regenerate the five dominance tables and diff them against the transcribed values.

    python3 scripts/reproduce_tables.py [--out DIR]
"""

import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from reference_tables import COLUMNS, printed_rows  # noqa: E402
from t2select.regions import emit_table, table_rows  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=None, help="write table_<k>.csv and .txt here")
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args()
    for k in range(1, 6):
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"table_{k}.csv").write_text(emit_table(k, "csv"))
            (args.out / f"table_{k}.txt").write_text(emit_table(k, "text"))
        diffs = []
        for pr, cr in zip(printed_rows(k), table_rows(k)):
            for c in COLUMNS[k]:
                a, b = pr[c], cr[c]
                if not (math.isinf(a) and a == b) and abs(a - b) > args.tol + 1e-12:
                    diffs.append(f"  {c} at {[pr.get(x) for x in ('p', 'alpha', 'eta') if x in pr]}: "
                                 f"transcribed {a}, computed {b:.6g}")
        print(f"table {k}: {len(diffs)} cells outside +-{args.tol}")
        if diffs:
            print("\n".join(diffs))


if __name__ == "__main__":
    main()
