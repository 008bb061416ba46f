"""Crossing structure of the univariate vs bivariate power difference for several l.

    python3 scripts/explore_conjecture.py --l 1 2 3 4 --lambdas 0.5 1 2 5 10
"""

import argparse
import warnings

from t2select import prop43


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--l", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0, 10.0])
    args = ap.parse_args()
    warnings.simplefilter("ignore")
    for l in args.l:
        print(prop43.explore_conjecture(l, args.lambdas).to_text())


if __name__ == "__main__":
    main()
