"""Oracle-size map over an (eta, rho) grid for the bivariate problem.

    python3 scripts/region_scan.py --alpha 0.05 --gamma1-sq 1e4 --grid 101 --out scan.csv
"""

import argparse
from dataclasses import dataclass
from pathlib import Path

from t2select.oracle import cells_to_csv, default_grid, region_fractions, region_scan_bivariate
from t2select.regions import asymp_bivariate_interval, local_bivariate_interval


@dataclass
class ScanConfig:
    alpha: float = 0.05
    gamma1_sq: float = 50.0
    grid: int = 201
    N: int = 3
    margin: float = 0.02


def interior_agreement(cells, cfg):
    """Share of cells strictly inside the closed-form interval (by margin) with oracle size 1.

    Large gamma1_sq is compared with the asymptotic interval, small with the local one.
    """
    fn = asymp_bivariate_interval if cfg.gamma1_sq >= 1 else local_bivariate_interval
    inside = [c for c in cells if fn(cfg.alpha, c.eta)[0] + cfg.margin < c.rho < fn(cfg.alpha, c.eta)[1] - cfg.margin]
    return sum(c.oracle_size == 1 for c in inside) / max(len(inside), 1), len(inside)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--gamma1-sq", dest="gamma1_sq", type=float, default=50.0)
    ap.add_argument("--grid", type=int, default=201)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--out", type=Path)
    ns = vars(ap.parse_args())
    out = ns.pop("out")
    cfg = ScanConfig(**ns)
    eta, rho = default_grid(cfg.grid)
    cells = region_scan_bivariate(cfg.N, cfg.alpha, eta, rho, cfg.gamma1_sq)
    if out:
        out.write_text(cells_to_csv(cells))
    print("fractions by oracle size:", region_fractions(cells))
    if cfg.N == 3:
        frac, n = interior_agreement(cells, cfg)
        print(f"size-1 share among {n} cells inside the closed-form interval: {frac:.4f}")


if __name__ == "__main__":
    main()
