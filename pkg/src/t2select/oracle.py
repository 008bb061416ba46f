"""Oracle subset selection: the subset whose size-alpha T^2 test is most powerful
at a given alternative, and maps of the selected size over parameter grids.

Powers are compared through log(1 - pi) rather than pi itself. Far from the
null every power rounds to 1 in double precision while the miss probabilities
still differ by many orders of magnitude; near the null the two scales agree to
first order, so a single tie tolerance on log-miss serves both regimes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import ncf
from .altparams import AlternativeSpec, SubsetMask, bivariate_spec, enumerate_subsets, lambda_subset
from .regions import q_ratio, z_ratio
from .specfun import DomainError

__all__ = [
    "ORACLE_P_MAX",
    "TIE_TOL",
    "OracleResult",
    "SizeBest",
    "RegionCell",
    "ThresholdEstimate",
    "oracle",
    "region_scan_bivariate",
    "default_grid",
    "cells_to_csv",
    "region_fractions",
    "lambda_threshold_estimate",
]

ORACLE_P_MAX = 24
TIE_TOL = 1e-10


@lru_cache(maxsize=65536)
def _log_miss(lam, m, n, alpha, tol):
    return ncf.log_miss(lam, m, n, alpha, tol)


def subset_log_miss(lam: float, m: int, N: int, alpha: float, tol: float = ncf.DEFAULT_TOL) -> float:
    return _log_miss(float(lam), int(m), int(N - m), float(alpha), float(tol))


@dataclass(frozen=True)
class SizeBest:
    size: int
    subset: SubsetMask
    power: float
    log_miss: float


@dataclass(frozen=True)
class OracleResult:
    best_subset: SubsetMask
    best_power: float
    best_size: int
    per_size_best: tuple
    full_power: float
    best_log_miss: float = field(default=math.nan, repr=False)
    full_log_miss: float = field(default=math.nan, repr=False)

    def to_dict(self) -> dict:
        return {
            "best_subset": self.best_subset.bits,
            "best_subset_indices": [j + 1 for j in self.best_subset.indices],
            "best_size": self.best_size,
            "best_power": self.best_power,
            "full_power": self.full_power,
            "best_log_miss": self.best_log_miss,
            "full_log_miss": self.full_log_miss,
            "per_size_best": [
                {"size": s.size, "subset": s.subset.bits, "power": s.power, "log_miss": s.log_miss}
                for s in self.per_size_best
            ],
        }


def _better(lm_new, lm_old, tie_tol):
    # strictly better by more than the tie tolerance; ties keep the earlier subset
    return lm_new < lm_old - tie_tol


def oracle(spec: AlternativeSpec, alpha: float, tol: float = ncf.DEFAULT_TOL,
           tie_tol: float = TIE_TOL) -> OracleResult:
    """Exhaustive argmax of the T^2_omega power over all nonempty subsets.

    Subsets are visited by size, then bitmask, so ties within ``tie_tol`` (on
    the log-miss scale) resolve to the smaller subset, then the smaller mask.
    """
    if spec.p > ORACLE_P_MAX:
        raise DomainError(f"oracle enumeration is capped at p={ORACLE_P_MAX}, got p={spec.p}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")
    best = None
    per_size = {}
    for omega in enumerate_subsets(spec.p):
        lm = subset_log_miss(lambda_subset(spec, omega), omega.size, spec.N, alpha, tol)
        k = omega.size
        if k not in per_size or _better(lm, per_size[k][1], tie_tol):
            per_size[k] = (omega, lm)
        if best is None or _better(lm, best[1], tie_tol):
            best = (omega, lm)
    sizes = tuple(SizeBest(k, om, -math.expm1(lm), lm) for k, (om, lm) in sorted(per_size.items()))
    full_lm = per_size[spec.p][1]
    return OracleResult(best[0], -math.expm1(best[1]), best[0].size, sizes,
                        -math.expm1(full_lm), best[1], full_lm)


@dataclass(frozen=True)
class RegionCell:
    eta: float
    rho: float
    oracle_size: int
    best_subset: int
    best_power: float
    full_power: float
    singleton_gap: float  # log-miss of full set minus best singleton; > 0 means a singleton wins


def default_grid(n: int = 201) -> tuple[np.ndarray, np.ndarray]:
    """eta on [-1, 1] and rho on n points strictly inside (-1, 1)."""
    return np.linspace(-1.0, 1.0, n), np.linspace(-1.0, 1.0, n + 2)[1:-1]


def region_scan_bivariate(N: int, alpha: float, eta_grid, rho_grid, gamma1_sq: float,
                          tol: float = ncf.DEFAULT_TOL, tie_tol: float = TIE_TOL) -> list[RegionCell]:
    """Oracle size at every (eta, rho) for p = 2 and gamma = (gamma1, eta gamma1).

    Cells are returned in row-major order (eta outer, rho inner).
    """
    if not gamma1_sq > 0:
        raise DomainError("gamma1_sq must be positive")
    g1 = math.sqrt(gamma1_sq)
    cells = []
    for eta in np.asarray(eta_grid, dtype=float):
        if abs(eta) > 1:
            raise DomainError(f"|eta| must be <= 1, got {eta}")
        for rho in np.asarray(rho_grid, dtype=float):
            if not abs(rho) < 1:
                raise DomainError(f"|rho| must be < 1, got {rho}")
            res = oracle(bivariate_spec(g1, float(eta), float(rho), N), alpha, tol, tie_tol)
            single = min(s.log_miss for s in res.per_size_best if s.size == 1)
            cells.append(RegionCell(float(eta), float(rho), res.best_size, res.best_subset.bits,
                                    res.best_power, res.full_power, res.full_log_miss - single))
    return cells


def cells_to_csv(cells, out=None) -> str:
    buf = io.StringIO() if out is None else out
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eta", "rho", "oracle_size", "best_subset", "best_power", "full_power"])
    for c in cells:
        w.writerow([repr(c.eta), repr(c.rho), c.oracle_size, c.best_subset, repr(c.best_power), repr(c.full_power)])
    return buf.getvalue() if out is None else ""


def region_fractions(cells) -> dict[int, float]:
    """Fraction of scanned cells falling in each A(i)."""
    n = len(cells)
    out = {}
    for c in cells:
        out[c.oracle_size] = out.get(c.oracle_size, 0) + 1
    return {k: v / n for k, v in sorted(out.items())}


@dataclass(frozen=True)
class ThresholdEstimate:
    """Numerical estimate of the noncentrality beyond (asymptotic) or below
    (local) which the ratio rule decides the power comparison.

    The ratio boundary itself is approached but not reached: exactly at
    Lambda_omega = Q Lambda_omega' the slower polynomial factors of the two
    power functions decide, so the rule is checked at ratios widened by
    ``slack``. ``found`` is False when the scan range did not contain the
    threshold; ``bracket`` is then the conservative scan end.
    """

    value: float
    bracket: tuple
    direction: str
    ratio: float
    slack: float
    found: bool
    is_estimate: bool = True


def lambda_threshold_estimate(m: int, m2: int, N: int, alpha: float, direction: str = "asymptotic",
                              slack: float = 0.05, lam_lo: float = 1e-3, lam_hi: float = 1e7,
                              n_grid: int = 241, rel_tol: float = 1e-6) -> ThresholdEstimate:
    """Estimate Lambda* (asymptotic) or Lambda** (local) for subset sizes m < m2.

    asymptotic: Lambda* is the smallest L with pi(l; m) > pi(l / (Q (1 + slack)); m2)
    for every scanned l >= L. local: Lambda** is the largest L with
    pi(l (1 - slack) / Z; m) < pi(l; m2) for every scanned l < L.
    """
    if not 1 <= m < m2 < N:
        raise DomainError(f"need 1 <= m < m2 < N, got m={m}, m2={m2}, N={N}")
    if not 0 < slack < 1:
        raise DomainError("slack must lie in (0, 1)")
    grid = np.geomspace(lam_lo, lam_hi, n_grid)
    if direction == "asymptotic":
        ratio = q_ratio(m, m2, N, alpha)

        def gap(lam):
            return (subset_log_miss(lam / (ratio * (1 + slack)), m2, N, alpha)
                    - subset_log_miss(lam, m, N, alpha))

        ok = np.array([gap(x) > 0 for x in grid])
        if ok.all():
            return ThresholdEstimate(float(grid[0]), (0.0, float(grid[0])), direction, ratio, slack, True)
        last_bad = int(np.nonzero(~ok)[0][-1])
        if last_bad == len(grid) - 1:
            return ThresholdEstimate(math.inf, (float(grid[-1]), math.inf), direction, ratio, slack, False)
        lo, hi = grid[last_bad], grid[last_bad + 1]
        while hi - lo > rel_tol * hi:
            mid = math.sqrt(lo * hi)
            lo, hi = (lo, mid) if gap(mid) > 0 else (mid, hi)
        return ThresholdEstimate(float(hi), (float(lo), float(hi)), direction, ratio, slack, True)
    if direction == "local":
        ratio = z_ratio(m, m2, N, alpha)

        # just below the ratio boundary the larger subset should win
        def gap(lam):
            return (subset_log_miss(lam * (1 - slack) / ratio, m, N, alpha)
                    - subset_log_miss(lam, m2, N, alpha))

        ok = np.array([gap(x) > 0 for x in grid])
        if ok.all():
            return ThresholdEstimate(float(grid[-1]), (float(grid[-1]), math.inf), direction, ratio, slack, False)
        first_bad = int(np.nonzero(~ok)[0][0])
        if first_bad == 0:
            return ThresholdEstimate(0.0, (0.0, float(grid[0])), direction, ratio, slack, False)
        lo, hi = grid[first_bad - 1], grid[first_bad]
        while hi - lo > rel_tol * hi:
            mid = math.sqrt(lo * hi)
            lo, hi = (mid, hi) if gap(mid) > 0 else (lo, mid)
        return ThresholdEstimate(float(lo), (float(lo), float(hi)), direction, ratio, slack, True)
    raise DomainError(f"direction must be 'asymptotic' or 'local', got {direction!r}")
