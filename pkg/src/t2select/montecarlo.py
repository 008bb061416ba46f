"""Monte Carlo check that subset T^2 statistics from simulated normal samples
follow the nonnormalized noncentral f law, and that rejection rates match the
series power.

T^2_omega = N xbar_omega' S_omega^{-1} xbar_omega with xbar the sample mean and S
the unnormalized scatter matrix sum_i (x_i - xbar)(x_i - xbar)'.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import ncf
from .altparams import AlternativeSpec, SubsetMask, cholesky_checked, lambda_subset
from .specfun import DfPair, DomainError, f_upper_quantile, reg_inc_beta_array

__all__ = [
    "SimConfig",
    "SimResult",
    "SingularSampleError",
    "replication_stream",
    "sample_t2",
    "simulate_powers",
    "noncentral_f_cdf",
    "ks_noncentral_f",
    "results_to_csv",
]

DEFAULT_CHUNK = 25_000


class SingularSampleError(ArithmeticError):
    """A sampled scatter submatrix failed Cholesky (should have probability zero)."""


@dataclass(frozen=True)
class SimConfig:
    spec: AlternativeSpec
    reps: int
    seed: int
    alpha: float
    chunk: int = DEFAULT_CHUNK
    ks_samples: int = 20_000
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie strictly inside (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.chunk < 1 or self.workers < 1:
            raise DomainError("chunk and workers must be positive")


@dataclass(frozen=True)
class SimResult:
    subset: SubsetMask
    lam: float
    empirical_power: float
    standard_error: float  # binomial SE at the analytic power
    analytic_power: float
    ks_statistic: float
    ks_pvalue: float
    rejections: int
    reps: int

    @property
    def z_score(self) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.empirical_power == self.analytic_power else math.inf
        return (self.empirical_power - self.analytic_power) / self.standard_error


def replication_stream(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for one block of replications.

    Blocks have a fixed size (``SimConfig.chunk``), so a given (seed, rep index)
    always maps to the same stream position regardless of worker count.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def sample_t2(spec: AlternativeSpec, subsets, rng: np.random.Generator, reps: int) -> np.ndarray:
    """T^2_omega for ``reps`` simulated samples; returns shape (len(subsets), reps)."""
    p, N = spec.p, spec.N
    L = cholesky_checked(spec.corr_array)
    z = rng.standard_normal((reps, N, p))
    x = spec.gamma_array + z @ L.T
    xbar = x.mean(axis=1)
    d = x - xbar[:, None, :]
    S = np.einsum("rni,rnj->rij", d, d)
    out = np.empty((len(subsets), reps))
    for s, omega in enumerate(subsets):
        idx = list(omega.indices)
        xb = xbar[:, idx]
        try:
            C = np.linalg.cholesky(S[:, idx][:, :, idx])
        except np.linalg.LinAlgError as exc:
            raise SingularSampleError(f"scatter submatrix for {omega} is singular") from exc
        # xbar' S^{-1} xbar = |C^{-1} xbar|^2 with S = C C'
        w = np.linalg.solve(C, xb[:, :, None])[:, :, 0]
        out[s] = N * np.einsum("ri,ri->r", w, w)
    return out


def _run_block(spec, subsets, crits, seed, block, n, keep):
    t2 = sample_t2(spec, subsets, replication_stream(seed, block), n)
    return (t2 > crits[:, None]).sum(axis=1), t2[:, :keep]


def simulate_powers(cfg: SimConfig, subsets) -> list[SimResult]:
    """Empirical rejection rates, analytic powers and KS statistics per subset."""
    spec = cfg.spec
    subsets = list(subsets)
    if not subsets:
        raise DomainError("need at least one subset")
    for om in subsets:
        if om.p != spec.p:
            raise DomainError(f"subset {om} is not over p={spec.p} coordinates")
    crits = np.array([f_upper_quantile(om.size, spec.N - om.size, cfg.alpha) for om in subsets])
    n_blocks = -(-cfg.reps // cfg.chunk)
    jobs = []
    kept = 0
    for b in range(n_blocks):
        n = min(cfg.chunk, cfg.reps - b * cfg.chunk)
        keep = max(0, min(n, cfg.ks_samples - kept))
        kept += keep
        jobs.append((b, n, keep))

    def run(job):
        b, n, keep = job
        return _run_block(spec, subsets, crits, cfg.seed, b, n, keep)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    counts = np.sum([c for c, _ in parts], axis=0)
    ks_draws = np.concatenate([t for _, t in parts], axis=1)

    results = []
    for s, om in enumerate(subsets):
        m, n = om.size, spec.N - om.size
        lam = lambda_subset(spec, om)
        pw = ncf.power_value(lam, m, n, cfg.alpha)
        se = math.sqrt(pw * (1.0 - pw) / cfg.reps)
        if ks_draws.shape[1]:
            ks = stats.kstest(ks_draws[s], lambda t: noncentral_f_cdf(t, m, n, lam))
            ks_stat, ks_p = float(ks.statistic), float(ks.pvalue)
        else:
            ks_stat = ks_p = math.nan
        results.append(SimResult(om, lam, counts[s] / cfg.reps, se, pw, ks_stat, ks_p, int(counts[s]), cfg.reps))
    return results


def noncentral_f_cdf(t, m: int, n: int, lam: float, tol: float = 1e-12) -> np.ndarray:
    """Pr[f_{m,n}(lam) <= t] = sum_k Pois(k; lam/2) I_{t/(1+t)}(m/2 + k, n/2)."""
    DfPair(m, n)
    t = np.asarray(t, dtype=float)
    x = np.where(t > 0, t / (1.0 + t), 0.0)
    if lam == 0.0:
        return reg_inc_beta_array(m / 2.0, n / 2.0, x)
    mu = lam / 2.0
    lo, hi, _ = ncf._poisson_window(mu, tol)
    k = np.arange(lo, hi + 1)
    w = np.exp(k * math.log(mu) - mu - special.gammaln(k + 1.0))
    out = np.zeros_like(x)
    for kk, wk in zip(k, w):
        out += wk * reg_inc_beta_array(m / 2.0 + kk, n / 2.0, x)
    return np.clip(out, 0.0, 1.0)


def ks_noncentral_f(samples, m: int, n: int, lam: float) -> float:
    """Kolmogorov-Smirnov distance between samples and the f_{m,n}(lam) law."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise DomainError("samples must be nonempty")
    return float(stats.kstest(samples, lambda t: noncentral_f_cdf(t, m, n, lam)).statistic)


def results_to_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subset", "lambda", "analytic_power", "empirical_power", "se", "ks_stat"])
    for r in results:
        w.writerow([r.subset.bits, repr(r.lam), repr(r.analytic_power), repr(r.empirical_power),
                    repr(r.standard_error), repr(r.ks_statistic)])
    return buf.getvalue()
