"""Power of the noncentral f test as a Poisson mixture of central beta tails.

    pi_alpha(lam; m, n) = exp(-lam/2) sum_k (lam/2)^k / k! * c_{m,n;k;alpha}
    c_{m,n;k;alpha}     = Pr[b_{n,m+2k} < b_{n,m;alpha}] = I_x(n/2, m/2 + k)

with x = b_{n,m;alpha}. Consecutive coefficients differ by the positive
increment

    t_k = x^{n/2} (1-x)^{m/2+k} / ((m/2+k) B(n/2, m/2+k)),

so c_k is accumulated upward from c_0 = alpha, and the complement
1 - c_k = sum_{j>=k} t_j is accumulated downward in log space. The second
form gives log(1 - power) with full relative precision even when the power
rounds to 1, which is what power comparisons at large noncentrality need.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .specfun import (
    DfPair,
    DomainError,
    beta_lower_quantile,
    inv_reg_inc_beta,
    log_reg_inc_beta,
    reg_inc_beta,
)

__all__ = [
    "PowerQuery",
    "SeriesTail",
    "SeriesNonConvergence",
    "BracketError",
    "NoCrossingError",
    "DEFAULT_TOL",
    "K_CAP",
    "c_coeff",
    "c_minus_alpha",
    "c_table",
    "power",
    "power_value",
    "log_miss",
    "power_asymptotic",
    "power_local_slope",
    "g_alpha",
    "crossing_difference",
    "scan_crossings",
    "alpha_star",
]

DEFAULT_TOL = 1e-12
K_CAP = 100_000


class SeriesNonConvergence(ArithmeticError):
    """The Poisson series would need more terms than the configured cap."""


class BracketError(ArithmeticError):
    """A root could not be enclosed below the hard cap."""


class NoCrossingError(ArithmeticError):
    """No sign change of the power difference was found on (0, 1)."""


@dataclass(frozen=True)
class PowerQuery:
    lam: float
    df: DfPair
    alpha: float

    def __post_init__(self):
        if not self.lam >= 0 or math.isinf(self.lam):
            raise DomainError(f"noncentrality must be finite and >= 0, got {self.lam!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha!r}")


@dataclass(frozen=True)
class SeriesTail:
    k_max: int
    tail_bound: float


def _quantile(m, n, alpha):
    # x = b_{n,m;alpha}, the lower quantile entering every coefficient
    return beta_lower_quantile(n, m, alpha)


@lru_cache(maxsize=4096)
def _quantile_pair(m, n, alpha):
    """(x, 1 - x) with the smaller member computed directly, not by subtraction."""
    if alpha <= 0.5:
        x = inv_reg_inc_beta(n / 2.0, m / 2.0, alpha)
        return x, 1.0 - x
    y = inv_reg_inc_beta(m / 2.0, n / 2.0, 1.0 - alpha)
    return 1.0 - y, y


def _log_increments(m, n, alpha, lo, hi):
    """log t_k for k = lo..hi."""
    x, y = _quantile_pair(m, n, alpha)
    a = m / 2.0 + np.arange(lo, hi + 1, dtype=float)
    b = n / 2.0
    return a * math.log(y) + b * math.log(x) - np.log(a) - special.betaln(a, b)


def c_coeff(m: int, n: int, k: int, alpha: float) -> float:
    """c_{m,n;k;alpha} by a direct incomplete-beta evaluation."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")
    DfPair(m, n)
    if k == 0:
        return float(alpha)
    return reg_inc_beta(n / 2.0, m / 2.0 + k, _quantile(m, n, alpha))


def c_minus_alpha(m: int, n: int, k: int, alpha: float) -> float:
    """c_{m,n;k;alpha} - alpha as a sum of positive increments (no cancellation)."""
    if k <= 0:
        return 0.0
    return float(np.exp(_log_increments(m, n, alpha, 0, k - 1)).sum())


def c_table(m: int, n: int, alpha: float, lo: int, hi: int) -> np.ndarray:
    """c_k for k = lo..hi by upward recurrence from a single anchor value."""
    t = np.exp(_log_increments(m, n, alpha, lo, hi))
    anchor = alpha if lo == 0 else reg_inc_beta(n / 2.0, m / 2.0 + lo, _quantile_pair(m, n, alpha)[0])
    c = np.empty(hi - lo + 1)
    c[0] = anchor
    np.cumsum(t[:-1], out=c[1:])
    c[1:] += anchor
    return np.minimum(c, 1.0)


def _log_one_minus_c(m, n, alpha, lo, hi):
    """log(1 - c_k) for k = lo..hi, summed downward from the exact tail at hi+1."""
    log_t = _log_increments(m, n, alpha, lo, hi)
    top = log_reg_inc_beta(m / 2.0 + hi + 1, n / 2.0, _quantile_pair(m, n, alpha)[1])
    seq = np.concatenate(([top], log_t[::-1]))
    return np.logaddexp.accumulate(seq)[:0:-1]


def _poisson_window(mu, tol):
    """Index range [lo, hi] whose omitted Poisson(mu) mass is at most tol."""
    z = math.sqrt(2.0 * math.log(2.0 / tol)) + 1.0
    s = math.sqrt(mu)
    lo = max(0, int(math.floor(mu - z * s - 2.0)))
    hi = int(math.ceil(mu + z * s + z * z + 5.0))
    lower = float(special.pdtr(lo - 1, mu)) if lo > 0 else 0.0
    while lower > tol / 2 and lo > 0:
        lo = max(0, lo - int(s) - 1)
        lower = float(special.pdtr(lo - 1, mu)) if lo > 0 else 0.0
    upper = float(special.pdtrc(hi, mu))
    while upper > tol / 2:
        hi += int(s) + 1
        upper = float(special.pdtrc(hi, mu))
    return lo, hi, lower + upper


def _log_poisson(mu, lo, hi):
    k = np.arange(lo, hi + 1, dtype=float)
    return k * math.log(mu) - mu - special.gammaln(k + 1.0)


def power(q: PowerQuery, tol: float = DEFAULT_TOL, k_cap: int | None = K_CAP) -> tuple[float, SeriesTail]:
    """pi_alpha(lam; m, n) with truncation error at most ``tol``.

    The omitted Poisson mass bounds the truncation error because every
    coefficient lies in [0, 1]; it is returned as ``SeriesTail.tail_bound``.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    m, n = q.df.m, q.df.n
    if q.alpha == 0.0:
        return 0.0, SeriesTail(0, 0.0)
    if q.alpha == 1.0:
        return 1.0, SeriesTail(0, 0.0)
    if q.lam == 0.0:
        return float(q.alpha), SeriesTail(0, 0.0)
    mu = q.lam / 2.0
    lo, hi, tail = _poisson_window(mu, tol)
    if k_cap is not None and hi > k_cap:
        raise SeriesNonConvergence(f"series needs k_max={hi} > cap {k_cap} (lambda={q.lam})")
    w = np.exp(_log_poisson(mu, lo, hi))
    c = c_table(m, n, q.alpha, lo, hi)
    return float(min(1.0, np.dot(w, c))), SeriesTail(hi, tail)


def power_value(lam: float, m: int, n: int, alpha: float, tol: float = DEFAULT_TOL,
                k_cap: int | None = K_CAP) -> float:
    return power(PowerQuery(lam, DfPair(m, n), alpha), tol, k_cap)[0]


def log_miss(lam: float, m: int, n: int, alpha: float, tol: float = DEFAULT_TOL) -> float:
    """log(1 - pi_alpha(lam; m, n)), accurate far into the region where power rounds to 1."""
    DfPair(m, n)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if alpha == 0.0:
        return 0.0
    if alpha == 1.0:
        return -math.inf
    if lam == 0.0:
        return math.log1p(-alpha)
    mu = lam / 2.0
    y = _quantile_pair(m, n, alpha)[1]
    _, hi, _ = _poisson_window(mu, tol)
    if hi <= 20_000:
        f = _log_poisson(mu, 0, hi) + _log_one_minus_c(m, n, alpha, 0, hi)
        return float(special.logsumexp(f))

    # Large mu: terms w_k (1 - c_k) behave like Poisson(mu (1 - x)) weights, so
    # sum a window around that centre wide enough to lose < e^-40 relative mass.
    center = int(mu * y)
    width = int(math.sqrt(100.0 * (center + 1.0))) + 64
    while True:
        lo = max(0, center - width)
        top = center + width
        f = _log_poisson(mu, lo, top) + _log_one_minus_c(m, n, alpha, lo, top)
        fmax = f.max()
        i = int(f.argmax())
        low_ok = lo == 0 or f[0] < fmax - 40.0
        high_ok = f[-1] < fmax - 40.0
        if low_ok and high_ok:
            return float(special.logsumexp(f))
        if 0 < i < len(f) - 1:
            width *= 2
        else:
            center = lo + i
            width *= 2


def power_asymptotic(lambda_omega: float, m: int, n: int, alpha: float) -> float:
    """Large-noncentrality approximation 1 - exp(-(lam/2) b_{n,m;alpha})."""
    if lambda_omega < 0:
        raise DomainError("noncentrality must be >= 0")
    return -math.expm1(-0.5 * lambda_omega * _quantile(m, n, alpha))


def power_local_slope(m: int, n: int, alpha: float) -> float:
    """d pi_alpha / d lam at lam = 0, i.e. (c_{m,n;1;alpha} - alpha) / 2."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")
    return 0.5 * c_minus_alpha(m, n, 1, alpha)


def g_alpha(lam: float, m: int, n: int, q: int, alpha: float, tol: float = 1e-10) -> float:
    """Extra noncentrality g with pi_alpha(lam; m, n) = pi_alpha(lam + g; m + q, n - q)."""
    DfPair(m, n)
    if not 1 <= q <= n - 1:
        raise DomainError(f"q must satisfy 1 <= q <= n - 1, got q={q}, n={n}")
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    if lam == 0.0:
        return 0.0
    stol = min(DEFAULT_TOL, tol / 100)
    target = power_value(lam, m, n, alpha, stol)

    def gap(g):
        return power_value(lam + g, m + q, n - q, alpha, stol) - target

    hi = max(lam, 1.0)
    try:
        while gap(hi) < 0:
            hi *= 2.0
            if hi > 1e12:
                raise BracketError(f"g_alpha root not enclosed below 1e12 (lambda={lam})")
    except SeriesNonConvergence as exc:
        raise BracketError(str(exc)) from exc
    g = optimize.brentq(gap, 0.0, hi, xtol=1e-13, rtol=1e-15, maxiter=500)
    if abs(gap(g)) > tol:
        raise BracketError(f"g_alpha residual {gap(g):.3g} exceeds tol {tol}")
    return g


def crossing_difference(l: int, lam: float, alpha: float, tol: float = DEFAULT_TOL) -> float:
    """pi_alpha(lam; 1, 2l) - pi_alpha(4l/(2l-1) lam; 2, 2l-1)."""
    scale = 4.0 * l / (2.0 * l - 1.0)
    return (power_value(lam, 1, 2 * l, alpha, tol)
            - power_value(scale * lam, 2, 2 * l - 1, alpha, tol))


@dataclass(frozen=True)
class CrossingScan:
    alphas: np.ndarray
    differences: np.ndarray
    crossings: list  # bracketing (alpha_lo, alpha_hi) pairs with a sign change


def scan_crossings(l: int, lam: float, alphas=None) -> CrossingScan:
    if alphas is None:
        alphas = np.geomspace(1e-10, 1 - 1e-10, 64)
    alphas = np.asarray(alphas, dtype=float)
    diffs = np.array([crossing_difference(l, lam, a) for a in alphas])
    s = np.sign(diffs)
    crossings = [(alphas[i], alphas[i + 1]) for i in range(len(s) - 1) if s[i] * s[i + 1] < 0]
    return CrossingScan(alphas, diffs, crossings)


def alpha_star(l: int, lam: float, tol: float = 1e-10) -> float:
    """Smallest size alpha at which the univariate t^2 power curve meets the
    bivariate one in the configuration pi(lam; 1, 2l) vs pi(4l/(2l-1) lam; 2, 2l-1).

    Raises NoCrossingError when the 64-point scan finds no sign change. Several
    sign changes are reported with a warning; the smallest is returned.
    """
    if l < 1:
        raise DomainError(f"l must be a positive integer, got {l}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if l > 2:
        warnings.warn(f"alpha_star for l={l} is exploratory: existence is unproven", stacklevel=2)
    scan = scan_crossings(l, lam)
    if not scan.crossings:
        raise NoCrossingError(f"no sign change of the power difference for l={l}, lambda={lam}")
    if len(scan.crossings) > 1:
        warnings.warn(f"{len(scan.crossings)} sign changes found for l={l}, lambda={lam}", stacklevel=2)
    a, b = scan.crossings[0]
    return optimize.brentq(lambda al: crossing_difference(l, lam, al), a, b, xtol=tol, rtol=1e-15)
