"""Log-gamma, the regularized incomplete beta function and its inverse, and
the central beta / f quantiles built on them.

Conventions: ``b_{m,n}`` is the central beta variable chi2_m / (chi2_m + chi2_n),
so ``Pr[b_{m,n} <= x] = I_x(m/2, n/2)``. ``f_{m,n}`` is the *nonnormalized*
ratio chi2_m / chi2_n, related to the beta variable by b = f / (1 + f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "DfPair",
    "DomainError",
    "QuantileOverflowError",
    "log_gamma",
    "log_beta",
    "reg_inc_beta",
    "log_reg_inc_beta",
    "reg_inc_beta_array",
    "inv_reg_inc_beta",
    "beta_lower_quantile",
    "beta_upper_quantile",
    "f_upper_quantile",
]

_EPS = 1e-16
_FPMIN = 1e-300
_NEWTON_MAX_ITER = 200


class DomainError(ValueError):
    """An argument lies outside the domain of a special function."""


class QuantileOverflowError(ArithmeticError):
    """The f quantile is too large to represent (beta quantile within 1e-15 of 1)."""


@dataclass(frozen=True)
class DfPair:
    """Numerator / denominator degrees of freedom of an f (or beta) variable."""

    m: int
    n: int

    def __post_init__(self):
        _check_df(self.m, "m")
        _check_df(self.n, "n")

    @property
    def shapes(self) -> tuple[float, float]:
        return self.m / 2.0, self.n / 2.0


def _check_df(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v!r}")


def _check_prob(p, name="alpha"):
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0 or math.isinf(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    # betaln keeps full relative accuracy when one argument is huge, where the
    # three-lgamma difference loses ~log10(a) digits.
    return float(special.betaln(a, b))


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    max_iter = max(10_000, int(20 * math.sqrt(a + b)))
    for k in range(1, max_iter + 1):
        k2 = 2 * k
        aa = k * (b - k) * x / ((qam + k2) * (a + k2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + k) * (qab + k) * x / ((a + k2) * (qap + k2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_front(a, b, x):
    return a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)


def _check_beta_args(a, b, x):
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"shape parameters must be finite and positive, got a={a!r}, b={b!r}")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    The continued fraction is evaluated directly below x = (a+1)/(a+b+2) and
    through the symmetry I_x(a, b) = 1 - I_{1-x}(b, a) above it.
    """
    _check_beta_args(a, b, x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(_log_front(a, b, x)) * _betacf(a, b, x) / a
    return 1.0 - math.exp(_log_front(b, a, 1.0 - x)) * _betacf(b, a, 1.0 - x) / b


def log_reg_inc_beta(a: float, b: float, x: float) -> float:
    """ln I_x(a, b), accurate when I_x(a, b) underflows."""
    _check_beta_args(a, b, x)
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_front(a, b, x) + math.log(_betacf(a, b, x) / a)
    upper = math.exp(_log_front(b, a, 1.0 - x)) * _betacf(b, a, 1.0 - x) / b
    return math.log1p(-upper)


def _betacf_array(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    max_iter = max(10_000, int(20 * math.sqrt(a + b)))
    for k in range(1, max_iter + 1):
        k2 = 2 * k
        aa = k * (b - k) * x / ((qam + k2) * (a + k2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + k) * (qab + k) * x / ((a + k2) * (qap + k2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < _EPS
        if done.all():
            return h
    raise ArithmeticError("vectorized incomplete beta continued fraction did not converge")


def reg_inc_beta_array(a: float, b: float, x) -> np.ndarray:
    """Vectorized I_x(a, b) over an array of x with scalar shapes."""
    _check_beta_args(a, b, 0.5)
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise DomainError("x must lie in [0, 1]")
    out = np.empty_like(x)
    lower = x < (a + 1.0) / (a + b + 2.0)
    inner = (x > 0) & (x < 1)
    lb = log_beta(a, b)
    with np.errstate(divide="ignore"):
        sel = lower & inner
        if sel.any():
            xs = x[sel]
            front = np.exp(a * np.log(xs) + b * np.log1p(-xs) - lb)
            out[sel] = front * _betacf_array(a, b, xs) / a
        sel = ~lower & inner
        if sel.any():
            ys = 1.0 - x[sel]
            front = np.exp(b * np.log(ys) + a * np.log1p(-ys) - lb)
            out[sel] = 1.0 - front * _betacf_array(b, a, ys) / b
    out[x == 0] = 0.0
    out[x == 1] = 1.0
    return out


def inv_reg_inc_beta(a: float, b: float, p: float) -> float:
    """Solve I_x(a, b) = p for x.

    Newton iteration safeguarded by bisection on the bracket (0, 1). Targets
    above 1/2 are solved on the mirrored problem so that the small one of x
    and 1 - x always carries full relative precision.
    """
    _check_beta_args(a, b, 0.5)
    _check_prob(p, "p")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if p > 0.5:
        return 1.0 - inv_reg_inc_beta(b, a, 1.0 - p)

    lb = log_beta(a, b)
    # leading term I_x ~ x^a / (a B(a, b)) for small x
    x = math.exp((math.log(p) + math.log(a) + lb) / a)
    if not 0.0 < x < 1.0:
        x = a / (a + b)
    lo, hi = 0.0, 1.0
    for _ in range(_NEWTON_MAX_ITER):
        f = reg_inc_beta(a, b, x) - p
        if f == 0.0:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        log_dens = (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - lb
        x_new = x - f / math.exp(log_dens) if log_dens < 700 else x
        if not lo < x_new < hi:
            if lo > 0.0 and hi > 4.0 * lo:
                x_new = math.sqrt(lo * hi)
            elif lo == 0.0:
                x_new = 0.5 * hi if hi < 1e-3 else 0.5 * (lo + hi)
            else:
                x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4e-16 * x_new:
            return x_new
        x = x_new
    return x


@lru_cache(maxsize=4096)
def _lower_quantile(m: int, n: int, alpha: float) -> float:
    return inv_reg_inc_beta(m / 2.0, n / 2.0, alpha)


def beta_lower_quantile(m: int, n: int, alpha: float) -> float:
    """Lower alpha-quantile b_{m,n;alpha}: Pr[b_{m,n} < b_{m,n;alpha}] = alpha."""
    _check_df(m, "m")
    _check_df(n, "n")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")
    return _lower_quantile(int(m), int(n), float(alpha))


def beta_upper_quantile(m: int, n: int, alpha: float) -> float:
    """Upper alpha-quantile b^alpha_{m,n} = 1 - b_{n,m;alpha}."""
    return 1.0 - beta_lower_quantile(n, m, alpha)


def f_upper_quantile(m: int, n: int, alpha: float) -> float:
    """Upper alpha-quantile of the nonnormalized central f_{m,n}."""
    # b^alpha / (1 - b^alpha) with 1 - b^alpha = b_{n,m;alpha} taken directly
    tail = beta_lower_quantile(n, m, alpha)
    if tail <= 1e-15:
        raise QuantileOverflowError(f"f quantile overflows for m={m}, n={n}, alpha={alpha}")
    return (1.0 - tail) / tail
