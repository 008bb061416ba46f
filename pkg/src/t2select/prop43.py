"""Exact checks of the binomial-expectation inequality behind the univariate vs
bivariate crossing result, and exploratory scans of the crossing for l >= 3.

For N = 2l + 1 and delta > 0 the inequality reads

    E[ G_l(R) ] >= Gamma(l + 1/2 + k) / (Gamma(1/2) k!),   R ~ Binomial(k, 1 / (2 (1 + delta)))

with G_l(r) = Gamma(l + 1/2 + r) / Gamma(1/2 + r) = prod_{i<l} (1/2 + r + i). Both
sides are rational for rational delta, so equality cases are certified with
``fractions.Fraction`` rather than within float noise.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize, special

from . import ncf
from .specfun import DomainError

__all__ = [
    "EXACT_K_MAX",
    "HOLDS_TOL",
    "BinomialExpectationCheck",
    "binomial_expectation",
    "rhs_gamma_ratio",
    "check_binomial_inequality",
    "check_monotone_in_delta",
    "k1_threshold_exact",
    "check_k1_threshold",
    "cubic_l2",
    "ratio_step_l2",
    "check_induction_step_l2",
    "dpower_dalpha_1_2l",
    "dpower_dalpha_2_2lm1",
    "crossing_slope_at_zero",
    "tip_equality_residual",
    "ConjectureReport",
    "LambdaScan",
    "explore_conjecture",
    "checks_to_csv",
]

EXACT_K_MAX = 200
HOLDS_TOL = 1e-12
_HALF = Fraction(1, 2)


def _as_fraction(delta):
    if isinstance(delta, Fraction):
        return delta
    if isinstance(delta, (int, np.integer)):
        return Fraction(int(delta))
    if isinstance(delta, str):
        return Fraction(delta)
    return None


def _g_exact(l, r):
    out = Fraction(1)
    for i in range(l):
        out *= _HALF + r + i
    return out


def _rhs_exact(l, k):
    # Gamma(l + 1/2 + k) / (Gamma(1/2) k!) = G_l(k) * binom(2k, k) / 4^k
    return _g_exact(l, k) * Fraction(math.comb(2 * k, k), 4 ** k)


def _log_g(l, r):
    r = np.asarray(r, dtype=float)
    return special.gammaln(l + 0.5 + r) - special.gammaln(0.5 + r)


def binomial_expectation(l: int, delta, k: int):
    """E[G_l(R)] with R ~ Binomial(k, 1/(2(1+delta))).

    Exact ``Fraction`` when delta is rational (int, Fraction or "a/b" string) and
    k <= EXACT_K_MAX, otherwise a float evaluated in the log domain.
    """
    d = _as_fraction(delta)
    if d is not None and k <= EXACT_K_MAX:
        p = 1 / (2 * (1 + d))
        q = 1 - p
        return sum(math.comb(k, r) * p ** r * q ** (k - r) * _g_exact(l, r) for r in range(k + 1))
    dl = float(delta)
    p = 1.0 / (2.0 * (1.0 + dl))
    r = np.arange(k + 1, dtype=float)
    log_pmf = (special.gammaln(k + 1.0) - special.gammaln(r + 1.0) - special.gammaln(k - r + 1.0)
               + r * math.log(p) + (k - r) * math.log1p(-p))
    return float(np.exp(special.logsumexp(log_pmf + _log_g(l, r))))


def rhs_gamma_ratio(l: int, k: int, exact: bool = True):
    """Gamma(l + 1/2 + k) / (Gamma(1/2) Gamma(1 + k))."""
    if exact and k <= EXACT_K_MAX:
        return _rhs_exact(l, k)
    return math.exp(math.lgamma(l + 0.5 + k) - math.lgamma(0.5) - math.lgamma(1.0 + k))


@dataclass(frozen=True)
class BinomialExpectationCheck:
    l: int
    delta: float
    k: int
    lhs: float
    rhs: float
    holds: bool
    strict: bool
    exact: bool
    diff: Fraction | float = field(repr=False, default=0.0)


def _check_args(l, delta):
    if isinstance(l, bool) or not isinstance(l, (int, np.integer)) or l < 1:
        raise DomainError(f"l must be a positive integer, got {l!r}")
    if not float(Fraction(delta) if isinstance(delta, str) else delta) > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")


def check_binomial_inequality(l: int, delta, k_max: int) -> list[BinomialExpectationCheck]:
    """Evaluate both sides for k = 0..k_max and record equality / strictness per k."""
    _check_args(l, delta)
    if k_max < 2:
        raise DomainError("k_max must be >= 2")
    exact_ok = _as_fraction(delta) is not None
    out = []
    for k in range(k_max + 1):
        lhs = binomial_expectation(l, delta, k)
        exact = exact_ok and k <= EXACT_K_MAX
        rhs = rhs_gamma_ratio(l, k, exact)
        if exact:
            diff = lhs - rhs
            holds, strict = diff >= 0, diff > 0
        else:
            diff = lhs - rhs
            scale = max(1.0, abs(rhs))
            holds, strict = diff >= -HOLDS_TOL * scale, diff > HOLDS_TOL * scale
        out.append(BinomialExpectationCheck(l, float(Fraction(delta)) if isinstance(delta, str) else float(delta),
                                            k, float(lhs), float(rhs), bool(holds), bool(strict), exact, diff))
    return out


def check_monotone_in_delta(l: int, k: int, delta_grid) -> bool:
    """True when the expectation is strictly decreasing along the increasing
    delta grid (k >= 1), or constant (k = 0, where R = 0 surely)."""
    deltas = list(delta_grid)
    if len(deltas) < 2:
        raise DomainError("delta_grid needs at least two points")
    if any(float(Fraction(b)) <= float(Fraction(a)) for a, b in zip(deltas, deltas[1:])):
        raise DomainError("delta_grid must be strictly increasing")
    vals = [binomial_expectation(l, d, k) for d in deltas]
    if k == 0:
        return all(v == vals[0] for v in vals)
    return all(b < a for a, b in zip(vals, vals[1:]))


def k1_threshold_exact(l: int) -> Fraction:
    """Critical delta of the k = 1 instance, solved exactly.

    With p = 1/(2(1+delta)) the k = 1 expectation is (1-p) G(0) + p G(1), linear
    in p; equality with the right side fixes p*, and delta* = 1/(2 p*) - 1.
    The left side decreases in delta, so the inequality holds iff delta <= delta*.
    """
    g0, g1 = _g_exact(l, 0), _g_exact(l, 1)
    p_star = (_rhs_exact(l, 1) - g0) / (g1 - g0)
    return 1 / (2 * p_star) - 1


def check_k1_threshold(l: int) -> float:
    if l < 1:
        raise DomainError("l must be >= 1")
    return float(k1_threshold_exact(l))


def cubic_l2(k: int) -> int:
    return 4 * k ** 3 + 4 * k ** 2 - 5 * k - 3


def _f_l2(k):
    return Fraction(48 + 128 * k + 64 * k * k, 48 + 63 * k + 9 * k * k)


def ratio_step_l2(k: int) -> Fraction:
    """(k+1)/(k+1/2) f(k) - f(k+1) with f(k) = (48+128k+64k^2)/(48+63k+9k^2)."""
    return Fraction(k + 1) / (k + _HALF) * _f_l2(k) - _f_l2(k + 1)


def check_induction_step_l2(k_max: int) -> bool:
    """Cubic >= 0 on [1, k_max] (zero at k = 1, positive from k = 2), the ratio
    step inequality exact on [2, k_max], and the two agreeing in sign."""
    if k_max < 2:
        raise DomainError("k_max must be >= 2")
    if cubic_l2(1) != 0:
        return False
    for k in range(2, k_max + 1):
        c = cubic_l2(k)
        step = ratio_step_l2(k)
        if not (c > 0 and step > 0):
            return False
    return True


# ---- alpha derivatives of the two power functions ---------------------------

def _series_sum(log_terms_fn, lam, k_chunk=256, tol=1e-17):
    total = []
    k0 = 0
    while True:
        k = np.arange(k0, k0 + k_chunk, dtype=float)
        lt = log_terms_fn(k)
        total.append(lt)
        mu = lam / 2.0
        if k0 + k_chunk > mu and lt[-1] < special.logsumexp(np.concatenate(total)) + math.log(tol):
            break
        k0 += k_chunk
        if k0 > ncf.K_CAP:
            raise ncf.SeriesNonConvergence("derivative series did not converge")
    return float(np.exp(special.logsumexp(np.concatenate(total))))


def dpower_dalpha_1_2l(lam: float, l: int, alpha: float) -> float:
    """d/d alpha of pi_alpha(lam; 1, 2l) from the termwise derivative of the series.

    dc_k/d alpha = Gamma(l+1/2+k) Gamma(1/2) / (Gamma(l+1/2) Gamma(1/2+k)) * (1 - x)^k,
    x = b_{2l,1;alpha}.
    """
    if alpha == 0.0:
        y = 1.0
    else:
        y = ncf._quantile_pair(1, 2 * l, alpha)[1]
    ly = math.log(y) if y > 0 else -math.inf
    mu = lam / 2.0
    lmu = math.log(mu) if mu > 0 else -math.inf

    def lt(k):
        with np.errstate(invalid="ignore"):
            base = (special.gammaln(l + 0.5 + k) + math.lgamma(0.5) - math.lgamma(l + 0.5)
                    - special.gammaln(0.5 + k) - special.gammaln(k + 1.0) - mu)
            return base + np.where(k > 0, k * (lmu + ly), 0.0)

    if lam == 0.0:
        return 1.0
    return _series_sum(lt, lam)


def dpower_dalpha_2_2lm1(lam: float, l: int, alpha: float, exponent: float | None = None) -> float:
    """d/d alpha of pi_alpha(lam; 2, 2l-1).

    Here x = b_{2l-1,2;alpha} = alpha^{2/(2l-1)} and dc_k/d alpha =
    Gamma(l+1/2+k) / (Gamma(l+1/2) k!) * (1 - alpha^{2/(2l-1)})^k. ``exponent``
    overrides 2/(2l-1) so that alternative readings can be compared.
    """
    e = 2.0 / (2 * l - 1) if exponent is None else exponent
    y = -math.expm1(e * math.log(alpha)) if alpha > 0 else 1.0
    ly = math.log(y) if y > 0 else -math.inf
    mu = lam / 2.0
    if lam == 0.0:
        return 1.0
    lmu = math.log(mu)

    def lt(k):
        base = (special.gammaln(l + 0.5 + k) - math.lgamma(l + 0.5) - 2 * special.gammaln(k + 1.0) - mu)
        return base + np.where(k > 0, k * (lmu + ly), 0.0)

    return _series_sum(lt, lam)


def crossing_slope_at_zero(l: int, lam: float) -> float:
    """alpha-derivative at alpha = 0 of pi(lam; 1, 2l) - pi(4l/(2l-1) lam; 2, 2l-1).

    Both powers vanish at alpha = 0, so the sign of this slope is the sign of
    the power difference for all sufficiently small alpha.
    """
    return dpower_dalpha_1_2l(lam, l, 0.0) - dpower_dalpha_2_2lm1(4.0 * l / (2 * l - 1) * lam, l, 0.0)


def tip_equality_residual(l: int, lam: float) -> float:
    """g_alpha(lam; 1, 2l, 1) - (2l+1)/(2l-1) lam at alpha = alpha*_l(lam); zero at the crossing."""
    a = ncf.alpha_star(l, lam)
    return ncf.g_alpha(lam, 1, 2 * l, 1, a) - (2 * l + 1) / (2 * l - 1) * lam


# ---- exploratory scan -------------------------------------------------------

@dataclass(frozen=True)
class LambdaScan:
    lam: float
    differences: np.ndarray
    signs: str
    crossings: tuple
    alpha_star: float | None
    single_crossing: bool
    positive_below: bool
    slope_at_zero: float
    local_slope_prediction: float


@dataclass(frozen=True)
class ConjectureReport:
    l: int
    alpha_grid: np.ndarray
    scans: tuple
    consistent: bool
    label: str = "evidence, not proof"

    def to_text(self) -> str:
        lines = [f"crossing scan for l={self.l} (N={2 * self.l + 1}) -- {self.label}",
                 f"alpha grid: {len(self.alpha_grid)} points in [{self.alpha_grid[0]:.3g}, {self.alpha_grid[-1]:.3g}]"]
        for s in self.scans:
            a = "none" if s.alpha_star is None else f"{s.alpha_star:.10g}"
            lines.append(f"lambda={s.lam:<8g} crossings={len(s.crossings)} alpha*={a} "
                         f"single={s.single_crossing} positive_below={s.positive_below} "
                         f"slope_at_0={s.slope_at_zero:+.4g} local_slope_diff={s.local_slope_prediction:+.4g}")
            lines.append(f"    signs {s.signs}")
        verdict = ("consistent with a single crossing from + to - at every lambda"
                   if self.consistent else "NOT consistent with a single + to - crossing at every lambda")
        lines.append(f"summary: {verdict} ({self.label})")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "lambda", "alpha", "difference"])
        for s in self.scans:
            for a, d in zip(self.alpha_grid, s.differences):
                w.writerow([self.l, repr(s.lam), repr(float(a)), repr(float(d))])
        return buf.getvalue()


def explore_conjecture(l: int, lambda_grid, alpha_grid=None) -> ConjectureReport:
    """Sign structure of pi(lam; 1, 2l) - pi(4l/(2l-1) lam; 2, 2l-1) over alpha.

    Reports, per lambda, the sign string over the alpha grid, the located
    crossings, alpha* when exactly one + to - crossing exists, the exact
    alpha-slope at 0, and the lambda-slope difference at the smallest grid
    alpha (which predicts the small-lambda sign).
    """
    if l < 1:
        raise DomainError("l must be >= 1")
    alphas = np.geomspace(1e-10, 1 - 1e-10, 64) if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    scale = 4.0 * l / (2 * l - 1)
    scans = []
    for lam in lambda_grid:
        scan = ncf.scan_crossings(l, float(lam), alphas)
        signs = "".join("+" if d > 0 else "-" if d < 0 else "0" for d in scan.differences)
        single = len(scan.crossings) == 1 and signs[0] == "+"
        astar = None
        if single:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                a, b = scan.crossings[0]
                astar = optimize.brentq(lambda al: ncf.crossing_difference(l, float(lam), al), a, b,
                                        xtol=1e-12, rtol=1e-15)
        a0 = float(alphas[0])
        slope_pred = ncf.power_local_slope(1, 2 * l, a0) - scale * ncf.power_local_slope(2, 2 * l - 1, a0)
        scans.append(LambdaScan(float(lam), scan.differences, signs, tuple(scan.crossings), astar,
                                single, signs[0] == "+", crossing_slope_at_zero(l, float(lam)), slope_pred))
    consistent = all(s.single_crossing for s in scans)
    return ConjectureReport(l, alphas, tuple(scans), consistent)


def checks_to_csv(checks) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "delta", "k", "lhs", "rhs", "holds", "strict", "exact"])
    for c in checks:
        w.writerow([c.l, repr(c.delta), c.k, repr(c.lhs), repr(c.rhs), int(c.holds), int(c.strict), int(c.exact)])
    return buf.getvalue()
