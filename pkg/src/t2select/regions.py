"""Closed-form dominance constants and rho-intervals for subset-size comparisons.

Asymptotic comparisons (large noncentrality) are governed by the quantile
ratio Q, local ones (small noncentrality) by the slope ratio Z. For the
bivariate problem these give intervals of rho where a univariate test beats the
bivariate one; for p variates with intraclass correlation and N = p + 2 they
give regions where some bivariate test beats the p-variate one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ncf
from .specfun import DomainError, beta_lower_quantile

__all__ = [
    "RegionReport",
    "q_ratio",
    "q_ratio_123",
    "q_ratio_2p",
    "z_ratio",
    "z_ratio_123",
    "z_ratio_2p",
    "uv_constants",
    "u_limit",
    "v_limit",
    "stable_quadratic_roots",
    "asymp_bivariate_interval",
    "local_bivariate_interval",
    "asymp_multivariate_region",
    "local_multivariate_region",
    "exact_bivariate_interval",
    "TABLE_ALPHAS",
    "TABLE_PS",
    "table_rows",
    "emit_table",
    "interval_polyline",
    "DEFAULT_EPSILON",
]

DEFAULT_EPSILON = 0.05
TABLE_ALPHAS = {1: (0.5, 0.2, 0.1, 0.05, 0.01), 2: (0.2, 0.1, 0.05, 0.01),
                3: (0.5, 0.2, 0.1, 0.05, 0.01), 4: (0.2, 0.1, 0.05, 0.01)}
TABLE_ETAS = {1: (1.0, 0.5, 0.0), 3: (0.9, 0.5, 0.0), 5: (1.0, 0.75, 0.5, 0.25, 0.0)}
TABLE_PS = (4, 10, 20, 40)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")


def _check_eta(eta):
    if not abs(eta) <= 1.0:
        raise DomainError(f"|eta| must be <= 1, got {eta!r}")


def _check_p(p):
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 3:
        raise DomainError(f"p must be an integer >= 3, got {p!r}")


# ---- ratio constants -------------------------------------------------------

def q_ratio(m: int, m2: int, N: int, alpha: float) -> float:
    """Q = b_{N-m2,m2;alpha} / b_{N-m,m;alpha} for subset sizes m < m2 < N."""
    _check_alpha(alpha)
    if not 1 <= m < m2 < N:
        raise DomainError(f"need 1 <= m < m2 < N, got m={m}, m2={m2}, N={N}")
    return beta_lower_quantile(N - m2, m2, alpha) / beta_lower_quantile(N - m, m, alpha)


def q_ratio_123(alpha: float) -> float:
    _check_alpha(alpha)
    return alpha / (2.0 - alpha)


def q_ratio_2p(p: int, alpha: float) -> float:
    """Q for sizes 2 vs p at N = p + 2: (1 - (1-alpha)^{2/p}) / alpha^{2/p}."""
    _check_alpha(alpha)
    nu = 2.0 / p
    return -math.expm1(nu * math.log1p(-alpha)) / alpha ** nu


def z_ratio(m: int, m2: int, N: int, alpha: float) -> float:
    """Z = (c_{m,N-m;1} - alpha) / (c_{m2,N-m2;1} - alpha), from the first increments."""
    _check_alpha(alpha)
    if not 1 <= m < m2 < N:
        raise DomainError(f"need 1 <= m < m2 < N, got m={m}, m2={m2}, N={N}")
    return ncf.c_minus_alpha(m, N - m, 1, alpha) / ncf.c_minus_alpha(m2, N - m2, 1, alpha)


def z_ratio_123(alpha: float) -> float:
    _check_alpha(alpha)
    return 2.0 * (2.0 - alpha) / (1.0 + alpha)


def z_ratio_2p(p: int, alpha: float) -> float:
    _check_alpha(alpha)
    nu = 2.0 / p
    num = p * alpha * -math.expm1(nu * math.log(alpha))
    den = 2.0 * (1.0 - alpha) * -math.expm1(nu * math.log1p(-alpha))
    return num / den


def uv_constants(p: int, alpha: float) -> tuple[float, float]:
    """U = (2/p) / Q_{2,p,p+2} and V = (2/p) Z_{2,p,p+2}."""
    _check_p(p)
    nu = 2.0 / p
    return nu / q_ratio_2p(p, alpha), nu * z_ratio_2p(p, alpha)


def u_limit(alpha: float) -> float:
    _check_alpha(alpha)
    return -1.0 / math.log1p(-alpha)


def v_limit(alpha: float) -> float:
    _check_alpha(alpha)
    return alpha * math.log(alpha) / ((1.0 - alpha) * math.log1p(-alpha))


# ---- quadratics ------------------------------------------------------------

def stable_quadratic_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Real roots (lo, hi) of a x^2 + b x + c, larger-magnitude root first.

    Raises DomainError when the discriminant is negative.
    """
    if a == 0.0:
        if b == 0.0:
            raise DomainError("degenerate quadratic")
        r = -c / b
        return r, r
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc > -1e-14 * (b * b + abs(4 * a * c)):
            disc = 0.0
        else:
            raise DomainError("quadratic has no real roots")
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return 0.0, 0.0
    r1, r2 = q / a, c / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _asymp_roots(Q, eta):
    # h(rho) = rho^2 - 2 Q eta rho + Q (1 + eta^2) - 1
    return stable_quadratic_roots(1.0, -2.0 * Q * eta, Q * (1.0 + eta * eta) - 1.0)


def _local_roots(Z, eta):
    # h(rho) = Z rho^2 - 2 eta rho + eta^2 + 1 - Z
    return stable_quadratic_roots(Z, -2.0 * eta, eta * eta + 1.0 - Z)


def _clip_unit(lo, hi):
    return max(lo, -1.0), min(hi, 1.0)


def asymp_bivariate_interval(alpha: float, eta: float) -> tuple[float, float]:
    """Roots of the large-noncentrality comparison quadratic (p = 2, N = 3)."""
    _check_alpha(alpha)
    _check_eta(eta)
    if alpha > 2.0 / 3.0:
        raise DomainError(f"alpha must be <= 2/3, got {alpha}")
    return _clip_unit(*_asymp_roots(q_ratio_123(alpha), eta))


def local_bivariate_interval(alpha: float, eta: float) -> tuple[float, float, float]:
    """Roots of the small-noncentrality comparison quadratic and 1 - max|root|."""
    _check_alpha(alpha)
    _check_eta(eta)
    if alpha > 0.5:
        raise DomainError(f"alpha must be <= 1/2, got {alpha}")
    lo, hi = _clip_unit(*_local_roots(z_ratio_123(alpha), eta))
    return lo, hi, 1.0 - max(abs(lo), abs(hi))


def exact_bivariate_interval(N: int, eta: float) -> tuple[float, float]:
    """Exact-power intervals for N = 3 (4 rho^2 - 2 eta rho + eta^2 - 3 < 0)
    and N = 5 (8 rho^2 - 6 eta rho + 3 eta^2 - 5 < 0)."""
    _check_eta(eta)
    if N == 3:
        return _clip_unit(*stable_quadratic_roots(4.0, -2.0 * eta, eta * eta - 3.0))
    if N == 5:
        return _clip_unit(*stable_quadratic_roots(8.0, -6.0 * eta, 3.0 * eta * eta - 5.0))
    raise DomainError(f"exact intervals exist only for N in {{3, 5}}, got N={N}")


# ---- multivariate regions ---------------------------------------------------

@dataclass(frozen=True)
class RegionReport:
    table_id: int | None
    row_key: dict
    constants: dict
    interval: tuple | None
    feasible_range: tuple
    condition_holds: bool
    lo_closed: bool = False
    note: str = ""

    def to_dict(self):
        d = asdict(self)
        d["interval"] = None if self.interval is None else list(self.interval)
        d["feasible_range"] = list(self.feasible_range)
        return d


def _feasible(p):
    return (-1.0 / (p - 1), 1.0)


def _half_line_region(slope_coef, rhs, flo, fhi):
    """{rho in (flo, fhi): slope_coef * rho > rhs} as an interval, or None."""
    if slope_coef > 0:
        lo, hi = max(rhs / slope_coef, flo), fhi
    elif slope_coef < 0:
        lo, hi = flo, min(rhs / slope_coef, fhi)
    else:
        lo, hi = (flo, fhi) if rhs < 0 else (0.0, 0.0)
    return (lo, hi) if lo < hi else None


def _case4_region(W, flo, fhi):
    # W > (1 - |rho|) / (1 - rho): all rho when W > 1, else rho < (W - 1)/(W + 1) <= 0
    if W > 1.0:
        return (flo, fhi), True
    cut = (W - 1.0) / (W + 1.0)
    return ((flo, cut) if cut > flo else None), False


def asymp_multivariate_region(p: int, alpha: float, case: int) -> RegionReport:
    """Large-delta region where some bivariate test beats the p-variate test (N = p + 2)."""
    _check_p(p)
    Q = q_ratio_2p(p, alpha)
    U = (2.0 / p) / Q
    flo, fhi = _feasible(p)
    key = {"p": p, "alpha": alpha, "case": case}
    if case == 1:
        psi = (1.0 - U) / ((p - 1) * U - 1.0) if (p - 1) * U != 1.0 else math.nan
        holds = (p - 1) * U > 1.0
        iv = _half_line_region((p - 1) * U - 1.0, 1.0 - U, flo, fhi)
        note = "" if holds else "(p-1)U <= 1: the inequality reverses"
        return RegionReport(2, key, {"Q": Q, "U": U, "psi_tilde_minus": psi}, iv, (flo, fhi), holds, note=note)
    if case == 2:
        consts = {"Q": Q, "U": U}
        if Q >= 1.0:
            return RegionReport(2, key, consts, None, (flo, fhi), False, note="Q >= 1")
        lo, hi = stable_quadratic_roots((p - 1) + (p - 3) * Q, -(p - 2) * (1.0 - Q), -(1.0 - Q))
        consts.update(rho_minus=lo, rho_plus=hi)
        return RegionReport(2, key, consts, (max(lo, flo), min(hi, fhi)), (flo, fhi), True)
    if case == 3:
        holds = Q < 1.0
        return RegionReport(None, key, {"Q": Q}, (flo, fhi) if holds else None, (flo, fhi), holds,
                            note="" if holds else "Q >= 1")
    if case == 4:
        if p % 2:
            raise DomainError("case 4 needs an even p")
        iv, holds = _case4_region(U, flo, fhi)
        return RegionReport(None, key, {"U": U}, iv, (flo, fhi), holds,
                            note="" if holds else "U <= 1: only sufficiently negative rho qualify")
    raise DomainError(f"case must be 1, 2, 3 or 4, got {case!r}")


def local_multivariate_region(p: int, alpha: float, case: int, epsilon: float = DEFAULT_EPSILON) -> RegionReport:
    """Small-delta counterpart with the delta^2 cap constants (times Lambda**)."""
    _check_p(p)
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    Z = z_ratio_2p(p, alpha)
    V = (2.0 / p) * Z
    flo, fhi = _feasible(p)
    key = {"p": p, "alpha": alpha, "case": case}
    if case == 1:
        k = (p - 1) * V - 1.0
        holds = k > 0
        psi = -(V - 1.0) / k if k != 0 else math.nan
        m_breve = (p - 2) / (p * (p + 2) * k) if holds else math.nan
        iv = _half_line_region(k, 1.0 - V, flo, fhi)
        return RegionReport(4, key, {"Z": Z, "V": V, "psi_breve_minus": psi, "m_breve": m_breve},
                            iv, (flo, fhi), holds, note="" if holds else "(p-1)V <= 1")
    if case == 2:
        lo, hi = stable_quadratic_roots((p - 1) * Z + (p - 3), -(p - 2) * (Z - 1.0), -(Z - 1.0))
        m_prime = (1.0 - hi) * (1.0 + (p - 1) * hi) / (2.0 * (p + 2) * (1.0 + (p - 3) * hi))
        return RegionReport(4, key, {"Z": Z, "V": V, "rho_minus": lo, "rho_plus": hi, "m_breve_prime": m_prime},
                            (max(lo, flo), min(hi, fhi)), (flo, fhi), True)
    if case == 3:
        holds = Z > 1.0
        cap = epsilon / (2.0 * (p + 2))
        return RegionReport(None, key, {"Z": Z, "epsilon": epsilon, "delta2_cap": cap},
                            (flo, 1.0 - epsilon) if holds else None, (flo, fhi), holds)
    if case == 4:
        if p % 2:
            raise DomainError("case 4 needs an even p")
        iv, holds = _case4_region(V, flo, 1.0 - epsilon)
        cap = epsilon / (p * (p + 2))
        return RegionReport(None, key, {"V": V, "epsilon": epsilon, "delta2_cap": cap}, iv, (flo, fhi), holds)
    raise DomainError(f"case must be 1, 2, 3 or 4, got {case!r}")


# ---- tables ----------------------------------------------------------------

_COLUMNS = {
    1: ("alpha", "Q", "eta", "rho_lo", "rho_hi"),
    2: ("p", "alpha", "Q", "U", "psi_tilde_minus", "rho_lo", "rho_hi", "feasible_lo"),
    3: ("alpha", "Z", "eta", "rho_lo", "rho_hi", "one_minus_m"),
    4: ("p", "alpha", "Z", "V", "psi_breve_minus", "m_breve", "rho_lo", "rho_hi", "m_breve_prime", "feasible_lo"),
    5: ("eta", "n3_rho_lo", "n3_rho_hi", "n5_rho_lo", "n5_rho_hi"),
}


def table_rows(table_id: int) -> list[dict]:
    """Every row of the requested table at full precision.

    Limit rows are included: alpha -> 0+ is encoded as alpha = 0.0 (tables 1
    and 3) and p -> infinity as p = inf (tables 2 and 4).
    """
    rows = []
    if table_id == 1:
        for a in TABLE_ALPHAS[1] + (0.0,):
            Q = q_ratio_123(a) if a else 0.0
            for eta in TABLE_ETAS[1]:
                lo, hi = _clip_unit(*_asymp_roots(Q, eta))
                rows.append(dict(alpha=a, Q=Q, eta=eta, rho_lo=lo, rho_hi=hi))
    elif table_id == 3:
        for a in TABLE_ALPHAS[3] + (0.0,):
            Z = z_ratio_123(a) if a else 4.0
            for eta in TABLE_ETAS[3]:
                lo, hi = _clip_unit(*_local_roots(Z, eta))
                rows.append(dict(alpha=a, Z=Z, eta=eta, rho_lo=lo, rho_hi=hi,
                                 one_minus_m=1.0 - max(abs(lo), abs(hi))))
    elif table_id == 2:
        for p in TABLE_PS:
            for a in TABLE_ALPHAS[2]:
                c1 = asymp_multivariate_region(p, a, 1).constants
                c2 = asymp_multivariate_region(p, a, 2).constants
                rows.append(dict(p=p, alpha=a, Q=c1["Q"], U=c1["U"], psi_tilde_minus=c1["psi_tilde_minus"],
                                 rho_lo=c2["rho_minus"], rho_hi=c2["rho_plus"], feasible_lo=-1.0 / (p - 1)))
        for a in TABLE_ALPHAS[2]:
            rows.append(dict(p=math.inf, alpha=a, Q=0.0, U=u_limit(a), psi_tilde_minus=0.0,
                             rho_lo=0.0, rho_hi=1.0, feasible_lo=0.0))
    elif table_id == 4:
        for p in TABLE_PS:
            for a in TABLE_ALPHAS[4]:
                c1 = local_multivariate_region(p, a, 1).constants
                c2 = local_multivariate_region(p, a, 2).constants
                rows.append(dict(p=p, alpha=a, Z=c1["Z"], V=c1["V"], psi_breve_minus=c1["psi_breve_minus"],
                                 m_breve=c1["m_breve"], rho_lo=c2["rho_minus"], rho_hi=c2["rho_plus"],
                                 m_breve_prime=c2["m_breve_prime"], feasible_lo=-1.0 / (p - 1)))
        for a in TABLE_ALPHAS[4]:
            rows.append(dict(p=math.inf, alpha=a, Z=math.inf, V=v_limit(a), psi_breve_minus=0.0, m_breve=0.0,
                             rho_lo=0.0, rho_hi=1.0, m_breve_prime=0.0, feasible_lo=0.0))
    elif table_id == 5:
        for eta in TABLE_ETAS[5]:
            a, b = exact_bivariate_interval(3, eta)
            c, d = exact_bivariate_interval(5, eta)
            rows.append(dict(eta=eta, n3_rho_lo=a, n3_rho_hi=b, n5_rho_lo=c, n5_rho_hi=d))
    else:
        raise DomainError(f"table_id must be 1..5, got {table_id!r}")
    return rows


def _fmt3(x) -> str:
    """Three decimals; values below 0.1 keep three significant digits."""
    if isinstance(x, str):
        return x
    if math.isinf(x):
        return "inf"
    if x == 0.0:
        return "0"
    if x == int(x) and abs(x) >= 1:
        return str(int(x))
    if abs(x) < 0.1:
        return f"{x:.3g}" if abs(x) >= 1e-4 else f"{x:.3e}"
    return f"{x:.3f}"


def _label(col, v):
    if col == "alpha" and v == 0.0:
        return "0+"
    if col == "p" and math.isinf(v):
        return "inf"
    if col == "p":
        return str(int(v))
    return v


def emit_table(table_id: int, fmt: str = "csv") -> str:
    """Render a table as full-precision CSV, JSON, or aligned 3-decimal text."""
    rows = table_rows(table_id)
    cols = _COLUMNS[table_id]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([int(r[c]) if c == "p" and math.isfinite(r[c]) else repr(float(r[c])) for c in cols])
        return buf.getvalue()
    if fmt == "json":
        def enc(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
        return json.dumps({"table": table_id, "columns": list(cols),
                           "rows": [{c: enc(r[c]) for c in cols} for r in rows]}, indent=2) + "\n"
    if fmt == "text":
        cells = [[_fmt3(_label(c, r[c])) for c in cols] for r in rows]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
        lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
        return "\n".join(lines) + "\n"
    raise DomainError(f"format must be csv, json or text, got {fmt!r}")


def interval_polyline(table_id: int, alpha: float | None = None, n: int = 201) -> list[tuple]:
    """Region boundaries over eta in [-1, 1] as (eta, rho_lo, rho_hi) rows.

    table 1 and 3 need ``alpha``; table 5 uses N = 3 (n3) and N = 5 (n5).
    """
    out = []
    for eta in np.linspace(-1.0, 1.0, n):
        eta = float(eta)
        if table_id == 1:
            out.append((eta, *asymp_bivariate_interval(alpha, eta)))
        elif table_id == 3:
            out.append((eta, *local_bivariate_interval(alpha, eta)[:2]))
        elif table_id == 5:
            out.append((eta, *exact_bivariate_interval(3, eta), *exact_bivariate_interval(5, eta)))
        else:
            raise DomainError("boundary polylines exist for tables 1, 3 and 5")
    return out
