"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned: tables to +-0.001, quantile closed forms to 1e-12,
round trips to 1e-10, Monte Carlo to 4 binomial standard errors, region
consistency to 99% of cells with a 0.02 margin.
"""

import math
import time
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from reference_tables import COLUMNS, printed_rows
from t2select import ncf, prop43, regions
from t2select.altparams import AlternativeSpec, SubsetMask
from t2select.montecarlo import SimConfig, simulate_powers
from t2select.oracle import default_grid, region_scan_bivariate
from t2select.specfun import beta_lower_quantile, f_upper_quantile, inv_reg_inc_beta, reg_inc_beta

TABLE_TOL = 1e-3
# Printed cells that disagree with the formulas they are computed from; each is
# re-derived below from other printed cells of its own row or from mpmath.
ERRATA = {
    (2, 4, 0.1, None, "psi_tilde_minus"),
    (2, 10, 0.05, None, "rho_hi"),
    (2, 10, 0.01, None, "rho_hi"),
    (2, 20, 0.01, None, "U"),
    (3, None, 0.05, 0.5, "rho_hi"),
    (3, None, 0.05, 0.5, "one_minus_m"),
    (4, 4, 0.05, None, "rho_lo"),
    (4, 4, 0.01, None, "m_breve"),
    (4, 10, 0.01, None, "m_breve_prime"),
    (4, 40, 0.01, None, "Z"),
    (4, 40, 0.01, None, "V"),
    (4, 40, 0.01, None, "rho_hi"),
}


def _close(a, b, tol=TABLE_TOL):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol + 1e-12


def _compare(table_id):
    """Regenerate a table; return (n_cells, mismatches, seconds)."""
    t0 = time.perf_counter()
    computed = regions.table_rows(table_id)
    dt = time.perf_counter() - t0
    bad, n = [], 0
    for pr, cr in zip(printed_rows(table_id), computed, strict=True):
        for col in COLUMNS[table_id]:
            n += 1
            if not _close(pr[col], cr[col]):
                bad.append(((table_id, pr.get("p"), pr["alpha"] if "alpha" in pr else None, pr.get("eta"), col),
                            pr[col], cr[col]))
    return n, bad, dt


def _literal(report, cid, table_id, what):
    n, bad, dt = _compare(table_id)
    ok = not bad and dt < 1.0
    msg = f"{what}: {n - len(bad)}/{n} cells within {TABLE_TOL}, {dt:.3f}s"
    if bad:
        msg += "; mismatches " + ", ".join(f"{k[4]}@{k[1:4]} printed {p} computed {c:.5g}" for k, p, c in bad)
    report(cid, ok, msg)
    assert ok


# ---- criterion 1 and 5: exact match ---------------------------------------------------

def test_c01_table1(report):
    _literal(report, 1, 1, "Table 1 (18 endpoints + Q)")
    lo, hi = regions.asymp_bivariate_interval(0.05, 0.5)
    assert abs(lo + 0.971) <= TABLE_TOL and abs(hi - 0.997) <= TABLE_TOL


def test_c05_table5(report):
    _literal(report, 5, 5, "Table 5 (ten intervals)")


# ---- criteria 2-4: literal check fails on printed errata --------------------------------

_errata_reason = "printed table carries typographical errors; see the errata tests below"


@pytest.mark.xfail(strict=True, reason=_errata_reason)
def test_c02_table2_literal(report):
    _literal(report, 2, 2, "Table 2")


@pytest.mark.xfail(strict=True, reason=_errata_reason)
def test_c03_table3_literal(report):
    _literal(report, 3, 3, "Table 3")


@pytest.mark.xfail(strict=True, reason=_errata_reason)
def test_c04_table4_literal(report):
    _literal(report, 4, 4, "Table 4")


@pytest.mark.parametrize("table_id", [2, 3, 4])
def test_c02_c04_all_non_errata_cells_match(table_id):
    _, bad, dt = _compare(table_id)
    assert dt < 1.0
    assert {k for k, _, _ in bad} == {e for e in ERRATA if e[0] == table_id}


def test_c02_limits_and_named_examples():
    assert abs(regions.u_limit(0.01) - 99.499) <= TABLE_TOL
    assert abs(regions.z_ratio_123(1e-12) - 4.0) < 1e-9
    lo, hi, _ = regions.local_bivariate_interval(1e-12, 0.0)
    assert abs(lo + 0.866) <= TABLE_TOL and abs(hi - 0.866) <= TABLE_TOL
    row = next(r for r in regions.table_rows(4) if r["p"] == 10 and r["alpha"] == 0.01)
    assert abs(row["m_breve"] - 0.00254) <= 0.5e-5


# Independent re-derivations of each erratum from its own printed row.

def _case2_roots(a, b, c):
    d = math.sqrt(b * b - 4 * a * c)
    return (-b - d) / (2 * a), (-b + d) / (2 * a)


def _printed(table_id, **key):
    return next(r for r in printed_rows(table_id) if all(r[k] == v for k, v in key.items()))


def _mp_q_2p(p, alpha):
    a = mp.mpf(alpha)
    return (1 - (1 - a) ** (mp.mpf(2) / p)) / a ** (mp.mpf(2) / p)


def _mp_z_2p(p, alpha):
    a = mp.mpf(alpha)
    x2 = a ** (mp.mpf(2) / p)                  # b_{p,2;a}
    xp = 1 - (1 - a) ** (mp.mpf(2) / p)        # b_{2,p;a}
    c2 = mp.betainc(mp.mpf(p) / 2, 2, 0, x2, regularized=True)
    cp = mp.betainc(1, mp.mpf(p) / 2 + 1, 0, xp, regularized=True)
    return (c2 - a) / (cp - a)


def test_c02_errata_are_printing_errors():
    r = _printed(2, p=4, alpha=0.1)
    p, U = 4, r["U"]
    assert abs((1 - U) / ((p - 1) * U - 1) - r["psi_tilde_minus"]) > 5e-3

    for alpha in (0.05, 0.01):
        r = _printed(2, p=10, alpha=alpha)
        p, Q = 10, r["Q"]
        hi = _case2_roots((p - 1) + (p - 3) * Q, -(p - 2) * (1 - Q), -(1 - Q))[1]
        assert abs(hi - r["rho_hi"]) > 2e-3

    r = _printed(2, p=20, alpha=0.01)
    U = float(mp.mpf(2) / 20 / _mp_q_2p(20, 0.01))
    assert abs(U - 62.81128) < 1e-5 and abs(U - r["U"]) > 1e-3


def test_c03_erratum_is_printing_error():
    r = _printed(3, alpha=0.05, eta=0.5)
    Z, eta = r["Z"], r["eta"]
    hi = _case2_roots(Z, -2 * eta, eta * eta + 1 - Z)[1]
    assert abs(hi - r["rho_hi"]) > 1e-3
    assert abs(r["one_minus_m"] - (1 - r["rho_hi"])) < 1e-9  # the two cells share one slip


def test_c04_errata_are_printing_errors():
    r = _printed(4, p=4, alpha=0.05)
    p, Z = 4, r["Z"]
    lo = _case2_roots((p - 1) * Z + (p - 3), -(p - 2) * (Z - 1), -(Z - 1))[0]
    assert abs(lo - r["rho_lo"]) > 1e-3

    r = _printed(4, p=4, alpha=0.01)
    m_breve = (p - 2) / (p * (p + 2) * ((p - 1) * r["V"] - 1))
    assert abs(m_breve - r["m_breve"]) > 5e-3

    r = _printed(4, p=10, alpha=0.01)
    p, rho = 10, r["rho_hi"]
    mbp = (1 - rho) * (1 + (p - 1) * rho) / (2 * (p + 2) * (1 + (p - 3) * rho))
    assert abs(mbp - r["m_breve_prime"]) > 1e-3

    # p = 40, alpha = .01: the printed row is consistent with a wrong Z
    r = _printed(4, p=40, alpha=0.01)
    p = 40
    z_true = float(_mp_z_2p(p, 0.01))
    assert abs(z_true - 82.70429) < 1e-4 and abs(r["Z"] - z_true) > 7
    assert abs(2 / p * r["Z"] - r["V"]) < 1e-3
    hi_printed_z = _case2_roots((p - 1) * r["Z"] + (p - 3), -(p - 2) * (r["Z"] - 1), -(r["Z"] - 1))[1]
    assert abs(hi_printed_z - r["rho_hi"]) < 1e-3


# ---- criterion 6 ----------------------------------------------------------------------

def test_c06_binomial_certificate(report):
    l1 = prop43.check_binomial_inequality(1, Fraction(1), 200)
    l2 = prop43.check_binomial_inequality(2, Fraction(1, 3), 200)
    eq_ok = l1[0].holds and not l1[0].strict and all(c.holds and not c.strict for c in l2[:3])
    exact = all(c.exact for c in l1 + l2)
    strict_ok = all(c.strict for c in (l1 + l2) if 3 <= c.k <= 200)
    cubic_ok = prop43.cubic_l2(1) == 0 and all(prop43.cubic_l2(k) > 0 for k in range(2, 201))
    ok = eq_ok and exact and strict_ok and cubic_ok
    report(6, ok, f"equalities {eq_ok}, exact arithmetic {exact}, strict 3<=k<=200 {strict_ok}, cubic {cubic_ok}")
    assert ok


# ---- criterion 7 ----------------------------------------------------------------------

def test_c07_crossing(report):
    t0 = time.perf_counter()
    grid = np.geomspace(1e-10, 1 - 1e-10, 64)
    failures = []
    for l in (1, 2):
        for lam in (0.5, 1.0, 2.0, 5.0, 10.0):
            a = ncf.alpha_star(l, lam)
            if not 0 < a < 1:
                failures.append((l, lam, "root"))
                continue
            for g in grid:
                d = ncf.crossing_difference(l, lam, g)
                if (g < a and not d > 0) or (g > a and not d < 0):
                    failures.append((l, lam, g))
    dt = time.perf_counter() - t0
    ok = not failures and dt < 30
    report(7, ok, f"10 (l, lambda) pairs, sign pattern on 64-point grid, {len(failures)} violations, {dt:.1f}s")
    assert ok


# ---- criterion 8 ----------------------------------------------------------------------

def _random_specs(n, seed=20240611):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = int(rng.integers(2, 5))
        N = int(rng.integers(p + 1, 9))
        a = rng.normal(size=(p, p + 2))
        cov = a @ a.T
        d = np.sqrt(np.diag(cov))
        corr = cov / np.outer(d, d)
        np.fill_diagonal(corr, 1.0)
        gamma = rng.normal(scale=0.6, size=p)
        out.append(AlternativeSpec.from_arrays(gamma, corr, N))
    return out


@pytest.mark.slow
def test_c08_series_vs_simulation(report):
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    for i, spec in enumerate(_random_specs(10)):
        subsets = [SubsetMask.full(spec.p)] + [SubsetMask(1 << j, spec.p) for j in range(spec.p)]
        cfg = SimConfig(spec, 1_000_000, seed=1000 + i, alpha=0.05, ks_samples=0)
        for r in simulate_powers(cfg, subsets):
            worst = max(worst, abs(r.z_score))
            n += 1
    dt = time.perf_counter() - t0
    ok = worst <= 4.0 and dt < 300
    report(8, ok, f"{n} subset powers over 10 specs at 1e6 reps, max |z| = {worst:.2f} SE, {dt:.0f}s")
    assert ok


# ---- criterion 9 ----------------------------------------------------------------------

def test_c09_quantile_integrity(report):
    alphas = np.round(np.arange(1, 1000) / 1000, 3)
    worst_cf = worst_rt = 0.0
    for k in range(1, 101):
        for a in alphas:
            a = float(a)
            worst_cf = max(worst_cf,
                           abs(beta_lower_quantile(2, k, a) - (1 - (1 - a) ** (2 / k))),
                           abs(beta_lower_quantile(k, 2, a) - a ** (2 / k)))
    for m in (1, 2, 3, 5, 10, 30, 100):
        for n in (1, 2, 4, 7, 20, 100):
            for a in (0.001, 0.01, 0.05, 0.1, 0.5, 0.9, 0.999):
                x = inv_reg_inc_beta(m / 2, n / 2, a)
                worst_rt = max(worst_rt, abs(reg_inc_beta(m / 2, n / 2, x) - a))
                fq = f_upper_quantile(m, n, a)
                worst_rt = max(worst_rt, abs(1 - reg_inc_beta(m / 2, n / 2, fq / (1 + fq)) - a))
    ok = worst_cf <= 1e-12 and worst_rt <= 1e-10
    report(9, ok, f"closed forms max err {worst_cf:.2e} (<=1e-12), round trip max err {worst_rt:.2e} (<=1e-10)")
    assert ok


# ---- criterion 10 ---------------------------------------------------------------------

def test_c10_monotonicity(report):
    bad = []
    lam_grid = np.geomspace(0.01, 200, 40)
    for m, n in ((1, 2), (2, 1), (3, 5), (5, 3)):
        for a in (0.01, 0.05, 0.2):
            pw = [ncf.power_value(float(x), m, n, a) for x in lam_grid]
            if not all(np.diff(pw) > 0):
                bad.append(("lambda", m, n, a))
    for lam in (0.5, 2.0, 8.0):
        for a in (0.01, 0.05, 0.2):
            P = np.array([[ncf.power_value(lam, m, n, a) for n in range(1, 6)] for m in range(1, 6)])
            if not (np.all(np.diff(P, axis=0) < 0) and np.all(np.diff(P, axis=1) > 0)):
                bad.append(("m/n", lam, a))
    g_lams = np.linspace(0.25, 20, 20)
    for m, n, q in ((1, 2, 1), (1, 4, 1), (2, 4, 2)):
        if ncf.g_alpha(0.0, m, n, q, 0.05) != 0.0:
            bad.append(("g0", m, n, q))
        g = [ncf.g_alpha(float(x), m, n, q, 0.05) for x in g_lams]
        if not all(np.diff(g) > 0):
            bad.append(("g", m, n, q))
    ok = not bad
    report(10, ok, f"power in lambda/m/n and g_alpha monotone; violations {bad}")
    assert ok


# ---- criterion 11 ---------------------------------------------------------------------

@pytest.mark.slow
def test_c11_oracle_region_consistency(report):
    t0 = time.perf_counter()
    eta, rho = default_grid(101)
    parts = []
    for g2, fn in ((1e4, regions.asymp_bivariate_interval), (1e-4, regions.local_bivariate_interval)):
        for alpha in regions.TABLE_ALPHAS[1]:
            cells = region_scan_bivariate(3, alpha, eta, rho, g2)
            inside = hit = 0
            for c in cells:
                lo, hi = fn(alpha, c.eta)[:2]
                if lo + 0.02 < c.rho < hi - 0.02:
                    inside += 1
                    hit += c.oracle_size == 1
            parts.append((g2, alpha, hit / inside))
    dt = time.perf_counter() - t0
    worst = min(f for _, _, f in parts)
    ok = worst >= 0.99 and dt < 600
    report(11, ok, f"10 scans of 101x101 cells, min fraction of interior cells with oracle size 1 = {worst:.4f}, {dt:.0f}s")
    assert ok
