import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from t2select.altparams import AlternativeSpec, bivariate_spec, enumerate_subsets, lambda_subset
from t2select.oracle import (
    cells_to_csv,
    lambda_threshold_estimate,
    oracle,
    region_fractions,
    region_scan_bivariate,
    subset_log_miss,
)
from t2select.specfun import DomainError


def scipy_power(lam, m, n, alpha):
    f = stats.f.isf(alpha, m, n)
    return stats.ncf.sf(f, m, n, lam) if lam > 0 else alpha


@st.composite
def small_specs(draw):
    p = draw(st.integers(1, 4))
    rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
    a = rng.normal(size=(p, p + 2))
    cov = a @ a.T
    d = np.sqrt(np.diag(cov))
    corr = cov / np.outer(d, d)
    np.fill_diagonal(corr, 1.0)
    N = draw(st.integers(p + 1, 9))
    return AlternativeSpec.from_arrays(rng.normal(scale=0.8, size=p), corr, N)


@settings(max_examples=40)
@given(small_specs(), st.sampled_from([0.01, 0.05, 0.2]))
def test_oracle_matches_brute_force(spec, alpha):
    res = oracle(spec, alpha)
    powers = {om.bits: scipy_power(lambda_subset(spec, om), om.size, spec.N - om.size, alpha)
              for om in enumerate_subsets(spec.p)}
    best = max(powers.values())
    assert res.best_power == pytest.approx(best, abs=1e-9)
    assert powers[res.best_subset.bits] >= best - 1e-9
    full = (1 << spec.p) - 1
    assert res.full_power == pytest.approx(powers[full], abs=1e-9)
    for sb in res.per_size_best:
        same = [v for b, v in powers.items() if bin(b).count("1") == sb.size]
        assert sb.power == pytest.approx(max(same), abs=1e-9)


def test_ties_go_to_smaller_subset():
    spec = AlternativeSpec.from_arrays([1.0, 1.0], np.eye(2), 6)
    res = oracle(spec, 0.05)
    size1 = res.per_size_best[0]
    assert size1.subset.bits == 1
    # zero-mean alternative: every subset has power alpha, the first singleton wins
    null = AlternativeSpec.from_arrays([0.0, 0.0, 0.0], np.eye(3), 6)
    r0 = oracle(null, 0.05)
    assert r0.best_subset.bits == 1 and r0.best_power == pytest.approx(0.05)


def test_oracle_far_into_saturation():
    # powers all round to 1; the log-miss scale still separates them
    spec = bivariate_spec(100.0, 0.5, 0.3, N=3)
    res = oracle(spec, 0.05)
    assert res.best_power == 1.0 and res.best_size == 1
    assert res.best_log_miss < res.full_log_miss


def test_oracle_domain():
    with pytest.raises(DomainError):
        oracle(bivariate_spec(1.0, 0.5, 0.3), 0.0)
    big = AlternativeSpec.from_arrays(np.ones(25), np.eye(25), 30)
    with pytest.raises(DomainError):
        oracle(big, 0.05)


def test_to_dict():
    d = oracle(bivariate_spec(1.0, 0.5, 0.3, 4), 0.05).to_dict()
    assert set(d) >= {"best_subset", "best_power", "best_size", "per_size_best", "full_power"}
    assert d["best_subset_indices"] == [1]


@pytest.mark.parametrize("g2, lo, hi", [(50.0, -0.971, 0.997), (0.01, -0.691, 0.962)])
def test_size_one_inside_intervals(g2, lo, hi):
    rho = np.linspace(-0.9, 0.9, 37)
    rho = rho[(rho > lo + 0.02) & (rho < hi - 0.02)]
    cells = region_scan_bivariate(3, 0.05, [0.5], rho, g2)
    assert all(c.oracle_size == 1 for c in cells)


def test_scan_outside_interval_picks_pair():
    # strong negative correlation with same-sign means favours the pair
    cells = region_scan_bivariate(3, 0.05, [1.0], [-0.7], 0.01)
    assert cells[0].oracle_size == 2 and cells[0].singleton_gap < 0


def test_scan_order_and_csv():
    eta, rho = [-0.5, 0.5], [-0.2, 0.0, 0.4]
    cells = region_scan_bivariate(3, 0.05, eta, rho, 1.0)
    assert [(c.eta, c.rho) for c in cells] == [(e, r) for e in eta for r in rho]
    rows = list(csv.reader(io.StringIO(cells_to_csv(cells))))
    assert rows[0] == ["eta", "rho", "oracle_size", "best_subset", "best_power", "full_power"]
    assert len(rows) == 7
    assert sum(region_fractions(cells).values()) == pytest.approx(1.0)
    assert cells_to_csv(cells) == cells_to_csv(region_scan_bivariate(3, 0.05, eta, rho, 1.0))


def test_scan_domain():
    with pytest.raises(DomainError):
        region_scan_bivariate(3, 0.05, [1.5], [0.0], 1.0)
    with pytest.raises(DomainError):
        region_scan_bivariate(3, 0.05, [0.5], [1.0], 1.0)


def test_subset_log_miss_null():
    assert subset_log_miss(0.0, 2, 5, 0.05) == pytest.approx(math.log(0.95))


@pytest.mark.parametrize("m, m2, N", [(1, 2, 3), (2, 4, 6)])
def test_threshold_asymptotic(m, m2, N):
    a, s = 0.05, 0.05
    est = lambda_threshold_estimate(m, m2, N, a, "asymptotic", slack=s)
    assert est.found and est.is_estimate and est.bracket[0] < est.value
    Q = est.ratio
    for lam in est.value * np.array([1.01, 2.0, 10.0]):
        assert subset_log_miss(lam, m, N, a) < subset_log_miss(lam / (Q * (1 + s)), m2, N, a)
    lam = est.bracket[0] * 0.999
    assert subset_log_miss(lam, m, N, a) >= subset_log_miss(lam / (Q * (1 + s)), m2, N, a)


@pytest.mark.parametrize("m, m2, N", [(1, 2, 3), (2, 4, 6)])
def test_threshold_local(m, m2, N):
    a, s = 0.05, 0.05
    est = lambda_threshold_estimate(m, m2, N, a, "local", slack=s)
    assert est.found
    Z = est.ratio
    for lam in est.value * np.array([0.001, 0.1, 0.99]):
        assert subset_log_miss(lam, m2, N, a) < subset_log_miss(lam * (1 - s) / Z, m, N, a)


def test_threshold_domain():
    with pytest.raises(DomainError):
        lambda_threshold_estimate(2, 2, 5, 0.05)
    with pytest.raises(DomainError):
        lambda_threshold_estimate(1, 2, 3, 0.05, "sideways")
