import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from t2select.specfun import (
    DfPair,
    DomainError,
    QuantileOverflowError,
    beta_lower_quantile,
    beta_upper_quantile,
    f_upper_quantile,
    inv_reg_inc_beta,
    log_gamma,
    log_reg_inc_beta,
    reg_inc_beta,
    reg_inc_beta_array,
)

half_ints = st.integers(1, 50).map(lambda k: k / 2)
unit = st.floats(1e-6, 1 - 1e-6)


def test_log_gamma_values():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(0.5) == pytest.approx(0.5723649429247001, rel=1e-14)
    assert log_gamma(3.5) == pytest.approx(math.log(2.5 * 1.5 * 0.5 * math.sqrt(math.pi)), rel=1e-14)
    with pytest.raises(DomainError):
        log_gamma(0.0)


def test_reg_inc_beta_uniform():
    assert reg_inc_beta(1, 1, 0.3) == pytest.approx(0.3, abs=1e-15)


def test_reg_inc_beta_against_quadrature():
    # density integrated with mpmath
    a, b, x = 2.5, 3.0, 0.4
    mp.mp.dps = 30
    ref = mp.quad(lambda t: t ** (a - 1) * (1 - t) ** (b - 1), [0, x]) / mp.beta(a, b)
    assert abs(reg_inc_beta(a, b, x) - float(ref)) < 1e-13


def test_reg_inc_beta_closed_form_m2_n1():
    # I_x(1, 1/2) = 1 - sqrt(1 - x)
    for x in np.linspace(0, 1, 11):
        assert abs(reg_inc_beta(1.0, 0.5, x) - (1 - math.sqrt(1 - x))) < 1e-14


def test_domain_errors():
    for args in ((0, 1, 0.5), (1, -1, 0.5), (1, 1, 1.5), (1, 1, -0.1)):
        with pytest.raises(DomainError):
            reg_inc_beta(*args)
    with pytest.raises(DomainError):
        beta_lower_quantile(2, 3, 0.0)
    with pytest.raises(DomainError):
        DfPair(0, 3)


@given(half_ints, half_ints, unit)
def test_reg_inc_beta_matches_scipy(a, b, x):
    assert abs(reg_inc_beta(a, b, x) - special.betainc(a, b, x)) < 1e-13


@given(half_ints, half_ints, unit)
def test_symmetry(a, b, x):
    assert abs(reg_inc_beta(a, b, x) + reg_inc_beta(b, a, 1 - x) - 1) < 1e-13


@given(half_ints, half_ints, unit)
def test_round_trip(a, b, x):
    # invert in the tail whose probability is representable; p rounded to
    # within 1e-16 of 1 carries no information about x
    p = reg_inc_beta(a, b, x)
    if p <= 0.5:
        assert abs(inv_reg_inc_beta(a, b, p) - x) < 1e-10
    else:
        q = reg_inc_beta(b, a, 1 - x)
        assert abs(inv_reg_inc_beta(b, a, q) - (1 - x)) < 1e-10


@given(half_ints, half_ints, st.floats(0.0, 1.0))
def test_round_trip_probability_side(a, b, p):
    assert abs(reg_inc_beta(a, b, inv_reg_inc_beta(a, b, p)) - p) < 1e-12


@given(half_ints, half_ints, st.floats(0.01, 0.98))
def test_monotone_in_x(a, b, x):
    # near 1 the value saturates in double; the complement stays resolvable
    lo, hi = reg_inc_beta(a, b, x), reg_inc_beta(a, b, x + 0.01)
    assert hi > lo or reg_inc_beta(b, a, 1 - x - 0.01) < reg_inc_beta(b, a, 1 - x)


@given(half_ints, half_ints, st.floats(0.05, 0.95))
def test_log_version_consistent(a, b, x):
    assert math.exp(log_reg_inc_beta(a, b, x)) == pytest.approx(reg_inc_beta(a, b, x), rel=1e-12)


def test_array_version():
    x = np.linspace(0, 1, 23)
    ref = [reg_inc_beta(1.5, 4.0, t) for t in x]
    assert np.allclose(reg_inc_beta_array(1.5, 4.0, x), ref, atol=1e-15)


def test_inverse_endpoints():
    assert inv_reg_inc_beta(2, 3, 0.0) == 0.0
    assert inv_reg_inc_beta(2, 3, 1.0) == 1.0


@given(st.integers(1, 100), st.floats(0.001, 0.999))
def test_two_df_closed_forms(k, a):
    assert abs(beta_lower_quantile(2, k, a) - (1 - (1 - a) ** (2 / k))) < 1e-13
    assert abs(beta_lower_quantile(k, 2, a) - a ** (2 / k)) < 1e-13


def test_quantile_examples():
    assert beta_lower_quantile(2, 1, 0.5) == pytest.approx(0.75, abs=1e-15)
    assert beta_lower_quantile(1, 2, 0.5) / beta_lower_quantile(2, 1, 0.5) == pytest.approx(1 / 3, abs=1e-14)
    assert f_upper_quantile(5, 5, 0.5) == pytest.approx(1.0, abs=1e-13)


@given(st.integers(1, 30), st.integers(1, 30), st.floats(0.001, 0.999))
def test_upper_lower_identity(m, n, a):
    assert beta_upper_quantile(m, n, a) == 1 - beta_lower_quantile(n, m, a)


@given(st.integers(1, 30), st.integers(1, 30))
def test_lower_quantile_increasing_in_alpha(m, n):
    qs = [beta_lower_quantile(m, n, a) for a in (0.01, 0.05, 0.2, 0.5, 0.9)]
    assert all(np.diff(qs) > 0)


@given(st.integers(1, 40), st.integers(1, 40), st.floats(0.001, 0.999))
def test_f_quantile_matches_scipy(m, n, a):
    # nonnormalized f = (m/n) F
    ref = special.fdtri(m, n, 1 - a) * m / n
    assert f_upper_quantile(m, n, a) == pytest.approx(ref, rel=1e-10)


def test_f_quantile_against_density_quadrature():
    m, n, a = 3, 7, 0.05
    f = f_upper_quantile(m, n, a)
    mp.mp.dps = 30
    dens = lambda t: t ** (m / 2 - 1) * (1 + t) ** (-(m + n) / 2) / mp.beta(m / 2, n / 2)
    assert abs(float(mp.quad(dens, [f, mp.inf])) - a) < 1e-12


def test_f_quantile_overflow():
    with pytest.raises(QuantileOverflowError):
        f_upper_quantile(50, 1, 1e-15)
