import math

import numpy as np
import pytest
from scipy.special import binom

from lfrac.errors import DomainError, NotConverged, PoleError
from lfrac.series import PowerSeries, Tolerance, ld_termwise
from lfrac.special import (
    beta_fn,
    classical_ml_eval,
    gamma_fn,
    gamma_shift_ratio,
    ml_coeffs,
    ml_deriv_eval,
    ml_eval,
    ml_matrix_eval,
    ml_matrix_eval_diag,
    ml_series_sum,
)
from lfrac.verify import OracleConfig, oracle_classical_ml, oracle_ml

# 40-digit reference sums
ML_HALF_AT_1 = 3.6967106465542474
ML_HALF_AT_M2 = 0.2677662064312784
ML_HALF_DERIV_AT_1 = 6.196338849549254
ML_03_AT_2I = 0.10577343214516852 + 0.4066161057659081j


def test_gamma_examples():
    assert gamma_fn(5) == 24
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma_fn(1.5) == pytest.approx(0.5 * math.sqrt(math.pi), rel=1e-15)


@pytest.mark.parametrize("z", [0, -1, -7])
def test_gamma_poles(z):
    with pytest.raises(PoleError):
        gamma_fn(z)


def test_beta_examples():
    assert beta_fn(1, 1) == pytest.approx(1)
    assert beta_fn(1.5, 0.5) == pytest.approx(math.pi / 2, rel=1e-15)
    assert beta_fn(2, 3) == pytest.approx(1 / 12, rel=1e-15)
    with pytest.raises(DomainError):
        beta_fn(0, 1)


def test_gamma_shift_ratio_large_argument():
    assert gamma_shift_ratio(500.0, 0.3) == pytest.approx(math.exp(math.lgamma(499.7) - math.lgamma(500)), rel=1e-12)


def test_ml_coeffs_first_two_and_alpha_one():
    for alpha in (0.1, 0.5, 0.9, 1.0):
        c = ml_coeffs(alpha, 10).c
        assert c[0] == 1 and c[1] == 1
    c = ml_coeffs(1.0, 20).c
    np.testing.assert_allclose(c, [1 / math.factorial(n) for n in range(21)], rtol=1e-14)


def test_ml_coeffs_half_binomial_identity():
    c = ml_coeffs(0.5, 15).c
    want = [math.prod(binom(2 * j, j) for j in range(1, n + 1)) / 2.0 ** (n * n) for n in range(16)]
    np.testing.assert_allclose(c, want, rtol=1e-13)


def test_ml_coeff_ratios_decrease(rng):
    for alpha in rng.uniform(0.05, 1, 5):
        c = ml_coeffs(alpha, 80).c
        r = c[1:] / c[:-1]
        assert np.all(r > 0)
        assert np.all(np.diff(r[1:]) < 0)


def test_ml_eval_examples():
    for alpha in (0.1, 0.5, 1.0):
        assert ml_eval(alpha, 0) == 1
    assert ml_eval(1.0, 1) == pytest.approx(math.e, rel=1e-15)
    assert ml_eval(0.5, 1) == pytest.approx(ML_HALF_AT_1, rel=1e-14)
    assert ml_eval(0.5, -2) == pytest.approx(ML_HALF_AT_M2, rel=1e-13)
    assert abs(ml_eval(0.3, 2j) - ML_03_AT_2I) <= 1e-12 * abs(ML_03_AT_2I)


def test_oracle_agrees_with_recurrence_path(rng):
    for _ in range(10):
        alpha = rng.uniform(0.3, 1)
        s = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        assert abs(ml_eval(alpha, s) - oracle_ml(alpha, s)) <= 1e-12 * (1 + abs(oracle_ml(alpha, s)))


# 100-digit direct gamma sum; the terms peak near 1e21 before cancelling
CANCELLING = (0.3240848549746172, 3.8962667484796603 + 2.539121144623251j, -0.14073813082950476 + 0.06619444674645521j)


def test_heavy_cancellation_is_resummed():
    alpha, s, want = CANCELLING
    assert abs(ml_eval(alpha, s) - want) <= 1e-12 * (1 + abs(want))


def test_ml_series_sum_reports_terms():
    assert ml_series_sum(0.5, 0, 0) == (1, 1)
    _, n = ml_series_sum(0.5, 0, 1.0)
    assert 10 < n < 60


def test_ml_eval_not_converged():
    with pytest.raises(NotConverged):
        ml_eval(0.5, 1e6, Tolerance(max_terms=64))


def test_alpha_one_matches_exp_on_complex_grid(rng):
    r = 10 * np.sqrt(rng.uniform(0, 1, 100))
    s = r * np.exp(2j * np.pi * rng.uniform(0, 1, 100))
    for z in s:
        assert abs(ml_eval(1.0, z) - np.exp(z)) <= 1e-12 * (1 + abs(np.exp(z)))


@pytest.mark.parametrize("s", [0.5, -0.5, 0.3j, -0.3j])
def test_small_alpha_limit(s):
    target = 1 / (1 - s)
    assert abs(ml_eval(1e-3, s) - target) <= 1e-2 * abs(target)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_eigenfunction_identity(alpha):
    lam = 0.7 - 1.1j
    c = ml_coeffs(alpha, 40).c * lam ** np.arange(41)
    d = ld_termwise(PowerSeries(c), alpha).coeffs
    np.testing.assert_allclose(d, lam * c[:-1], rtol=1e-13, atol=1e-300)


def test_semigroup_defect():
    assert abs(ml_eval(0.5, 2) - ml_eval(0.5, 1) ** 2) > 1e-3


def test_real_positive_argument_bound(rng):
    for s in rng.uniform(0, 5, 20):
        assert ml_eval(0.4, s).real >= 1 + s


def test_derivatives_at_zero():
    for alpha in (0.2, 0.6, 1.0):
        c = ml_coeffs(alpha, 5).c
        assert ml_deriv_eval(alpha, 1, 0) == 1
        for k in range(4):
            assert ml_deriv_eval(alpha, k, 0) == pytest.approx(math.factorial(k) * c[k], rel=1e-15)
    assert ml_deriv_eval(0.5, 0, 1.3) == ml_eval(0.5, 1.3)
    assert ml_deriv_eval(0.5, 1, 1) == pytest.approx(ML_HALF_DERIV_AT_1, rel=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("s", [0.3, 1.0, 2.0])
def test_derivative_matches_finite_difference(k, s):
    h = 1e-5
    fd = (ml_deriv_eval(0.6, k - 1, s + h) - ml_deriv_eval(0.6, k - 1, s - h)) / (2 * h)
    exact = ml_deriv_eval(0.6, k, s)
    assert abs(fd - exact) <= 1e-6 * abs(exact)


def test_matrix_examples():
    np.testing.assert_array_equal(ml_matrix_eval(0.5, np.zeros((3, 3))), np.eye(3))
    D = ml_matrix_eval(0.5, np.diag([1.0, -2.0]))
    np.testing.assert_allclose(np.diag(D), [ML_HALF_AT_1, ML_HALF_AT_M2], rtol=1e-13)
    assert D[0, 1] == 0 and D[1, 0] == 0
    N = np.array([[0, 1], [0, 0]])
    np.testing.assert_allclose(ml_matrix_eval(0.5, N), np.eye(2) + N, atol=0)


def test_matrix_series_vs_diagonalization(rng):
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    a = ml_matrix_eval(0.7, M)
    b = ml_matrix_eval_diag(0.7, M)
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max()


def test_classical_ml():
    assert classical_ml_eval(1, 1, 1) == pytest.approx(math.e, rel=1e-15)
    assert classical_ml_eval(0.7, 2.5, 0) == pytest.approx(1 / math.gamma(2.5), rel=1e-15)
    ref = oracle_classical_ml(0.5, 1, 1, OracleConfig())
    assert abs(classical_ml_eval(0.5, 1, 1) - ref) <= 1e-13 * abs(ref)
