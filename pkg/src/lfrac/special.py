"""Gamma/beta helpers and the Mittag-Leffler-type function E_alpha.

E_alpha(s) = sum_n c[n] s^n with c[0] = 1 and c[n+1] = c[n] / factor_n, where
factor_n is the L-derivative factor from :mod:`lfrac.series`. It is the
eigenfunction of the L-derivative: D E_alpha(lam t) = lam E_alpha(lam t).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError, NotConverged, PoleError
from .series import DEFAULT_TOL, FracOrder, OrderLike, Tolerance, as_alpha, ld_factors


def gamma_fn(z: float) -> float:
    """Gamma function on the reals; overflow returns ``inf``."""
    z = float(z)
    if z <= 0 and z == math.floor(z):
        raise PoleError(f"gamma has a pole at {z}")
    try:
        return math.gamma(z)
    except OverflowError:
        return math.inf


def beta_fn(z1: float, z2: float) -> float:
    if z1 <= 0 or z2 <= 0:
        raise DomainError(f"beta needs positive arguments, got ({z1}, {z2})")
    if z1 + z2 < 170:
        return math.gamma(z1) * math.gamma(z2) / math.gamma(z1 + z2)
    return math.exp(math.lgamma(z1) + math.lgamma(z2) - math.lgamma(z1 + z2))


def gamma_shift_ratio(x: float, a: float) -> float:
    """Gamma(x - a) / Gamma(x) for x > a > 0, safe for large x."""
    if x < 170:
        return math.gamma(x - a) / math.gamma(x)
    return math.exp(math.lgamma(x - a) - math.lgamma(x))


@dataclass(frozen=True)
class MLCoefficients:
    order: FracOrder
    c: np.ndarray


def ml_coeffs(order: OrderLike, n_max: int) -> MLCoefficients:
    """Coefficients c[0..n_max] of E_alpha by the multiplicative recurrence."""
    alpha = as_alpha(order)
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    c = np.ones(n_max + 1)
    c[1:] = np.cumprod(1.0 / ld_factors(alpha, n_max))
    c.setflags(write=False)
    return MLCoefficients(FracOrder(alpha), c)


def _sum_terms(alpha: float, k: int, s, tol: Tolerance, one, relative: bool = False) -> tuple:
    """Recurrence sum with the stall rule; ``one`` fixes the number type (float or mpmath).

    ``relative`` stops on terms small next to the sum itself, for sums much
    smaller than their terms.
    """
    a = one * alpha
    f = one
    term = one * (1 + 0j)
    for i in range(k):
        term *= (i + 1) / f
        f *= (i + 2) / (i + 2 - a)
    total = term * 0
    biggest = 0.0
    n = k
    run = 0
    used = 0
    while True:
        total += term
        mag = float(abs(term))
        biggest = max(biggest, mag)
        if relative:
            small = mag <= tol.rel_tol * float(abs(total)) or mag <= tol.abs_tol * tol.rel_tol
        else:
            small = tol.negligible(mag, float(abs(total)))
        if small:
            run += 1
            if run >= tol.stall_window:
                return total, used, biggest, n - k + 1
        else:
            run = 0
            used = n - k + 1
        if n - k + 1 >= tol.max_terms:
            raise NotConverged(f"E_alpha series at s={complex(s)} needs more than {tol.max_terms} terms", tol.max_terms)
        # term_{n+1} = term_n * s * (n+1)/(n+1-k) / factor_n
        term = term * s * (one * (n + 1) / (n + 1 - k)) / f
        f *= (n + 2) / (n + 2 - a)
        n += 1


def ml_series_sum(order: OrderLike, k: int, s: complex, tol: Tolerance = DEFAULT_TOL) -> tuple[complex, int]:
    """Sum the series of the k-th derivative of E_alpha at ``s``.

    Returns ``(value, n_terms_used)`` where ``n_terms_used`` counts the terms
    before the final run of ``stall_window`` negligible ones. When terms far
    larger than the sum cancel, the same recurrence is re-summed in mpmath
    with enough digits to absorb the cancellation.
    """
    alpha = as_alpha(order)
    if k < 0:
        raise DomainError("derivative order k must be non-negative")
    s = complex(s)
    total, used, biggest, n = _sum_terms(alpha, k, s, tol, 1.0)
    rounding = biggest * n * 2.2e-16
    if rounding <= tol.rel_tol * abs(total):
        return complex(total), used
    # absolute rounding error of ~1e-20 whatever the size of the largest term;
    # the sum may be tiny, so the re-sum also stops relative to it
    digits = 20 + int(math.log10(max(biggest, 1.0) * n))
    with mpmath.workdps(digits):
        total, used, _, _ = _sum_terms(alpha, k, mpmath.mpc(s), tol, mpmath.mpf(1), relative=True)
        return complex(total), used


def ml_eval(order: OrderLike, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
    return ml_series_sum(order, 0, s, tol)[0]


def ml_deriv_eval(order: OrderLike, k: int, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
    return ml_series_sum(order, k, s, tol)[0]


def ml_matrix_eval(order: OrderLike, M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """E_alpha of a square matrix by the power series, no eigendecomposition."""
    alpha = as_alpha(order)
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("matrix argument must be square")
    term = np.eye(M.shape[0], dtype=complex)
    total = np.zeros_like(term)
    f = 1.0
    run = 0
    for n in range(tol.max_terms):
        total += term
        if tol.negligible(np.abs(term).max(), np.abs(total).max()):
            run += 1
            if run >= tol.stall_window:
                return total
        else:
            run = 0
        term = term @ M / f
        f *= (n + 2) / (n + 2 - alpha)
    raise NotConverged(f"matrix series needs more than {tol.max_terms} terms", tol.max_terms)


def ml_matrix_eval_diag(order: OrderLike, M, tol: Tolerance = DEFAULT_TOL, max_cond: float = 1e6) -> np.ndarray:
    """Cross-check path: V diag(E_alpha(lam)) V^-1 for well-conditioned eigenbases."""
    M = np.asarray(M, dtype=complex)
    lam, V = np.linalg.eig(M)
    if np.linalg.cond(V) >= max_cond:
        raise DomainError("eigenvector basis too ill-conditioned for the diagonal path")
    d = np.array([ml_eval(order, x, tol) for x in lam])
    return (V * d) @ np.linalg.inv(V)


def classical_ml_eval(alpha: float, beta: float, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(s) = sum s^n / Gamma(n alpha + beta)."""
    if alpha <= 0 or beta <= 0:
        raise DomainError("classical Mittag-Leffler needs alpha > 0 and beta > 0")
    s = complex(s)
    if s == 0:
        return complex(1.0 / math.gamma(beta))
    log_s = cmath.log(s)
    total = 0j
    run = 0
    for n in range(tol.max_terms):
        x = n * alpha + beta
        if x < 170 and n * math.log(abs(s)) < 700:
            term = s**n / math.gamma(x)
        else:
            term = cmath.exp(n * log_s - math.lgamma(x))
        total += term
        if tol.negligible(abs(term), abs(total)):
            run += 1
            if run >= tol.stall_window:
                return total
        else:
            run = 0
    raise NotConverged(f"classical Mittag-Leffler series at s={s} exceeded {tol.max_terms} terms", tol.max_terms)
