"""Order-2 equations with analytic coefficients,

    D^2 x + p(t) D x + q(t) x = c(t),   x(0) = x0,  D x(0) = x01,

solved by matching power-series coefficients. Airy (q = a t) and Hermite
(p = -2t, q = a) presets also have closed-form coefficient products, used
as independent checks on the recurrence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .series import FracOrder, OrderLike, PowerSeries, as_alpha, cauchy_product, ld_factors, ld_termwise
from .special import gamma_fn, gamma_shift_ratio


@dataclass(frozen=True)
class Analytic2Problem:
    order: FracOrder
    p: PowerSeries
    q: PowerSeries
    c: PowerSeries
    init: tuple[complex, complex]
    horizon_T: float = 1.0

    def __post_init__(self):
        if not isinstance(self.order, FracOrder):
            object.__setattr__(self, "order", FracOrder(self.order))
        for name in ("p", "q", "c"):
            v = getattr(self, name)
            if not isinstance(v, PowerSeries):
                object.__setattr__(self, name, PowerSeries(v))
        if len(self.init) != 2:
            raise DomainError("init must be (x0, x01)")
        object.__setattr__(self, "init", (complex(self.init[0]), complex(self.init[1])))


def solve_analytic2(problem: Analytic2Problem, n_terms: int) -> PowerSeries:
    """Coefficients x_0..x_{n_terms-1} from the two-step recurrence.

    Input coefficients past their truncation are read as zero.
    """
    if n_terms < 2:
        raise DomainError("n_terms must be at least 2")
    alpha = problem.order.alpha
    f = ld_factors(alpha, n_terms)
    N = n_terms
    p = problem.p.truncate(N - 1).coeffs
    q = problem.q.truncate(N - 1).coeffs
    c = problem.c.truncate(N - 1).coeffs
    x = np.zeros(N, dtype=complex)
    x[0], x[1] = problem.init
    dx = np.zeros(N, dtype=complex)  # coefficients of D x: x_{l+1} f_l
    dx[0] = x[1] * f[0]
    for n in range(N - 2):
        s = c[n] - np.dot(p[n::-1], dx[: n + 1]) - np.dot(q[n::-1], x[: n + 1])
        x[n + 2] = s / (f[n + 1] * f[n])
        dx[n + 1] = x[n + 2] * f[n + 1]
    return PowerSeries(x)


def analytic2_residual(problem: Analytic2Problem, x: PowerSeries) -> float:
    """Largest retained coefficient of D^2 x + p D x + q x - c."""
    alpha = problem.order.alpha
    n_out = len(x) - 2
    if n_out < 1:
        return 0.0
    d1 = ld_termwise(x, alpha)
    d2 = ld_termwise(d1, alpha)
    p = problem.p.truncate(n_out - 1)
    q = problem.q.truncate(n_out - 1)
    total = (
        d2.coeffs[:n_out]
        + cauchy_product(p, d1.truncate(n_out - 1)).coeffs
        + cauchy_product(q, x.truncate(n_out - 1)).coeffs
        - problem.c.truncate(n_out - 1).coeffs
    )
    return float(np.abs(total).max())


def airy_problem(order: OrderLike, a: complex, init=(1, 0), horizon_T: float = 1.0) -> Analytic2Problem:
    return Analytic2Problem(FracOrder(as_alpha(order)), PowerSeries([0]), PowerSeries([0, a]), PowerSeries([0]), init, horizon_T)


def hermite_problem(order: OrderLike, a: complex, init=(1, 0), horizon_T: float = 1.0) -> Analytic2Problem:
    return Analytic2Problem(FracOrder(as_alpha(order)), PowerSeries([0, -2]), PowerSeries([a]), PowerSeries([0]), init, horizon_T)


def airy_basis(order: OrderLike, a: complex, n_terms: int) -> tuple[PowerSeries, PowerSeries]:
    """Closed-form Airy pair: y = 1 + O(t^3) on powers 3n, z = t + O(t^4) on powers 3n+1."""
    alpha = as_alpha(order)
    g2 = gamma_fn(2 - alpha) ** 2
    r = lambda x: gamma_shift_ratio(x, alpha)
    y = np.zeros(n_terms, dtype=complex)
    z = np.zeros(n_terms, dtype=complex)
    y[0] = 1
    if n_terms > 1:
        z[1] = 1
    for n in range(3, n_terms, 3):
        y[n] = y[n - 3] * (-a) * r(n) * r(n + 1) / g2
    for n in range(4, n_terms, 3):
        z[n] = z[n - 3] * (-a) * r(n) * r(n + 1) / g2
    return PowerSeries(y), PowerSeries(z)


def hermite_eigenvalue(order: OrderLike, i: int) -> float:
    """a = 2 Gamma(i) Gamma(2-alpha) / Gamma(i-alpha), the value that cuts one family to a polynomial."""
    alpha = as_alpha(order)
    if i < 1:
        raise DomainError("i must be at least 1")
    if i - alpha <= 0:  # alpha = 1, i = 1: 1/Gamma(0) = 0
        return 0.0
    return 2 * gamma_fn(2 - alpha) / gamma_shift_ratio(i, alpha)


def hermite_basis(order: OrderLike, a: complex, n_terms: int) -> tuple[PowerSeries, PowerSeries]:
    """Closed-form Hermite pair: odd y (y_1 = 1) and even z (z_0 = 1).

    Each step multiplies by r(k) r(k+1) / Gamma(2-a)^2 * (2 Gamma(2-a) / r(k-1) - a)
    with r(x) = Gamma(x-a)/Gamma(x). The first even step has no derivative
    term because p(0) = 0, so its factor is just -a.
    """
    alpha = as_alpha(order)
    g = gamma_fn(2 - alpha)
    g2 = g * g
    r = lambda x: gamma_shift_ratio(x, alpha)
    y = np.zeros(n_terms, dtype=complex)
    z = np.zeros(n_terms, dtype=complex)
    z[0] = 1
    if n_terms > 1:
        y[1] = 1
    for n in range(2, n_terms):
        src = y if n % 2 else z
        if n == 2:
            factor = -a
        else:
            factor = 2 * g / r(n - 1) - a
        src[n] = src[n - 2] * r(n) * r(n + 1) / g2 * factor
    return PowerSeries(y), PowerSeries(z)
