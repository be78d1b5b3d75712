"""Truncated complex power series and the termwise L-fractional rules.

A series stores coefficients x_0..x_N of t^n. The L-derivative acts on
t^{n+1} as multiplication by

    factor_n = Gamma(n+2) Gamma(2-a) / Gamma(n+2-a),

and the L-integral divides by the same factor while raising the degree.
The factors are built by the recurrence factor_{n+1} = factor_n (n+2)/(n+2-a),
which stays finite long after the individual gamma values overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import DomainError, NotConverged


@dataclass(frozen=True)
class FracOrder:
    """Fractional index alpha in (0, 1]."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or not 0.0 < a <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


OrderLike = Union[FracOrder, float]


def as_alpha(order: OrderLike) -> float:
    """Validate and unwrap an order given as FracOrder or a bare float."""
    if isinstance(order, FracOrder):
        return order.alpha
    return FracOrder(order).alpha


@dataclass(frozen=True)
class Tolerance:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_terms: int = 4096
    stall_window: int = 5

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and positive, got {v!r}")
        if self.stall_window < 1:
            raise DomainError("stall_window must be at least 1")
        if self.max_terms < self.stall_window:
            raise DomainError("max_terms must be at least stall_window")

    def negligible(self, term: float, total: float) -> bool:
        """True when ``term`` is small next to the running ``total``."""
        return term <= self.rel_tol * (1.0 + total) or term <= self.abs_tol


DEFAULT_TOL = Tolerance()


class PowerSeries:
    """Immutable truncated series sum_{n=0}^{N} coeffs[n] t^n."""

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex).reshape(-1)
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def truncation_order(self) -> int:
        return self._c.size - 1

    def __len__(self):
        return self._c.size

    def __getitem__(self, n):
        return self._c[n]

    def __call__(self, t):
        """Plain Horner evaluation, no convergence checks. Accepts arrays."""
        t = np.asarray(t)
        acc = np.zeros(t.shape, dtype=complex)
        for a in self._c[::-1]:
            acc = acc * t + a
        return acc if acc.ndim else complex(acc)

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            return add(self, other)
        c = self._c.copy()
        c[0] += other
        return PowerSeries(c)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(-self._c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            return cauchy_product(self, other)
        return PowerSeries(self._c * other)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, PowerSeries) and np.array_equal(self._c, other._c)

    __hash__ = None

    def __repr__(self):
        return f"PowerSeries({self._c.tolist()!r})"

    def truncate(self, order: int) -> PowerSeries:
        """Keep coefficients up to t^order, zero-padding if needed."""
        c = np.zeros(order + 1, dtype=complex)
        k = min(order + 1, self._c.size)
        c[:k] = self._c[:k]
        return PowerSeries(c)


@lru_cache(maxsize=128)
def _factor_table(alpha: float, size: int) -> np.ndarray:
    n = np.arange(size - 1, dtype=float)
    ratios = (n + 2.0) / (n + 2.0 - alpha)
    f = np.empty(size)
    f[0] = 1.0
    f[1:] = np.cumprod(ratios)
    f.setflags(write=False)
    return f


def ld_factors(order: OrderLike, n: int) -> np.ndarray:
    """factor_0..factor_{n-1}, read-only and cached per alpha."""
    alpha = as_alpha(order)
    size = 64
    while size < n:
        size *= 2
    return _factor_table(alpha, size)[:n]


def add(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    n = max(a.coeffs.size, b.coeffs.size)
    c = np.zeros(n, dtype=complex)
    c[: a.coeffs.size] += a.coeffs
    c[: b.coeffs.size] += b.coeffs
    return PowerSeries(c)


def cauchy_product(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """Product truncated at the smaller of the two truncation orders."""
    n = min(a.coeffs.size, b.coeffs.size)
    return PowerSeries(np.convolve(a.coeffs[:n], b.coeffs[:n])[:n])


def ld_termwise(x: PowerSeries, order: OrderLike) -> PowerSeries:
    """L-derivative of a series; the degree drops by one."""
    c = x.coeffs
    if c.size == 1:
        return PowerSeries([0.0])
    return PowerSeries(c[1:] * ld_factors(order, c.size - 1))


def lj_termwise(x: PowerSeries, order: OrderLike) -> PowerSeries:
    """L-integral of a series; the degree grows by one and x_0 becomes 0."""
    c = x.coeffs
    out = np.zeros(c.size + 1, dtype=complex)
    out[1:] = c / ld_factors(order, c.size)
    return PowerSeries(out)


def evaluate(x: PowerSeries, t: float, tol: Tolerance = DEFAULT_TOL) -> tuple[complex, float]:
    """Evaluate at ``t`` and return ``(value, |last retained term|)``.

    Raises NotConverged when each of the last ``stall_window`` terms is
    still significant, which means the truncation is too short for ``t``.
    """
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    c = x.coeffs
    if t == 0:
        return complex(c[0]), 0.0
    value = x(t)
    w = tol.stall_window
    n = np.arange(c.size)
    with np.errstate(over="ignore"):
        mags = np.abs(c) * np.power(float(t), n)
    if c.size >= w:
        scale = abs(value)
        if not any(tol.negligible(m, scale) for m in mags[-w:]):
            raise NotConverged(
                f"series of order {c.size - 1} has not converged at t={t}", c.size
            )
    return value, float(mags[-1])
