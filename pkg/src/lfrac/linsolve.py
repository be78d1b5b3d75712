"""Series solutions of D x = A x + theta(t), x(0) = x0, with the L-derivative D.

Three source families are supported: zero, component-wise fractional
powers ell_k t^{delta_k}, and vector power series. Solutions keep integer
powers and fractional powers in separate arrays and sum both on evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DomainError, NotConverged
from .series import DEFAULT_TOL, FracOrder, OrderLike, PowerSeries, Tolerance, as_alpha, ld_factors
from .special import gamma_fn, gamma_shift_ratio


@dataclass(frozen=True)
class ZeroSource:
    pass


@dataclass(frozen=True)
class FracPowerSource:
    """theta_k(t) = ell[k] * t**delta[k] with every delta[k] > 0."""

    ell: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        ell = np.asarray(self.ell, dtype=complex).reshape(-1)
        delta = np.asarray(self.delta, dtype=float).reshape(-1)
        if ell.shape != delta.shape:
            raise DomainError("ell and delta need one entry per component")
        if np.any(delta <= 0):
            raise DomainError("fractional source powers must be positive")
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "delta", delta)

    @property
    def dim(self) -> int:
        return self.ell.size


@dataclass(frozen=True)
class SeriesSource:
    """theta(t) = sum_n coeffs[n] t^n with ``coeffs`` of shape (N+1, d)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2:
            raise DomainError("series source coefficients must be (N+1, d)")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_components(cls, parts: list[PowerSeries]) -> SeriesSource:
        n = max(len(p) for p in parts)
        return cls(np.stack([p.truncate(n - 1).coeffs for p in parts], axis=1))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def padded(self, n: int) -> np.ndarray:
        """First ``n`` coefficient rows, zeros past the stored truncation."""
        out = np.zeros((n, self.dim), dtype=complex)
        k = min(n, self.coeffs.shape[0])
        out[:k] = self.coeffs[:k]
        return out


SourceTerm = Union[ZeroSource, FracPowerSource, SeriesSource]


@dataclass(frozen=True)
class LinearSystemProblem:
    order: FracOrder
    Acal: np.ndarray
    source: SourceTerm
    x0: np.ndarray
    horizon_T: float = 1.0

    def __post_init__(self):
        order = self.order if isinstance(self.order, FracOrder) else FracOrder(self.order)
        A = np.atleast_2d(np.asarray(self.Acal, dtype=complex))
        x0 = np.asarray(self.x0, dtype=complex).reshape(-1)
        d = x0.size
        if A.shape != (d, d):
            raise DomainError(f"matrix shape {A.shape} does not match state dimension {d}")
        if not isinstance(self.source, ZeroSource) and self.source.dim != d:
            raise DomainError("source dimension does not match the state")
        if not self.horizon_T > 0:
            raise DomainError("horizon_T must be positive")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "Acal", A)
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self) -> int:
        return self.x0.size


@dataclass(frozen=True)
class SeriesSolution:
    """x(t) = sum_n coeffs[n] t^n + sum_{q,j} frac_coeffs[q, j] t^{j+1+frac_deltas[q]}."""

    alpha: float
    coeffs: np.ndarray
    frac_deltas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    frac_coeffs: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def components(self) -> list[PowerSeries]:
        return [PowerSeries(self.coeffs[:, k]) for k in range(self.dim)]

    def __call__(self, t) -> np.ndarray:
        """Value at scalar ``t`` (shape (d,)) or at an array of times (shape (n, d))."""
        t = np.asarray(t, dtype=float)
        tt = t[..., None]
        acc = np.zeros(t.shape + (self.dim,), dtype=complex)
        for row in self.coeffs[::-1]:
            acc = acc * tt + row
        if self.frac_coeffs is not None:
            for q, delta in enumerate(self.frac_deltas):
                part = np.zeros_like(acc)
                for row in self.frac_coeffs[q, ::-1]:
                    part = part * tt + row
                acc = acc + part * tt ** (1 + delta)
        return acc

    def error_estimate(self, t: float) -> float:
        """Magnitude of the last retained term(s) at ``t``."""
        n = self.coeffs.shape[0] - 1
        err = float(np.abs(self.coeffs[-1]).max()) * t**n
        if self.frac_coeffs is not None:
            J = self.frac_coeffs.shape[1]
            for q, delta in enumerate(self.frac_deltas):
                err += float(np.abs(self.frac_coeffs[q, -1]).max()) * t ** (J + delta)
        return err


def _tail_bound(mags: np.ndarray, window: int) -> float:
    """Geometric tail estimate from the decay between two trailing windows."""
    if mags.size < 2 * window:
        window = max(mags.size // 2, 1)
    last = mags[-window:].max()
    prev = mags[-2 * window : -window].max() if mags.size >= 2 * window else 0.0
    if last == 0:
        return 0.0
    if prev == 0:
        return math.inf
    r = (last / prev) ** (1.0 / window)
    return last * r / (1 - r) if r < 1 else math.inf


def _check_tail(mags: np.ndarray, tol: Tolerance, what: str) -> None:
    bound = _tail_bound(mags, tol.stall_window)
    if not bound <= tol.rel_tol * (1.0 + mags.max()):
        raise NotConverged(f"{what}: tail bound {bound:.3g} exceeds tolerance with {mags.size} terms", mags.size)


def _term_mags(coeffs: np.ndarray, T: float) -> np.ndarray:
    n = np.arange(coeffs.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        return np.abs(coeffs).max(axis=1) * np.power(float(T), n)


def _homogeneous_coeffs(alpha: float, A: np.ndarray, x0: np.ndarray, n_terms: int) -> np.ndarray:
    f = ld_factors(alpha, n_terms)
    out = np.empty((n_terms, x0.size), dtype=complex)
    out[0] = x0
    for n in range(n_terms - 1):
        out[n + 1] = A @ out[n] / f[n]
    return out


def _auto_terms(build: Callable[[int], SeriesSolution], tol: Tolerance) -> SeriesSolution:
    n = 32
    while True:
        try:
            return build(n)
        except NotConverged:
            if n >= tol.max_terms:
                raise
            n = min(2 * n, tol.max_terms)


def solve_homogeneous(problem: LinearSystemProblem, n_terms: int | None = None, tol: Tolerance = DEFAULT_TOL) -> SeriesSolution:
    """x(t) = E_alpha(A t) x0 with coefficients c[n] A^n x0."""
    alpha = problem.order.alpha

    def build(n: int) -> SeriesSolution:
        if n < 1:
            raise DomainError("n_terms must be at least 1")
        coeffs = _homogeneous_coeffs(alpha, problem.Acal, problem.x0, n)
        _check_tail(_term_mags(coeffs, problem.horizon_T), tol, "homogeneous series")
        return SeriesSolution(alpha, coeffs)

    return build(n_terms) if n_terms is not None else _auto_terms(build, tol)


def _fracpower_coeffs(alpha: float, A: np.ndarray, src: FracPowerSource, n_terms: int):
    deltas = np.unique(src.delta)
    g2a = gamma_fn(2 - alpha)
    out = np.empty((deltas.size, n_terms, src.dim), dtype=complex)
    for q, delta in enumerate(deltas):
        v = np.where(src.delta == delta, src.ell, 0)
        # g_0 = Gamma(2-a+delta)/(Gamma(2-a) Gamma(2+delta)); each step j adds the i = j+3 factor
        x = 2 + delta
        ratio = gamma_shift_ratio(x, alpha)
        w = v * (ratio / g2a)
        for j in range(n_terms):
            out[q, j] = w
            ratio *= (x - alpha) / x
            x += 1
            w = (A @ w) * (ratio / g2a)
    return deltas, out


def solve_fracpower(problem: LinearSystemProblem, n_terms: int | None = None, tol: Tolerance = DEFAULT_TOL) -> SeriesSolution:
    """Homogeneous part plus sum_j A^j nu_j(t) for a fractional-power source."""
    src = problem.source
    if not isinstance(src, FracPowerSource):
        raise DomainError("solve_fracpower needs a FracPowerSource")
    alpha = problem.order.alpha
    T = problem.horizon_T

    def build(n: int) -> SeriesSolution:
        if n < 1:
            raise DomainError("n_terms must be at least 1")
        coeffs = _homogeneous_coeffs(alpha, problem.Acal, problem.x0, n)
        _check_tail(_term_mags(coeffs, T), tol, "homogeneous series")
        deltas, frac = _fracpower_coeffs(alpha, problem.Acal, src, n)
        for q, delta in enumerate(deltas):
            _check_tail(_term_mags(frac[q], T) * T ** (1 + delta), tol, "fractional-power series")
        return SeriesSolution(alpha, coeffs, deltas, frac)

    return build(n_terms) if n_terms is not None else _auto_terms(build, tol)


def _series_source_coeffs(alpha: float, A: np.ndarray, theta: np.ndarray, x0: np.ndarray, n_terms: int) -> np.ndarray:
    """Closed-form coefficients: x_n = c[n] A^n x0 + sum_k A^k G(n,k) theta_{n-k-1}.

    G(n, k) is the product of 1/factor_i over i = n-k-1 .. n-1. Powers of A
    are normalized by ||A|| and the scale moved into G to avoid overflow.
    """
    out = _homogeneous_coeffs(alpha, A, x0, n_terms)
    if n_terms < 2:
        return out
    f = ld_factors(alpha, n_terms)
    d = x0.size
    s = np.linalg.norm(A, 2)
    s = s if s > 0 else 1.0
    B = A / s
    Bk = np.eye(d, dtype=complex)
    m = n_terms - 1  # number of source rows used: theta_0 .. theta_{n_terms-2}
    G = 1.0 / f[:m]  # k = 0: G[i] for source index i
    for k in range(m):
        rows = m - k
        out[k + 1 :] += (G[:rows, None] * theta[:rows]) @ Bk.T
        if k + 1 < m:
            G = G[: rows - 1] * (s / f[k + 1 : m])
            Bk = Bk @ B
            if not np.any(G) or not np.any(Bk):
                break
    return out


def solve_series_source(problem: LinearSystemProblem, n_terms: int | None = None, tol: Tolerance = DEFAULT_TOL) -> SeriesSolution:
    """Solution for a power-series source.

    Source coefficients past the stored truncation are taken as zero, so a
    short source is read as the polynomial it spells.
    """
    src = problem.source
    if not isinstance(src, SeriesSource):
        raise DomainError("solve_series_source needs a SeriesSource")
    alpha = problem.order.alpha

    def build(n: int) -> SeriesSolution:
        if n < 1:
            raise DomainError("n_terms must be at least 1")
        coeffs = _series_source_coeffs(alpha, problem.Acal, src.padded(max(n - 1, 1)), problem.x0, n)
        _check_tail(_term_mags(coeffs, problem.horizon_T), tol, "series-source solution")
        return SeriesSolution(alpha, coeffs)

    return build(n_terms) if n_terms is not None else _auto_terms(build, tol)


def solve(problem: LinearSystemProblem, n_terms: int | None = None, tol: Tolerance = DEFAULT_TOL) -> SeriesSolution:
    """Dispatch on the source type."""
    if isinstance(problem.source, ZeroSource):
        return solve_homogeneous(problem, n_terms, tol)
    if isinstance(problem.source, FracPowerSource):
        return solve_fracpower(problem, n_terms, tol)
    return solve_series_source(problem, n_terms, tol)


def residual(problem: LinearSystemProblem, sol: SeriesSolution) -> float:
    """Largest retained coefficient of D x - A x - theta."""
    alpha = problem.order.alpha
    A = problem.Acal
    c = sol.coeffs
    N = c.shape[0]
    if N < 2:
        return 0.0
    lhs = c[1:] * ld_factors(alpha, N - 1)[:, None]
    rhs = c[:-1] @ A.T
    if isinstance(problem.source, SeriesSource):
        rhs = rhs + problem.source.padded(N - 1)
    worst = float(np.abs(lhs - rhs).max())

    src = problem.source
    deltas = sol.frac_deltas
    frac = sol.frac_coeffs
    if isinstance(src, FracPowerSource):
        for delta in np.unique(src.delta):
            hit = np.flatnonzero(np.isclose(deltas, delta, rtol=0, atol=1e-15)) if frac is not None else []
            ell = np.where(src.delta == delta, src.ell, 0)
            if len(hit) == 0:
                worst = max(worst, float(np.abs(ell).max()))
                continue
            C = frac[hit[0]]
            g2a = gamma_fn(2 - alpha)
            for j in range(C.shape[0]):
                # D t^{j+1+delta} = Gamma(2-a) Gamma(j+2+delta)/Gamma(j+2+delta-a) t^{j+delta}
                r = g2a / gamma_shift_ratio(j + 2 + delta, alpha) * C[j]
                r = r - (A @ C[j - 1] if j > 0 else ell)
                worst = max(worst, float(np.abs(r).max()))
    elif frac is not None and frac.size:
        worst = max(worst, float(np.abs(frac).max()))
    return worst
