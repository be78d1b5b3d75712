"""Independent reference computations for tests and the ``verify`` command.

Nothing here reuses the series recurrences under test: the E_alpha oracle
sums per-term gamma products in 40-digit arithmetic, the Picard oracle
iterates the integral equation by quadrature on a Chebyshev grid, and the
combinatorial check uses exact integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .operators import graded_rule


@dataclass(frozen=True)
class OracleConfig:
    precision_terms: int = 200
    picard_iters: int = 30
    mc_samples: int = 1_000_000
    grid_points: int = 200
    quad_nodes: int = 40

    def __post_init__(self):
        for name in ("precision_terms", "picard_iters", "mc_samples", "grid_points", "quad_nodes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def oracle_ml(alpha: float, s: complex, cfg: OracleConfig = OracleConfig(), k: int = 0) -> complex:
    """k-th derivative of E_alpha at ``s`` from ``precision_terms`` terms at 40 digits."""
    with mpmath.workdps(40):
        a = mpmath.mpf(alpha)
        z = mpmath.mpc(s)
        g = mpmath.gamma(2 - a)
        total = mpmath.mpc(0)
        denom = mpmath.mpf(1)
        for n in range(cfg.precision_terms):
            if n > 0:
                denom *= g * mpmath.gamma(n + 1) / mpmath.gamma(n + 1 - a)
            if n >= k:
                falling = mpmath.ff(n, k)
                total += falling * z ** (n - k) / denom
        return complex(total)


def oracle_classical_ml(alpha: float, beta: float, s: complex, cfg: OracleConfig = OracleConfig()) -> complex:
    with mpmath.workdps(40):
        z = mpmath.mpc(s)
        return complex(mpmath.fsum(z**n * mpmath.rgamma(n * mpmath.mpf(alpha) + beta) for n in range(cfg.precision_terms)))


def oracle_convolution(a: Sequence[complex], b: Sequence[complex]) -> list[complex]:
    """Truncated Cauchy product by the textbook double loop."""
    n = min(len(a), len(b))
    out = []
    for i in range(n):
        acc = 0j
        for l in range(i + 1):
            acc += a[l] * b[i - l]
        out.append(acc)
    return out


def oracle_identity_jeiloo(n: int, l: int) -> tuple[int, int]:
    """Both sides of (l+1) sum_k (n-k-1)...(n-k-l) = n(n-1)...(n-l) in integers."""
    if not 0 <= l < n:
        raise ValueError("need 0 <= l < n")
    lhs = (l + 1) * sum(math.prod(n - k - i for i in range(1, l + 1)) for k in range(n - l))
    rhs = math.prod(n - i for i in range(l + 1))
    return lhs, rhs


def _source_fn(problem) -> Callable[[np.ndarray], np.ndarray]:
    from .linsolve import FracPowerSource, SeriesSource

    src = problem.source
    d = problem.dim
    if isinstance(src, FracPowerSource):
        return lambda t: src.ell * np.power(t[:, None], src.delta)
    if isinstance(src, SeriesSource):
        coeffs = src.coeffs

        def theta(t):
            acc = np.zeros((t.size, d), dtype=complex)
            for row in coeffs[::-1]:
                acc = acc * t[:, None] + row
            return acc

        return theta
    return lambda t: np.zeros((t.size, d), dtype=complex)


def _bary_matrix(x_eval: np.ndarray, nodes: np.ndarray, w: np.ndarray) -> np.ndarray:
    diff = x_eval[:, None] - nodes[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        M = w / diff
        M = M / M.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    M[rows] = exact[rows].astype(float)
    return M


@dataclass
class PicardResult:
    values: np.ndarray
    history: list[float]


def picard_iterate(problem, cfg: OracleConfig, t_points, source_fn=None) -> PicardResult:
    """Picard iteration with the distance between successive iterates recorded.

    The sample grid is Chebyshev-Lobatto in v = sqrt(t), so integer and
    half-integer powers of t are polynomials in v.
    """
    alpha = problem.order.alpha
    T = problem.horizon_T
    A = problem.Acal
    x0 = problem.x0
    theta = source_fn or _source_fn(problem)
    n = max(cfg.grid_points, 2)
    j = np.arange(n)
    v = math.sqrt(T) * (1 - np.cos(np.pi * j / (n - 1))) / 2
    t = v * v
    bw = (-1.0) ** j
    bw[0] *= 0.5
    bw[-1] *= 0.5
    rule = graded_rule(alpha, cfg.quad_nodes)
    pts = (t[:, None] * rule.nodes[None, :]).ravel()
    M = _bary_matrix(np.sqrt(pts), v, bw)
    Theta = np.asarray(theta(pts), dtype=complex).reshape(pts.size, -1)
    Q = rule.nodes.size
    scale = t / (math.gamma(alpha) * math.gamma(2 - alpha))
    # fold interpolation and quadrature into one n x n kernel
    K = scale[:, None] * np.einsum("q,jqi->ji", rule.weights, M.reshape(n, Q, n))
    forced = scale[:, None] * np.einsum("q,jqd->jd", rule.weights, Theta.reshape(n, Q, -1))
    X = np.tile(x0, (n, 1))
    history = []
    for _ in range(cfg.picard_iters):
        X_new = x0 + K @ (X @ A.T) + forced
        history.append(float(np.abs(X_new - X).max()))
        X = X_new
    t_points = np.asarray(t_points, dtype=float)
    out = _bary_matrix(np.sqrt(t_points), v, bw) @ X
    return PicardResult(out, history)


def oracle_picard(problem, cfg: OracleConfig = OracleConfig(), t_points=(0.0,), source_fn=None) -> np.ndarray:
    """Picard iterate number ``picard_iters`` at ``t_points``, shape (len, d)."""
    return picard_iterate(problem, cfg, t_points, source_fn).values
