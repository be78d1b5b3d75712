"""L-fractional integral and derivative of general functions.

After the substitution s = t u the integral becomes

    J y(t) = t / (Gamma(a) Gamma(2-a)) * int_0^1 u^{1-a} (1-u)^{a-1} y(t u) du
           = t E[y(t U)],  U ~ Beta(2-a, a),

and the derivative is D x(t) = E[x'(t W)] with W ~ Beta(1, 1-a). Both are
discretized with Gauss-Jacobi rules carrying the kernel exponents, and
the expectation forms back a Monte Carlo oracle.

Functions passed to these routines receive a numpy array of sample points
and return an array of shape ``(n,)`` or ``(n, d)`` (a scalar broadcasts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError
from .series import OrderLike, as_alpha
from .special import beta_fn, gamma_fn, gamma_shift_ratio

Func1D = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights on (0, 1) for the weight (1-u)^a u^b, ``exponents = (a, b)``.

    ``graded`` rules are Gauss-Jacobi in v = sqrt(u), which keeps half-integer
    powers of u exact and is the default for the operators below.
    """

    nodes: np.ndarray
    weights: np.ndarray
    exponents: tuple[float, float]
    graded: bool = False


def _golub_welsch(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi on [0, 1] for the weight (1-u)^a u^b."""
    if n < 1:
        raise DomainError("a quadrature rule needs at least one node")
    k = np.arange(1, n, dtype=float)
    s = 2 * k + a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (a + b + 2)
    diag[1:] = (b * b - a * a) / (s * (s + 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = 4 * k * (k + a) * (k + b) * (k + a + b) / (s**2 * (s + 1) * (s - 1))
    if n > 1:
        # k = 1 without the (1+a+b)/(1+a+b) factor, which is 0/0 when a+b = -1
        beta[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    J = np.diag(diag) + np.diag(np.sqrt(beta), 1) + np.diag(np.sqrt(beta), -1)
    x, V = np.linalg.eigh(J)
    nodes = (x + 1) / 2
    weights = beta_fn(a + 1, b + 1) * V[0] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return arrays


@lru_cache(maxsize=64)
def jacobi_rule(order: OrderLike, n_nodes: int) -> QuadratureRule:
    """Gauss-Jacobi rule for u^{1-a}(1-u)^{a-1}; a = 1 gives Gauss-Legendre."""
    alpha = as_alpha(order)
    nodes, weights = _golub_welsch(n_nodes, alpha - 1, 1 - alpha)
    return QuadratureRule(nodes, weights, (alpha - 1, 1 - alpha))


@lru_cache(maxsize=64)
def graded_rule(order: OrderLike, n_nodes: int) -> QuadratureRule:
    """Same weight as :func:`jacobi_rule`, Gauss-Jacobi in v = sqrt(u).

    u^{1-a}(1-u)^{a-1} du = v^{3-2a}(1-v)^{a-1} * 2(1+v)^{a-1} dv, and the
    last factor is analytic on [0, 1], so it is folded into the weights.
    """
    alpha = as_alpha(order)
    v, w = _golub_welsch(n_nodes, alpha - 1, 3 - 2 * alpha)
    return QuadratureRule(*_frozen(v * v, 2 * w * (1 + v) ** (alpha - 1)), (alpha - 1, 1 - alpha), graded=True)


@lru_cache(maxsize=64)
def derivative_rule(order: OrderLike, n_nodes: int) -> QuadratureRule:
    """Graded rule for the weight (1-w)^{-a} used by :func:`ld_apply` (a < 1)."""
    alpha = as_alpha(order)
    if alpha == 1:
        raise DomainError("the derivative kernel degenerates at alpha = 1")
    v, w = _golub_welsch(n_nodes, -alpha, 1.0)
    return QuadratureRule(*_frozen(v * v, 2 * w * (1 + v) ** (-alpha)), (-alpha, 0.0), graded=True)


def _sample(y: Func1D, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(y(pts), dtype=complex)
    if vals.ndim == 0:
        vals = np.full(pts.shape, vals)
    return vals


def lj_apply(y: Func1D, order: OrderLike, t: float, rule: QuadratureRule | None = None):
    """Quadrature image of the L-integral of ``y`` at ``t``."""
    alpha = as_alpha(order)
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return 0j
    if rule is None:
        rule = graded_rule(alpha, 40)
    elif not np.allclose(rule.exponents, (alpha - 1, 1 - alpha)):
        raise DomainError("rule exponents do not match the integral kernel")
    vals = _sample(y, t * rule.nodes)
    out = t / (gamma_fn(alpha) * gamma_fn(2 - alpha)) * np.tensordot(rule.weights, vals, axes=1)
    return complex(out) if out.ndim == 0 else out


def ld_apply(dx: Func1D, order: OrderLike, t: float, rule: QuadratureRule | None = None):
    """L-derivative at ``t`` from the caller-supplied derivative ``dx``."""
    alpha = as_alpha(order)
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        pts = np.zeros(1)
    elif alpha == 1:
        pts = np.array([float(t)])
    else:
        if rule is None:
            rule = derivative_rule(alpha, 40)
        elif not np.allclose(rule.exponents, (-alpha, 0.0)):
            raise DomainError("rule exponents do not match the derivative kernel")
        vals = _sample(dx, t * rule.nodes)
        out = (1 - alpha) * np.tensordot(rule.weights, vals, axes=1)
        return complex(out) if out.ndim == 0 else out
    out = _sample(dx, pts)[0]
    return complex(out) if out.ndim == 0 else out


def lj_iterated_power(order: OrderLike, m: int, delta: float) -> tuple[float, float]:
    """m-fold L-integral of t^delta as ``(coefficient, power)``."""
    alpha = as_alpha(order)
    if m < 1:
        raise DomainError("m must be at least 1")
    if delta <= alpha - 2:
        raise DomainError(f"delta must exceed alpha - 2, got {delta}")
    g = gamma_fn(2 - alpha)
    coef = 1.0
    for i in range(2, m + 2):
        coef *= gamma_shift_ratio(i + delta, alpha) / g
    return coef, m + delta


def lj_norm_bound(order: OrderLike, m: int, T: float) -> float:
    """Sup-norm bound of the m-fold L-integral on [0, T]."""
    if T <= 0:
        raise DomainError("T must be positive")
    return lj_iterated_power(order, m, 0.0)[0] * T**m


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 0
    depth: int = 1


def mc_lj_oracle(y: Func1D, order: OrderLike, t: float, cfg: McConfig, chunk: int = 1 << 17) -> tuple[complex, float]:
    """Monte Carlo estimate of the depth-fold L-integral of ``y`` at ``t``.

    Uses t^m E[U_m^{m-1} ... U_2 y(t U_1 ... U_m)] with i.i.d. Beta(2-a, a)
    draws. Returns ``(mean, standard error)``; reproducible for a given seed
    because each fixed-size chunk has its own spawned stream.
    """
    alpha = as_alpha(order)
    m = cfg.depth
    if m < 1:
        raise DomainError("depth must be at least 1")
    if cfg.samples < 1000:
        raise DomainError("at least 1000 samples are required")
    n_chunks = -(-cfg.samples // chunk)
    streams = np.random.SeedSequence(cfg.seed).spawn(n_chunks)
    s1 = 0j
    s2 = 0.0
    left = cfg.samples
    for ss in streams:
        n = min(chunk, left)
        left -= n
        rng = np.random.Generator(np.random.Philox(ss))
        g1 = rng.standard_gamma(2 - alpha, (n, m))
        g2 = rng.standard_gamma(alpha, (n, m))
        u = g1 / (g1 + g2)
        weight = np.ones(n)
        for k in range(2, m + 1):
            weight *= u[:, k - 1] ** (k - 1)
        v = _sample(y, t * u.prod(axis=1)) * weight
        s1 += v.sum()
        s2 += float(np.sum(np.abs(v) ** 2))
    N = cfg.samples
    mean = s1 / N
    var = max(s2 / N - abs(mean) ** 2, 0.0) * N / (N - 1)
    scale = t**m
    return complex(scale * mean), float(scale * math.sqrt(var / N))


def caputo_to_l(A, b: Func1D, order: OrderLike) -> tuple[np.ndarray, Func1D]:
    """Turn the Caputo system C x = A x + b into D x = Acal x + theta.

    ``theta(t) = Gamma(2-a) t^{a-1} b(t)`` is defined for t > 0 (and at
    t = 0 when a = 1); the limit at 0 is the caller's business.
    """
    alpha = as_alpha(order)
    g = gamma_fn(2 - alpha)
    Acal = g * np.asarray(A, dtype=complex)

    def theta(t):
        t = np.asarray(t, dtype=float)
        if alpha < 1 and np.any(t <= 0):
            raise DomainError("theta is only defined for t > 0")
        vals = np.asarray(b(t), dtype=complex)
        scale = g * t ** (alpha - 1)
        if vals.ndim > scale.ndim:
            scale = scale[..., None]
        return scale * vals

    return Acal, theta
