"""Constant-coefficient sequential equations

    D^m x + a_{m-1} D^{m-1} x + ... + a_0 x = sum beta t^j E^{(j)}(mu t),

where D is the L-derivative and D^i its i-fold composition. Solutions are
combinations of atoms t^k E^{(k)}(lam t), with lam a root of the
characteristic polynomial and k below its multiplicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .errors import AnsatzMismatch, DomainError, NoConvergence, NotConverged, SingularWronskian
from .linsolve import LinearSystemProblem, SeriesSource, _check_tail, _series_source_coeffs, _term_mags
from .series import DEFAULT_TOL, FracOrder, OrderLike, PowerSeries, Tolerance, as_alpha, ld_factors, ld_termwise
from .special import ml_deriv_eval


@dataclass(frozen=True)
class BasisAtom:
    """The function t^k E^{(k)}(lam t)."""

    lam: complex
    k: int


@dataclass(frozen=True)
class ForcingAtom:
    """The forcing term beta t^j E^{(j)}(mu t)."""

    beta: complex
    mu: complex
    j: int = 0

    def __post_init__(self):
        if self.j < 0:
            raise DomainError("forcing index j must be non-negative")


@dataclass(frozen=True)
class RootSet:
    roots: tuple[tuple[complex, int], ...]

    @property
    def degree(self) -> int:
        return sum(n for _, n in self.roots)

    def expanded(self) -> list[complex]:
        return [lam for lam, n in self.roots for _ in range(n)]


@dataclass(frozen=True)
class SequentialProblem:
    order: FracOrder
    coeffs: tuple[complex, ...]
    init: tuple[complex, ...]
    forcing: tuple[ForcingAtom, ...] = ()
    horizon_T: float = 1.0

    def __post_init__(self):
        order = self.order if isinstance(self.order, FracOrder) else FracOrder(self.order)
        coeffs = tuple(complex(a) for a in self.coeffs)
        init = tuple(complex(a) for a in self.init)
        if len(coeffs) < 1:
            raise DomainError("at least one coefficient is required")
        if len(init) != len(coeffs):
            raise DomainError(f"expected {len(coeffs)} initial values, got {len(init)}")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "init", init)
        object.__setattr__(self, "forcing", tuple(self.forcing))

    @property
    def m(self) -> int:
        return len(self.coeffs)


def atom_series(atom: BasisAtom, order: OrderLike, n_terms: int) -> PowerSeries:
    """First ``n_terms`` coefficients of t^k E^{(k)}(lam t)."""
    alpha = as_alpha(order)
    k = atom.k
    lam = complex(atom.lam)
    f = ld_factors(alpha, max(n_terms, k + 1))
    out = np.zeros(n_terms, dtype=complex)
    a = float(math.factorial(k))
    for i in range(k):
        a /= f[i]
    a = complex(a)
    for n in range(k, n_terms):
        out[n] = a
        if lam == 0:
            break
        a = a * lam * ((n + 1) / (n + 1 - k)) / f[n]
    return PowerSeries(out)


@dataclass(frozen=True)
class SymbolicSolution:
    alpha: float
    terms: tuple[tuple[complex, BasisAtom], ...]

    def __call__(self, t, tol: Tolerance = DEFAULT_TOL):
        """Evaluate each atom through the E_alpha derivative sums."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(ts.shape, dtype=complex)
        for i, ti in enumerate(ts):
            acc = 0j
            for coef, atom in self.terms:
                if coef != 0:
                    acc += coef * ti**atom.k * ml_deriv_eval(self.alpha, atom.k, atom.lam * ti, tol)
            out[i] = acc
        return out if np.ndim(t) else complex(out[0])

    def series(self, n_terms: int) -> PowerSeries:
        c = np.zeros(n_terms, dtype=complex)
        for coef, atom in self.terms:
            c += coef * atom_series(atom, self.alpha, n_terms).coeffs
        return PowerSeries(c)

    def coefficient(self, lam: complex, k: int, tol: float = 1e-9) -> complex:
        """Coefficient attached to atom (lam, k); 0 if the atom is absent."""
        total = 0j
        for coef, atom in self.terms:
            if atom.k == k and abs(atom.lam - lam) <= tol:
                total += coef
        return total


# ---------------------------------------------------------------- roots


def _aberth(coeffs_high: list, dps: int, max_sweeps: int) -> list:
    m = len(coeffs_high) - 1
    with mpmath.workdps(dps):
        c = [mpmath.mpc(x) for x in coeffs_high]
        dc = [c[i] * (m - i) for i in range(m)]
        radius = 1 + max(abs(x) for x in c[1:])  # Cauchy bound
        z = [radius / 2 * mpmath.expjpi(2 * mpmath.mpf(i) / m + mpmath.mpf("0.4") / m) for i in range(m)]
        noise = mpmath.mpf(10) ** (-(dps - 6))
        for _ in range(max_sweeps):
            done = True
            for i in range(m):
                p = mpmath.polyval(c, z[i])
                scale = mpmath.polyval([abs(x) for x in c], abs(z[i]))
                if abs(p) <= noise * scale:
                    continue
                ratio = p / mpmath.polyval(dc, z[i])
                s = mpmath.fsum(1 / (z[i] - z[j]) for j in range(m) if j != i and z[j] != z[i])
                step = ratio / (1 - ratio * s)
                z[i] -= step
                if abs(step) > noise * max(1, abs(z[i])):
                    done = False
            if done:
                return z
    raise NoConvergence(f"root iteration did not settle in {max_sweeps} sweeps")


def char_roots(coeffs: Sequence[complex], tol_cluster: float = 1e-8) -> RootSet:
    """Roots of lam^m + a_{m-1} lam^{m-1} + ... + a_0 with clustering.

    ``coeffs`` is a_0..a_{m-1}. Roots closer than ``tol_cluster`` times the
    largest root magnitude (at least 1e-10) merge at their mean.
    """
    a = [complex(x) for x in coeffs]
    m = len(a)
    if m < 1:
        raise DomainError("need a polynomial of degree at least 1")
    # a root of multiplicity n is only resolved to ~eps^(1/n), so precision grows with m
    dps = max(40, 25 * m)
    zmp = _aberth([1.0] + a[::-1], dps=dps, max_sweeps=1000)
    z = [complex(x) for x in zmp]
    scale = max(abs(x) for x in z)
    tol = max(tol_cluster * scale, 1e-10)
    # single-linkage clustering
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if abs(z[i] - z[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(zmp[i])
    roots = []
    with mpmath.workdps(dps):
        for g in groups.values():
            r = complex(mpmath.fsum(g) / len(g))
            # drop rounding dust in the real or imaginary part
            dust = 1e-15 * max(scale, 1.0)
            r = complex(0.0 if abs(r.real) <= dust else r.real, 0.0 if abs(r.imag) <= dust else r.imag)
            roots.append((r, len(g)))
    roots.sort(key=lambda r: (round(r[0].real, 9), round(r[0].imag, 9)))
    return RootSet(tuple(roots))


def basis_atoms(roots: RootSet) -> list[BasisAtom]:
    return [BasisAtom(lam, k) for lam, n in roots.roots for k in range(n)]


# ---------------------------------------------------------------- atoms


def atom_ld(atom: BasisAtom, order: OrderLike, q: int, n_terms: int) -> PowerSeries:
    """Series of the q-fold L-derivative of an atom, ``n_terms`` coefficients."""
    if q < 0:
        raise DomainError("q must be non-negative")
    s = atom_series(atom, order, n_terms + q)
    for _ in range(q):
        s = ld_termwise(s, order)
    return s


def lwronskian0(atoms: Sequence[BasisAtom], order: OrderLike) -> np.ndarray:
    """W[q, i] = (D^q atom_i)(0) for q < len(atoms)."""
    m = len(atoms)
    W = np.array([[atom_ld(at, order, q, 1)[0] for at in atoms] for q in range(m)], dtype=complex).reshape(m, m)
    det = np.linalg.det(W) if m else 1.0
    norm = np.linalg.norm(W, 2) if m else 1.0
    if abs(det) < 1e-12 * norm**m:
        raise SingularWronskian(f"wronskian at 0 is singular (|det| = {abs(det):.3g})")
    return W


def _apply_operator(s: PowerSeries, order: OrderLike, full: Sequence[complex], n_out: int) -> np.ndarray:
    """sum_i full[i] D^i s, first ``n_out`` coefficients; ``full`` ends with a_m = 1."""
    out = np.zeros(n_out, dtype=complex)
    cur = s
    for i, a in enumerate(full):
        if i:
            cur = ld_termwise(cur, order)
        if a != 0:
            out += a * cur.coeffs[:n_out]
    return out


def _forcing_series(forcing: Sequence[ForcingAtom], order: OrderLike, n_terms: int) -> PowerSeries:
    c = np.zeros(n_terms, dtype=complex)
    for fa in forcing:
        c += fa.beta * atom_series(BasisAtom(fa.mu, fa.j), order, n_terms).coeffs
    return PowerSeries(c)


def _particular(problem: SequentialProblem, roots: RootSet, tol_cluster: float) -> list[tuple[complex, BasisAtom]]:
    alpha = problem.order.alpha
    full = list(problem.coeffs) + [1.0]
    m = problem.m
    scale = max([abs(lam) for lam, _ in roots.roots] + [1.0])
    tol = max(tol_cluster * scale, 1e-10)

    # group forcing atoms by frequency, snapping to a characteristic root when within tolerance
    groups: list[tuple[complex, int, list[ForcingAtom]]] = []
    for fa in problem.forcing:
        mu, mult = complex(fa.mu), 0
        for lam, n in roots.roots:
            if abs(mu - lam) <= tol:
                mu, mult = lam, n
                break
        for g in groups:
            if abs(g[0] - mu) <= tol:
                g[2].append(ForcingAtom(fa.beta, g[0], fa.j))
                break
        else:
            groups.append((mu, mult, [ForcingAtom(fa.beta, mu, fa.j)]))

    terms = []
    for mu, mult, atoms in groups:
        J = max(fa.j for fa in atoms)
        ansatz = [BasisAtom(mu, k) for k in range(mult, J + mult + 1)]
        K = J + m + 8
        rhs = _forcing_series(atoms, alpha, K).coeffs
        cols = [_apply_operator(atom_series(at, alpha, K + m), alpha, full, K) for at in ansatz]
        M = np.stack(cols, axis=1)
        row_scale = np.maximum(np.abs(M).max(axis=1), np.abs(rhs))
        row_scale[row_scale == 0] = 1.0
        coef, *_ = np.linalg.lstsq(M / row_scale[:, None], rhs / row_scale, rcond=None)
        mismatch = np.abs(M @ coef - rhs).max()
        if mismatch > 1e-8 * max(1.0, np.abs(rhs).max()):
            raise AnsatzMismatch(f"forcing at mu={mu} not matched by the ansatz (residual {mismatch:.3g})")
        terms.extend(zip(coef.tolist(), ansatz))
    return terms


def solve_sequential(problem: SequentialProblem, tol_cluster: float = 1e-8) -> SymbolicSolution:
    """Roots, particular part by undetermined coefficients, then the wronskian solve."""
    alpha = problem.order.alpha
    roots = char_roots(problem.coeffs, tol_cluster)
    particular = _particular(problem, roots, tol_cluster)
    basis = basis_atoms(roots)
    W = lwronskian0(basis, alpha)
    m = problem.m
    p0 = np.zeros(m, dtype=complex)
    for coef, atom in particular:
        p0 += coef * np.array([atom_ld(atom, alpha, q, 1)[0] for q in range(m)])
    h = np.linalg.solve(W, np.array(problem.init) - p0)
    terms = tuple(zip(h.tolist(), basis)) + tuple(particular)
    return SymbolicSolution(alpha, terms)


def order2_closed_form(order: OrderLike, a1: complex, a0: complex, x0: complex, x01: complex) -> SymbolicSolution:
    """Homogeneous order-2 solution from the explicit two-root formulas."""
    alpha = as_alpha(order)
    roots = char_roots([a0, a1])
    if len(roots.roots) == 1:
        lam = roots.roots[0][0]
        terms = ((complex(x0), BasisAtom(lam, 0)), (x01 - lam * x0, BasisAtom(lam, 1)))
    else:
        (l1, _), (l2, _) = roots.roots
        terms = (
            ((x01 - l2 * x0) / (l1 - l2), BasisAtom(l1, 0)),
            ((l1 * x0 - x01) / (l1 - l2), BasisAtom(l2, 0)),
        )
    return SymbolicSolution(alpha, terms)


def _poly_from_roots(roots: Sequence[complex]) -> np.ndarray:
    """Coefficients (low to high) of prod (z - r)."""
    p = np.array([1.0 + 0j])
    for r in roots:
        p = np.concatenate([[0], p]) - r * np.concatenate([p, [0]])
    return p


def solve_first_order_chain(problem: SequentialProblem, n_terms: int | None = None, tol: Tolerance = DEFAULT_TOL) -> PowerSeries:
    """Series solution through the factorization prod (D - lam_i).

    With w_m = x and w_{i-1} = (D - lam_i) w_i, each w_i solves a scalar
    first-order problem driven by w_{i-1}, starting from w_0 = forcing.
    """
    alpha = problem.order.alpha
    lams = char_roots(problem.coeffs).expanded()
    m = problem.m
    init = np.array(problem.init)
    starts = []
    for i in range(1, m + 1):
        e = _poly_from_roots(lams[i:])
        starts.append(complex(np.dot(e, init[: e.size])))

    def build(n: int) -> PowerSeries:
        w = _forcing_series(problem.forcing, alpha, n).coeffs
        for i in range(m):
            A = np.array([[lams[i]]], dtype=complex)
            w = _series_source_coeffs(alpha, A, w[:-1, None], np.array([starts[i]]), n)[:, 0]
        _check_tail(_term_mags(w[:, None], problem.horizon_T), tol, "first-order chain")
        return PowerSeries(w)

    if n_terms is not None:
        return build(n_terms)
    n = 32
    while True:
        try:
            return build(n)
        except NotConverged:
            if n >= tol.max_terms:
                raise
            n = min(2 * n, tol.max_terms)


def companion_system(problem: SequentialProblem, n_terms: int = 64) -> LinearSystemProblem:
    """Equivalent first-order system for (x, Dx, ..., D^{m-1}x)."""
    m = problem.m
    A = np.zeros((m, m), dtype=complex)
    A[:-1, 1:] = np.eye(m - 1)
    A[-1] = -np.array(problem.coeffs)
    f = _forcing_series(problem.forcing, problem.order, n_terms).coeffs
    src = np.zeros((n_terms, m), dtype=complex)
    src[:, -1] = f
    return LinearSystemProblem(problem.order, A, SeriesSource(src), problem.init, problem.horizon_T)


def sequential_residual(problem: SequentialProblem, x: PowerSeries) -> float:
    """Largest retained coefficient of the operator applied to ``x`` minus the forcing."""
    n_out = len(x) - problem.m
    if n_out < 1:
        return 0.0
    lhs = _apply_operator(x, problem.order, list(problem.coeffs) + [1.0], n_out)
    rhs = _forcing_series(problem.forcing, problem.order, n_out).coeffs
    return float(np.abs(lhs - rhs).max())
