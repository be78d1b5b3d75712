import math

import numpy as np
import pytest

from lfrac.errors import AnsatzMismatch, DomainError, SingularWronskian
from lfrac.linsolve import solve_homogeneous
from lfrac.sequential import (
    BasisAtom,
    ForcingAtom,
    SequentialProblem,
    atom_ld,
    atom_series,
    basis_atoms,
    char_roots,
    companion_system,
    lwronskian0,
    order2_closed_form,
    sequential_residual,
    solve_first_order_chain,
    solve_sequential,
)
from lfrac.series import PowerSeries, Tolerance, evaluate, ld_termwise
from lfrac.special import ml_coeffs, ml_deriv_eval, ml_eval
from lfrac.suites import WORKED_EXAMPLES, random_sequential, worked_example
from lfrac.verify import oracle_identity_jeiloo


def poly_from_roots(roots):
    p = np.array([1.0 + 0j])
    for r in roots:
        p = np.convolve(p, [1, -r])
    return p  # high to low


def test_problem_validation():
    with pytest.raises(DomainError):
        SequentialProblem(0.5, (1, 2), (1,))
    with pytest.raises(DomainError):
        SequentialProblem(0.5, (), ())
    with pytest.raises(DomainError):
        ForcingAtom(1, 1, -1)


def test_char_roots_examples():
    assert char_roots([1, -2]).roots == ((1 + 0j, 2),)
    assert char_roots([-1, -2j]).roots == ((1j, 2),)
    assert char_roots([-1, 0]).roots == ((-1 + 0j, 1), (1 + 0j, 1))
    assert char_roots([1, -4, 6, -4]).roots == ((1 + 0j, 4),)
    assert char_roots([0, 0, 0]).roots == ((0j, 3),)


def test_char_roots_reconstruct(rng):
    for _ in range(20):
        m = int(rng.integers(1, 7))
        a = rng.normal(size=m) + 1j * rng.normal(size=m)
        rs = char_roots(a)
        assert rs.degree == m
        p = poly_from_roots(rs.expanded())[::-1][:-1]
        assert np.all(np.abs(p - a) <= 1e-8 * np.maximum(1, np.abs(a)))


def test_basis_atoms_examples():
    assert basis_atoms(char_roots([1, -2])) == [BasisAtom(1, 0), BasisAtom(1, 1)]
    assert basis_atoms(char_roots([-2, 1])) == [BasisAtom(-2, 0), BasisAtom(1, 0)]
    atoms = basis_atoms(char_roots([0, 0, 0]))
    assert atoms == [BasisAtom(0, k) for k in range(3)]
    # the zero-root atoms t^k E^(k)(0) = k! c_k t^k span the polynomials of degree < 3
    c = ml_coeffs(0.4, 3).c
    for k, at in enumerate(atoms):
        want = np.zeros(5)
        want[k] = math.factorial(k) * c[k]
        np.testing.assert_allclose(atom_series(at, 0.4, 5).coeffs, want, rtol=1e-15)


def test_atom_ld_examples():
    alpha, lam = 0.35, 0.8 - 0.3j
    e = atom_series(BasisAtom(lam, 0), alpha, 30).coeffs
    np.testing.assert_allclose(atom_ld(BasisAtom(lam, 0), alpha, 1, 29).coeffs, lam * e[:29], rtol=1e-13)
    assert atom_ld(BasisAtom(lam, 1), alpha, 1, 1)[0] == pytest.approx(1, rel=1e-15)
    for k in range(4):
        got = atom_ld(BasisAtom(lam, k), alpha, k, 20).coeffs
        # collapse identity holds for (D - lam)^k; D^k alone agrees at t = 0
        assert got[0] == pytest.approx(math.factorial(k), rel=1e-13)


def _shift(series, alpha, lam, times):
    s = series
    for _ in range(times):
        s = PowerSeries(ld_termwise(s, alpha).coeffs - lam * s.coeffs[:-1])
    return s.coeffs


@pytest.mark.parametrize("lam", [1, -1, 1j, 2])
@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0])
def test_kernel_and_collapse(lam, alpha):
    for k in range(4):
        for mult in range(k + 1, 5):
            # absolute bound over the coefficients the ansatz matching uses
            n = k + 2 * mult + 8
            assert np.abs(_shift(atom_series(BasisAtom(lam, k), alpha, n), alpha, lam, mult)).max() <= 1e-10
            # long truncations: rounding grows with the coefficients, so bound relative to them
            s = atom_series(BasisAtom(lam, k), alpha, 64)
            assert np.abs(_shift(s, alpha, lam, mult)).max() <= 1e-10 * max(1, np.abs(s.coeffs).max())
        n = 40
        e = atom_series(BasisAtom(lam, 0), alpha, n).coeffs
        collapsed = _shift(atom_series(BasisAtom(lam, k), alpha, n), alpha, lam, k)
        np.testing.assert_allclose(collapsed, math.factorial(k) * e[: n - k], atol=1e-10, rtol=0)


def test_atom_series_matches_ml_derivative():
    alpha, lam, k, t = 0.55, -1.2 + 0.5j, 2, 0.8
    s = atom_series(BasisAtom(lam, k), alpha, 80)
    assert s(t) == pytest.approx(t**k * ml_deriv_eval(alpha, k, lam * t), rel=1e-13)


def test_jeiloo_identity_exact():
    assert oracle_identity_jeiloo(3, 1) == (6, 6)
    for n in range(1, 31):
        assert oracle_identity_jeiloo(n, 0) == (n, n)
        for l in range(n):
            lhs, rhs = oracle_identity_jeiloo(n, l)
            assert lhs == rhs


def test_lwronskian_examples():
    lam = 0.3 + 2j
    np.testing.assert_allclose(lwronskian0([BasisAtom(lam, 0), BasisAtom(lam, 1)], 0.5), [[1, 0], [lam, 1]], atol=1e-15)
    np.testing.assert_allclose(lwronskian0([BasisAtom(2, 0), BasisAtom(-1, 0)], 0.5), [[1, 1], [2, -1]], atol=1e-15)
    np.testing.assert_array_equal(lwronskian0([BasisAtom(0, 0)], 0.5), [[1]])
    with pytest.raises(SingularWronskian):
        lwronskian0([BasisAtom(1, 0), BasisAtom(1, 0)], 0.5)


@pytest.mark.parametrize("lam", [0, 1.5, -1j])
def test_lwronskian_single_root_triangular(lam):
    # D^q of t^k E^(k)(lam t) vanishes at 0 for q < k and equals k! at q = k
    for m in range(1, 6):
        W = lwronskian0([BasisAtom(lam, k) for k in range(m)], 0.45)
        assert np.allclose(np.triu(W, 1), 0)
        np.testing.assert_allclose(np.diag(W), [math.factorial(k) for k in range(m)], rtol=1e-13)
        want = math.prod(math.factorial(k) for k in range(m))
        assert abs(np.linalg.det(W)) == pytest.approx(want, rel=1e-12)
        if m <= 2:
            assert abs(np.linalg.det(W)) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9, 1.0])
@pytest.mark.parametrize("name", list(WORKED_EXAMPLES))
def test_worked_examples(alpha, name):
    _, _, expected = WORKED_EXAMPLES[name]
    sol = solve_sequential(worked_example(name, alpha))
    for (lam, k), want in expected.items():
        assert abs(sol.coefficient(lam, k) - want) <= 1e-10
    assert len(sol.terms) == len(expected)


def test_order2_closed_form_examples():
    sol = order2_closed_form(0.6, 0, -1, 1, 0)
    assert sol.coefficient(1, 0) == pytest.approx(0.5)
    assert sol.coefficient(-1, 0) == pytest.approx(0.5)
    lam = 0.7
    sol = order2_closed_form(0.6, -2 * lam, lam**2, 2.0, 2.0 * lam)
    assert sol.coefficient(lam, 0) == pytest.approx(2.0)
    assert abs(sol.coefficient(lam, 1)) <= 1e-14
    sol = order2_closed_form(1.0, -1, -2, 1.0, 3.0)  # roots 2, -1
    t = 0.7
    want = (3 + 1) / 3 * math.exp(2 * t) + (2 - 3) / 3 * math.exp(-t)
    assert sol(t) == pytest.approx(want, rel=1e-13)


def test_order2_matches_general_solver(rng):
    for _ in range(10):
        a1, a0, x0, x01 = rng.normal(size=4) + 1j * rng.normal(size=4)
        alpha = rng.uniform(0.2, 1)
        a = order2_closed_form(alpha, a1, a0, x0, x01).series(40).coeffs
        b = solve_sequential(SequentialProblem(alpha, (a0, a1), (x0, x01))).series(40).coeffs
        assert np.abs(a - b).max() <= 1e-10 * max(1, np.abs(a).max())


def test_chain_examples(rng):
    prob = SequentialProblem(0.4, (-1.3,), (2.0,))
    chain = solve_first_order_chain(prob)
    hom = solve_homogeneous(companion_system(prob), n_terms=len(chain))
    np.testing.assert_allclose(chain.coeffs, hom.coeffs[:, 0], rtol=1e-13)
    for _ in range(5):
        a = rng.normal(size=2)
        alpha = rng.uniform(0.2, 1)
        prob = SequentialProblem(alpha, tuple(a), (1.0, -0.5))
        a1, a0 = a[1], a[0]
        closed = order2_closed_form(alpha, a1, a0, 1.0, -0.5).series(40).coeffs
        got = solve_first_order_chain(prob, n_terms=40, tol=Tolerance(rel_tol=1e-6)).coeffs
        assert np.abs(got - closed).max() <= 1e-10 * max(1, np.abs(closed).max())


@pytest.mark.parametrize("l", [0, 1, 2])
def test_resonant_first_order(l):
    # (D - lam) x = t^l E^(l)(lam t) has x0 E(lam t) + t^{l+1} E^{(l+1)}(lam t) / (l+1)
    alpha, lam, x0 = 0.45, 0.9, 1.7
    prob = SequentialProblem(alpha, (-lam,), (x0,), (ForcingAtom(1, lam, l),))
    sol = solve_sequential(prob)
    assert sol.coefficient(lam, 0) == pytest.approx(x0, rel=1e-10)
    assert sol.coefficient(lam, l + 1) == pytest.approx(1 / (l + 1), rel=1e-10)
    t = 0.6
    want = x0 * ml_eval(alpha, lam * t) + t ** (l + 1) * ml_deriv_eval(alpha, l + 1, lam * t) / (l + 1)
    assert sol(t) == pytest.approx(want, rel=1e-12)
    chain = solve_first_order_chain(prob)
    assert evaluate(chain, t)[0] == pytest.approx(want, rel=1e-12)


def test_polynomial_forcing():
    # D x = t^2 E''(0) = 2 c_2 t^2, x(0) = 1: x = 1 + 2 c_2 J t^2
    alpha = 0.5
    prob = SequentialProblem(alpha, (0,), (1.0,), (ForcingAtom(1, 0, 2),))
    sol = solve_sequential(prob)
    c = ml_coeffs(alpha, 3).c
    # J t^2 = t^3 / factor_2 = t^3 c_3 / c_2
    t = 0.8
    assert sol(t) == pytest.approx(1 + 2 * c[3] * t**3, rel=1e-12)
    assert sequential_residual(prob, sol.series(30)) <= 1e-12


def test_initial_data_round_trip(rng):
    for _ in range(10):
        prob = random_sequential(rng, (0.2, 1.0))
        sol = solve_sequential(prob)
        for q, want in enumerate(prob.init):
            got = sum(c * atom_ld(at, prob.order, q, 1)[0] for c, at in sol.terms)
            assert abs(got - want) <= 1e-10 * max(1, abs(want))


def test_solver_equivalence_coefficientwise(rng):
    for _ in range(25):
        prob = random_sequential(rng, (0.1, 1.0))
        chain = solve_first_order_chain(prob)
        sym = solve_sequential(prob).series(len(chain)).coeffs
        assert np.abs(sym - chain.coeffs).max() <= 1e-9 * max(1, np.abs(sym).max())
        assert sequential_residual(prob, chain) <= 1e-10 * max(1, np.abs(sym).max())


def test_forcing_near_root_snaps():
    prob = SequentialProblem(0.5, (-1,), (1,), (ForcingAtom(1, 1 + 1e-12, 0),))
    sol = solve_sequential(prob)
    assert sol.coefficient(1, 1) == pytest.approx(1, rel=1e-10)


def test_ansatz_mismatch_is_reported(monkeypatch):
    import lfrac.sequential as seq

    # an operator that annihilates every ansatz column cannot match the forcing
    monkeypatch.setattr(seq, "_apply_operator", lambda s, order, full, n_out: np.zeros(n_out, dtype=complex))
    prob = SequentialProblem(0.5, (-1,), (1,), (ForcingAtom(1, 3, 0),))
    with pytest.raises(AnsatzMismatch):
        seq.solve_sequential(prob)
