"""Property suites behind ``lfrac verify``. Each suite is deterministic in its seed."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linsolve import LinearSystemProblem
from .operators import McConfig, lj_apply, lj_iterated_power, mc_lj_oracle
from .sequential import (
    ForcingAtom,
    SequentialProblem,
    char_roots,
    companion_system,
    solve_first_order_chain,
    solve_sequential,
)
from .series import PowerSeries, evaluate, ld_termwise, lj_termwise
from .verify import OracleConfig, oracle_picard


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _random_poly(rng: np.random.Generator, degree: int) -> PowerSeries:
    return PowerSeries(rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1))


def fundamental_theorem(seed: int = 0, n_polys: int = 100, alphas=(0.2, 0.4, 0.6, 0.8, 1.0), degree: int = 12) -> list[Check]:
    rng = np.random.default_rng(seed)
    polys = [_random_poly(rng, int(rng.integers(0, degree + 1))) for _ in range(n_polys)]
    checks = []
    for alpha in alphas:
        worst_dj = worst_jd = 0.0
        for x in polys:
            c = x.coeffs
            scale = max(1.0, float(np.abs(c).max()))
            dj = ld_termwise(lj_termwise(x, alpha), alpha).coeffs
            worst_dj = max(worst_dj, float(np.abs(dj[: c.size] - c).max()) / scale)
            jd = lj_termwise(ld_termwise(x, alpha), alpha).coeffs
            shifted = c.copy()
            shifted[0] = 0
            worst_jd = max(worst_jd, float(np.abs(jd[: c.size] - shifted[: jd.size]).max()) / scale)
        checks.append(Check(f"ld(lj x) = x, alpha={alpha:g}", worst_dj <= 1e-12, f"max err {worst_dj:.2e}"))
        checks.append(Check(f"lj(ld x) = x - x(0), alpha={alpha:g}", worst_jd <= 1e-12, f"max err {worst_jd:.2e}"))

        # same identity with the quadrature integral applied to the derivative series
        worst_q = 0.0
        for x in polys[:10]:
            x = x.truncate(6)
            dx = ld_termwise(x, alpha)
            for t in (0.3, 1.0):
                got = lj_apply(dx, alpha, t)
                worst_q = max(worst_q, abs(got - (x(t) - x(0.0))) / max(1.0, abs(x(t))))
        checks.append(Check(f"quadrature lj(ld x) = x - x(0), alpha={alpha:g}", worst_q <= 1e-10, f"max err {worst_q:.2e}"))
    return checks


QUAD_DELTAS = (0.0, 0.5, 1.0, 2.0, 3.7)
QUAD_ALPHAS = (0.25, 0.5, 0.9)
QUAD_TIMES = (0.1, 1.0, 2.0)


def quadrature_vs_closed_form(seed: int = 0) -> list[Check]:
    checks = []
    for alpha in QUAD_ALPHAS:
        worst = 0.0
        for delta in QUAD_DELTAS:
            coef, power = lj_iterated_power(alpha, 1, delta)
            for t in QUAD_TIMES:
                exact = coef * t**power
                got = lj_apply(lambda s, d=delta: s**d, alpha, t)
                worst = max(worst, abs(got - exact) / abs(exact))
        checks.append(Check(f"lj_apply vs closed form, alpha={alpha:g}", worst <= 1e-12, f"max rel err {worst:.2e}"))
    return checks


MC_DEPTHS = (1, 2, 3)
MC_DELTAS = (0.0, 0.5, 1.0, 2.5)
MC_ALPHAS = (0.3, 0.5, 0.7, 0.9, 1.0)


def mc_oracle(seed: int = 0, samples: int = 1_000_000, t: float = 1.0) -> list[Check]:
    """Monte Carlo iterated integrals of t^delta against their closed forms, one stream per cell."""
    cells = [(m, d, a) for m in MC_DEPTHS for d in MC_DELTAS for a in MC_ALPHAS]
    streams = np.random.SeedSequence(seed).generate_state(len(cells))
    inside = 0
    per_depth = {m: [0, 0] for m in MC_DEPTHS}
    worst = 0.0
    for (m, delta, alpha), s in zip(cells, streams):
        coef, power = lj_iterated_power(alpha, m, delta)
        exact = coef * t**power
        est, se = mc_lj_oracle(lambda u, d=delta: u**d, alpha, t, McConfig(samples, int(s), m))
        z = abs(est - exact) / se if se > 0 else (0.0 if est == exact else np.inf)
        worst = max(worst, z)
        ok = z <= 3
        inside += ok
        per_depth[m][0] += ok
        per_depth[m][1] += 1
    checks = [Check(f"MC within 3 se, depth {m}", True, f"{k}/{n} cells") for m, (k, n) in per_depth.items()]
    frac = inside / len(cells)
    checks.append(Check("MC cells within 3 se >= 95%", frac >= 0.95, f"{inside}/{len(cells)}, worst z {worst:.2f}"))
    return checks


def random_sequential(rng: np.random.Generator, alpha_range=(0.5, 1.0), max_m: int = 4, coeff_norm: float = 2.0) -> SequentialProblem:
    """Random problem with ||coeffs||_2 <= coeff_norm and one forcing atom away from the roots."""
    m = int(rng.integers(1, max_m + 1))
    alpha = float(rng.uniform(*alpha_range))
    a = rng.normal(size=m) + 1j * rng.normal(size=m)
    a *= rng.uniform(0, coeff_norm) / np.linalg.norm(a)
    init = rng.normal(size=m) + 1j * rng.normal(size=m)
    roots = char_roots(a).expanded()
    while True:
        mu = complex(rng.normal(), rng.normal())
        if min(abs(mu - r) for r in roots) > 0.1:
            break
    beta = complex(rng.normal(), rng.normal())
    j = int(rng.integers(0, 2))
    return SequentialProblem(alpha, tuple(a), tuple(init), (ForcingAtom(beta, mu, j),), 1.0)


def solver_equivalence(
    seed: int = 0,
    n_problems: int = 25,
    times=(0.25, 0.5, 1.0),
    picard_iters: int = 200,
    alpha_range=(0.5, 1.0),
    tol: float = 1e-8,
) -> list[Check]:
    rng = np.random.default_rng(seed)
    cfg = OracleConfig(picard_iters=picard_iters)
    ts = np.array(times)
    worst_chain = worst_picard = 0.0
    for _ in range(n_problems):
        prob = random_sequential(rng, alpha_range)
        sym = solve_sequential(prob)(ts)
        chain = solve_first_order_chain(prob)
        ch = np.array([evaluate(chain, t)[0] for t in ts])
        lin: LinearSystemProblem = companion_system(prob, n_terms=96)
        pic = oracle_picard(lin, cfg, ts)[:, 0]
        scale = np.maximum(1.0, np.abs(sym))
        worst_chain = max(worst_chain, float((np.abs(sym - ch) / scale).max()))
        worst_picard = max(worst_picard, float((np.abs(sym - pic) / scale).max()))
    return [
        Check("symbolic vs first-order chain", worst_chain <= tol, f"max err {worst_chain:.2e}"),
        Check("symbolic vs Picard iteration", worst_picard <= tol, f"max err {worst_picard:.2e}"),
    ]


# (forcing mu, characteristic coefficients a0, a1, expected {(lam, k): coefficient})
WORKED_EXAMPLES = {
    "double root 1, forcing at 2": (2.0, (1, -2), {(1, 0): 0, (1, 1): -7, (2, 0): 3}),
    "double root 1, resonant forcing": (1.0, (1, -2), {(1, 0): 3, (1, 1): -4, (1, 2): 1.5}),
    "double root i, forcing at 1": (1.0, (-1, -2j), {(1j, 0): 3 - 1.5j, (1j, 1): -2.5 - 4.5j, (1, 0): 1.5j}),
}
WORKED_ALPHAS = (0.3, 0.5, 0.7, 0.9, 1.0)


def worked_example(name: str, alpha: float) -> SequentialProblem:
    mu, a, _ = WORKED_EXAMPLES[name]
    return SequentialProblem(alpha, a, (3, -1), (ForcingAtom(3, mu, 0),))


def worked_examples(seed: int = 0) -> list[Check]:
    checks = []
    for name, (_, _, expected) in WORKED_EXAMPLES.items():
        worst = 0.0
        for alpha in WORKED_ALPHAS:
            sol = solve_sequential(worked_example(name, alpha))
            for (lam, k), want in expected.items():
                worst = max(worst, abs(sol.coefficient(lam, k) - want))
        checks.append(Check(name, worst <= 1e-10, f"max coefficient err {worst:.2e}"))
    return checks


SUITES: dict[str, Callable[[int], list[Check]]] = {
    "fundamental-theorem": fundamental_theorem,
    "quadrature-vs-closed-form": quadrature_vs_closed_form,
    "mc-oracle": mc_oracle,
    "solver-equivalence": solver_equivalence,
    "paper-examples": worked_examples,
}
