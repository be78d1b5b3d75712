"""``lfrac`` command line: ml-eval, solve, verify."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from . import problemfile as pf
from .analytic2 import Analytic2Problem, analytic2_residual, hermite_eigenvalue, solve_analytic2
from .errors import AnsatzMismatch, DomainError, NoConvergence, NotConverged, SingularWronskian
from .linsolve import FracPowerSource, LinearSystemProblem, SeriesSource, ZeroSource, _check_tail, _term_mags, residual, solve
from .operators import derivative_rule, graded_rule, ld_apply, lj_apply
from .sequential import ForcingAtom, SequentialProblem, sequential_residual, solve_sequential
from .series import PowerSeries, Tolerance, evaluate, ld_termwise, lj_termwise
from .special import ml_series_sum
from .suites import SUITES

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NOT_CONVERGED, EXIT_SINGULAR = 0, 1, 2, 3, 4


def _num(x: float) -> str:
    x = float(x)
    if x == 0:
        x = 0.0  # drop the sign of -0
    return format(x, ".17g")


def _short(z: complex, dust: float = 0.0) -> str:
    z = complex(z)
    if abs(z) <= dust:
        z = 0j
    re = 0.0 if z.real == 0 else z.real
    im = 0.0 if z.imag == 0 else z.imag
    if im == 0:
        return format(re, ".15g")
    if re == 0:
        return format(im, ".15g") + "i"
    return f"({re:.15g}{im:+.15g}i)"


# ---------------------------------------------------------------- solving


class Trajectory:
    def __init__(self, t: np.ndarray, values: np.ndarray, err: np.ndarray, summary: list[str]):
        self.t = t
        self.values = values.reshape(t.size, -1)
        self.err = err
        self.summary = summary

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.values.shape[1]
        header = ["t"]
        for k in range(d):
            header += [f"comp{k}_re", f"comp{k}_im"]
        w.writerow(header + ["err_est"])
        for ti, row, e in zip(self.t, self.values, self.err):
            cells = [_num(ti)]
            for z in row:
                cells += [_num(z.real), _num(z.imag)]
            w.writerow(cells + [_num(e)])
        return buf.getvalue()


def _run_ml_eval(p: pf.MlEvalFile, tol: Tolerance) -> Trajectory:
    t = p.grid.points()
    vals = np.array([ml_series_sum(p.alpha, p.k, p.lam * ti, tol)[0] for ti in t])
    err = tol.rel_tol * (1 + np.abs(vals))
    return Trajectory(t, vals, err, [])


def _run_operator(p: pf.OperatorFile, tol: Tolerance) -> Trajectory:
    x = PowerSeries(p.coeffs)
    t = p.grid.points()
    if p.op == "lj":
        exact = lj_termwise(x, p.alpha)
        rule = graded_rule(p.alpha, p.n_nodes)
        vals = np.array([lj_apply(x, p.alpha, ti, rule) for ti in t])
    else:
        exact = ld_termwise(x, p.alpha)
        dx = PowerSeries(x.coeffs[1:] * np.arange(1, len(x))) if len(x) > 1 else PowerSeries([0])
        rule = None if p.alpha == 1 else derivative_rule(p.alpha, p.n_nodes)
        vals = np.array([ld_apply(dx, p.alpha, ti, rule) for ti in t])
    err = np.abs(vals - exact(t))
    return Trajectory(t, vals, err, [f"max |quadrature - termwise|: {_num(err.max())}"])


def linear_problem(p: pf.LinearSystemFile) -> LinearSystemProblem:
    src = p.source
    if isinstance(src, pf.FracPowerSourceSpec):
        source = FracPowerSource(np.array(src.ell), np.array(src.delta))
    elif isinstance(src, pf.SeriesSourceSpec):
        source = SeriesSource(np.array(src.coeffs, dtype=complex))
    else:
        source = ZeroSource()
    T = p.horizon_T if p.horizon_T is not None else max(p.grid.t_end, 1e-300)
    if T < p.grid.t_end:
        raise DomainError("horizon_T must cover the grid")
    return LinearSystemProblem(p.alpha, np.array(p.matrix, dtype=complex), source, np.array(p.x0), T)


def _run_linear(p: pf.LinearSystemFile, tol: Tolerance) -> Trajectory:
    prob = linear_problem(p)
    sol = solve(prob, tol=tol)
    t = p.grid.points()
    vals = sol(t)
    err = np.array([sol.error_estimate(ti) for ti in t])
    return Trajectory(t, vals, err, [f"max_residual: {_num(residual(prob, sol))}"])


def sequential_problem(p: pf.SequentialFile) -> SequentialProblem:
    forcing = tuple(ForcingAtom(f.beta, f.mu, f.j) for f in p.forcing)
    return SequentialProblem(p.alpha, tuple(p.coeffs), tuple(p.init), forcing, max(p.grid.t_end, 1e-300))


def _series_for(sol, T: float, tol: Tolerance) -> PowerSeries:
    n = 32
    while True:
        x = sol.series(n)
        try:
            _check_tail(_term_mags(x.coeffs[:, None], T), tol, "symbolic solution series")
            return x
        except NotConverged:
            if n >= tol.max_terms:
                raise
            n = min(2 * n, tol.max_terms)


def _run_sequential(p: pf.SequentialFile, tol: Tolerance) -> Trajectory:
    prob = sequential_problem(p)
    sol = solve_sequential(prob)
    t = p.grid.points()
    vals = sol(t, tol)
    x = _series_for(sol, prob.horizon_T, tol)
    err = np.abs(vals - x(t))
    summary = [f"max_residual: {_num(sequential_residual(prob, x))}", "solution:"]
    dust = 1e-12 * max([1.0] + [abs(c) for c, _ in sol.terms])  # display only; the CSV keeps raw values
    for coef, atom in sol.terms:
        summary.append(f"  {_short(coef, dust)} · t^{atom.k} · ML^({atom.k})({_short(atom.lam)} t)")
    return Trajectory(t, vals, err, summary)


def analytic2_problem(p: pf.Analytic2File) -> Analytic2Problem:
    T = max(p.grid.t_end, 1e-300)
    if p.preset is None:
        return Analytic2Problem(p.alpha, PowerSeries(p.p or [0]), PowerSeries(p.q or [0]), PowerSeries(p.c or [0]), tuple(p.init), T)
    a = p.preset.a if p.preset.index is None else hermite_eigenvalue(p.alpha, p.preset.index)
    if p.preset.name == "hermite":
        p_ser, q_ser = PowerSeries([0, -2]), PowerSeries([a])
    else:
        p_ser, q_ser = PowerSeries([0]), PowerSeries([0, a])
    return Analytic2Problem(p.alpha, p_ser, q_ser, PowerSeries([0]), tuple(p.init), T)


def _run_analytic2(p: pf.Analytic2File, tol: Tolerance) -> Trajectory:
    prob = analytic2_problem(p)
    if p.n_terms is not None:
        x = solve_analytic2(prob, p.n_terms)
    else:
        n = 32
        while True:
            x = solve_analytic2(prob, n)
            try:
                _check_tail(_term_mags(x.coeffs[:, None], prob.horizon_T), tol, "analytic2 series")
                break
            except NotConverged:
                if n >= tol.max_terms:
                    raise
                n = min(2 * n, tol.max_terms)
    t = p.grid.points()
    pairs = [evaluate(x, ti, tol) for ti in t]
    vals = np.array([v for v, _ in pairs])
    err = np.array([e for _, e in pairs])
    return Trajectory(t, vals, err, [f"n_terms: {len(x)}", f"max_residual: {_num(analytic2_residual(prob, x))}"])


RUNNERS = {
    "ml_eval": _run_ml_eval,
    "operator": _run_operator,
    "linear_system": _run_linear,
    "sequential": _run_sequential,
    "analytic2": _run_analytic2,
}


def run_problem(problem, tol: Tolerance) -> Trajectory:
    return RUNNERS[problem.kind](problem, tol)


# ---------------------------------------------------------------- commands


def _tolerance(args, spec: pf.TolSpec | None = None) -> Tolerance:
    base = pf.tolerance(spec) if spec is not None else Tolerance()
    changes = {}
    if args.tol_rel is not None:
        changes["rel_tol"] = args.tol_rel
    if args.tol_abs is not None:
        changes["abs_tol"] = args.tol_abs
    if args.max_terms is not None:
        changes["max_terms"] = args.max_terms
    return replace(base, **changes)


def cmd_ml_eval(args) -> int:
    tol = _tolerance(args)
    value, n_used = ml_series_sum(args.alpha, args.k, complex(args.s_re, args.s_im), tol)
    print(f"{_num(value.real)} {_num(value.imag)} {n_used}")
    return EXIT_OK


def cmd_solve(args) -> int:
    with open(args.problem_file, encoding="utf-8") as fh:
        problem = pf.parse_problem(fh.read())
    tol = _tolerance(args, problem.tol)
    traj = run_problem(problem, tol)
    text = traj.csv_text()
    summary = [f"kind: {problem.kind}", f"alpha: {problem.alpha:g}"] + traj.summary
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print("\n".join(summary))
    else:
        sys.stdout.write(text)
        print("\n".join(summary), file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = SUITES[args.suite](args.seed)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  {c.detail}")
    n_pass = sum(c.passed for c in checks)
    print(f"{args.suite}: {n_pass}/{len(checks)} passed")
    return EXIT_OK if n_pass == len(checks) else EXIT_FAIL


def _alpha(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rel", type=float, default=None, help="relative tolerance (default 1e-12)")
    common.add_argument("--tol-abs", type=float, default=None, help="absolute tolerance (default 1e-14)")
    common.add_argument("--max-terms", type=int, default=None, help="series term cap (default 4096)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path (solve: CSV file)")

    parser = argparse.ArgumentParser(prog="lfrac", description="L-fractional calculus toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml-eval", parents=[common], help="evaluate the k-th derivative of E_alpha at s")
    p.add_argument("--alpha", type=_alpha, required=True)
    p.add_argument("--s-re", type=float, default=0.0)
    p.add_argument("--s-im", type=float, default=0.0)
    p.add_argument("--k", type=int, default=0)
    p.set_defaults(func=cmd_ml_eval)

    p = sub.add_parser("solve", parents=[common], help="solve a JSON problem file")
    p.add_argument("problem_file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="run a property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ValueError, OSError) as exc:  # DomainError is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NotConverged, NoConvergence) as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (SingularWronskian, AnsatzMismatch) as exc:
        print(f"singular problem: {exc}", file=sys.stderr)
        return EXIT_SINGULAR


if __name__ == "__main__":
    sys.exit(main())
