import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from lfrac.problemfile import dump_problem, parse_problem

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
cpx = st.tuples(finite, finite).map(list)
grid = st.builds(
    lambda a, w, n: {"t_start": a, "t_end": a + w, "n_points": n},
    st.floats(0, 10),
    st.floats(1e-3, 10),
    st.integers(1, 50),
)
alpha = st.floats(min_value=1e-3, max_value=1.0)

problems = st.one_of(
    st.fixed_dictionaries({"kind": st.just("ml_eval"), "alpha": alpha, "grid": grid, "lam": cpx, "k": st.integers(0, 5)}),
    st.fixed_dictionaries(
        {"kind": st.just("operator"), "alpha": alpha, "grid": grid, "op": st.sampled_from(["lj", "ld"]), "coeffs": st.lists(cpx, min_size=1, max_size=5)}
    ),
    st.fixed_dictionaries(
        {
            "kind": st.just("sequential"),
            "alpha": alpha,
            "grid": grid,
            "coeffs": st.just([[1, 0], [-2, 0]]),
            "init": st.lists(cpx, min_size=2, max_size=2),
            "forcing": st.lists(st.fixed_dictionaries({"beta": cpx, "mu": cpx, "j": st.integers(0, 3)}), max_size=3),
        }
    ),
    st.fixed_dictionaries(
        {
            "kind": st.just("linear_system"),
            "alpha": alpha,
            "grid": grid,
            "matrix": st.just([[[1, 0], [0, 1]], [[2, 0], [0, -1]]]),
            "x0": st.lists(cpx, min_size=2, max_size=2),
            "source": st.one_of(
                st.just({"type": "zero"}),
                st.fixed_dictionaries({"type": st.just("frac_power"), "ell": st.lists(cpx, min_size=2, max_size=2), "delta": st.just([0.5, 1.5])}),
                st.fixed_dictionaries({"type": st.just("series"), "coeffs": st.lists(st.lists(cpx, min_size=2, max_size=2), min_size=1, max_size=3)}),
            ),
        }
    ),
    st.fixed_dictionaries(
        {
            "kind": st.just("analytic2"),
            "alpha": alpha,
            "grid": grid,
            "preset": st.one_of(st.just({"name": "hermite", "index": 3}), st.fixed_dictionaries({"name": st.just("airy"), "a": cpx})),
            "init": st.lists(cpx, min_size=2, max_size=2),
        }
    ),
)


@settings(max_examples=150, deadline=None)
@given(doc=problems)
def test_round_trip(doc):
    parsed = parse_problem(json.dumps(doc))
    again = parse_problem(dump_problem(parsed))
    assert again == parsed
    assert dump_problem(again) == dump_problem(parsed)


BASE = {"kind": "ml_eval", "alpha": 0.5, "grid": {"t_start": 0, "t_end": 1, "n_points": 3}, "lam": [1, 0]}


@pytest.mark.parametrize(
    "patch",
    [
        {"alpha": 0},
        {"alpha": 1.5},
        {"grid": {"t_start": -1, "t_end": 1, "n_points": 3}},
        {"grid": {"t_start": 2, "t_end": 1, "n_points": 3}},
        {"grid": {"t_start": 1, "t_end": 1, "n_points": 3}},
        {"grid": {"t_start": 0, "t_end": 1, "n_points": 0}},
        {"lam": 1.0},
        {"lam": "1+0j"},
        {"lam": [1, 0, 0]},
        {"kind": "nope"},
        {"extra": 1},
        {"tol": {"rel": 0}},
    ],
)
def test_invalid_documents(patch):
    with pytest.raises(ValidationError):
        parse_problem(json.dumps({**BASE, **patch}))


def test_single_point_grid():
    p = parse_problem(json.dumps({**BASE, "grid": {"t_start": 0.5, "t_end": 0.5, "n_points": 1}}))
    assert p.grid.points().tolist() == [0.5]


def test_preset_rules():
    doc = {"kind": "analytic2", "alpha": 0.5, "grid": BASE["grid"], "init": [[1, 0], [0, 0]]}
    with pytest.raises(ValidationError):
        parse_problem(json.dumps({**doc, "preset": {"name": "airy", "index": 2}}))
    with pytest.raises(ValidationError):
        parse_problem(json.dumps({**doc, "preset": {"name": "hermite", "a": [1, 0], "index": 2}}))
    with pytest.raises(ValidationError):
        parse_problem(json.dumps({**doc, "preset": {"name": "hermite", "index": 2}, "q": [[1, 0]]}))
