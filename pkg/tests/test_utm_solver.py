from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utm.dispersion import Dispersion
from utm.piecewise_data import IBVPSpec, Piece, PiecewiseData
from utm.utm_solver import (
    SolutionEvaluator,
    SolverError,
    disc_data_airy2,
    disc_data_spec,
    elimination_symmetries,
    evaluate_grid,
    solve_airy1,
    solve_airy2,
    solve_general_monomial,
    solve_ls,
)
from utm.verification import AIRY1, AIRY2, LS, _poly_spec

SMOOTH = PiecewiseData((Piece.polyexp(0.0, math.inf, (0.0, 1.0), 1.0),))


def _smooth_spec(disp):
    g = (PiecewiseData.zero(),)
    if disp is AIRY2:
        # Neumann datum matches q'(0) = 1
        g = (PiecewiseData.zero(), PiecewiseData((Piece.constant(0.0, 1.0, 1.0),)))
    return IBVPSpec(disp, SMOOTH, g, 1.0)


def test_evaluation_domain():
    ev = SolutionEvaluator(_poly_spec(LS))
    for x, t in ((0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, 1.5), (1.0, -0.1)):
        with pytest.raises(SolverError):
            ev(x, t)


def test_method_selection_and_mismatch():
    assert SolutionEvaluator(_poly_spec(LS)).method == "closed-form-LS"
    assert SolutionEvaluator(_poly_spec(AIRY1)).method == "closed-form-Airy1"
    assert SolutionEvaluator(_poly_spec(AIRY2)).method == "closed-form-Airy2"
    with pytest.raises(SolverError):
        SolutionEvaluator(_poly_spec(AIRY2), "closed-form-LS")
    with pytest.raises(SolverError):
        SolutionEvaluator(_poly_spec(LS), "spectral")
    with pytest.raises(SolverError):
        SolutionEvaluator(_poly_spec(AIRY2), "direct-oracle")
    # images need zero Dirichlet data
    with pytest.raises(SolverError):
        SolutionEvaluator(_poly_spec(LS), "direct-oracle")
    with pytest.raises(SolverError):
        SolutionEvaluator(_poly_spec(LS), depth=-1)


def test_general_solver_restrictions():
    with pytest.raises(SolverError):
        SolutionEvaluator(_smooth_spec(LS), "general-monomial")
    q = PiecewiseData((Piece.poly(0.0, 1.0, (1.0,)), Piece.constant(1.0, math.inf, 0.0)))
    spec = IBVPSpec(Dispersion.parse("k^3+k"), q, (PiecewiseData.zero(), PiecewiseData.zero()), 1.0)
    with pytest.raises(SolverError):
        SolutionEvaluator(spec, "general-monomial")


@pytest.mark.parametrize("disp, expected", [(LS, {1: [1]}), (AIRY2, {1: [2], 2: [1]}), (AIRY1, {1: [1, 2]})],
                         ids=["k^2", "k^3", "-k^3"])
def test_elimination_symmetries(disp, expected):
    # each power rotates the component into the lower half plane
    n = disp.degree
    for j, powers in expected.items():
        got = elimination_symmetries(disp, j)
        assert sorted(p % n for p in got) == sorted(p % n for p in powers)


@pytest.mark.parametrize("disp", [LS, AIRY1, AIRY2], ids=lambda d: d.label())
def test_general_agrees_with_closed_form(disp):
    spec = _poly_spec(disp)
    closed = SolutionEvaluator(spec)
    general = SolutionEvaluator(spec, "general-monomial")
    for x, t in ((0.2, 0.05), (1.1, 0.6), (2.5, 1.0)):
        assert general(x, t) == pytest.approx(closed(x, t), abs=1e-8)


def test_wrappers_match_evaluator():
    spec = _poly_spec(AIRY2)
    ref = SolutionEvaluator(spec)(0.8, 0.4)
    assert solve_airy2(spec, 0.8, 0.4) == ref
    assert solve_general_monomial(spec, 0.8, 0.4) == pytest.approx(ref, abs=1e-8)
    assert solve_airy1(_poly_spec(AIRY1), 0.8, 0.4) == SolutionEvaluator(_poly_spec(AIRY1))(0.8, 0.4)
    assert solve_ls(_poly_spec(LS), 0.8, 0.4) == SolutionEvaluator(_poly_spec(LS))(0.8, 0.4)


def test_closed_form_ls_matches_images():
    q = PiecewiseData((Piece.poly(0.0, 1.0, (0.0, 1.0, -1.0)), Piece.constant(1.0, math.inf, 0.0)))
    spec = IBVPSpec(LS, q, (PiecewiseData.zero(),), 1.0)
    closed = SolutionEvaluator(spec)
    images = SolutionEvaluator(spec, "direct-oracle")
    for x, t in ((0.3, 0.2), (1.2, 0.8), (0.05, 0.01)):
        assert closed(x, t) == pytest.approx(images(x, t), abs=1e-9)


@pytest.mark.parametrize("disp", [LS, AIRY1, AIRY2], ids=lambda d: d.label())
def test_boundary_limit(disp):
    spec = _poly_spec(disp)
    ev = SolutionEvaluator(spec)
    for t in (0.3, 0.8):
        g0 = spec.boundary[0](t)
        assert abs(ev(1e-4, t) - g0) < 1e-3
        # the gap closes linearly in x
        assert abs(ev(1e-4, t) - g0) < 0.2 * abs(ev(1e-3, t) - g0)


@pytest.mark.parametrize("disp, sign, order", [(LS, 1j, 2), (AIRY1, -1.0, 3)], ids=["k^2", "-k^3"])
def test_short_time_first_order(disp, sign, order):
    # u = q + t q_t + O(t^2), and the PDE supplies q_t from x-derivatives
    ev = SolutionEvaluator(_smooth_spec(disp))
    t = 1e-5
    for x in (0.5, 1.0, 2.0):
        slope = (ev(x, t) - SMOOTH(x)) / t
        assert slope == pytest.approx(sign * SMOOTH.derivative(order, x), abs=2e-3)


def test_zero_data_gives_zero():
    spec = IBVPSpec(AIRY2, PiecewiseData.zero(), (PiecewiseData.zero(), PiecewiseData.zero()), 1.0)
    v, e, _ = SolutionEvaluator(spec).evaluate([0.3, 1.0, 4.0], 0.5)
    assert np.all(np.abs(v) < 1e-12)


@given(a=st.floats(-2, 2), b=st.floats(-2, 2))
@settings(max_examples=10, deadline=None)
def test_linearity_in_data(a, b):
    def solve(q, c):
        spec = IBVPSpec(LS, q, (PiecewiseData((Piece.constant(0.0, 1.0, c),)),), 1.0)
        return SolutionEvaluator(spec)(0.7, 0.4)

    def ramp(scale):
        return PiecewiseData((Piece.poly(0.0, 1.0, (scale, -scale)), Piece.constant(1.0, math.inf, 0.0)))

    tail = PiecewiseData((Piece.polyexp(0.0, math.inf, (2.0,), 1.5),))
    assert solve(ramp(a), 0.3 * a) == pytest.approx(a * solve(ramp(1.0), 0.3), abs=1e-9)
    shift = solve(tail, 2.0 + b) - solve(tail, 2.0)
    assert shift == pytest.approx(b * solve(PiecewiseData.zero(), 1.0), abs=1e-9)


@pytest.mark.parametrize("x, t", [(0.5, 0.4), (1.5, 0.1), (3.0, 0.9), (0.2, 0.2)])
def test_disc_data_formula_matches_solver(x, t):
    spec = disc_data_spec(1.0, 2.0, 0.25, 1.0, -1.0)
    ev = SolutionEvaluator(spec)
    assert disc_data_airy2(x, t, 1.0, 2.0, 0.25, 1.0, -1.0) == pytest.approx(ev(x, t), abs=1e-9)


def test_disc_data_validation():
    with pytest.raises(SolverError):
        disc_data_spec(1.0, 2.0, 1.5, 1.0, 0.0)
    with pytest.raises(SolverError):
        disc_data_airy2(0.5, 0.3, 2.0, 1.0, 0.25, 1.0, 0.0)
    with pytest.raises(SolverError):
        disc_data_airy2(0.5, 0.3, 1.0, 2.0, 0.0, 1.0, 0.0)
    spec = disc_data_spec(1.0, 1.0, 0.5, 1.0, 0.0)
    assert spec.initial.is_zero


def test_grid_is_order_independent_and_parallel_safe():
    ev = SolutionEvaluator(_poly_spec(AIRY2))
    xs = [1.5, 0.2, 0.9, 0.2]
    ts = [0.6, 0.3]
    a = evaluate_grid(ev, xs, ts)
    b = evaluate_grid(ev, sorted(set(xs)), ts[::-1], workers=2)
    assert [(s.x, s.t) for s in a] == [(x, t) for t in (0.3, 0.6) for x in (0.2, 0.9, 1.5)]
    assert [s.value for s in a] == [s.value for s in b]
    assert all(s.ok and s.error < 1e-8 for s in a)


def test_grid_reports_failures_per_point():
    ev = SolutionEvaluator(_poly_spec(LS))
    samples = evaluate_grid(ev, [0.0, 1.0], [0.5, 2.0])
    bad = [s for s in samples if not s.ok]
    assert {(s.x, s.t) for s in bad} == {(0.0, 0.5), (0.0, 2.0), (1.0, 2.0)}
    assert all(s.regime == "failed" and math.isinf(s.error) for s in bad)
    good = [s for s in samples if s.ok]
    assert good[0].value == pytest.approx(ev(1.0, 0.5))
