from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utm.dispersion import Dispersion
from utm.local_expansions import (
    ALPHA,
    EXAMPLES,
    I_UNIT,
    ONE,
    ZERO,
    Cyclo,
    Expansion,
    ExpansionError,
    LinearForm,
    cancel_compatible,
    compatibility_factor,
    corner_initial_coefficients,
    example_for,
    expansion_zero_bc,
    expansion_zero_ic,
    fit_residual,
    qloc,
    residual_class,
    residual_order,
    scaled_distance,
    sym_g,
    sym_q,
)
from utm.piecewise_data import IBVPSpec, Piece, PiecewiseData
from utm.utm_solver import _CLOSED_FORMS, BoundaryTerm, ImageTerm, SolutionEvaluator
from utm.verification import AIRY1, AIRY2, LS

small = st.fractions(min_value=-5, max_value=5, max_denominator=7)
cyclos = st.builds(lambda a, b, c, d: Cyclo((a, b, c, d)), small, small, small, small)


@given(a=cyclos, b=cyclos, c=cyclos)
@settings(max_examples=80, deadline=None)
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert (a - a).is_zero()
    assert complex(a * b) == pytest.approx(complex(a) * complex(b), abs=1e-9)
    if not a.is_zero():
        assert a * a.inverse() == ONE
        assert complex(b / a) == pytest.approx(complex(b) / complex(a), rel=1e-9, abs=1e-9)


def test_roots_of_unity():
    z = Cyclo.zeta()
    assert z**12 == ONE and z**6 == -ONE
    assert complex(z) == pytest.approx(cmath.exp(1j * math.pi / 6))
    assert I_UNIT * I_UNIT == -ONE
    assert ALPHA**3 == ONE
    assert (ONE + ALPHA + ALPHA**2).is_zero()
    assert Cyclo.of(Fraction(1, 3)) * 3 == ONE
    with pytest.raises(TypeError):
        Cyclo.of(0.5)
    with pytest.raises(ZeroDivisionError):
        ZERO.inverse()


def test_linear_forms():
    a = LinearForm.single("a", 2)
    b = LinearForm.single("b", I_UNIT)
    f = a + b - a
    assert f.symbols == ("b",)
    assert (a - a).is_zero()
    g = (a + b).substitute({"b": LinearForm.single("a", -2 * I_UNIT ** 3)})
    assert g.is_zero()
    assert (a + b).evaluate({"a": 1.5, "b": 2.0}) == pytest.approx(3.0 + 2j)
    with pytest.raises(ExpansionError):
        (a + b).evaluate({"a": 1.0})


def _as_numbers(terms):
    out = []
    for tm in terms:
        if hasattr(tm, "beta"):
            out.append(("image", tm.component, complex(tm.weight), complex(tm.beta)))
        else:
            out.append(("boundary", tm.component, complex(tm.weight), tm.power, tm.index))
    return out


@pytest.mark.parametrize("name", ["LS", "Airy1", "Airy2"])
def test_exact_tables_match_solver_tables(name):
    # two independently typed copies of the same formulas
    ex = EXAMPLES[name]
    coeffs, terms = _CLOSED_FORMS[f"closed-form-{name}"]
    assert ex.coeffs == coeffs
    exact = _as_numbers(ex.terms)
    numeric = _as_numbers(terms)
    assert len(exact) == len(numeric)
    for e in exact:
        assert any(e[0] == m[0] and e[1] == m[1] and e[3:] == pytest.approx(m[3:], abs=1e-14)
                   and e[2] == pytest.approx(m[2], abs=1e-14) for m in numeric)
    assert all(isinstance(tm, (ImageTerm, BoundaryTerm)) for tm in terms)


@pytest.mark.parametrize("name, factor", [("LS", 1j), ("Airy1", -1.0), ("Airy2", 1.0)])
def test_compatibility_factor(name, factor):
    # q_t = i q_xx, -q_xxx, q_xxx: each time derivative of g is factor times n more x-derivatives of q
    ex = EXAMPLES[name]
    for order in range(4):
        assert complex(compatibility_factor(ex, order)) == pytest.approx(factor**order)


def test_example_lookup():
    assert example_for(Dispersion.monomial(3, -1.0)).name == "Airy1"
    with pytest.raises(ExpansionError):
        example_for(Dispersion.monomial(4))


def test_corner_initial_coefficients_ls():
    # one image, weight -1 at beta = -1: coefficient 1 - (-1)^(order + 1)
    ex = EXAMPLES["LS"]
    assert corner_initial_coefficients(ex, 0) == {1: Cyclo.of(2)}
    assert corner_initial_coefficients(ex, 1) == {1: ZERO}


def test_qloc_validation():
    with pytest.raises(ExpansionError):
        qloc("KdV", q0=1.0, g0=0.0)
    with pytest.raises(ExpansionError):
        qloc("LS", q0=1.0)
    with pytest.raises(ExpansionError):
        qloc("LS", q0=1.0, g0=0.0, g1=0.0)
    with pytest.raises(ExpansionError):
        qloc("Airy2-first", q0=1.0, g0=0.0, g1=0.0)


def test_qloc_limits():
    flat = qloc("LS", q0=2.0, g0=2.0)
    assert flat.terms[0].coefficient.evaluate(flat.values) == 0
    assert flat.evaluate(0.5, 0.1) == pytest.approx(2.0)
    e = qloc("LS", q0=1.0, g0=0.0)
    assert abs(e.evaluate(1e-9, 0.3)) < 1e-8
    assert abs(e.evaluate(1.0, 1e-8) - 1.0) < 1e-3
    a1 = qloc("Airy1", q0=1.0, g0=-0.5)
    assert a1.evaluate(1e-9, 0.4) == pytest.approx(-0.5, abs=1e-8)
    a2 = qloc("Airy2-first", q0=1.0, dq0=0.3, g0=0.2, g1=-1.0)
    assert a2.evaluate(1e-9, 0.4) == pytest.approx(0.2, abs=1e-7)


def test_expansion_bookkeeping():
    with pytest.raises(ExpansionError):
        Expansion((0.0, 0.0), error=(0.0, 1.0))
    e = qloc("LS", q0=1.0, g0=0.0)
    rebound = e.bind(**{sym_g(0, 0): 1.0})
    assert rebound.evaluate(0.7, 0.2) == pytest.approx(1.0)
    assert e.values[sym_g(0, 0)] == 0.0
    rows = e.rows()
    assert rows[0]["value"] and "q_o^(0)(0)" in rows[0]["symbolic"]
    vals = e.evaluate(np.array([0.2, 0.4]), 0.3)
    assert vals.shape == (2,)


PWL = PiecewiseData((Piece.poly(0.0, 1.0, (1.0, 0.5)), Piece.constant(1.0, math.inf, 0.0)))


def _zero_bc(disp, q=PWL):
    g = tuple(PiecewiseData.zero() for _ in range(2 if disp is AIRY2 else 1))
    return IBVPSpec(disp, q, g, 1.0)


@pytest.mark.parametrize("disp", [LS, AIRY1, AIRY2], ids=lambda d: d.label())
@pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
def test_zero_bc_depth_two_is_exact_for_linear_pieces(disp, s):
    # with q'' = 0 the two-term integration by parts has no remainder
    spec = _zero_bc(disp)
    ev = SolutionEvaluator(spec)
    exp = expansion_zero_bc(spec, s, depth=2)
    for h in (0.1, 0.02):
        t = h**disp.degree
        assert exp.evaluate(s + h, t) == pytest.approx(ev(s + h, t), abs=1e-10)


@pytest.mark.parametrize("disp", [LS, AIRY1, AIRY2], ids=lambda d: d.label())
def test_zero_bc_depth_one_within_error_class(disp):
    spec = _zero_bc(disp)
    ev = SolutionEvaluator(spec)
    exp = expansion_zero_bc(spec, 0.5)
    assert exp.error == residual_class(0, disp.degree)
    hs = np.geomspace(0.1, 0.005, 6)
    res = [abs(exp.evaluate(0.5 + h, h**disp.degree) - ev(0.5 + h, h**disp.degree)) for h in hs]
    fit = fit_residual(scaled_distance(0.5 + hs, hs**disp.degree, 0.5, 0.0, disp.degree), res, residual_order(0, disp.degree))
    assert fit.meets_prediction


def test_zero_bc_validation():
    spec = _zero_bc(LS)
    with pytest.raises(ExpansionError):
        expansion_zero_bc(spec, -0.1)
    with pytest.raises(ExpansionError):
        expansion_zero_bc(spec, 0.5, depth=3)
    g = (PiecewiseData((Piece.constant(0.0, 1.0, 1.0),)),)
    with pytest.raises(ExpansionError):
        expansion_zero_bc(IBVPSpec(LS, PWL, g, 1.0), 0.5)


def _zero_ic(disp):
    g0 = PiecewiseData((Piece.polyexp(0.0, 1.0, (1.0,), 1.0),))
    g = (g0, PiecewiseData.zero()) if disp is AIRY2 else (g0,)
    return IBVPSpec(disp, PiecewiseData.zero(), g, 1.0)


@pytest.mark.parametrize("disp", [LS, AIRY1, AIRY2], ids=lambda d: d.label())
def test_zero_ic_expansion_at_its_centre(disp):
    spec = _zero_ic(disp)
    ev = SolutionEvaluator(spec)
    for s, tau in ((0.3, 0.5), (0.0, 0.4)):
        exp = expansion_zero_ic(spec, s, tau)
        x = s if s > 0 else 1e-9
        assert exp.evaluate(x, tau) == pytest.approx(ev(x, tau), abs=1e-7)
    # the boundary value is recovered at the wall
    assert expansion_zero_ic(spec, 0.0, 0.4).evaluate(1e-9, 0.4) == pytest.approx(math.exp(-0.4), abs=1e-6)


def test_zero_ic_validation_and_trivial_cases():
    with pytest.raises(ExpansionError):
        expansion_zero_ic(_zero_bc(LS), 0.5, 0.5)
    with pytest.raises(ExpansionError):
        expansion_zero_ic(_zero_ic(LS), 0.5, 2.0)
    quiet = IBVPSpec(LS, PiecewiseData.zero(), (PiecewiseData.zero(),), 1.0)
    assert expansion_zero_ic(quiet, 0.5, 0.5).terms == ()
    at_start = expansion_zero_ic(_zero_ic(LS), 0.5, 0.0)
    assert at_start.constant == 0 and len(at_start.terms) == 1


def test_cancellation_with_incompatible_data():
    q = PiecewiseData((Piece.poly(0.0, 1.0, (1.0, 0.5)), Piece.constant(1.0, math.inf, 0.0)))
    g = (PiecewiseData((Piece.constant(0.0, 1.0, 0.25),)), PiecewiseData((Piece.constant(0.0, 1.0, 0.5),)))
    canc = cancel_compatible(IBVPSpec(AIRY2, q, g, 1.0), 1)
    assert canc.decay == 0
    assert dict(canc.conditions) == {f"{sym_g(0, 0)} = {ONE} * {sym_q(0)}": False,
                                     f"{sym_g(1, 0)} = {ONE} * {sym_q(1)}": True}
    # order one cancels since g_1(0) = q'(0); order zero keeps the mismatch q(0) - g_0(0)
    assert all(form.is_zero() for (pole, _), form in canc.coefficients.items() if pole == 1)
    survivors = canc.expansion.terms
    assert {tm.key.m for tm in survivors} == {0}
    for tm in survivors:
        assert tm.coefficient.evaluate(canc.expansion.values) != 0


def test_residual_order_and_fit():
    assert residual_order(0, 2) == 0.5 and residual_order(2, 3) == 2.5
    assert residual_class(1, 3) == (1.5, 0.5)
    with pytest.raises(ExpansionError):
        residual_order(-1, 2)
    with pytest.raises(ExpansionError):
        residual_order(0, 1)
    hs = np.geomspace(1.0, 1e-3, 8)
    fit = fit_residual(hs, 2 * hs**1.5, 1.5)
    assert fit.slope == pytest.approx(1.5, abs=1e-9) and fit.meets_prediction
    assert not fit_residual(hs, hs**0.5, 1.5).meets_prediction
    exact = fit_residual(hs, np.zeros_like(hs), 1.5)
    assert exact.saturated and exact.meets_prediction
    with pytest.raises(ExpansionError):
        fit_residual(hs[:3], hs[:3], 1.0)
    assert scaled_distance(0.5, 0.008, 0.0, 0.0, 3) == pytest.approx(0.7)
