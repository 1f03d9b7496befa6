from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from utm.dispersion import Dispersion
from utm.special_functions import (
    ASYMPTOTIC_SWITCH,
    SpecialDomainError,
    SpecialFnKey,
    asymptotic_eval,
    kernel_Kt,
    phase_scale,
    special_eval,
    special_eval_many,
    taylor_coeffs,
)

DISP = {"k^2": Dispersion.monomial(2), "-k^3": Dispersion.monomial(3, -1.0), "k^3": Dispersion.monomial(3)}

# mpmath quadrature at 30 digits on hand-placed contours (tests/freeze_mpmath.py)
FROZEN = [
    ("k^2", 0, 1, 0.7, 0.3, complex(-0.21500245229918777, -0.21642261762323231)),
    ("k^2", 1, 1, -1.2, 0.8, complex(1.1282743300491882, 0.20928754718256126)),
    ("k^2", 0, "C", 0.5, 0.4, complex(-0.33448977169436603, -0.14911220783302522)),
    ("-k^3", 0, 1, -0.5, 0.6, complex(-0.50065393985196438, 0.0)),
    ("-k^3", 1, 1, 1.5, 0.2, complex(0.014387586308842479, 0.0)),
    ("-k^3", 2, "C", 0.3, 1.0, complex(-0.27119358622962224, 0.0)),
    ("k^3", 0, 1, 0.4, 0.5, complex(-0.26352498574018244, -0.09358186081509566)),
    ("k^3", 0, 2, 0.4, 0.5, complex(-0.26352498574018244, 0.09358186081509566)),
    ("k^3", 1, 1, -1.0, 1.0, complex(0.57143160339120831, 0.19802608415531898)),
    ("k^3", 1, 2, 2.0, 0.3, complex(-0.063092987006891433, 0.058444168961652061)),
    ("k^3", 0, "C", 1.0, 0.01, complex(0.046689132509916515, 0.0)),
]


@pytest.mark.parametrize("label, m, comp, x, t, ref", FROZEN)
def test_frozen_reference_values(label, m, comp, x, t, ref):
    val = special_eval(SpecialFnKey(DISP[label], m, comp), x, t)
    assert abs(val.value - ref) <= 1e-9
    assert val.error <= 1e-8


@pytest.mark.parametrize("x", [-2.0, -0.3, 0.0, 0.8, 3.0])
@pytest.mark.parametrize("t", [0.05, 0.5, 2.0])
def test_kernels_against_airy_and_schrodinger(x, t):
    # m = -1 on the real line is the free propagator
    ls = special_eval(SpecialFnKey(DISP["k^2"], -1, "C"), x, t).value
    assert ls == pytest.approx(np.exp(1j * x * x / (4 * t)) / np.sqrt(4j * math.pi * t), abs=1e-9)
    s = (3 * t) ** (1 / 3)
    a2 = special_eval(SpecialFnKey(DISP["k^3"], -1, "C"), x, t).value
    assert a2 == pytest.approx(special.airy(-x / s)[0] / s, abs=1e-9)
    a1 = special_eval(SpecialFnKey(DISP["-k^3"], -1, "C"), x, t).value
    assert a1 == pytest.approx(special.airy(x / s)[0] / s, abs=1e-9)
    assert kernel_Kt(DISP["k^3"], x, t).value == pytest.approx(a2, abs=1e-9)


@given(x=st.floats(-3, 3), t=st.floats(0.05, 2), m=st.integers(0, 2), label=st.sampled_from(sorted(DISP)))
@settings(max_examples=30, deadline=None)
def test_x_derivative_lowers_pole_order(x, t, m, label):
    disp = DISP[label]
    h = 1e-4
    f = special_eval_many(SpecialFnKey(disp, m, "C"), [x - h, x + h], t)[0]
    lower = special_eval(SpecialFnKey(disp, m - 1, "C"), x, t).value
    assert (f[1] - f[0]) / (2 * h) == pytest.approx(lower, abs=1e-6 * (1 + abs(lower)))


@given(x=st.floats(-3, 3), t=st.floats(0.05, 2), m=st.integers(-1, 2))
@settings(max_examples=30, deadline=None)
def test_components_sum_to_real_line_contour(x, t, m):
    # for t > 0 the component contours telescope into the real-line contour
    disp = DISP["k^3"]
    comps = sum(special_eval(SpecialFnKey(disp, m, j), x, t).value for j in (1, 2))
    C = special_eval(SpecialFnKey(disp, m, "C"), x, t).value
    assert comps == pytest.approx(C, abs=1e-8)


def test_t_zero_step_values():
    disp = DISP["k^3"]
    assert special_eval(SpecialFnKey(disp, 0, "C"), -1.0, 0.0).value == -1.0
    assert special_eval(SpecialFnKey(disp, 2, "C"), -2.0, 0.0).value == pytest.approx(-2.0)
    assert special_eval(SpecialFnKey(disp, 0, "C"), 0.0, 0.0).value == -0.5
    assert special_eval(SpecialFnKey(disp, 1, "C"), 1.0, 0.0).value == 0
    assert special_eval(SpecialFnKey(disp, 0, 1), 1.0, 0.0).value == 0
    with pytest.raises(SpecialDomainError):
        special_eval(SpecialFnKey(disp, -1, "C"), 1.0, 0.0)


@pytest.mark.parametrize("t", [1e-3, 1e-4, 1e-6, 1e-8])
def test_t_zero_limit(t):
    # Airy-integral tail: exponentially small on one side, envelope y^(-3/4)/sqrt(pi) on the other
    disp = DISP["-k^3"]
    key = SpecialFnKey(disp, 0, "C")
    assert abs(special_eval(key, 1.5, t).value - special_eval(key, 1.5, 0.0).value) < 1e-10
    y = 1.5 / (3 * t) ** (1 / 3)
    gap = abs(special_eval(key, -1.5, t).value - special_eval(key, -1.5, 0.0).value)
    assert gap <= 1.1 * y**-0.75 / math.sqrt(math.pi)


def test_regime_switch_agrees():
    disp = DISP["k^2"]
    t = 0.1
    x_switch = (ASYMPTOTIC_SWITCH * t) ** 0.5
    xs = np.array([0.9, 0.99, 1.01, 1.1]) * x_switch
    key = SpecialFnKey(disp, 0, 1)
    vals, errs, regimes = special_eval_many(key, xs, t, return_regime=True)
    assert list(regimes) == ["quadrature", "quadrature", "asymptotic", "asymptotic"]
    for x, v in zip(xs, vals):
        other = special_eval(key, x, t, regime="quadrature").value
        assert v == pytest.approx(other, abs=1e-9)


def test_many_matches_single():
    key = SpecialFnKey(DISP["k^3"], 1, "sum")
    xs = np.linspace(-4, 4, 9)
    vals, errs = special_eval_many(key, xs, 0.3)
    for x, v in zip(xs, vals):
        assert v == pytest.approx(special_eval(key, x, 0.3).value, abs=1e-10)
    assert np.all(errs < 1e-8)


def test_complex_shift():
    # shifted by alpha c, as the image terms need
    disp = DISP["k^3"]
    a = np.exp(2j * math.pi / 3)
    key = SpecialFnKey(disp, 0, 2)
    v = special_eval(key, 1.0 - a * 0.5, 0.4).value
    h = 1e-5
    lo = special_eval(key, 1.0 - h - a * 0.5, 0.4).value
    hi = special_eval(key, 1.0 + h - a * 0.5, 0.4).value
    deriv = special_eval(SpecialFnKey(disp, -1, 2), 1.0 - a * 0.5, 0.4).value
    assert (hi - lo) / (2 * h) == pytest.approx(deriv, abs=1e-5)
    assert np.isfinite(v)


def test_asymptotic_leading_term_improves_with_scale():
    key = SpecialFnKey(DISP["k^3"], 0, 1)
    errs = []
    for x in (3.0, 6.0, 12.0):
        q = special_eval(key, x, 0.1, regime="quadrature")
        a = asymptotic_eval(key, x, 0.1)
        errs.append(abs(a.value - q.value))
        assert errs[-1] <= a.error + q.error
    assert errs[0] > errs[1] > errs[2]


def test_key_validation_and_scale():
    with pytest.raises(SpecialDomainError):
        SpecialFnKey(DISP["k^2"], -2, 1)
    with pytest.raises(SpecialDomainError):
        SpecialFnKey(DISP["k^2"], 0, 2)
    with pytest.raises(SpecialDomainError):
        SpecialFnKey(DISP["k^2"], 0, "all")
    assert SpecialFnKey(DISP["k^3"], 0, "sum").components() == [1, 2]
    assert phase_scale(DISP["k^3"], -8.0, 0.5) == pytest.approx(8.0 * 4.0)
    assert phase_scale(DISP["k^3"], 0.0, 0.5) == 0.0


def test_taylor_coefficients():
    disp = DISP["k^2"]
    a, rho = taylor_coeffs(disp, 0.4, 0.3, 8)
    k = 0.2 + 0.1j
    series = sum(a[j] * k**j for j in range(8))
    assert series == pytest.approx(np.exp(1j * k * 0.4 - 1j * k * k * 0.3), abs=1e-8)
    assert rho == pytest.approx(0.4 + 0.3**0.5)
