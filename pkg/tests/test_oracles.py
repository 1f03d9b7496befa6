from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from utm.dispersion import Dispersion
from utm.oracles import (
    Bump,
    OracleError,
    brute_force_special,
    bump_derivative,
    compare,
    gaussian_odd_exact,
    images_ls,
    rate_fit,
    schrodinger_kernel,
    weak_residual,
)
from utm.piecewise_data import Piece, PiecewiseData
from utm.special_functions import SpecialFnKey, special_eval
from utm.verification import AIRY1, AIRY2, LS, PLANE_WAVE_NODES, WEAK_BUMPS, _gauss_spec

COMPONENTS = {"k^2": (LS, [1]), "-k^3": (AIRY1, [1]), "k^3": (AIRY2, [1, 2])}


@given(label=st.sampled_from(sorted(COMPONENTS)), m=st.integers(-1, 2), pick=st.integers(0, 3),
       x=st.floats(-3, 3), t=st.floats(0.2, 2.0))
@settings(max_examples=50, deadline=None)
def test_library_matches_brute_force(label, m, pick, x, t):
    disp, comps = COMPONENTS[label]
    choices = comps + ["sum", "C"]
    comp = choices[pick % len(choices)]
    ref = brute_force_special(disp, m, comp, x, t)
    got = special_eval(SpecialFnKey(disp, m, comp), x, t).value
    assert got == pytest.approx(ref, abs=1e-9 * (1 + abs(ref)))


@pytest.mark.parametrize("x", [-1.5, 0.0, 2.0])
def test_brute_force_kernels(x):
    t = 0.3
    s = (3 * t) ** (1 / 3)
    assert brute_force_special(AIRY2, -1, "C", x, t) == pytest.approx(special.airy(-x / s)[0] / s, abs=1e-10)
    assert brute_force_special(LS, -1, "C", x, t) == pytest.approx(complex(schrodinger_kernel(x, t)), abs=1e-10)


@pytest.mark.parametrize("disp", [LS, AIRY1, AIRY2], ids=lambda d: d.label())
def test_brute_force_causality(disp):
    for x in (0.0, 0.7):
        assert abs(brute_force_special(disp, 0, 1, x, -0.4)) < 1e-10


def test_brute_force_domain():
    with pytest.raises(OracleError):
        brute_force_special(LS, 0, 1, 1.0, 0.0)
    with pytest.raises(OracleError):
        brute_force_special(LS, 0, "C", 1.0, -1.0)


@given(x=st.floats(-3, 3), t=st.floats(0.05, 2))
@settings(max_examples=30, deadline=None)
def test_gaussian_solution_satisfies_pde(x, t):
    # i q_t = -q_xx, checked by central differences
    h = 1e-3
    q_t = (gaussian_odd_exact(x, t + h) - gaussian_odd_exact(x, t - h)) / (2 * h)
    q_xx = (gaussian_odd_exact(x + h, t) - 2 * gaussian_odd_exact(x, t) + gaussian_odd_exact(x - h, t)) / h**2
    assert 1j * q_t == pytest.approx(-q_xx, abs=1e-4)
    assert gaussian_odd_exact(-x, t) == pytest.approx(-gaussian_odd_exact(x, t))


@pytest.mark.parametrize("x, t", [(0.3, 0.1), (1.0, 0.5), (2.0, 1.0), (0.05, 0.02)])
def test_images_reproduce_gaussian(x, t):
    assert images_ls(_gauss_spec().initial, x, t) == pytest.approx(complex(gaussian_odd_exact(x, t)), abs=1e-9)


def test_images_domain_and_skipped_pieces():
    q = PiecewiseData((Piece.poly(0.0, 1.0, (1.0,)), Piece.constant(1.0, math.inf, 0.0)))
    with pytest.raises(OracleError):
        images_ls(q, 1.0, 0.0)
    # a zero tail adds nothing
    short = PiecewiseData((Piece.poly(0.0, 1.0, (1.0,)),))
    assert images_ls(q, 0.5, 0.3) == pytest.approx(images_ls(short, 0.5, 0.3), abs=1e-14)


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_bump_derivatives(order):
    s = np.linspace(-0.9, 0.9, 13)
    h = 1e-5
    fd = (bump_derivative(s + h, order) - bump_derivative(s - h, order)) / (2 * h)
    assert np.allclose(fd, bump_derivative(s, order + 1), atol=1e-5 * (1 + np.abs(fd).max()))
    assert np.all(bump_derivative(np.array([-1.0, 1.0, 1.5]), order) == 0)


def test_bump_geometry():
    b = Bump.on(0.5, 1.5, 0.3, 0.7)
    assert b.support == pytest.approx((0.5, 1.5, 0.3, 0.7))


def test_weak_residual_separates_solutions_from_non_solutions():
    k0 = 1.3

    def wave(xs, t):
        return np.exp(1j * k0 * np.asarray(xs) - 1j * AIRY2(k0) * t)

    def frozen(xs, t):
        return np.exp(1j * k0 * np.asarray(xs))

    bump = WEAK_BUMPS[0]
    assert abs(weak_residual(wave, AIRY2, bump, nodes=PLANE_WAVE_NODES)) < 1e-8
    assert abs(weak_residual(frozen, AIRY2, bump, nodes=PLANE_WAVE_NODES)) > 1e-3
    # the same wave is not a solution for the opposite sign
    assert abs(weak_residual(wave, AIRY1, bump, nodes=PLANE_WAVE_NODES)) > 1e-3
    with pytest.raises(OracleError):
        weak_residual(wave, AIRY2, Bump.on(0.0, 1.0, 0.2, 0.4))


def test_weak_residual_for_ls_gaussian():
    def field(xs, t):
        return gaussian_odd_exact(xs, t)

    assert abs(weak_residual(field, Dispersion.monomial(2), Bump.on(0.5, 2.0, 0.2, 0.8), nodes=65)) < 1e-8


@given(p=st.floats(0.1, 3.0), c=st.floats(0.1, 10.0))
@settings(max_examples=30, deadline=None)
def test_rate_fit_recovers_planted_exponent(p, c):
    h = np.geomspace(1.0, 1e-3, 10)
    fit = rate_fit(list(zip(h, c * h**p)))
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert fit.halfwidth < 1e-9


def test_rate_fit_validation():
    h = [1.0, 0.5, 0.25, 0.125]
    with pytest.raises(OracleError):
        rate_fit(list(zip(h[:3], h[:3])))
    with pytest.raises(OracleError):
        rate_fit(list(zip(h[::-1], h)))
    with pytest.raises(OracleError):
        rate_fit(list(zip(h, [1.0, -1.0, 1.0, 1.0])))
    assert rate_fit(list(zip(h, [1.0, 0.0, 1.0, 1.0]))).saturated


def test_compare_report():
    r = compare("x", 2.0, 2.0 + 1e-9j, 1e-8)
    assert r.passed and r.abs_dev == pytest.approx(1e-9) and r.rel_dev == pytest.approx(5e-10)
    assert not compare("x", 1.0, 1.1, 1e-3).passed
