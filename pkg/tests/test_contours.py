from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utm.contours import (
    ComplexPath,
    ContourError,
    PathSegment,
    asymptotic_sectors,
    boundary_contour,
    component_angles,
    decay_valleys,
    ivp_angles,
    ivp_contour,
    ivp_contour_rotated,
    ray_arc_ray,
    ray_arc_ray_reaching,
)
from utm.dispersion import Dispersion

MONOMIALS = [Dispersion.monomial(n, s) for n in (2, 3, 4, 5) for s in (1.0, -1.0)]


@pytest.mark.parametrize("disp", MONOMIALS, ids=lambda d: d.label())
def test_sectors_lie_in_D(disp):
    n = disp.degree
    for lo, hi in asymptotic_sectors(disp):
        assert 0 <= lo < hi <= math.pi + 1e-15
        assert hi - lo == pytest.approx(math.pi / n)
        for frac in (0.1, 0.5, 0.9):
            k = 3.0 * np.exp(1j * (lo + frac * (hi - lo)))
            assert disp(k).imag > 0


@pytest.mark.parametrize("disp", MONOMIALS, ids=lambda d: d.label())
def test_valleys_decay(disp):
    v = decay_valleys(disp)
    assert v.size == disp.degree
    for a in v:
        assert disp(2.0 * np.exp(1j * a)).imag < 0
    # backward time swaps the roles
    for a in decay_valleys(disp, t_sign=-1):
        assert disp(2.0 * np.exp(1j * a)).imag > 0


def test_sector_examples():
    assert asymptotic_sectors(Dispersion.monomial(2)).sectors == ((0.0, math.pi / 2),)
    assert len(asymptotic_sectors(Dispersion.monomial(3))) == 2
    (lo, hi), = asymptotic_sectors(Dispersion.monomial(3, -1.0)).sectors
    assert (lo, hi) == pytest.approx((math.pi / 3, 2 * math.pi / 3))


@given(th_in=st.floats(-3, 3), sweep=st.floats(0.1, 6.0), r=st.floats(0.1, 5))
@settings(max_examples=50, deadline=None)
def test_ray_arc_ray_winds_clockwise(th_in, sweep, r):
    th_out = th_in - sweep
    path = ray_arc_ray(r, th_in, th_out)
    v = path.vertices()
    assert np.allclose(np.abs(v), r)
    assert path.total_arg_change(0j) == pytest.approx(-sweep, abs=1e-6)


def test_ivp_contour_passes_above_origin():
    path = ivp_contour(5.0, 0.5)
    assert path.total_arg_change(0j) == pytest.approx(-math.pi, abs=1e-6)
    assert path.total_arg_change(-0.2j) == pytest.approx(-math.pi, abs=1e-6)
    assert path.total_arg_change(0.8j) == pytest.approx(math.pi, abs=1e-6)
    with pytest.raises(ContourError):
        ivp_contour(1.0, 2.0)


@pytest.mark.parametrize("disp", MONOMIALS, ids=lambda d: d.label())
def test_rotated_ivp_ends_in_valleys(disp):
    left, right = ivp_angles(disp)
    assert disp(3.0 * np.exp(1j * left)).imag < 0
    assert disp(3.0 * np.exp(1j * right)).imag < 0
    path = ivp_contour_rotated(disp)
    assert path.total_arg_change(0j) < 0


@pytest.mark.parametrize("disp", MONOMIALS, ids=lambda d: d.label())
def test_boundary_contours_surround_components(disp):
    for j, (lo, hi) in enumerate(asymptotic_sectors(disp), start=1):
        th_in, th_out = component_angles(disp, j)
        assert disp(3.0 * np.exp(1j * th_in)).imag < 0
        assert disp(3.0 * np.exp(1j * th_out)).imag < 0
        path = boundary_contour(disp, j)
        # a far point inside the component stays on the left of the contour
        inside = 50.0 * np.exp(1j * 0.5 * (lo + hi))
        assert path.total_arg_change(inside, far=1e6) == pytest.approx(2 * math.pi - (th_in - th_out), abs=1e-3)


def test_component_angles_validation():
    d = Dispersion.monomial(3)
    with pytest.raises(ContourError):
        component_angles(d, 3)
    with pytest.raises(ContourError):
        component_angles(d, 1, rotation=0.0)


def test_path_segments_must_join():
    with pytest.raises(ContourError):
        ComplexPath((PathSegment.finite(0, 1), PathSegment.finite(2, 3)))
    with pytest.raises(ContourError):
        ComplexPath((PathSegment.finite(0, 1), PathSegment.ray_in(1, 0.0)))
    with pytest.raises(ContourError):
        PathSegment.finite(1, 1)


def test_reversed_and_scaled_paths():
    path = ray_arc_ray(1.0, 2.0, -0.5)
    back = path.reversed()
    assert back.total_arg_change(0j) == pytest.approx(-path.total_arg_change(0j))
    big = path.scaled(3.0)
    assert np.allclose(np.abs(big.vertices()), 3.0)


def test_reaching_path_follows_axis():
    w = math.pi / 3
    path = ray_arc_ray_reaching(1.0, math.pi / 2, -w / 2, 6.0, 0.51 * w)
    v = path.vertices()
    assert v[-1] == pytest.approx(6.0)
    assert np.any(np.isclose(v, 1.0))
    # same winding about the origin as the plain contour
    plain = ray_arc_ray(1.0, math.pi / 2, -w / 2)
    assert path.total_arg_change(0j) == pytest.approx(plain.total_arg_change(0j), abs=1e-6)
    # the incoming end is not near the axis and stays put
    assert v[0] == pytest.approx(1j)
    assert ray_arc_ray_reaching(1.0, 2.0, -0.5, 0.5, 0.3) == ray_arc_ray(1.0, 2.0, -0.5)


def test_reaching_path_both_ends():
    w = math.pi / 2
    path = ray_arc_ray_reaching(1.0, math.pi - w / 2, -w / 2, 4.0, 0.51 * w)
    v = path.vertices()
    assert v[0] == pytest.approx(-4.0) and v[-1] == pytest.approx(4.0)
    assert path.total_arg_change(0j) == pytest.approx(-math.pi, abs=1e-6)
