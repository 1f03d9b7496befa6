"""Named verification suites behind ``utm verify``.

Each check compares a computed quantity with a reference and a tolerance.
Reference values are exact identities, independent oracles from
:mod:`utm.oracles`, or closed-form solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import Dispersion
from .oracles import Bump, brute_force_special, gaussian_odd_exact, images_ls, rate_fit, weak_residual
from .piecewise_data import IBVPSpec, Piece, PiecewiseData
from .special_functions import SpecialFnKey, special_eval
from .utm_solver import SolutionEvaluator, disc_data_spec

LS = Dispersion.monomial(2)
AIRY1 = Dispersion.monomial(3, -1.0)
AIRY2 = Dispersion.monomial(3)
EXAMPLE_DISPERSIONS = {"k^2": LS, "-k^3": AIRY1, "k^3": AIRY2}

# supports avoid t = t1 = 0.25, where the boundary datum jumps
WEAK_BUMPS = (
    Bump.on(0.5, 1.5, 0.3, 0.7),
    Bump.on(1.0, 2.5, 0.4, 0.9),
    Bump.on(1.5, 3.0, 0.3, 0.8),
)
PLANE_WAVE_NODES = 129


@dataclass(frozen=True)
class Check:
    check: str
    expected: str
    actual: str
    tol: float
    passed: bool


def _abs_check(name: str, expected: complex, actual: complex, tol: float) -> Check:
    return Check(name, repr(complex(expected)), repr(complex(actual)), tol, abs(actual - expected) <= tol)


def _bound_check(name: str, actual: float, tol: float) -> Check:
    return Check(name, f"<= {tol!r}", repr(float(actual)), tol, actual <= tol)


def _I(disp: Dispersion, m: int, comp, x, t) -> complex:
    return special_eval(SpecialFnKey(disp, m, comp), x, t).value


def anchors() -> list[Check]:
    rows = []
    for tau in (0.1, 1.0, 10.0):
        rows.append(_abs_check(f"anchor I[k^2,0,1](0,{tau})", -0.5, _I(LS, 0, 1, 0.0, tau), 1e-8))
    for t in (0.1, 1.0):
        rows.append(_abs_check(f"anchor I[k^3,0,1](0,{t})", -1 / 3, _I(AIRY2, 0, 1, 0.0, t), 1e-8))
    for label, disp in EXAMPLE_DISPERSIONS.items():
        worst = 0.0
        comps = SpecialFnKey(disp, 0, "sum").components()
        for j in comps:
            for x in (0.0, 0.5, 2.0):
                for t in (-0.01, -0.5, -2.0):
                    worst = max(worst, abs(_I(disp, 0, j, x, t)))
        rows.append(_bound_check(f"causality I[{label},0,j](x>=0,t<0)", worst, 1e-10))
    rows.append(_bound_check("large-x decay |I[-k^3,0,1](10,0.1)|", abs(_I(AIRY1, 0, 1, 10.0, 0.1)), 1e-8))
    return rows


_ORACLE_POINTS = (
    (LS, 0, 1, 0.7, 0.3), (LS, 1, 1, -1.2, 0.8), (AIRY1, 0, 1, -0.5, 0.6),
    (AIRY1, 1, 1, 1.5, 0.2), (AIRY2, 0, 2, 0.4, 0.5), (AIRY2, 1, 1, -1.0, 1.0),
)


def _gauss_spec() -> IBVPSpec:
    def f(x, order):
        # derivatives of x e^{-x^2}: -1/2 d^{o+1}/dx^{o+1} e^{-x^2}
        from numpy.polynomial import hermite

        x = np.asarray(x, dtype=float)
        c = np.zeros(order + 2)
        c[-1] = 1.0
        return -0.5 * (-1.0) ** (order + 1) * hermite.hermval(x, c) * np.exp(-(x**2))

    q = PiecewiseData((Piece.numeric(0.0, math.inf, f, max_order=40, cutoff=7.0),))
    return IBVPSpec(LS, q, (PiecewiseData.zero(),), 1.0)


def _poly_spec(disp: Dispersion) -> IBVPSpec:
    q = PiecewiseData((Piece.poly(0.0, 1.0, (1.0, -0.5, 0.25)), Piece.poly(1.0, 2.0, (0.5,)),
                       Piece.constant(2.0, math.inf, 0.0)))
    g = [PiecewiseData((Piece.poly(0.0, 1.0, (0.3, 1.0)),))]
    if disp.leading > 0 and disp.degree == 3:
        g.append(PiecewiseData((Piece.poly(0.0, 1.0, (-0.2, 0.5)),)))
    return IBVPSpec(disp, q, tuple(g), 1.0)


def oracles() -> list[Check]:
    rows = []
    for disp, m, j, x, t in _ORACLE_POINTS:
        rows.append(_abs_check(f"brute I[{disp.label()},{m},{j}]({x},{t})", brute_force_special(disp, m, j, x, t),
                               _I(disp, m, j, x, t), 1e-8))
    spec = _gauss_spec()
    for x, t in ((0.3, 0.1), (1.0, 0.5), (2.0, 1.0)):
        exact = complex(gaussian_odd_exact(x, t))
        rows.append(_abs_check(f"images vs exact ({x},{t})", exact, images_ls(spec.initial, x, t), 1e-8))
    ev = SolutionEvaluator(spec)
    for x, t in ((0.5, 0.2), (1.5, 0.7)):
        rows.append(_abs_check(f"solve_ls vs images ({x},{t})", images_ls(spec.initial, x, t), ev(x, t), 1e-6))
    for label, disp in EXAMPLE_DISPERSIONS.items():
        spec = _poly_spec(disp)
        closed = SolutionEvaluator(spec)
        general = SolutionEvaluator(spec, "general-monomial")
        for x, t in ((0.4, 0.3), (1.7, 0.9)):
            rows.append(_abs_check(f"general vs closed form {label} ({x},{t})", closed(x, t), general(x, t), 1e-8))
    return rows


def smalltime_slope(component=1, lo: float = 1e-4, hi: float = 1e-2, count: int = 21) -> float:
    ts = np.geomspace(hi, lo, count)
    vals = [abs(_I(AIRY2, 0, component, 1.0, t)) for t in ts]
    return rate_fit(list(zip(ts, vals))).slope


def rates() -> list[Check]:
    rows = []
    for label, disp in EXAMPLE_DISPERSIONS.items():
        rows.append(_bound_check(f"small-time |I[{label},0,1](1,1e-8)|", abs(_I(disp, 0, 1, 1.0, 1e-8)), 1e-6))
    slope = smalltime_slope(1)
    rows.append(_abs_check("small-time slope I[k^3,0,1](1,t), t in [1e-4,1e-2]", 0.25, slope, 0.05))
    h = np.geomspace(1.0, 1e-3, 12)
    for p in (1 / 6, 1 / 4, 1 / 2, 3 / 2):
        fit = rate_fit(list(zip(h, 3 * h**p)))
        rows.append(_abs_check(f"rate_fit planted exponent {p:.4f}", p, fit.slope, 1e-6))
    return rows


def disc_data_residuals(t1: float = 0.25) -> list[complex]:
    spec = disc_data_spec(1.0, 2.0, t1, 1.0, -1.0, 1.0)
    ev = SolutionEvaluator(spec)
    return [weak_residual(lambda xs, t: ev.evaluate(xs, t)[0], AIRY2, b) for b in WEAK_BUMPS]


def weakform() -> list[Check]:
    rows = []
    k0 = 1.3

    def wave(xs, t):
        return np.exp(1j * k0 * np.asarray(xs) - 1j * AIRY2(k0) * t)

    # 64 nodes resolve the third derivative of a bump only to ~1e-5
    r = weak_residual(wave, AIRY2, WEAK_BUMPS[0], nodes=PLANE_WAVE_NODES)
    rows.append(_bound_check("weak form plane wave k^3", abs(r), 1e-8))
    for i, r in enumerate(disc_data_residuals()):
        rows.append(_bound_check(f"weak form disc-data bump {i + 1}", abs(r), 1e-4))
    return rows


SUITES = {"anchors": anchors, "oracles": oracles, "rates": rates, "weakform": weakform}


def run_suite(name: str) -> list[Check]:
    return SUITES[name]()
