"""Independent reference computations.

Nothing here uses the steepest-descent machinery, the exact shortcuts or
the integration-by-parts routing of the solvers; integrals are done with
QUADPACK (``scipy.integrate.quad``) on explicitly parametrised contours.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .dispersion import Dispersion
from .piecewise_data import PiecewiseData

BRUTE_TOL = 1e-12
LENGTH_FACTOR = 4.0


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleReport:
    name: str
    oracle: complex
    library: complex
    tol: float

    @property
    def abs_dev(self) -> float:
        return abs(self.library - self.oracle)

    @property
    def rel_dev(self) -> float:
        return self.abs_dev / max(abs(self.oracle), 1e-300)

    @property
    def passed(self) -> bool:
        return self.abs_dev <= self.tol


def compare(name: str, oracle: complex, library: complex, tol: float) -> OracleReport:
    return OracleReport(name, complex(oracle), complex(library), float(tol))


# ---------------------------------------------------------------------------
# brute-force special functions


def _cquad(f, a: float, b: float, pieces: int) -> complex:
    edges = np.linspace(a, b, pieces + 1)
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(f, lo, hi, complex_func=True, epsabs=BRUTE_TOL * 1e-2,
                                  epsrel=BRUTE_TOL, limit=400)
        total += val
    return total


def _component_edges(disp: Dispersion) -> list[tuple[float, float]]:
    n = disp.degree
    w = disp.leading
    return [(m * math.pi / n, (m + 1) * math.pi / n) for m in range(n)
            if w * math.sin((m + 0.5) * math.pi) > 0]


def brute_force_special(disp: Dispersion, m: int, component, x: complex, t: float) -> complex:
    """``(1/2pi) int e^{ikx - i omega t} (ik)^{-m-1} dk`` by plain adaptive quadrature.

    ``component`` is a 1-based index, ``"sum"`` or ``"C"``.  For ``t > 0``
    the rays follow decay valleys; for ``t < 0`` the component rays are
    turned inward, where the integrand decays for ``x >= 0``.
    """
    if t == 0:
        raise OracleError("the brute-force oracle needs t != 0")
    n = disp.degree
    if component == "sum":
        comps = range(1, len(_component_edges(disp)) + 1)
        return sum(brute_force_special(disp, m, j, x, t) for j in comps)
    half = math.pi / (2 * n)
    if component == "C":
        if t < 0:
            raise OracleError("real-line contour needs t > 0")
        th_in, th_out = math.pi + half * _side(disp, math.pi + half), _side(disp, half) * half
    else:
        lo, hi = _component_edges(disp)[int(component) - 1]
        if t > 0:
            th_in, th_out = hi + half, lo - half
        else:
            th_in, th_out = hi - half / 2, lo + half / 2
    lam = (abs(disp.leading) * abs(t)) ** (-1.0 / n)
    radius = lam
    decay = abs(disp.leading) * abs(t) * (math.sin(n * half / 2) if t < 0 else 1.0)
    L = LENGTH_FACTOR * max((40.0 / decay) ** (1.0 / n), 2 * radius, (40.0 / decay) ** (1.0 / n) + abs(x))
    m1 = m + 1

    def integrand(k):
        return cmath.exp(1j * k * x - 1j * complex(disp(k)) * t) / (1j * k) ** m1 / (2 * math.pi)

    def ray(theta, incoming):
        e = cmath.exp(1j * theta)
        val = _cquad(lambda r: integrand(r * e) * e, radius, L, 40)
        return -val if incoming else val

    sweep = (th_in - th_out) % (2 * math.pi)
    total = ray(th_in, True)
    total += _cquad(lambda s: integrand(radius * cmath.exp(1j * (th_in - s))) * (-1j) * radius
                    * cmath.exp(1j * (th_in - s)), 0.0, sweep, 16)
    total += ray(th_out, False)
    return total


def _side(disp: Dispersion, theta: float) -> float:
    """+1 if ``exp(-i omega t)`` decays at angle ``theta`` for t > 0, else -1."""
    v = (-1j * disp.leading * cmath.exp(1j * disp.degree * theta)).real
    return 1.0 if v < 0 else -1.0


# ---------------------------------------------------------------------------
# method of images for omega = k^2


def schrodinger_kernel(xi, t: float):
    """``exp(i xi^2 / 4t) / sqrt(4 pi i t)`` with the principal root."""
    return np.exp(1j * np.asarray(xi) ** 2 / (4 * t)) / np.sqrt(4j * np.pi * t)


def images_ls(q_o: PiecewiseData, x: float, t: float) -> complex:
    """Zero-Dirichlet solution of ``i q_t = -q_xx`` via the odd extension."""
    if not t > 0:
        raise OracleError("images_ls needs t > 0")
    total = 0j
    for p in q_o.pieces:
        if p.is_zero:
            continue
        b = p.b
        if math.isinf(b):
            if p.kind == "numeric":
                b = p.cutoff
            elif p.kind == "polyexp":
                b = p.a + 45.0 / p.rate
            else:
                continue
        if b <= p.a:
            continue

        def f(y, p=p):
            return complex((schrodinger_kernel(x - y, t) - schrodinger_kernel(x + y, t))
                           * complex(np.asarray(p.derivative(0, np.array([y])))[0]))

        # resolve the kernel oscillation: phase ~ (x +- y)^2 / 4t
        span = (abs(x) + b) * (b - p.a) / (2 * t)
        pieces = max(4, int(math.ceil(span / (2 * math.pi))) * 2)
        total += _cquad(f, p.a, b, min(pieces, 4000))
    return total


def gaussian_odd_exact(x, t: float):
    """Free evolution of ``x e^{-x^2}`` under ``i q_t = -q_xx`` (an odd solution)."""
    s = 1 + 4j * t
    x = np.asarray(x, dtype=complex)
    return x / s**1.5 * np.exp(-(x**2) / s)


# ---------------------------------------------------------------------------
# weak form


@dataclass(frozen=True)
class Bump:
    """``psi((x - xc)/hx) psi((t - tc)/ht)`` with ``psi(s) = exp(-1/(1 - s^2))``."""

    xc: float
    hx: float
    tc: float
    ht: float

    @property
    def support(self) -> tuple[float, float, float, float]:
        return self.xc - self.hx, self.xc + self.hx, self.tc - self.ht, self.tc + self.ht

    @classmethod
    def on(cls, x0: float, x1: float, t0: float, t1: float) -> "Bump":
        return cls(0.5 * (x0 + x1), 0.5 * (x1 - x0), 0.5 * (t0 + t1), 0.5 * (t1 - t0))


def bump_derivative(s, order: int):
    """``d^order/ds^order exp(-1/(1-s^2))`` (zero outside ``|s| < 1``)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    inside = np.abs(s) < 1
    si = s[inside]
    u = 1 - si**2
    # psi^(k) = P_k(s) / u^(2k) psi, with P_{k+1} = P_k' u^2 + 4 k s P_k u - 2 s P_k
    poly = np.polynomial.Polynomial([1.0])
    U = np.polynomial.Polynomial([1.0, 0.0, -1.0])
    S = np.polynomial.Polynomial([0.0, 1.0])
    for k in range(order):
        poly = poly.deriv() * U**2 + 4 * k * S * poly * U - 2 * S * poly
    out[inside] = poly(si) / u ** (2 * order) * np.exp(-1 / u)
    return out


def weak_residual(field, disp: Dispersion, bump: Bump, nodes: int = 64) -> complex:
    """``int q (-i phi_t - omega(i d/dx) phi) dx dt`` on a Clenshaw-Curtis grid.

    ``field(xs, t)`` returns the solution at the array ``xs`` for one time.
    """
    x0, x1, t0, t1 = bump.support
    if x0 <= 0 or t0 <= 0:
        raise OracleError("the test function must be supported away from x = 0 and t = 0")
    from .oscillatory_quadrature import cc_rule

    s, w = cc_rule(nodes)
    xs = bump.xc + bump.hx * s
    ts = bump.tc + bump.ht * s
    wx, wt = w * bump.hx, w * bump.ht
    sx = (xs - bump.xc) / bump.hx
    st = (ts - bump.tc) / bump.ht
    px = [bump_derivative(sx, o) / bump.hx**o for o in range(disp.degree + 1)]
    pt = [bump_derivative(st, o) / bump.ht**o for o in range(2)]
    total = 0j
    for it, t in enumerate(ts):
        if wt[it] == 0 or pt[0][it] == 0 and pt[1][it] == 0:
            continue
        live = (px[0] != 0) | np.any([p != 0 for p in px[1:]], axis=0)
        q = np.zeros(xs.shape, dtype=complex)
        if live.any():
            q[live] = field(xs[live], t)
        op = -1j * px[0] * pt[1][it]
        for p, c in enumerate(disp.coeffs, start=1):
            op = op - c * (1j) ** p * px[p] * pt[0][it]
        total += wt[it] * np.sum(wx * q * op)
    return total


# ---------------------------------------------------------------------------
# rates


@dataclass(frozen=True)
class RateFit:
    slope: float
    halfwidth: float
    saturated: bool = False


def rate_fit(pairs) -> RateFit:
    """Least-squares slope of ``log err`` against ``log h``."""
    pairs = list(pairs)
    if len(pairs) < 4:
        raise OracleError("rate fitting needs at least 4 pairs")
    h = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if np.any(np.diff(h) >= 0):
        raise OracleError("h must be strictly decreasing")
    if np.any(e < 0) or np.any(h <= 0):
        raise OracleError("h must be positive and err non-negative")
    if np.any(e == 0):
        return RateFit(math.nan, math.nan, True)
    lh, le = np.log(h), np.log(e)
    slope, icpt = np.polyfit(lh, le, 1)
    resid = le - (slope * lh + icpt)
    band = float(np.max(np.abs(resid))) / max(float(np.ptp(lh)), 1e-300)
    return RateFit(float(slope), band)
