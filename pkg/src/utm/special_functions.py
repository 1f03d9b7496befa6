"""Contour-integral special functions.

``I(x, t) = (1/2 pi) int_P exp(i k x - i omega(k) t) / (i k)^(m+1) dk``

where ``P`` is the (decay-rotated) boundary of one component of
``{Im omega >= 0}`` in the upper half plane, the sum of those boundaries,
or the real line indented above the origin.  The shift ``x`` may be complex.
For ``t > 0`` the sum of the component boundaries and the real line give
the same integral; they differ only in their ``t <= 0`` conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import (
    asymptotic_sectors,
    component_angles,
    ivp_angles,
    ray_arc_ray,
)
from .dispersion import Dispersion
from .oscillatory_quadrature import (
    DecayCertificate,
    PhaseData,
    QuadratureSettings,
    default_drop,
    descent_route,
    integrate_path,
    integrate_polyline,
    stationary_points,
)

ASYMPTOTIC_SWITCH = 50.0


class SpecialDomainError(ValueError):
    pass


@dataclass(frozen=True)
class SpecialFnKey:
    """``component`` is a 1-based component index, ``"sum"`` or ``"C"``."""

    disp: Dispersion
    m: int
    component: int | str = 1

    def __post_init__(self):
        if int(self.m) != self.m or self.m < -1:
            raise SpecialDomainError("pole order m must be an integer >= -1")
        if isinstance(self.component, str):
            if self.component not in ("sum", "C"):
                raise SpecialDomainError(f"unknown contour selector {self.component!r}")
        else:
            N = len(asymptotic_sectors(self.disp))
            if not 1 <= int(self.component) <= N:
                raise SpecialDomainError(f"component {self.component} out of range 1..{N}")

    def components(self) -> list[int]:
        if self.component == "sum":
            return list(range(1, len(asymptotic_sectors(self.disp)) + 1))
        return [int(self.component)]


@dataclass(frozen=True)
class SpecialValue:
    value: complex
    regime: str
    error: float

    def __post_init__(self):
        if not self.error >= 0:
            object.__setattr__(self, "error", float("inf"))


def taylor_coeffs(disp: Dispersion, x: complex, t: float, count: int) -> tuple[np.ndarray, float]:
    """Taylor coefficients of ``exp(i k x - i omega(k) t)`` at ``k = 0`` and ``rho = |x| + |t|^(1/n)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    n = disp.degree
    e = np.zeros(max(count, n + 1), dtype=complex)
    e[1] = 1j * x
    for j, w in enumerate(disp.coeffs, start=1):
        e[j] += -1j * w * t
    a = np.zeros(count, dtype=complex)
    a[0] = 1.0
    for mm in range(1, count):
        jj = np.arange(1, mm + 1)
        a[mm] = np.sum(jj * e[jj] * a[mm - jj]) / mm
    rho = abs(x) + abs(t) ** (1.0 / n)
    return a, float(rho)


def phase_scale(disp: Dispersion, x: complex, t: float) -> float:
    """Size of the exponent at its saddle points; large values favour the asymptotic route."""
    ax = abs(x)
    if ax == 0:
        return 0.0
    return ax * (ax / t) ** (1.0 / (disp.degree - 1))


def _angles(key: SpecialFnKey, j: int | None) -> tuple[float, float]:
    if j is None:
        return ivp_angles(key.disp)
    return component_angles(key.disp, j)


def _sweep(theta_in: float, theta_out: float) -> float:
    s = (theta_in - theta_out) % (2 * math.pi)
    return s if s > 0 else 2 * math.pi


def _exact(key: SpecialFnKey, x: complex, t: float) -> complex | None:
    """Closed-form values; ``None`` when no shortcut applies."""
    comp = key.component != "C"
    real_x = x.imag == 0
    if t < 0:
        if comp:
            return 0j
        raise SpecialDomainError("the real-line contour is only supported for t >= 0")
    if t > 0:
        return None
    if key.m == -1:
        raise SpecialDomainError("m = -1 diverges at t = 0")
    xr = x.real
    if not real_x:
        raise SpecialDomainError("complex shift at t = 0")
    if comp:
        if xr > 0 or (xr == 0 and key.m >= 1):
            return 0j
        raise SpecialDomainError("component contour at t = 0 needs x > 0")
    if xr > 0:
        return 0j
    if xr < 0:
        return complex(-(xr**key.m) / math.factorial(key.m))
    return complex(-0.5) if key.m == 0 else 0j


def _quad_many(key: SpecialFnKey, j: int | None, xs: np.ndarray, t: float, settings: QuadratureSettings):
    disp = key.disp
    n = disp.degree
    lam = (abs(disp.leading) * t) ** (-1.0 / n)
    th_in, th_out = _angles(key, j)
    path = ray_arc_ray(lam, th_in, th_out)
    m1 = key.m + 1

    def f(k):
        ph = 1j * np.outer(k, xs) - 1j * (disp(k) * t)[:, None]
        return np.exp(ph) / ((1j * k) ** m1)[:, None] / (2 * np.pi)

    cert = DecayCertificate("exp", rate=0.5 * abs(disp.leading), power=n, t=t)
    res = integrate_path(f, path, settings, cert)
    return np.asarray(res.value).reshape(-1), res.error, res.converged


def _route_for(key: SpecialFnKey, j: int | None, phase: PhaseData, drop: float):
    th_in, th_out = _angles(key, j)
    shift = -np.angle(phase.u)
    valleys = phase.valley_angles()

    def nearest(theta):
        d = np.abs(np.angle(np.exp(1j * (valleys - (theta + shift)))))
        return int(np.argmin(d))

    return descent_route(phase, nearest(th_in), nearest(th_out), _sweep(th_in, th_out), drop)


def _residue(key: SpecialFnKey, x: complex, t: float, winding: int) -> complex:
    if winding == 0 or key.m < 0:
        return 0j
    a, _ = taylor_coeffs(key.disp, x, t, key.m + 1)
    return winding * a[key.m] * (-1j) ** key.m


def _nsd(key: SpecialFnKey, j: int | None, x: complex, t: float, settings: QuadratureSettings):
    phase = stationary_points(key.disp, x, t)
    drop = default_drop(settings.tol)
    route = _route_for(key, j, phase, drop)
    z = route.points
    m1 = key.m + 1
    size = phase.size
    logmag = size * phase.phi(z).real - m1 * np.log(np.abs(z))
    top = float(np.max(logmag))
    live = np.nonzero(logmag >= top - drop - 5.0)[0]
    lo, hi = max(int(live[0]) - 1, 0), min(int(live[-1]) + 1, len(z) - 1)
    sub = z[lo : hi + 1]
    # thin the polyline: CC panels resolve the smooth integrand between vertices
    if len(sub) > 48:
        idx = np.unique(np.concatenate([np.linspace(0, len(sub) - 1, 48).round().astype(int)]))
        sub = sub[idx]
    ref = size * complex(phase.phi(z[int(np.argmax(logmag))])).real
    pref = (phase.s * phase.u) ** (-key.m) / (2 * np.pi)

    def f(zz):
        return np.exp(size * phase.phi(zz) - ref) / (1j * zz) ** m1

    res = integrate_polyline(f, sub, settings)
    scale = math.exp(ref) if ref < 700 else float("inf")
    val = complex(res.value) * pref * scale
    err = (res.error + math.exp(-drop) * abs(complex(res.value))) * abs(pref) * scale
    val += _residue(key, x, t, route.winding)
    return val, err


def _component_eval(key, j, x, t, settings, force=None):
    scale = phase_scale(key.disp, x, t)
    if force == "quadrature" or (force is None and scale <= ASYMPTOTIC_SWITCH):
        v, e, _ = _quad_many(key, j, np.array([x], dtype=complex), t, settings)
        return complex(v[0]), e, "quadrature"
    v, e = _nsd(key, j, x, t, settings)
    return v, e, "asymptotic"


def special_eval(
    key: SpecialFnKey,
    x: complex,
    t: float,
    settings: QuadratureSettings | None = None,
    regime: str | None = None,
) -> SpecialValue:
    """Evaluate ``I`` with automatic regime selection.

    ``regime`` may force ``"quadrature"`` or ``"asymptotic"`` (numerical
    steepest descent) for cross-checks.
    """
    settings = settings or QuadratureSettings()
    x = complex(x)
    t = float(t)
    ex = _exact(key, x, t)
    if ex is not None:
        return SpecialValue(ex, "exact", 0.0)
    if key.component in ("C", "sum"):
        # for t > 0 the component contours telescope into the rotated real
        # line; one contour avoids cancelling exponentially large parts
        v, e, r = _component_eval(key, None, x, t, settings, regime)
        return SpecialValue(v, r, e)
    total, err, regimes = 0j, 0.0, set()
    for j in key.components():
        v, e, r = _component_eval(key, j, x, t, settings, regime)
        total += v
        err += e
        regimes.add(r)
    return SpecialValue(total, "asymptotic" if "asymptotic" in regimes else "quadrature", err)


def special_eval_many(key: SpecialFnKey, xs, t: float, settings: QuadratureSettings | None = None,
                      return_regime: bool = False):
    """Vectorised evaluation at many shifts for one time.

    Returns ``(values, errors)``, plus an array of regime labels when
    ``return_regime`` is set.
    """
    settings = settings or QuadratureSettings()
    xs = np.asarray(xs, dtype=complex).reshape(-1)
    vals = np.zeros(xs.shape, dtype=complex)
    errs = np.zeros(xs.shape)
    regimes = np.full(xs.shape, "exact", dtype=object)
    t = float(t)
    pending = []
    for i, x in enumerate(xs):
        ex = _exact(key, complex(x), t)
        if ex is not None:
            vals[i] = ex
        else:
            pending.append(i)
    if not pending:
        return (vals, errs, regimes) if return_regime else (vals, errs)
    idx = np.array(pending)
    scales = np.array([phase_scale(key.disp, xs[i], t) for i in idx])
    quad = idx[scales <= ASYMPTOTIC_SWITCH]
    slow = idx[scales > ASYMPTOTIC_SWITCH]
    regimes[quad] = "quadrature"
    regimes[slow] = "asymptotic"
    comps = [None] if key.component in ("C", "sum") else key.components()
    for j in comps:
        if quad.size:
            # keep chunks modest so one hard shift does not refine all the others
            for chunk in np.array_split(quad, max(1, quad.size // 16)):
                v, e, _ = _quad_many(key, j, xs[chunk], t, settings)
                vals[chunk] += v
                errs[chunk] += e
        for i in slow:
            v, e = _nsd(key, j, complex(xs[i]), t, settings)
            vals[i] += v
            errs[i] += e
    return (vals, errs, regimes) if return_regime else (vals, errs)


def asymptotic_eval(key: SpecialFnKey, x: complex, t: float) -> SpecialValue:
    """Leading saddle-point term(s) plus the exact residue contribution."""
    x = complex(x)
    ex = _exact(key, x, t)
    if ex is not None:
        return SpecialValue(ex, "exact", 0.0)
    comps = [None] if key.component in ("C", "sum") else key.components()
    total, err = 0j, 0.0
    for j in comps:
        v, e = _leading(key, j, x, t)
        total += v
        err += e
    return SpecialValue(total, "asymptotic", err)


def _leading(key: SpecialFnKey, j, x: complex, t: float):
    phase = stationary_points(key.disp, x, t)
    drop = default_drop(1e-10)
    route = _route_for(key, j, phase, drop)
    size = phase.size
    m1 = key.m + 1
    pref = (phase.s * phase.u) ** (-key.m) / (2 * np.pi)
    total, err = 0j, 0.0
    for idx, sgn in route.saddles:
        z0 = phase.saddles[idx]
        p2 = phase.second[idx]
        p3 = phase.dphi(z0, 3)
        p4 = phase.dphi(z0, 4) if phase.disp.degree >= 4 else 0.0
        theta = phase.angles[idx] + (0.0 if sgn > 0 else np.pi)
        g = (1j * z0) ** (-m1)
        g1 = -m1 / z0 * g
        g2 = m1 * (m1 + 1) / z0**2 * g
        lead = pref * np.exp(size * phase.phi(z0)) * math.sqrt(2 * np.pi / (size * abs(p2))) * np.exp(1j * theta) * g
        corr = (-g2 / (2 * p2) + g1 * p3 / (2 * p2**2) + g * p4 / (8 * p2**2) - 5 * g * p3**2 / (24 * p2**3)) / (size * g)
        total += lead
        err += 2.0 * abs(lead * corr)
    total += _residue(key, x, t, route.winding)
    return total, err


def kernel_Kt(disp: Dispersion, x: complex, t: float, settings: QuadratureSettings | None = None) -> SpecialValue:
    """``K_t(x)``: the ``m = -1`` functions summed over all components."""
    if not t > 0:
        raise SpecialDomainError("K_t needs t > 0")
    return special_eval(SpecialFnKey(disp, -1, "sum"), x, t, settings)
