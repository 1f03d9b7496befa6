"""Assembly of half-line solutions.

The solution is the real-line integral of the initial transform plus one
integral over each component of ``partial D^+``:

    q = (1/2pi) int_R e^{ikx - iwt} q_hat(k) dk
      + (1/2pi) sum_j int_{dD_j} e^{ikx - iwt} (spectral data on component j) dk

The closed-form solvers write the component data as a list of terms
(``weight * q_hat(beta k)`` or ``weight * k^a * g_tilde``).  Jump and corner
contributions become special functions; what is left after integration by
parts decays algebraically and is integrated on the undeformed contours.
The general monomial solver eliminates the unknown boundary transforms
numerically at every node instead.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .contours import asymptotic_sectors, component_angles, ivp_angles, ivp_contour, ray_arc_ray, ray_arc_ray_reaching
from .dispersion import Dispersion, cj_coefficients, num_boundary_conditions
from .oscillatory_quadrature import DecayCertificate, QuadratureSettings, QuadratureWarning, integrate_path
from .piecewise_data import (
    DataError,
    IBVPSpec,
    PiecewiseData,
    ft_channels,
    half_line_ft,
    ibp_decompose,
)
from .special_functions import SpecialFnKey, special_eval_many

ALPHA = complex(np.exp(2j * np.pi / 3))
METHODS = ("closed-form-LS", "closed-form-Airy1", "closed-form-Airy2", "general-monomial", "direct-oracle")

# decay power aimed for in the boundary remainders
_TARGET_POWER = 10
_DEFAULT_DEPTH = 6
_REMAINDER_RADIUS = 1.0


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class ImageTerm:
    """``weight * q_hat(beta k)`` on component ``component``."""

    component: int
    weight: complex
    beta: complex


@dataclass(frozen=True)
class BoundaryTerm:
    """``weight * k^power * g_tilde_index(-omega(k), t)`` on component ``component``."""

    component: int
    weight: complex
    power: int
    index: int


_CLOSED_FORMS = {
    "closed-form-LS": ((0.0, 1.0), (
        ImageTerm(1, -1.0, -1.0),
        BoundaryTerm(1, 2.0, 1, 0),
    )),
    "closed-form-Airy1": ((0.0, 0.0, -1.0), (
        BoundaryTerm(1, -3.0, 2, 0),
        ImageTerm(1, ALPHA, ALPHA),
        ImageTerm(1, ALPHA**2, ALPHA**2),
    )),
    "closed-form-Airy2": ((0.0, 0.0, 1.0), (
        ImageTerm(2, -1.0, ALPHA),
        BoundaryTerm(2, -(ALPHA**2 - 1), 2, 0),
        BoundaryTerm(2, 1j * (ALPHA - 1), 1, 1),
        ImageTerm(1, -1.0, ALPHA**2),
        BoundaryTerm(1, -(ALPHA - 1), 2, 0),
        BoundaryTerm(1, 1j * (ALPHA**2 - 1), 1, 1),
    )),
}


@dataclass(frozen=True)
class Atom:
    """``coef * I_key(x + offset, time)``."""

    coef: complex
    key: SpecialFnKey
    offset: complex
    time: float


@dataclass(frozen=True)
class FieldSample:
    x: float
    t: float
    value: complex
    error: float
    regime: str = "quadrature"
    message: str = ""

    @property
    def ok(self) -> bool:
        return not self.message


def _auto_depth(data: PiecewiseData) -> int:
    if all(p.kind == "poly" for p in data.pieces):
        return max(len(p.coeffs) for p in data.pieces)
    return _DEFAULT_DEPTH


def _auto_order(g: PiecewiseData, n: int, power: int) -> int:
    if all(p.kind == "poly" for p in g.pieces):
        return max(len(p.coeffs) for p in g.pieces) - 1
    return max(0, math.ceil((_TARGET_POWER + power) / n) - 1)


def _indent_radius(data: PiecewiseData) -> float:
    rates = [p.rate for p in data.pieces if p.kind == "polyexp" and math.isinf(p.b)]
    return min([1.0] + [0.5 * r for r in rates])


@dataclass(frozen=True)
class SolutionEvaluator:
    """Immutable solution evaluator.

    ``depth`` is the integration-by-parts depth for the initial datum
    (``None`` picks one that leaves no remainder for polynomial data).
    ``order`` fixes the boundary integration-by-parts order the same way.
    """

    spec: IBVPSpec
    method: str = "auto"
    settings: QuadratureSettings = field(default_factory=QuadratureSettings)
    depth: int | None = None
    order: int | None = None

    def __post_init__(self):
        disp = self.spec.dispersion
        method = self.method
        if method == "auto":
            method = _auto_method(disp)
            object.__setattr__(self, "method", method)
        if method not in METHODS:
            raise SolverError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
        if method in _CLOSED_FORMS:
            want = _CLOSED_FORMS[method][0]
            if disp.coeffs != want:
                raise SolverError(f"method {method} needs omega = {Dispersion(want).label()}, got {disp.label()}")
        if method == "general-monomial":
            _check_monomial(self.spec)
        if method == "direct-oracle":
            if disp.coeffs != (0.0, 1.0) or not self.spec.boundary[0].is_zero:
                raise SolverError("direct-oracle is the method of images: omega = k^2 with zero Dirichlet data")
        if self.depth is not None and self.depth < 0:
            raise SolverError("depth must be non-negative")

    def __call__(self, x: float, t: float) -> complex:
        return complex(self.evaluate([x], t)[0][0])

    def evaluate(self, xs, t: float):
        """Values, error estimates and regime labels at ``xs`` for one time."""
        xs = np.asarray(xs, dtype=float).reshape(-1)
        t = float(t)
        if np.any(~(xs > 0)):
            raise SolverError("solutions are evaluated for x > 0 only; boundary values are interior limits")
        if not 0.0 < t <= self.spec.T:
            raise SolverError(f"t = {t} outside (0, {self.spec.T}]")
        if self.method in _CLOSED_FORMS:
            return _closed_form(self, xs, t)
        if self.method == "general-monomial":
            return _general(self, xs, t)
        from .oracles import images_ls

        vals = np.array([images_ls(self.spec.initial, x, t) for x in xs], dtype=complex)
        return vals, np.full(xs.shape, 1e-10), np.full(xs.shape, "quadrature", dtype=object)


def _auto_method(disp: Dispersion) -> str:
    for name, (coeffs, _) in _CLOSED_FORMS.items():
        if disp.coeffs == coeffs:
            return name
    return "general-monomial"


# ---------------------------------------------------------------------------
# closed forms


def closed_form_atoms(ev: SolutionEvaluator, t: float) -> list[Atom]:
    """All special-function contributions at time ``t``."""
    spec = ev.spec
    disp = spec.dispersion
    n = disp.degree
    w = disp.leading
    terms = _CLOSED_FORMS[ev.method][1]
    depth = _auto_depth(spec.initial) if ev.depth is None else ev.depth
    ibp = ibp_decompose(spec.initial, depth)
    atoms: list[Atom] = []
    for i, c, J in ibp.atoms():
        atoms.append(Atom(J, SpecialFnKey(disp, i, "C"), -c, t))
    for term in terms:
        if isinstance(term, ImageTerm):
            for i, c, J in ibp.atoms():
                coef = term.weight * J * term.beta ** (-(i + 1))
                atoms.append(Atom(coef, SpecialFnKey(disp, i, term.component), -term.beta * c, t))
            continue
        g = spec.boundary[term.index]
        p = _auto_order(g, n, term.power) if ev.order is None else ev.order
        gt = g.restricted(t)
        for i in range(p + 1):
            m = n * (i + 1) - term.power - 1
            scale = term.weight * 1j ** (m + 1) / (1j * w) ** (i + 1)
            start = complex(gt.derivative(i, 0.0, "right"))
            if start != 0:
                atoms.append(Atom(scale * (-1) ** (i + 1) * start, SpecialFnKey(disp, m, term.component), 0.0, t))
            for tau, J in gt.jumps(i):
                if J != 0:
                    coef = -scale * (-1) ** i * J
                    atoms.append(Atom(coef, SpecialFnKey(disp, m, term.component), 0.0, t - tau))
    return [a for a in atoms if a.coef != 0]


def evaluate_atoms(atoms: list[Atom], xs: np.ndarray, settings: QuadratureSettings):
    """Sum the atoms at real ``xs``; groups shifts sharing one key and time."""
    vals = np.zeros(xs.shape, dtype=complex)
    errs = np.zeros(xs.shape)
    rank = {"exact": 0, "quadrature": 1, "asymptotic": 2}
    level = np.zeros(xs.shape, dtype=int)
    groups: dict[tuple, list[Atom]] = {}
    for a in atoms:
        groups.setdefault((a.key, a.time), []).append(a)
    for (key, time), group in groups.items():
        shifts = np.concatenate([xs + a.offset for a in group])
        v, e, r = special_eval_many(key, shifts, time, settings, return_regime=True)
        nx = xs.size
        for i, a in enumerate(group):
            sl = slice(i * nx, (i + 1) * nx)
            vals += a.coef * v[sl]
            errs += abs(a.coef) * e[sl]
            level = np.maximum(level, [rank[s] for s in r[sl]])
    names = np.array(["exact", "quadrature", "asymptotic"], dtype=object)
    return vals, errs, names[level]


def _integrate(f, path, power: float, settings: QuadratureSettings):
    cert = DecayCertificate("alg", power=max(power, 2.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        res = integrate_path(f, path, settings, cert)
    if not res.converged:
        raise SolverError("remainder quadrature did not converge")
    return np.asarray(res.value).reshape(-1), res.error


def closed_form_remainders(ev: SolutionEvaluator, xs: np.ndarray, t: float):
    """Integrals of the integration-by-parts remainders."""
    spec = ev.spec
    disp = spec.dispersion
    n = disp.degree
    terms = _CLOSED_FORMS[ev.method][1]
    settings = ev.settings
    depth = _auto_depth(spec.initial) if ev.depth is None else ev.depth
    ibp = ibp_decompose(spec.initial, depth)
    total = np.zeros(xs.shape, dtype=complex)
    err = 0.0

    def phase(k):
        return np.exp(1j * np.outer(k, xs) - 1j * (disp(k) * t)[:, None]) / (2 * np.pi)

    if not ibp.remainder.is_zero:
        rem = ibp.remainder
        r0 = _indent_radius(rem)

        def f_line(k):
            return phase(k) * (half_line_ft(rem, k) / (1j * k) ** depth)[:, None]

        v, e = _integrate(f_line, ivp_contour(max(2.0, 2 * r0), r0), depth + 1, settings)
        total += v
        err += e
        for term in terms:
            if not isinstance(term, ImageTerm):
                continue
            lo, hi = asymptotic_sectors(disp)[term.component - 1]
            path = ray_arc_ray(_REMAINDER_RADIUS, hi, lo)

            def f_img(k, term=term):
                bk = term.beta * k
                return phase(k) * (term.weight * half_line_ft(rem, bk) / (1j * bk) ** depth)[:, None]

            v, e = _integrate(f_img, path, depth + 1, settings)
            total += v
            err += e
    for term in terms:
        if not isinstance(term, BoundaryTerm):
            continue
        g = spec.boundary[term.index]
        p = _auto_order(g, n, term.power) if ev.order is None else ev.order
        top = g.restricted(t).derived(p + 1)
        if top.is_zero:
            continue
        lo, hi = asymptotic_sectors(disp)[term.component - 1]
        path = ray_arc_ray(_REMAINDER_RADIUS, hi, lo)

        def f_bnd(k, term=term, top=top, p=p):
            om = disp(k)
            # e^{-i w t} G written as one integral keeps it bounded on the arc
            G = half_line_ft(top, -om)
            amp = term.weight * k**term.power * (-1) ** (p + 1) * G / (1j * om) ** (p + 1)
            return phase(k) * amp[:, None]

        v, e = _integrate(f_bnd, path, n * (p + 1) - term.power, settings)
        total += v
        err += e
    return total, err


def _closed_form(ev: SolutionEvaluator, xs: np.ndarray, t: float):
    atoms = closed_form_atoms(ev, t)
    vals, errs, regimes = evaluate_atoms(atoms, xs, ev.settings)
    rem, rerr = closed_form_remainders(ev, xs, t)
    return vals + rem, errs + rerr, regimes


def solve_ls(spec: IBVPSpec, x: float, t: float, **kw) -> complex:
    return SolutionEvaluator(spec, "closed-form-LS", **kw)(x, t)


def solve_airy1(spec: IBVPSpec, x: float, t: float, **kw) -> complex:
    return SolutionEvaluator(spec, "closed-form-Airy1", **kw)(x, t)


def solve_airy2(spec: IBVPSpec, x: float, t: float, **kw) -> complex:
    return SolutionEvaluator(spec, "closed-form-Airy2", **kw)(x, t)


def solve_general_monomial(spec: IBVPSpec, x: float, t: float, **kw) -> complex:
    return SolutionEvaluator(spec, "general-monomial", **kw)(x, t)


# ---------------------------------------------------------------------------
# general monomial solver


def _check_monomial(spec: IBVPSpec):
    disp = spec.dispersion
    if not disp.is_monomial:
        raise SolverError("the elimination solver handles monomial dispersion relations only")
    data = (spec.initial,) + spec.boundary
    if not all(p.kind == "poly" for d in data for p in d.pieces):
        raise SolverError("the elimination solver needs piecewise-polynomial data")
    n = disp.degree
    N = num_boundary_conditions(disp)
    for j in range(1, len(asymptotic_sectors(disp)) + 1):
        if len(elimination_symmetries(disp, j)) != n - N:
            raise SolverError(f"component {j}: symmetry count does not equal n - N")


def elimination_symmetries(disp: Dispersion, j: int) -> list[int]:
    """Powers ``l`` of ``exp(2 pi i / n)`` mapping component ``j`` into the lower half plane."""
    lo, hi = asymptotic_sectors(disp)[j - 1]
    mid = 0.5 * (lo + hi)
    n = disp.degree
    return [l for l in range(1, n) if math.sin(mid + 2 * math.pi * l / n) < 0]


def _elimination_weights(disp: Dispersion, j: int, k: np.ndarray, R: float):
    """Row weights ``W`` (on q_hat(nu_l)) and ``V`` (on the known g_tilde) per node."""
    n = disp.degree
    N = num_boundary_conditions(disp)
    ls = elimination_symmetries(disp, j)
    roots = np.exp(2j * np.pi * np.array(ls) / n)

    def build(kk):
        nu = roots[None, :] * kk[:, None]
        c_nu = cj_coefficients(disp, nu)[0]  # (n, K, r)
        A = np.moveaxis(c_nu[N:], 0, -1)  # (K, r_l, unknown)
        B = np.moveaxis(c_nu[:N], 0, -1)  # (K, r_l, known)
        return A, B

    A, B = build(k)
    det = np.abs(np.linalg.det(A))
    scale = np.max(np.abs(A), axis=(1, 2)) ** A.shape[1]
    bad = det <= 1e-13 * scale
    if bad.any():
        k = k.copy()
        k[bad] = k[bad] + 1e-6 * R
        A2, B2 = build(k[bad])
        det2 = np.abs(np.linalg.det(A2))
        if np.any(det2 <= 1e-13 * np.max(np.abs(A2), axis=(1, 2)) ** A2.shape[1]):
            raise SolverError(f"singular elimination system at k = {k[bad][0]}")
        A[bad], B[bad] = A2, B2
    c_k = cj_coefficients(disp, k)[0]  # (n, K)
    cU = c_k[N:].T  # (K, unknown)
    cK = c_k[:N].T
    # W = cU A^{-1}: solve A^T W^T = cU^T
    W = np.linalg.solve(np.transpose(A, (0, 2, 1)), cU[:, :, None])[:, :, 0]  # (K, r_l)
    V = cK - np.einsum("kl,klj->kj", W, B)
    return W, V, roots


def _general(ev: SolutionEvaluator, xs: np.ndarray, t: float):
    spec = ev.spec
    disp = spec.dispersion
    n = disp.degree
    settings = ev.settings
    lead = abs(disp.leading)
    total = np.zeros(xs.shape, dtype=complex)
    err = 0.0
    # rays sit on valley bisectors, half a sector width from the axis
    window = 0.51 * math.pi / n

    def run(angles, amp, shift, t_eff):
        lam = (lead * t_eff) ** (-1.0 / n)
        # radius of the farthest real saddle of i k (x - shift) - i omega t;
        # a complex shift grows along the axis, so those keep the plain contour
        reach = 0.0
        if abs(complex(shift).imag) <= 1e-12 * (1.0 + abs(shift)):
            spread = float(np.max(np.abs(xs - complex(shift).real)))
            reach = 1.25 * (spread / (n * lead * t_eff)) ** (1.0 / (n - 1))
        path = ray_arc_ray_reaching(lam, *angles, reach, window)

        def f(k):
            e = np.exp(1j * np.outer(k, xs + 0j) - 1j * np.outer(k * shift, np.ones(xs.size))
                       - 1j * (disp(k) * t_eff)[:, None])
            return e * amp(k)[:, None] / (2 * np.pi)

        cert = DecayCertificate("exp", rate=0.5 * lead, power=n, t=t_eff)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", QuadratureWarning)
            res = integrate_path(f, path, settings, cert)
        if not res.converged:
            raise SolverError("elimination quadrature did not converge")
        return np.asarray(res.value).reshape(-1), res.error

    # real line, channel by channel on the rotated contour
    left, right = ivp_angles(disp)
    for c in ft_channels(spec.initial, np.array([1.0])):
        def amp_c(k, c=c):
            return ft_channels(spec.initial, k)[c]

        v, e = run((left, right), amp_c, c, t)
        total += v
        err += e

    N = num_boundary_conditions(disp)
    for j in range(1, len(asymptotic_sectors(disp)) + 1):
        angles_j = component_angles(disp, j)

        ls = elimination_symmetries(disp, j)
        for li, l in enumerate(ls):
            beta = complex(np.exp(2j * np.pi * l / n))
            for c in ft_channels(spec.initial, np.array([1.0])):
                def amp_l(k, c=c, li=li, beta=beta, j=j):
                    W, _, _ = _elimination_weights(disp, j, k, 1.0)
                    return -W[:, li] * ft_channels(spec.initial, beta * k)[c]

                v, e = run(angles_j, amp_l, beta * c, t)
                total += v
                err += e
        taus = sorted({tau for g in spec.boundary for tau in _time_channels(g, t)})
        for tau in taus:
            def amp_tau(k, tau=tau, j=j):
                _, V, _ = _elimination_weights(disp, j, k, 1.0)
                om = disp(k)
                acc = np.zeros(k.shape, dtype=complex)
                for idx in range(N):
                    ch = ft_channels(spec.boundary[idx], -om, upto=t)
                    if tau in ch:
                        acc = acc + V[:, idx] * ch[tau]
                return -1j * acc

            v, e = run(angles_j, amp_tau, 0.0, t - tau)
            total += v
            err += e
    regimes = np.full(xs.shape, "quadrature", dtype=object)
    return total, np.full(xs.shape, err), regimes


def _time_channels(g: PiecewiseData, t: float) -> list[float]:
    """Channel times ``tau < t`` carrying nonzero weight in the time transform."""
    ch = ft_channels(g, np.array([0.37 + 0.11j]), upto=t)
    return [tau for tau, a in ch.items() if tau < t and np.any(a != 0)]


# ---------------------------------------------------------------------------
# explicit disc-data formula


def disc_data_airy2(x, t: float, x1: float, x2: float, t1: float, C1: complex, C2: complex,
                    settings: QuadratureSettings | None = None) -> complex:
    """Explicit special-function solution for omega = k^3 with an indicator
    initial datum on ``(x1, x2)``, Dirichlet datum ``C1`` on ``[0, t1)`` and
    zero after, and constant Neumann datum ``C2``.
    """
    if not 0 <= x1 <= x2:
        raise SolverError("need 0 <= x1 <= x2")
    if not t1 > 0:
        raise SolverError("need t1 > 0")
    settings = settings or QuadratureSettings()
    disp = Dispersion.monomial(3)
    a = ALPHA

    def special(m, j, shift, time):
        return complex(special_eval_many(SpecialFnKey(disp, m, j), [x - shift], time, settings)[0][0])

    q = 0j
    for sign, c in ((1.0, x1), (-1.0, x2)):
        # I_{0,1} + I_{0,2} at one shift is evaluated as the summed contour
        q += sign * (special(0, "sum", c, t) - a**2 * special(0, 2, c * a, t) - a * special(0, 1, c * a**2, t))
    q += C1 * ((a**2 - 1) * special(0, 2, 0.0, t) + (a - 1) * special(0, 1, 0.0, t))
    q -= C1 * ((a**2 - 1) * special(0, 2, 0.0, t - t1) + (a - 1) * special(0, 1, 0.0, t - t1))
    q += C2 * ((a**2 - 1) * special(1, 1, 0.0, t) + (a - 1) * special(1, 2, 0.0, t))
    return q


def disc_data_spec(x1: float, x2: float, t1: float, C1: complex, C2: complex, T: float = 1.0) -> IBVPSpec:
    """The matching :class:`IBVPSpec` (requires ``t1 < T``)."""
    if not 0 < t1 < T:
        raise SolverError("need 0 < t1 < T")
    from .piecewise_data import Piece

    g0 = PiecewiseData((Piece.constant(0.0, t1, C1), Piece.constant(t1, T, 0.0)))
    g1 = PiecewiseData((Piece.constant(0.0, T, C2),))
    initial = PiecewiseData.indicator(x1, x2) if x2 > x1 else PiecewiseData.zero()
    return IBVPSpec(Dispersion.monomial(3), initial, (g0, g1), T)


# ---------------------------------------------------------------------------
# grids


def evaluate_grid(evaluator: SolutionEvaluator, xs, ts, workers: int = 1) -> list[FieldSample]:
    """Evaluate on the tensor grid; output ordered by ``(t, x)``.

    Each time level is computed from the sorted distinct ``xs``, so the
    result does not depend on input order.
    """
    xs_u = np.unique(np.asarray(xs, dtype=float))
    ts_u = np.unique(np.asarray(ts, dtype=float))

    def level(t):
        try:
            v, e, r = evaluator.evaluate(xs_u, t)
            return [FieldSample(float(x), float(t), complex(v[i]), float(e[i]), str(r[i]))
                    for i, x in enumerate(xs_u)]
        except (SolverError, DataError, ValueError, ArithmeticError):
            out = []
            for x in xs_u:
                try:
                    v, e, r = evaluator.evaluate([x], t)
                    out.append(FieldSample(float(x), float(t), complex(v[0]), float(e[0]), str(r[0])))
                except (SolverError, DataError, ValueError, ArithmeticError) as exc:
                    out.append(FieldSample(float(x), float(t), complex("nan+nanj"), math.inf, "failed", str(exc)))
            return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(level, ts_u))
    else:
        chunks = [level(t) for t in ts_u]
    return [s for chunk in chunks for s in chunk]
