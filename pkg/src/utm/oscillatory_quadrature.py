"""Quadrature of ``exp(i k x - i omega(k) t) f(k)`` along complex paths.

Three layers:

* nested Clenshaw-Curtis panels with doubling and bisection on affine
  segments, with ray truncation driven by a decay certificate;
* the rescaled phase ``Phi(z)`` of the exponential and its saddle points;
* steepest-descent branches traced from each saddle, assembled into a
  valley-to-valley path through a small graph search.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .contours import ComplexPath, ContourError, PathSegment
from .dispersion import Dispersion

EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    pass


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QuadratureSettings:
    tol: float = 1e-10
    n0: int = 33
    max_doublings: int = 6
    safety: float = 10.0
    max_depth: int = 24

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        m = self.n0 - 1
        if self.n0 < 3 or m & (m - 1):
            raise ValueError("n0 must have the form 2^m + 1")


@dataclass(frozen=True)
class DecayCertificate:
    """Bound used to truncate rays.

    ``kind="exp"``: ``|f(k)| <= A exp(-rate |k|^power t)``.
    ``kind="alg"``: ``|f(k)| <= A |k|^(-power)`` with ``power > 1``.
    """

    kind: str
    rate: float = 1.0
    power: float = 2.0
    t: float = 1.0
    amplitude: float | None = None

    def __post_init__(self):
        if self.kind not in ("exp", "alg"):
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if self.kind == "alg" and self.power <= 1:
            raise ValueError("algebraic certificate needs power > 1")
        if self.kind == "exp" and not (self.rate > 0 and self.t > 0):
            raise ValueError("exponential certificate needs rate > 0 and t > 0")

    def length(self, threshold: float, amplitude: float) -> float:
        """Radius beyond which the tail is below ``threshold``."""
        A = max(amplitude, 1e-300)
        if self.kind == "exp":
            arg = math.log(max(A / threshold, 1.0 + 1e-12))
            return (arg / (self.rate * self.t)) ** (1.0 / self.power)
        return (A / (threshold * (self.power - 1))) ** (1.0 / (self.power - 1))


@dataclass
class QuadResult:
    value: complex | np.ndarray
    error: float
    converged: bool = True
    evaluations: int = 0


@lru_cache(maxsize=None)
def cc_rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Clenshaw-Curtis nodes ``cos(j pi / N)`` and weights on ``[-1, 1]``."""
    N = npts - 1
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    kk = np.arange(1, N // 2 + 1)
    b = np.where(kk == N / 2, 1.0, 2.0)
    s = (b / (4.0 * kk**2 - 1.0))[None, :] * np.cos(2.0 * np.pi * np.outer(j, kk) / N)
    c = np.where((j == 0) | (j == N), 1.0, 2.0)
    w = c / N * (1.0 - s.sum(axis=1))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _eval(f, k):
    v = np.asarray(f(k))
    if v.shape[0] != k.shape[0]:
        raise QuadratureError("integrand must return one row per node")
    return v.astype(complex, copy=False)


def _contract(w, v):
    return np.tensordot(w, v, axes=(0, 0))


def _segment(f, a: complex, b: complex, settings: QuadratureSettings, depth: int):
    """Nested doubling on ``[a, b]``, bisecting when doubling stalls."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    N = settings.n0 - 1
    x, w = cc_rule(N + 1)
    vals = _eval(f, mid + half * x)
    nev = len(x)
    q_old = _contract(w, vals) * half
    err = np.inf
    for _ in range(settings.max_doublings):
        N2 = 2 * N
        x2, w2 = cc_rule(N2 + 1)
        new = _eval(f, mid + half * x2[1::2])
        nev += len(new)
        v2 = np.empty((N2 + 1,) + vals.shape[1:], dtype=complex)
        v2[0::2] = vals
        v2[1::2] = new
        q = _contract(w2, v2) * half
        err = float(np.max(np.abs(q - q_old)))
        scale = max(1.0, float(np.max(np.abs(q))))
        rnd = 8 * EPS * float(np.max(_contract(np.abs(w2), np.abs(v2)))) * abs(half)
        N, vals, q_old = N2, v2, q
        if err <= settings.tol * scale and (err > 0 or N2 >= 2 * (settings.n0 - 1)):
            return q, err + rnd, True, nev
        # early bisection once the panel is clearly under-resolved
        if N2 >= 4 * (settings.n0 - 1) and err > 1e-2 * scale and depth < settings.max_depth:
            break
    if depth >= settings.max_depth:
        return q_old, err, False, nev
    q1, e1, c1, n1 = _segment(f, a, mid, settings, depth + 1)
    q2, e2, c2, n2 = _segment(f, mid, b, settings, depth + 1)
    return q1 + q2, e1 + e2, c1 and c2, nev + n1 + n2


def _ray_length(f, seg: PathSegment, cert: DecayCertificate, settings: QuadratureSettings) -> float:
    threshold = settings.tol / settings.safety
    amp = cert.amplitude
    if amp is None:
        amp = max(1.0, float(np.max(np.abs(_eval(f, np.array([seg.a]))))))
        if cert.kind == "exp":
            amp *= math.exp(min(cert.rate * abs(seg.a) ** cert.power * cert.t, 700.0))
    L = max(cert.length(threshold, amp), 2 * abs(seg.a) + 1e-300)
    # make sure the integrand really is small where the ray is cut
    for _ in range(40):
        probe = seg.a + seg.direction * (L - abs(seg.a)) if not seg.incoming else seg.a - seg.direction * (L - abs(seg.a))
        if float(np.max(np.abs(_eval(f, np.array([probe]))))) * max(L, 1.0) <= threshold:
            break
        L *= 1.5
    return L - abs(seg.a)


def integrate_path(
    f: Callable[[np.ndarray], np.ndarray],
    path: ComplexPath,
    settings: QuadratureSettings | None = None,
    certificate: DecayCertificate | None = None,
) -> QuadResult:
    """Integrate ``f`` along ``path``.

    ``f`` maps a 1-d array of nodes to an array whose first axis runs over
    the nodes; trailing axes give vector-valued integrals.
    """
    settings = settings or QuadratureSettings()
    total = 0j
    err = 0.0
    ok = True
    nev = 0
    for seg in path.segments:
        if seg.kind == "ray":
            if certificate is None:
                raise ContourError("infinite ray needs a decay certificate")
            L = _ray_length(f, seg, certificate, settings)
            seg = seg.truncated(L)
        q, e, c, n = _segment(f, seg.a, seg.b, settings, 0)
        total = total + q
        err += e
        ok = ok and c
        nev += n
    if not ok:
        warnings.warn("quadrature did not reach the requested tolerance", QuadratureWarning, stacklevel=2)
    return QuadResult(total, err, ok, nev)


def integrate_polyline(f, points: np.ndarray, settings: QuadratureSettings | None = None) -> QuadResult:
    """Integrate along the polyline through ``points``."""
    settings = settings or QuadratureSettings()
    total = 0j
    err = 0.0
    ok = True
    nev = 0
    for a, b in zip(points[:-1], points[1:]):
        if a == b:
            continue
        q, e, c, n = _segment(f, complex(a), complex(b), settings, 0)
        total = total + q
        err += e
        ok = ok and c
        nev += n
    return QuadResult(total, err, ok, nev)


# ---------------------------------------------------------------------------
# rescaled phase and saddle points


@dataclass(frozen=True)
class PhaseData:
    """Rescaled phase ``Phi(z) = (i k xi - i omega(k) t) / size`` with ``k = s u z``.

    ``s = (|xi|/t)^(1/(n-1))``, ``u = exp(-i arg xi)`` (the sign of ``xi``
    when real) and ``size = |xi| s``.  Then ``Phi(z) = i z - sum_j i w_j r_j u^j z^j``
    with ``r_j = (|xi|/t)^((j-n)/(n-1))`` and ``r_n = 1``.
    """

    disp: Dispersion
    xi: complex
    t: float
    s: float
    u: complex
    size: float
    poly: np.ndarray  # numpy order
    saddles: np.ndarray
    second: np.ndarray
    angles: np.ndarray

    def phi(self, z):
        return np.polyval(self.poly, z)

    def dphi(self, z, order: int = 1):
        return np.polyval(np.polyder(self.poly, order), z)

    @property
    def sigma(self) -> complex:
        return 1.0 / self.u

    def valley_angles(self) -> np.ndarray:
        """Directions in the ``z``-plane where ``Re Phi -> -infinity`` fastest."""
        n = self.disp.degree
        lead = -1j * self.disp.leading * self.u**n
        # want lead * exp(i n theta) = -|lead|
        base = np.angle(-abs(lead) / lead)
        return (base + 2 * np.pi * np.arange(n)) / n


class PhaseError(ValueError):
    pass


def stationary_points(disp: Dispersion, x: complex, t: float) -> PhaseData:
    """Saddles of the rescaled phase, ordered counter-clockwise from the positive real axis."""
    xi = complex(x)
    if xi == 0 or not t > 0:
        raise PhaseError("stationary points need x != 0 and t > 0")
    n = disp.degree
    r = abs(xi) / t
    s = r ** (1.0 / (n - 1))
    u = abs(xi) / xi
    size = abs(xi) * s
    coeffs = np.zeros(n + 1, dtype=complex)  # ascending powers of z
    for j, w in enumerate(disp.coeffs, start=1):
        coeffs[j] -= 1j * w * r ** ((j - n) / (n - 1)) * u**j
    coeffs[1] += 1j
    poly = coeffs[::-1].copy()
    d1 = np.polyder(poly)
    z = np.roots(d1).astype(complex)
    # Newton polish
    d2 = np.polyder(d1)
    for _ in range(3):
        z = z - np.polyval(d1, z) / np.polyval(d2, z)
    order = np.argsort(np.mod(np.angle(z), 2 * np.pi) + 0 * np.abs(z))
    z = z[order]
    second = np.polyval(d2, z)
    if np.any(np.abs(second) < 1e-12):
        raise PhaseError("degenerate saddle point")
    theta = (np.pi - np.angle(second)) / 2.0
    theta = np.where(theta > np.pi / 2, theta - np.pi, theta)
    theta = np.where(theta <= -np.pi / 2, theta + np.pi, theta)
    return PhaseData(disp, xi, float(t), s, complex(u), size, poly, z, second, theta)


# ---------------------------------------------------------------------------
# steepest descent branches


@dataclass
class Branch:
    saddle: int
    points: np.ndarray  # starts at the saddle
    end_kind: str  # "valley" or "saddle"
    end_index: int


def default_drop(tol: float) -> float:
    return math.log(1.0 / tol) + 5.0


def _trace(phase: PhaseData, j: int, sign: int, drop: float, max_steps: int = 20000) -> Branch:
    z0 = phase.saddles[j]
    f0 = phase.phi(z0)
    c = f0.imag
    size = phase.size
    valleys = phase.valley_angles()
    n = phase.disp.degree
    others = [i for i in range(len(phase.saddles)) if i != j]
    scale = abs(phase.second[j]) ** -0.5
    r_class = 1.5 * max(1.0, float(np.max(np.abs(phase.saddles))))
    h = 0.1 * scale * min(1.0, math.sqrt(max(drop, 1.0) / max(size, 1e-300)))
    h_max_abs = 0.1 * scale
    pts = [z0]
    z = z0 + sign * h * np.exp(1j * phase.angles[j])
    for _ in range(max_steps):
        # corrector: hold Im Phi at its saddle value
        for _ in range(6):
            d1 = phase.dphi(z)
            a = abs(d1)
            if a == 0:
                break
            d = -np.conj(d1) / a
            dz = (phase.phi(z).imag - c) / a * 1j * d
            z = z + dz
            if abs(dz) < 1e-13 * (1 + abs(z)):
                break
        if abs(phase.phi(z).imag - c) > 1e-8 * (1 + abs(c)) and abs(phase.dphi(z)) > 1e-8:
            raise PhaseError(f"descent corrector diverged near z={pts[-1]}")
        pts.append(z)
        # stokes case: ran into another saddle at the same height
        for i in others:
            zi = phase.saddles[i]
            hi = 0.1 * abs(phase.second[i]) ** -0.5
            if abs(z - zi) < max(2.0 * h, hi) and abs(phase.phi(zi).imag - c) < 1e-6 * (1 + abs(c)):
                pts.append(zi)
                return Branch(j, np.array(pts), "saddle", i)
        depth = size * (phase.phi(z).real - f0.real)
        if depth <= -(drop + 10.0) and abs(z) >= r_class:
            ang = np.angle(z)
            dist = np.abs(np.angle(np.exp(1j * (valleys - ang))))
            v = int(np.argmin(dist))
            if dist[v] < 0.35 * np.pi / n:
                return Branch(j, np.array(pts), "valley", v)
        d1 = phase.dphi(z)
        d = -np.conj(d1) / abs(d1)
        h = min(h * 1.2, max(h_max_abs, 0.25 * abs(z)))
        z = z + h * d
    raise PhaseError(f"descent path from saddle {j} did not reach a valley")


def descent_path(phase: PhaseData, j: int, drop: float | None = None) -> ComplexPath:
    """Piecewise-affine steepest-descent path through saddle ``j``.

    The path runs from the branch leaving at ``theta_j + pi`` (reversed) to
    the branch leaving at ``theta_j``.
    """
    drop = default_drop(1e-10) if drop is None else drop
    back = _trace(phase, j, -1, drop)
    fwd = _trace(phase, j, +1, drop)
    pts = np.concatenate([back.points[::-1], fwd.points[1:]])
    return _polyline_path(pts)


def _polyline_path(pts: np.ndarray) -> ComplexPath:
    keep = [pts[0]]
    for p in pts[1:]:
        if p != keep[-1]:
            keep.append(p)
    return ComplexPath(tuple(PathSegment.finite(a, b) for a, b in zip(keep[:-1], keep[1:])))


@dataclass
class DescentRoute:
    """Valley-to-valley path assembled from descent branches."""

    points: np.ndarray
    saddles: list[tuple[int, int]]  # (saddle index, traversal sign)
    winding: int


def _valley_connector(p: complex, q: complex, valley: float) -> list[complex]:
    """Radial, arc, radial at a larger radius, sweeping the short way inside the valley."""
    r = 1.5 * max(abs(p), abs(q))
    a1 = np.angle(p)
    a2 = np.angle(q)
    d = np.angle(np.exp(1j * (a2 - a1)))
    m = max(2, int(abs(d) * r / 0.2))
    arc = r * np.exp(1j * (a1 + d * np.arange(m + 1) / m))
    return [complex(v) for v in arc]


def avoid_origin(pts: np.ndarray, r: float) -> np.ndarray:
    """Replace any stretch of the polyline inside ``|z| < r`` by an arc of radius ``r``.

    Descent paths may run straight through the pole of the amplitude at the
    origin (e.g. along a Stokes line); the detour side is immaterial because
    the winding number is measured afterwards.
    """
    # refine segments that pass near the origin so no chord jumps the disc
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        tt = np.clip(-np.real(np.conj(a) * d) / abs(d) ** 2, 0.0, 1.0)
        if abs(a + tt * d) < 2 * r:
            m = int(math.ceil(abs(d) / (0.25 * r)))
            out.extend(a + d * np.arange(1, m + 1) / m)
        else:
            out.append(b)
    pts = np.array(out)
    inside = np.abs(pts) < r
    if not inside.any():
        return pts
    if inside[0] or inside[-1]:
        raise PhaseError("descent route starts or ends at the origin")
    res = []
    i = 0
    while i < len(pts):
        if not inside[i]:
            res.append(pts[i])
            i += 1
            continue
        j = i
        while inside[j]:
            j += 1
        a1 = np.angle(pts[i - 1])
        a2 = np.angle(pts[j])
        d = (a2 - a1) % (2 * np.pi)  # counter-clockwise detour
        m = max(2, int(math.ceil(d * r / (0.1 * r))))
        res.extend(r * np.exp(1j * (a1 + d * np.arange(m + 1) / m)))
        i = j
    return np.array(res)


def descent_route(phase: PhaseData, valley_in: int, valley_out: int, ref_sweep: float, drop: float) -> DescentRoute:
    """Join ``valley_in`` to ``valley_out`` through saddles along descent branches.

    ``ref_sweep`` is the clockwise angle swept by the reference contour; it
    fixes the winding number of (reference - route) around ``z = 0``.
    """
    nsad = len(phase.saddles)
    branches = {}
    for j in range(nsad):
        for sgn in (+1, -1):
            branches[(j, sgn)] = _trace(phase, j, sgn, drop)
    adj: dict[tuple, list] = {}

    def link(a, b, data):
        adj.setdefault(a, []).append((b, data))

    for (j, sgn), br in branches.items():
        other = ("v", br.end_index) if br.end_kind == "valley" else ("s", br.end_index)
        link(("s", j), other, ("fwd", j, sgn))
        link(other, ("s", j), ("rev", j, sgn))
    start, goal = ("v", valley_in), ("v", valley_out)
    prev = {start: None}
    dq = deque([start])
    while dq:
        node = dq.popleft()
        if node == goal:
            break
        for nb, data in sorted(adj.get(node, []), key=lambda e: e[0]):
            if nb not in prev:
                prev[nb] = (node, data)
                dq.append(nb)
    if goal not in prev:
        raise PhaseError("no descent route between the requested valleys")
    steps = []
    node = goal
    while prev[node] is not None:
        node_prev, data = prev[node]
        steps.append((node_prev, node, data))
        node = node_prev
    steps.reverse()
    valleys = phase.valley_angles()
    pts: list[complex] = []
    for node_prev, node, (kind, j, sgn) in steps:
        seg = branches[(j, sgn)].points
        seg = seg if kind == "fwd" else seg[::-1]
        if pts and abs(pts[-1] - seg[0]) > 1e-12 * (1 + abs(seg[0])):
            # passing through a valley between two branches
            pts.extend(_valley_connector(pts[-1], complex(seg[0]), valleys[node_prev[1]]))
        pts.extend(complex(v) for v in seg)
    # a saddle counts as traversed when the route climbs in along one of its
    # own branches and leaves along the other
    crossed = []
    for (_, _, d1), (_, _, d2) in zip(steps[:-1], steps[1:]):
        if d1[0] == "rev" and d2[0] == "fwd" and d1[1] == d2[1]:
            crossed.append((d2[1], d2[2]))
    pts_arr = np.array(pts)
    keep = np.concatenate([[True], np.abs(np.diff(pts_arr)) > 0])
    pts_arr = pts_arr[keep]
    r_ex = 0.3 * min(1.0, float(np.min(np.abs(phase.saddles))))
    pts_arr = avoid_origin(pts_arr, r_ex)
    darg = float(np.sum(np.angle(pts_arr[1:] / pts_arr[:-1])))
    w = int(round((-ref_sweep - darg) / (2 * np.pi)))
    return DescentRoute(pts_arr, crossed, w)
