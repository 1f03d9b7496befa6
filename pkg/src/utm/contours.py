"""Spectral-plane geometry: sectors of D, deformed boundary contours, the IVP contour.

Conventions
-----------
``D = {k : Im omega(k) >= 0}``.  For ``t > 0`` the factor ``exp(-i omega t)``
decays where ``Im omega < 0``, i.e. in the sectors *between* the components
of ``D``.  Boundary contours therefore leave ``partial D_j^+`` outward, into
the neighbouring decay sectors, with ``D_j^+`` kept on the left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import Dispersion, num_boundary_conditions

ARC_SEGMENT_LENGTH = 0.2


class ContourError(ValueError):
    pass


@dataclass(frozen=True)
class PathSegment:
    """Finite segment ``a -> b`` or a ray.

    A ray with ``incoming=False`` starts at ``a`` and runs to infinity along
    ``direction``; with ``incoming=True`` it arrives at ``a`` from infinity,
    travelling along ``direction``.
    """

    kind: str
    a: complex
    b: complex = 0j
    direction: complex = 0j
    incoming: bool = False

    def __post_init__(self):
        if self.kind == "finite":
            if self.a == self.b:
                raise ContourError("finite segment with coincident endpoints")
        elif self.kind == "ray":
            if abs(abs(self.direction) - 1.0) > 1e-12:
                raise ContourError("ray direction must have unit modulus")
        else:
            raise ContourError(f"unknown segment kind {self.kind!r}")

    @classmethod
    def finite(cls, a, b) -> "PathSegment":
        return cls("finite", complex(a), complex(b))

    @classmethod
    def ray_out(cls, a, angle: float) -> "PathSegment":
        return cls("ray", complex(a), direction=complex(np.exp(1j * angle)), incoming=False)

    @classmethod
    def ray_in(cls, a, angle: float) -> "PathSegment":
        """Ray ``a + s exp(i angle)``, ``s >= 0``, traversed from infinity to ``a``."""
        return cls("ray", complex(a), direction=complex(-np.exp(1j * angle)), incoming=True)

    @property
    def start(self) -> complex:
        if self.kind == "ray" and self.incoming:
            return complex(np.inf, np.inf)
        return self.a

    @property
    def end(self) -> complex:
        if self.kind == "finite":
            return self.b
        return self.a if self.incoming else complex(np.inf, np.inf)

    def reversed(self) -> "PathSegment":
        if self.kind == "finite":
            return PathSegment.finite(self.b, self.a)
        return PathSegment("ray", self.a, direction=-self.direction, incoming=not self.incoming)

    def truncated(self, length: float) -> "PathSegment":
        """Finite replacement of a ray, keeping the orientation."""
        if self.kind == "finite":
            return self
        if self.incoming:
            return PathSegment.finite(self.a - self.direction * length, self.a)
        return PathSegment.finite(self.a, self.a + self.direction * length)


@dataclass(frozen=True)
class ComplexPath:
    segments: tuple[PathSegment, ...]

    def __post_init__(self):
        segs = self.segments
        for i, s in enumerate(segs):
            if s.kind == "ray":
                if s.incoming and i != 0:
                    raise ContourError("incoming ray must be the first segment")
                if not s.incoming and i != len(segs) - 1:
                    raise ContourError("outgoing ray must be the last segment")
        for s, t in zip(segs, segs[1:]):
            if abs(s.end - t.start) > 1e-12 * (1.0 + abs(s.end)):
                raise ContourError("consecutive segments must share an endpoint")

    def reversed(self) -> "ComplexPath":
        return ComplexPath(tuple(s.reversed() for s in reversed(self.segments)))

    def __add__(self, other: "ComplexPath") -> "ComplexPath":
        return ComplexPath(self.segments + other.segments)

    def scaled(self, factor: complex) -> "ComplexPath":
        out = []
        u = factor / abs(factor)
        for s in self.segments:
            if s.kind == "finite":
                out.append(PathSegment.finite(s.a * factor, s.b * factor))
            else:
                out.append(PathSegment("ray", s.a * factor, direction=s.direction * u, incoming=s.incoming))
        return ComplexPath(tuple(out))

    def vertices(self) -> np.ndarray:
        """Finite vertices in order (ray anchors included)."""
        pts = []
        for s in self.segments:
            if s.kind == "finite":
                if not pts:
                    pts.append(s.a)
                pts.append(s.b)
            elif s.incoming or not pts:
                pts.append(s.a)
        return np.array(pts, dtype=complex)

    def total_arg_change(self, point: complex = 0j, far: float = 1e8) -> float:
        """Change of ``arg(k - point)`` along the path with rays cut at ``far``."""
        total = 0.0
        for s in self.segments:
            seg = s.truncated(far) if s.kind == "ray" else s
            total += float(np.angle((seg.b - point) / (seg.a - point)))
        return total


@dataclass(frozen=True)
class SectorDecomposition:
    sectors: tuple[tuple[float, float], ...]

    def __len__(self):
        return len(self.sectors)

    def __getitem__(self, i):
        return self.sectors[i]


def asymptotic_sectors(disp: Dispersion) -> SectorDecomposition:
    """Upper-half-plane sectors where ``Im(omega_n exp(i n theta)) >= 0``.

    Sector ``m`` is ``(m pi/n, (m+1) pi/n)``; ``sin(n theta)`` has sign
    ``(-1)^m`` there.  Components are numbered by increasing angle.
    """
    n = disp.degree
    sign = 1 if disp.leading > 0 else -1
    out = []
    for m in range(n):
        if sign * (-1) ** m > 0:
            out.append((m * math.pi / n, (m + 1) * math.pi / n))
    if len(out) != num_boundary_conditions(disp):
        raise ContourError("sector count does not match the boundary condition count")
    return SectorDecomposition(tuple(out))


def decay_valleys(disp: Dispersion, t_sign: int = 1) -> np.ndarray:
    """Bisector angles (in ``(-pi, pi]``) of sectors where ``exp(-i omega t)`` decays."""
    n = disp.degree
    sign = 1 if disp.leading > 0 else -1
    angles = []
    for m in range(2 * n):
        if sign * t_sign * (-1) ** m < 0:
            a = (m + 0.5) * math.pi / n
            angles.append(math.atan2(math.sin(a), math.cos(a)))
    return np.array(sorted(angles))


def nearest_valley(angle: float, valleys: np.ndarray) -> int:
    d = np.abs(np.angle(np.exp(1j * (valleys - angle))))
    return int(np.argmin(d))


def choose_truncation_radius(disp: Dispersion) -> float:
    """``R = 2 max(1, |critical points of omega|)``.

    The critical points are where two symmetry branches coalesce, so they
    also serve as the branch points of ``nu``.
    """
    crit = np.roots(np.polyder(disp.poly))
    m = float(np.max(np.abs(crit))) if crit.size else 0.0
    return 2.0 * max(1.0, m)


def _arc(radius: float, theta_from: float, theta_to: float) -> list[PathSegment]:
    """Affine approximation of the arc, about ``ARC_SEGMENT_LENGTH`` per piece."""
    dtheta = theta_to - theta_from
    nseg = max(1, math.ceil(radius * abs(dtheta) / ARC_SEGMENT_LENGTH))
    th = theta_from + dtheta * np.arange(nseg + 1) / nseg
    pts = radius * np.exp(1j * th)
    return [PathSegment.finite(pts[i], pts[i + 1]) for i in range(nseg)]


def ray_arc_ray(radius: float, theta_in: float, theta_out: float) -> ComplexPath:
    """In along ``theta_in``, clockwise arc at ``radius``, out along ``theta_out``.

    The clockwise sweep lies in ``(0, 2 pi)`` so the origin stays on the right.
    """
    sweep = (theta_in - theta_out) % (2 * math.pi)
    if sweep == 0.0:
        sweep = 2 * math.pi
    segs = [PathSegment.ray_in(radius * np.exp(1j * theta_in), theta_in)]
    segs += _arc(radius, theta_in, theta_in - sweep)
    segs.append(PathSegment.ray_out(radius * np.exp(1j * (theta_in - sweep)), theta_out))
    return ComplexPath(tuple(segs))


def _axis_offset(theta: float) -> float:
    """Signed angle from the nearer real half-axis to ``theta``."""
    d0 = float(np.angle(np.exp(1j * theta)))
    dpi = float(np.angle(np.exp(1j * (theta - math.pi))))
    return d0 if abs(d0) <= abs(dpi) else dpi


def ray_arc_ray_reaching(radius: float, theta_in: float, theta_out: float, reach: float,
                         window: float) -> ComplexPath:
    """:func:`ray_arc_ray` with ends near the real axis pushed out to ``|k| = reach``.

    An end whose ray lies within ``window`` of the real axis runs along the
    axis between ``radius`` and ``reach`` and leaves it parallel to the
    original ray.  A real saddle inside ``reach`` is then crossed on the axis,
    where ``exp(-i omega t)`` has modulus one, instead of being skirted
    through a region of exponential growth.  The wedge swept by the change
    must lie in a decay sector, which the caller guarantees via ``window``.
    """
    if reach <= radius:
        return ray_arc_ray(radius, theta_in, theta_out)
    d_in, d_out = _axis_offset(theta_in), _axis_offset(theta_out)
    ext_in, ext_out = abs(d_in) <= window, abs(d_out) <= window
    a_start = theta_in - d_in if ext_in else theta_in
    a_end = theta_out - d_out if ext_out else theta_out
    sweep = (a_start - a_end) % (2 * math.pi)
    if sweep == 0.0:
        sweep = 2 * math.pi
    segs = []
    if ext_in:
        u = np.exp(1j * a_start)
        segs.append(PathSegment.ray_in(reach * u, theta_in))
        segs.append(PathSegment.finite(reach * u, radius * u))
    else:
        segs.append(PathSegment.ray_in(radius * np.exp(1j * a_start), theta_in))
    segs += _arc(radius, a_start, a_start - sweep)
    v = np.exp(1j * (a_start - sweep))
    if ext_out:
        segs.append(PathSegment.finite(radius * v, reach * v))
        segs.append(PathSegment.ray_out(reach * v, theta_out))
    else:
        segs.append(PathSegment.ray_out(radius * v, theta_out))
    return ComplexPath(tuple(segs))


def component_angles(disp: Dispersion, j: int, rotation: float = 0.5) -> tuple[float, float]:
    """Incoming and outgoing ray angles for component ``j`` (1-based, by increasing angle).

    ``rotation`` is the fraction of a sector width ``pi/n`` by which each ray
    is turned outward from the edge of ``D_j^+``; ``0.5`` lands on the
    bisectors of the neighbouring decay sectors.
    """
    if not 0.0 < rotation <= 0.5:
        raise ContourError("rotation must lie in (0, 1/2]")
    secs = asymptotic_sectors(disp)
    if not 1 <= j <= len(secs):
        raise ContourError(f"component index {j} out of range")
    lo, hi = secs[j - 1]
    w = math.pi / disp.degree
    return hi + rotation * w, lo - rotation * w


def boundary_contour(disp: Dispersion, j: int, R: float | None = None, rotation: float = 0.5) -> ComplexPath:
    """Deformed ``partial D_j^+``: rays in the adjacent decay sectors joined at ``|k| = R``."""
    if R is None:
        R = choose_truncation_radius(disp)
    th_in, th_out = component_angles(disp, j, rotation)
    return ray_arc_ray(R, th_in, th_out)


def ivp_angles(disp: Dispersion, rotation: float = 0.5) -> tuple[float, float]:
    """Ray angles of the rotated IVP contour: ends of the real line turned into decay sectors."""
    n = disp.degree
    w = math.pi / n
    valleys = decay_valleys(disp)
    # the decay sector adjacent to angle pi and to angle 0
    left = right = None
    for v in valleys:
        if abs(np.angle(np.exp(1j * (v - math.pi)))) < w * 0.51:
            left = v
        if abs(v) < w * 0.51:
            right = v
    if left is None or right is None:
        raise ContourError("could not locate decay sectors next to the real axis")
    left = math.pi + (np.angle(np.exp(1j * (left - math.pi)))) * (rotation / 0.5)
    right = right * (rotation / 0.5)
    return float(left), float(right)


def ivp_contour(R: float, r0: float, nseg: int = 16) -> ComplexPath:
    """Real line, left to right, with a semicircular bump of radius ``r0`` above 0.

    The rays along the real axis carry no decay from ``exp(-i omega t)``; the
    caller must supply algebraic decay, or use :func:`ivp_contour_rotated`.
    """
    if not 0.0 < r0 < R:
        raise ContourError("need 0 < r0 < R")
    th = np.pi - np.pi * np.arange(nseg + 1) / nseg
    pts = r0 * np.exp(1j * th)
    pts[0], pts[-1] = -r0, r0
    segs = [PathSegment.ray_in(-R, math.pi), PathSegment.finite(-R, -r0)]
    segs += [PathSegment.finite(pts[i], pts[i + 1]) for i in range(nseg)]
    segs += [PathSegment.finite(r0, R), PathSegment.ray_out(R, 0.0)]
    return ComplexPath(tuple(segs))


def ivp_contour_rotated(disp: Dispersion, R: float | None = None, rotation: float = 0.5) -> ComplexPath:
    """IVP contour with both ends turned into decay sectors, passing above the origin."""
    if R is None:
        R = choose_truncation_radius(disp)
    left, right = ivp_angles(disp, rotation)
    return ray_arc_ray(R, left, right)
