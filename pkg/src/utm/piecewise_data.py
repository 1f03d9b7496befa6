"""Piecewise-smooth initial and boundary data and their transforms.

A datum is a list of pieces on consecutive intervals.  Piece kinds:

* ``poly``: ``p(x) = sum_i c_i x^i`` (absolute variable);
* ``polyexp``: ``p(x) exp(-rate x)``, the only closed-form kind allowed on an
  unbounded interval;
* ``numeric``: a callable ``f(x, order)`` returning the derivative of the
  given order, integrated by composite Gauss-Legendre quadrature.  Unbounded
  numeric pieces declare a ``cutoff`` beyond which they are negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .dispersion import Dispersion, num_boundary_conditions

SERIES_SWITCH = 1e-3
_SERIES_TERMS = 10


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Piece:
    kind: str
    a: float
    b: float
    coeffs: tuple[float, ...] = (0.0,)
    rate: float = 0.0
    func: Callable | None = field(default=None, compare=False)
    max_order: int = 64
    cutoff: float | None = None

    def __post_init__(self):
        if self.kind not in ("poly", "polyexp", "numeric"):
            raise DataError(f"unknown piece kind {self.kind!r}")
        if not self.a < self.b:
            raise DataError(f"empty interval [{self.a}, {self.b}]")
        object.__setattr__(self, "coeffs", tuple(complex(c) if isinstance(c, complex) else float(c) for c in self.coeffs))
        unbounded = math.isinf(self.b)
        if self.kind == "poly" and unbounded and any(c != 0 for c in self.coeffs):
            raise DataError("a polynomial piece on an unbounded interval must vanish")
        if self.kind == "polyexp" and not self.rate > 0 and unbounded:
            raise DataError("exponential piece on an unbounded interval needs rate > 0")
        if self.kind == "numeric":
            if self.func is None:
                raise DataError("numeric piece needs a callable")
            if unbounded and self.cutoff is None:
                raise DataError("unbounded numeric piece needs a decay cutoff")

    @classmethod
    def poly(cls, a, b, coeffs) -> "Piece":
        return cls("poly", float(a), float(b), tuple(coeffs))

    @classmethod
    def constant(cls, a, b, value) -> "Piece":
        return cls("poly", float(a), float(b), (value,))

    @classmethod
    def polyexp(cls, a, b, coeffs, rate) -> "Piece":
        return cls("polyexp", float(a), float(b), tuple(coeffs), float(rate))

    @classmethod
    def numeric(cls, a, b, func, max_order=64, cutoff=None) -> "Piece":
        return cls("numeric", float(a), float(b), func=func, max_order=max_order, cutoff=cutoff)

    @property
    def is_zero(self) -> bool:
        return self.kind != "numeric" and all(c == 0 for c in self.coeffs)

    def _poly_derivs(self, order: int) -> np.ndarray:
        """Coefficients of ``d^order/dx^order [p(x) e^{-rate x}] e^{rate x}``."""
        c = np.array(self.coeffs, dtype=complex)
        for _ in range(order):
            dc = P.polyder(c) if len(c) > 1 else np.zeros(1, dtype=complex)
            dc = np.concatenate([dc, np.zeros(len(c) - len(dc))])
            c = dc - self.rate * c
        return c

    def derivative(self, order: int, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "numeric":
            if order > self.max_order:
                raise DataError(f"numeric piece on [{self.a}, {self.b}] has no derivative of order {order}")
            return np.asarray(self.func(x, order))
        c = self._poly_derivs(order)
        v = P.polyval(x, c)
        if self.kind == "polyexp":
            v = v * np.exp(-self.rate * x)
        return v if np.iscomplexobj(c) and np.any(np.imag(c)) else np.real(v)

    def derived(self, order: int = 1) -> "Piece":
        if self.kind == "numeric":
            if order > self.max_order:
                raise DataError(f"numeric piece on [{self.a}, {self.b}] is not differentiable to order {order}")
            f = self.func
            return Piece("numeric", self.a, self.b, func=lambda x, o, f=f, s=order: f(x, o + s),
                         max_order=self.max_order - order, cutoff=self.cutoff)
        c = self._poly_derivs(order)
        c = np.real(c) if not np.any(np.imag(c)) else c
        return Piece(self.kind, self.a, self.b, tuple(c), self.rate)

    def restricted(self, a: float, b: float) -> "Piece":
        return Piece(self.kind, a, b, self.coeffs, self.rate, self.func, self.max_order, self.cutoff)

    def moment_poly(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)


@dataclass(frozen=True)
class PiecewiseData:
    pieces: tuple[Piece, ...]

    def __post_init__(self):
        ps = tuple(self.pieces)
        if not ps:
            raise DataError("data need at least one piece")
        if ps[0].a != 0.0:
            raise DataError("data must start at 0")
        for p, q in zip(ps, ps[1:]):
            if p.b != q.a:
                raise DataError(f"pieces must be contiguous: {p.b} vs {q.a}")
        object.__setattr__(self, "pieces", ps)

    @classmethod
    def zero(cls, horizon: float = math.inf) -> "PiecewiseData":
        return cls((Piece.constant(0.0, horizon, 0.0),))

    @classmethod
    def indicator(cls, x1: float, x2: float, value: float = 1.0, horizon: float = math.inf) -> "PiecewiseData":
        pieces = []
        if x1 > 0:
            pieces.append(Piece.constant(0.0, x1, 0.0))
        pieces.append(Piece.constant(x1, x2, value))
        if x2 < horizon:
            pieces.append(Piece.constant(x2, horizon, 0.0))
        return cls(tuple(pieces))

    @property
    def horizon(self) -> float:
        return self.pieces[-1].b

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0,) + tuple(p.b for p in self.pieces)

    @property
    def interior_breakpoints(self) -> tuple[float, ...]:
        return tuple(p.b for p in self.pieces[:-1])

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in self.pieces)

    def _locate(self, x: float, side: str) -> Piece:
        for i, p in enumerate(self.pieces):
            if side == "right" and p.a <= x < p.b:
                return p
            if side == "left" and p.a < x <= p.b:
                return p
        if side == "right" and x == self.horizon:
            return self.pieces[-1]
        raise DataError(f"point {x} outside the data domain")

    def derivative(self, order: int, point: float, side: str = "right"):
        p = self._locate(float(point), side)
        return complex(p.derivative(order, point)) if np.iscomplexobj(p.derivative(order, point)) else float(p.derivative(order, point))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for p in self.pieces:
            sel = (x >= p.a) & (x < p.b)
            if p is self.pieces[-1]:
                sel |= x == p.b
            if sel.any():
                out[sel] = p.derivative(0, x[sel])
        return out if np.any(out.imag) else out.real

    def __call__(self, x):
        return self.value(x)

    def jumps(self, order: int) -> list[tuple[float, complex]]:
        """``[q^(order)](c)`` at each interior breakpoint (right minus left)."""
        out = []
        for p, q in zip(self.pieces, self.pieces[1:]):
            c = p.b
            out.append((c, complex(q.derivative(order, c)) - complex(p.derivative(order, c))))
        return out

    def derived(self, order: int = 1) -> "PiecewiseData":
        return PiecewiseData(tuple(p.derived(order) for p in self.pieces))

    def restricted(self, upto: float) -> "PiecewiseData":
        out = []
        for p in self.pieces:
            if p.a >= upto:
                break
            out.append(p.restricted(p.a, min(p.b, upto)))
        return PiecewiseData(tuple(out))

    @property
    def closed_form(self) -> bool:
        return all(p.kind != "numeric" for p in self.pieces)


# ---------------------------------------------------------------------------
# transforms


def _piece_closed(p: Piece, k: np.ndarray) -> np.ndarray:
    """``int_a^b exp(-i k x) p(x) exp(-rate x) dx`` for closed-form pieces."""
    mu = 1j * k + p.rate
    L = p.b - p.a
    out = np.zeros(k.shape, dtype=complex)
    if p.is_zero:
        return out
    nd = len(p.coeffs)
    unbounded = math.isinf(p.b)
    if unbounded:
        if np.any(mu.real <= 0):
            raise DataError("half-line transform diverges: need Im k < rate on an unbounded piece")
        small = np.zeros(k.shape, dtype=bool)
    else:
        small = np.abs(mu) * L < SERIES_SWITCH
    big = ~small
    if big.any():
        m = mu[big]
        acc_a = np.zeros(m.shape, dtype=complex)
        acc_b = np.zeros(m.shape, dtype=complex)
        # antiderivative of e^{-mu x} p(x): -e^{-mu x} sum_i p^(i)(x) / mu^(i+1)
        c = np.array(p.coeffs, dtype=complex)
        derivs = [c]
        for _ in range(nd - 1):
            derivs.append(P.polyder(derivs[-1]) if len(derivs[-1]) > 1 else np.zeros(1, dtype=complex))
        for i, d in enumerate(derivs):
            acc_a = acc_a + P.polyval(p.a, d) / m ** (i + 1)
            if not unbounded:
                acc_b = acc_b + P.polyval(p.b, d) / m ** (i + 1)
        val = np.exp(-m * p.a) * acc_a
        if not unbounded:
            val = val - np.exp(-m * p.b) * acc_b
        out[big] = val
    if small.any():
        m = mu[small]
        # local variable y = x - a: int_0^L e^{-mu y} p(a + y) dy as a power series in mu
        c = np.array(p.coeffs, dtype=complex)
        shifted = _shift_poly(c, p.a)
        acc = np.zeros(m.shape, dtype=complex)
        for j in range(_SERIES_TERMS):
            # int_0^L y^j p(a+y) dy
            mom = sum(cc * L ** (i + j + 1) / (i + j + 1) for i, cc in enumerate(shifted))
            acc = acc + (-m) ** j / math.factorial(j) * mom
        out[small] = np.exp(-m * p.a) * acc
    return out


def _shift_poly(c: np.ndarray, a: float) -> np.ndarray:
    """Coefficients of ``p(a + y)`` in ``y``."""
    n = len(c)
    out = np.zeros(n, dtype=complex)
    for i, ci in enumerate(c):
        for j in range(i + 1):
            out[j] += ci * math.comb(i, j) * a ** (i - j)
    return out


def _gl_panels(a: float, b: float, kmax: float):
    L = b - a
    npan = max(4, int(math.ceil(L * max(kmax, 1.0) / 2.0)))
    x, w = np.polynomial.legendre.leggauss(24)
    edges = np.linspace(a, b, npan + 1)
    h = np.diff(edges) / 2
    mids = (edges[:-1] + edges[1:]) / 2
    nodes = (mids[:, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def _piece_numeric(p: Piece, k: np.ndarray, order: int = 0) -> np.ndarray:
    b = p.b if math.isfinite(p.b) else p.cutoff
    if b <= p.a:
        return np.zeros(k.shape, dtype=complex)
    kmax = float(np.max(np.abs(k))) if k.size else 1.0
    nodes, weights = _gl_panels(p.a, b, kmax)
    fv = np.asarray(p.func(nodes, order), dtype=complex) * weights
    out = np.empty(k.shape, dtype=complex)
    flat = k.ravel()
    for s in range(0, flat.size, 256):
        kk = flat[s : s + 256]
        out.ravel()[s : s + 256] = np.exp(-1j * np.outer(kk, nodes)) @ fv
    return out


def half_line_ft(data: PiecewiseData, k) -> np.ndarray | complex:
    """``int_0^inf exp(-i k x) q(x) dx`` (over the data domain)."""
    scalar = np.ndim(k) == 0
    kk = np.atleast_1d(np.asarray(k, dtype=complex))
    out = np.zeros(kk.shape, dtype=complex)
    for p in data.pieces:
        if p.kind == "numeric":
            out += _piece_numeric(p, kk)
        else:
            out += _piece_closed(p, kk)
    return complex(out[0]) if scalar else out


def time_transform(g: PiecewiseData, k, t: float):
    """``int_0^t exp(-i k s) g(s) ds`` for ``0 <= t <= T``."""
    if not 0.0 <= t <= g.horizon:
        raise DataError(f"t = {t} outside [0, {g.horizon}]")
    if t == 0.0:
        return 0j if np.ndim(k) == 0 else np.zeros(np.shape(k), dtype=complex)
    return half_line_ft(g.restricted(t), k)


def ft_channels(data: PiecewiseData, k, sign: float = 1.0, upto: float | None = None) -> dict[float, np.ndarray]:
    """Split ``int exp(-i sign k x) q(x) dx`` into ``sum_c exp(-i sign k c) A_c(k)``.

    Each ``A_c`` is rational in ``k``; only closed-form pieces are allowed.
    With ``upto`` the data are first restricted to ``[0, upto]``.
    """
    if upto is not None:
        data = data.restricted(upto)
    kk = np.atleast_1d(np.asarray(k, dtype=complex)) * sign
    out: dict[float, np.ndarray] = {}
    for p in data.pieces:
        if p.kind == "numeric":
            raise DataError("channel split needs closed-form pieces")
        if p.is_zero:
            continue
        mu = 1j * kk + p.rate
        c = np.array(p.coeffs, dtype=complex)
        derivs = [c]
        for _ in range(len(c) - 1):
            derivs.append(P.polyder(derivs[-1]))
        for end, sgn in ((p.a, 1.0), (p.b, -1.0)):
            if math.isinf(end):
                continue
            acc = np.zeros(kk.shape, dtype=complex)
            for i, d in enumerate(derivs):
                acc = acc + P.polyval(end, d) / mu ** (i + 1)
            acc = sgn * math.exp(-p.rate * end) * acc
            out[end] = out.get(end, 0) + acc
    return out


# ---------------------------------------------------------------------------
# integration by parts


@dataclass(frozen=True)
class IBPDecomposition:
    """``q_hat(k) = sum_{i<d} [q^(i)(0) + sum_c e^{-ikc} [q^(i)](c)] / (ik)^(i+1) + F(k) / (ik)^d``."""

    depth: int
    corner: tuple[complex, ...]
    jumps: tuple[tuple[tuple[float, complex], ...], ...]
    remainder: PiecewiseData

    def atoms(self):
        """Yield ``(order i, shift c, weight)`` with ``c = 0`` for the corner."""
        for i in range(self.depth):
            if self.corner[i] != 0:
                yield i, 0.0, self.corner[i]
            for c, J in self.jumps[i]:
                if J != 0:
                    yield i, c, J

    def remainder_ft(self, k):
        return half_line_ft(self.remainder, k)

    def evaluate(self, k):
        k = np.asarray(k, dtype=complex)
        total = np.zeros(k.shape, dtype=complex)
        for i, c, J in self.atoms():
            total = total + J * np.exp(-1j * k * c) / (1j * k) ** (i + 1)
        return total + self.remainder_ft(k) / (1j * k) ** self.depth


def ibp_decompose(data: PiecewiseData, depth: int) -> IBPDecomposition:
    if depth < 0:
        raise DataError("depth must be non-negative")
    corner, jumps = [], []
    for i in range(depth):
        try:
            corner.append(complex(data.derivative(i, 0.0, "right")))
            jumps.append(tuple((c, J) for c, J in data.jumps(i)))
        except DataError as exc:
            raise DataError(f"order {i}: {exc}") from exc
    try:
        rem = data.derived(depth)
    except DataError as exc:
        raise DataError(f"order {depth}: {exc}") from exc
    return IBPDecomposition(depth, tuple(corner), tuple(jumps), rem)


@dataclass(frozen=True)
class GRemainder:
    """Integration by parts of ``int_0^t exp(i mu s) g(s) ds`` to order ``p``.

    ``start[i] = g^(i)(0+)``, ``end[i] = g^(i)(t-)``, ``jumps[i]`` lists
    ``(tau, [g^(i)](tau))`` for breakpoints ``0 < tau < t`` and
    ``G = int_0^t exp(i mu s) g^(p+1)(s) ds``.
    """

    order: int
    t: float
    start: tuple[complex, ...]
    end: tuple[complex, ...]
    jumps: tuple[tuple[tuple[float, complex], ...], ...]
    G: complex | np.ndarray

    def reconstruct(self, mu):
        mu = np.asarray(mu, dtype=complex)
        im = 1j * mu
        total = np.zeros(mu.shape, dtype=complex)
        for i in range(self.order + 1):
            inner = np.exp(im * self.t) * self.end[i] - self.start[i]
            for tau, J in self.jumps[i]:
                inner = inner - np.exp(im * tau) * J
            total = total + (-1) ** i * inner / im ** (i + 1)
        return total + (-1) ** (self.order + 1) * self.G / im ** (self.order + 1)


def g_remainders(g: PiecewiseData, p: int, mu, t: float) -> GRemainder:
    if not 0.0 < t <= g.horizon:
        raise DataError(f"t = {t} outside (0, {g.horizon}]")
    gt = g.restricted(t)
    start, end, jumps = [], [], []
    for i in range(p + 1):
        try:
            start.append(complex(gt.derivative(i, 0.0, "right")))
            end.append(complex(gt.derivative(i, t, "left")))
            jumps.append(tuple((tau, J) for tau, J in gt.jumps(i)))
        except DataError as exc:
            raise DataError(f"order {i}: {exc}") from exc
    d = gt.derived(p + 1)
    G = half_line_ft(d, -np.asarray(mu, dtype=complex))
    return GRemainder(p, t, tuple(start), tuple(end), tuple(jumps), G)


def split_boundary_at_jumps(g: PiecewiseData, tol: float = 0.0) -> list[PiecewiseData]:
    """Telescoping split so each part has at most one value jump."""
    taus = [(c, J) for c, J in g.jumps(0) if abs(J) > tol]
    if not taus:
        return [g]
    T = g.horizon
    cuts = [c for c, _ in taus]
    out = []
    prev_cut = 0.0
    prev_hold = 0.0
    for i, cut in enumerate(cuts + [T]):
        pieces = []
        if prev_cut > 0:
            pieces.append(Piece.constant(0.0, prev_cut, 0.0))
        for p in g.pieces:
            lo, hi = max(p.a, prev_cut), min(p.b, cut)
            if lo < hi:
                pieces.append(_minus_const(p.restricted(lo, hi), prev_hold))
        hold = complex(g.derivative(0, cut, "left")) if cut < T else None
        if cut < T:
            held = hold - prev_hold
            pieces.append(Piece.constant(cut, T, held.real if held.imag == 0 else held))
        out.append(PiecewiseData(tuple(pieces)))
        prev_cut = cut
        prev_hold = hold if hold is not None else prev_hold
    return out


def _minus_const(p: Piece, c: complex) -> Piece:
    if c == 0:
        return p
    if p.kind == "poly":
        cc = list(p.coeffs)
        v = cc[0] - c
        cc[0] = v.real if isinstance(v, complex) and v.imag == 0 else v
        return Piece("poly", p.a, p.b, tuple(cc))
    base = p

    def func(x, o, base=base, c=c):
        v = base.derivative(o, x)
        return v - c if o == 0 else v

    return Piece("numeric", p.a, p.b, func=func, max_order=base.max_order if base.kind == "numeric" else 64,
                 cutoff=p.cutoff)


# ---------------------------------------------------------------------------
# problem statement


@dataclass(frozen=True)
class IBVPSpec:
    dispersion: Dispersion
    initial: PiecewiseData
    boundary: tuple[PiecewiseData, ...]
    T: float

    def __post_init__(self):
        object.__setattr__(self, "boundary", tuple(self.boundary))
        if not self.T > 0:
            raise DataError("horizon T must be positive")
        N = num_boundary_conditions(self.dispersion)
        if len(self.boundary) != N:
            raise DataError(f"expected {N} boundary data, got {len(self.boundary)}")
        if not math.isinf(self.initial.horizon):
            raise DataError("initial datum must cover [0, inf)")
        for j, g in enumerate(self.boundary):
            if g.horizon < self.T:
                raise DataError(f"boundary datum {j} does not cover [0, T]")
