"""Polynomial dispersion relations.

A dispersion relation is a real polynomial ``omega(k) = sum_j w_j k^j`` with
no constant term.  Plane waves ``exp(i k x - i omega(k) t)`` solve the
evolution equation, which fixes every sign convention used in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

class DispersionError(ValueError):
    """Invalid dispersion relation or failed root computation."""


@dataclass(frozen=True)
class Dispersion:
    """Real polynomial ``omega(k)`` of degree ``n >= 2`` with ``omega(0) = 0``.

    ``coeffs[j-1]`` is the coefficient of ``k**j``.
    """

    coeffs: tuple[float, ...]
    _poly: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        while c and c[-1] == 0.0:
            c = c[:-1]
        if len(c) < 2:
            raise DispersionError("degree must be at least 2 with a nonzero leading coefficient")
        if not all(np.isfinite(c)):
            raise DispersionError("coefficients must be finite reals")
        object.__setattr__(self, "coeffs", c)
        # numpy ordering: highest power first, constant term zero
        object.__setattr__(self, "_poly", np.array(c[::-1] + (0.0,)))

    @classmethod
    def monomial(cls, n: int, lead: float = 1.0) -> "Dispersion":
        return cls(tuple([0.0] * (n - 1) + [float(lead)]))

    @classmethod
    def parse(cls, text: str) -> "Dispersion":
        """Parse ``"k^3"``, ``"-k^3"``, ``"k^3+k"`` or a comma list ``"0,0,1"``."""
        s = text.replace(" ", "").replace("**", "^")
        if "," in s or "k" not in s:
            return cls(tuple(float(v) for v in s.split(",")))
        terms: dict[int, float] = {}
        for tok in s.replace("-", "+-").split("+"):
            if not tok:
                continue
            if "k" not in tok:
                raise DispersionError(f"constant term not allowed: {tok!r}")
            coef, _, power = tok.partition("k")
            coef = coef.rstrip("*")
            c = -1.0 if coef == "-" else 1.0 if coef == "" else float(coef)
            p = int(power[1:]) if power.startswith("^") else 1
            terms[p] = terms.get(p, 0.0) + c
        n = max(terms)
        return cls(tuple(terms.get(j, 0.0) for j in range(1, n + 1)))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    @property
    def is_monomial(self) -> bool:
        return all(v == 0.0 for v in self.coeffs[:-1])

    @property
    def poly(self) -> np.ndarray:
        """Coefficients in numpy order (highest power first)."""
        return self._poly.copy()

    def __call__(self, k):
        return np.polyval(self._poly, k)

    def derivative(self, k, order: int = 1):
        return np.polyval(np.polyder(self._poly, order), k)

    def label(self) -> str:
        parts = []
        for j, c in enumerate(self.coeffs, start=1):
            if c == 0.0:
                continue
            mag = "" if abs(c) == 1.0 else f"{abs(c):g}"
            parts.append(("-" if c < 0 else "+") + mag + ("k" if j == 1 else f"k^{j}"))
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s


def num_boundary_conditions(disp: Dispersion) -> int:
    """Number of boundary conditions the canonical half-line problem needs."""
    n = disp.degree
    if n % 2 == 0:
        return n // 2
    return (n + 1) // 2 if disp.leading > 0 else (n - 1) // 2


def _asymptotic_labels(disp: Dispersion, k: complex) -> np.ndarray:
    n = disp.degree
    return k * np.exp(2j * np.pi * np.arange(n) / n)


def _polish(disp: Dispersion, roots: np.ndarray, target: complex) -> np.ndarray:
    d1 = np.polyder(disp._poly)
    out = roots.astype(complex)
    for _ in range(8):
        f = np.polyval(disp._poly, out) - target
        fp = np.polyval(d1, out)
        ok = np.abs(fp) > 1e-300
        out = np.where(ok, out - np.where(ok, f / np.where(ok, fp, 1.0), 0.0), out)
    return out


def _match(prev: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Reorder ``roots`` to follow ``prev`` by greedy nearest assignment."""
    dist = np.abs(prev[:, None] - roots[None, :])
    out = np.full(prev.shape, np.nan + 0j)
    row_done = np.zeros(len(prev), dtype=bool)
    taken = np.zeros(len(roots), dtype=bool)
    for flat in np.argsort(dist, axis=None, kind="stable"):
        i, j = divmod(int(flat), len(roots))
        if row_done[i] or taken[j]:
            continue
        out[i] = roots[j]
        row_done[i] = taken[j] = True
    return out


def symmetries(disp: Dispersion, k: complex, ref_radius: float | None = None) -> np.ndarray:
    """All ``nu`` with ``omega(nu) = omega(k)``; the first entry is ``k`` itself.

    Monomials use the closed form ``exp(2 pi i j / n) k``.  For general
    polynomials the roots are labelled by continuity along the ray from a
    far reference point down to ``k``, starting from the monomial labelling
    which is exact asymptotically.
    """
    k = complex(k)
    if not np.isfinite(k):
        raise DispersionError(f"symmetries need finite k, got {k}")
    if disp.is_monomial:
        return _asymptotic_labels(disp, k)
    n = disp.degree
    if k == 0:
        base = np.roots(disp._poly)
        return _polish(disp, np.sort_complex(base.astype(complex)), 0.0)
    if ref_radius is None:
        from .contours import choose_truncation_radius

        ref_radius = choose_truncation_radius(disp)
    direction = k / abs(k)
    r_far = max(4.0 * ref_radius, 4.0 * abs(k))
    radii = np.geomspace(r_far, abs(k), 60) if abs(k) > 0 else np.array([r_far])
    labels = None
    for r in radii:
        kk = direction * r
        target = complex(disp(kk))
        poly = disp.poly.astype(complex)
        poly[-1] -= target
        roots = _polish(disp, np.roots(poly), target)
        if labels is None:
            labels = _match(_asymptotic_labels(disp, kk), roots)
        else:
            labels = _match(labels, roots)
    labels = labels.astype(complex)
    # the identity branch is exact
    i0 = int(np.argmin(np.abs(labels - k)))
    labels[i0] = k
    if i0 != 0:
        labels[[0, i0]] = labels[[i0, 0]]
    resid = np.abs(disp(labels) - disp(k))
    if np.any(resid > 1e-9 * (1.0 + abs(disp(k)))):
        raise DispersionError(f"root finder failed to converge at k={k}")
    if labels.size != n:
        raise DispersionError(f"expected {n} symmetries at k={k}")
    return labels


def cj_coefficients(disp: Dispersion, k) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(c, b)`` with ``c[j] = (-i)^j b[j]``.

    ``b`` solves ``i (omega(k) - omega(l)) / (k - l) = sum_j b_j(k) l^j``.
    Arrays have shape ``(n,) + shape(k)``.
    """
    k = np.asarray(k, dtype=complex)
    w = disp.coeffs
    n = disp.degree
    b = np.zeros((n,) + k.shape, dtype=complex)
    for j in range(n):
        acc = np.zeros(k.shape, dtype=complex)
        for m in range(j + 1, n + 1):
            acc = acc + w[m - 1] * k ** (m - 1 - j)
        b[j] = 1j * acc
    phase = (-1j) ** np.arange(n)
    c = b * phase.reshape((n,) + (1,) * k.ndim)
    return c, b


def _operator_poly(disp: Dispersion, factor: complex) -> np.ndarray:
    """Coefficients (ascending powers of d/dx) of ``factor * omega(-i d/dx)``."""
    out = np.zeros(disp.degree + 1, dtype=complex)
    for p, w in enumerate(disp.coeffs, start=1):
        out[p] = factor * w * (-1j) ** p
    return out


def _poly_pow(p: np.ndarray, ell: int) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for _ in range(ell):
        out = np.convolve(out, p)
    return out


@dataclass(frozen=True)
class CompatibilityEntry:
    j: int
    ell: int
    order: int
    lhs: complex
    rhs: complex
    literal_form: complex
    satisfied: bool


@dataclass(frozen=True)
class CompatibilityReport:
    entries: tuple[CompatibilityEntry, ...]

    @property
    def first_violation(self) -> int | None:
        for e in self.entries:
            if not e.satisfied:
                return e.order
        return None

    def satisfied_through(self, order: int) -> bool:
        return all(e.satisfied for e in self.entries if e.order <= order)


class CompatibilityError(ValueError):
    pass


def check_compatibility(spec, max_order: int, tol: float = 1e-10) -> CompatibilityReport:
    """Compare boundary-data derivatives with the PDE applied to the initial datum.

    ``lhs = g_j^{(l)}(0)`` and ``rhs = [(-i omega(-i d/dx))^l q_o]^{(j)}(0)``,
    the form produced by differentiating the equation in time.  The
    literal residual ``i g_j^{(l)}(0) + [omega(-i d/dx)^l q_o]^{(j)}(0)`` is
    recorded alongside for reference.
    """
    disp = spec.dispersion
    n = disp.degree
    N = num_boundary_conditions(disp)
    evol = _operator_poly(disp, -1j)
    literal = _operator_poly(disp, 1.0)
    entries = []
    for j in range(N):
        ell = 0
        while j + n * ell <= max_order:
            try:
                lhs = complex(spec.boundary[j].derivative(ell, 0.0, side="right"))
                op = _poly_pow(evol, ell)
                rhs = sum(
                    complex(c) * complex(spec.initial.derivative(p + j, 0.0, side="right"))
                    for p, c in enumerate(op)
                    if c != 0
                )
                lop = _poly_pow(literal, ell)
                lit = 1j * lhs + sum(
                    complex(c) * complex(spec.initial.derivative(p + j, 0.0, side="right"))
                    for p, c in enumerate(lop)
                    if c != 0
                )
            except (ValueError, NotImplementedError) as exc:
                raise CompatibilityError(f"data not differentiable enough for (j={j}, l={ell}): {exc}") from exc
            scale = 1.0 + abs(lhs) + abs(rhs)
            entries.append(
                CompatibilityEntry(j, ell, j + n * ell, lhs, rhs, lit, abs(lhs - rhs) <= tol * scale)
            )
            ell += 1
    entries.sort(key=lambda e: (e.order, e.j))
    return CompatibilityReport(tuple(entries))
