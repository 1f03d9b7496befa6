"""Local structure of solutions near the corner and near jumps in the data.

Coefficients are kept exact in the cyclotomic field generated by a
primitive 12th root of unity ``zeta``.  It contains both ``i = zeta^3`` and
the cube root ``alpha = zeta^4``, so the quadratic and cubic examples share
one ring, and corner cancellations come out as an exact zero.

An :class:`Expansion` is a finite sum of special functions with symbolic
coefficients (linear forms in named data values), a constant and a linear
term about a centre ``(s, tau)``, and an error class
``O(|x - s|^px + |t - tau|^pt)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .dispersion import Dispersion
from .oscillatory_quadrature import QuadratureSettings
from .piecewise_data import IBVPSpec, PiecewiseData
from .special_functions import SpecialFnKey, special_eval_many


class ExpansionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact coefficient ring


@dataclass(frozen=True)
class Cyclo:
    """``c0 + c1 z + c2 z^2 + c3 z^3`` with ``z = exp(i pi / 6)`` and ``z^4 = z^2 - 1``."""

    c: tuple[Fraction, Fraction, Fraction, Fraction] = (Fraction(0),) * 4

    @classmethod
    def of(cls, value) -> "Cyclo":
        if isinstance(value, Cyclo):
            return value
        if isinstance(value, (int, Fraction)):
            return cls((Fraction(value), Fraction(0), Fraction(0), Fraction(0)))
        raise TypeError(f"cannot embed {value!r} exactly")

    @classmethod
    def zeta(cls, power: int = 1) -> "Cyclo":
        return cls((Fraction(0), Fraction(1), Fraction(0), Fraction(0))) ** (power % 12)

    @staticmethod
    def _reduce(coeffs: list[Fraction]) -> tuple[Fraction, ...]:
        coeffs = list(coeffs)
        for d in range(len(coeffs) - 1, 3, -1):
            top = coeffs[d]
            if top:
                coeffs[d - 2] += top
                coeffs[d - 4] -= top
            coeffs[d] = Fraction(0)
        coeffs += [Fraction(0)] * (4 - len(coeffs))
        return tuple(coeffs[:4])

    def __add__(self, other):
        other = Cyclo.of(other)
        return Cyclo(tuple(a + b for a, b in zip(self.c, other.c)))

    __radd__ = __add__

    def __neg__(self):
        return Cyclo(tuple(-a for a in self.c))

    def __sub__(self, other):
        return self + (-Cyclo.of(other))

    def __rsub__(self, other):
        return Cyclo.of(other) - self

    def __mul__(self, other):
        other = Cyclo.of(other)
        prod = [Fraction(0)] * 7
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(other.c):
                    prod[i + j] += a * b
        return Cyclo(self._reduce(prod))

    __rmul__ = __mul__

    def inverse(self) -> "Cyclo":
        if self.is_zero():
            raise ZeroDivisionError("zero has no inverse")
        # solve (self * y) = 1 via the multiplication matrix
        cols = []
        for k in range(4):
            e = [Fraction(0)] * 4
            e[k] = Fraction(1)
            cols.append((self * Cyclo(tuple(e))).c)
        A = [[cols[k][r] for k in range(4)] + [Fraction(int(r == 0))] for r in range(4)]
        for col in range(4):
            piv = next(r for r in range(col, 4) if A[r][col] != 0)
            A[col], A[piv] = A[piv], A[col]
            p = A[col][col]
            A[col] = [v / p for v in A[col]]
            for r in range(4):
                if r != col and A[r][col] != 0:
                    f = A[r][col]
                    A[r] = [a - f * b for a, b in zip(A[r], A[col])]
        return Cyclo(tuple(A[r][4] for r in range(4)))

    def __truediv__(self, other):
        return self * Cyclo.of(other).inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = Cyclo.of(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def is_zero(self) -> bool:
        return not any(self.c)

    def __complex__(self) -> complex:
        z = complex(math.cos(math.pi / 6), math.sin(math.pi / 6))
        return sum(complex(float(a)) * z**k for k, a in enumerate(self.c))

    def __str__(self) -> str:
        v = complex(self)
        re = 0.0 if abs(v.real) < 1e-12 else v.real
        im = 0.0 if abs(v.imag) < 1e-12 else v.imag
        return f"({re:.6g}{im:+.6g}j)"


ONE = Cyclo.of(1)
ZERO = Cyclo.of(0)
I_UNIT = Cyclo.zeta(3)
ALPHA = Cyclo.zeta(4)


@dataclass(frozen=True)
class LinearForm:
    """``sum coef * symbol`` with exact coefficients; symbols name data values."""

    items: tuple[tuple[str, Cyclo], ...] = ()

    @classmethod
    def single(cls, symbol: str, coef=ONE) -> "LinearForm":
        return cls(((symbol, Cyclo.of(coef)),)).normalized()

    def normalized(self) -> "LinearForm":
        acc: dict[str, Cyclo] = {}
        for s, c in self.items:
            acc[s] = acc.get(s, ZERO) + c
        return LinearForm(tuple(sorted((s, c) for s, c in acc.items() if not c.is_zero())))

    def as_dict(self) -> dict[str, Cyclo]:
        return dict(self.items)

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.items + other.items).normalized()

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + other.scaled(-ONE)

    def scaled(self, coef) -> "LinearForm":
        coef = Cyclo.of(coef)
        return LinearForm(tuple((s, c * coef) for s, c in self.items)).normalized()

    def substitute(self, rules: Mapping[str, "LinearForm"]) -> "LinearForm":
        out = LinearForm()
        for s, c in self.items:
            out = out + (rules[s].scaled(c) if s in rules else LinearForm(((s, c),)))
        return out

    def is_zero(self) -> bool:
        return all(c.is_zero() for _, c in self.items)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.items)

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        missing = [s for s in self.symbols if s not in values]
        if missing:
            raise ExpansionError(f"no value bound for {', '.join(missing)}")
        return sum((complex(c) * complex(values[s]) for s, c in self.items), 0j)

    def __str__(self) -> str:
        if not self.items:
            return "0"
        return " + ".join(f"{c}*{s}" for s, c in self.items)


def sym_q(order: int) -> str:
    return f"q_o^({order})(0)"


def sym_g(index: int, order: int) -> str:
    return f"g_{index}^({order})(0)"


def sym_jump(order: int, where: float) -> str:
    return f"[q_o^({order})]({where!r})"


# ---------------------------------------------------------------------------
# exact term tables of the three worked examples


@dataclass(frozen=True)
class _Image:
    component: int
    weight: Cyclo
    beta: Cyclo


@dataclass(frozen=True)
class _Boundary:
    component: int
    weight: Cyclo
    power: int
    index: int


@dataclass(frozen=True)
class Example:
    name: str
    coeffs: tuple[float, ...]
    leading: int
    components: int
    terms: tuple


EXAMPLES = {
    "LS": Example("LS", (0.0, 1.0), 1, 1, (
        _Image(1, -ONE, -ONE),
        _Boundary(1, Cyclo.of(2), 1, 0),
    )),
    "Airy1": Example("Airy1", (0.0, 0.0, -1.0), -1, 1, (
        _Boundary(1, Cyclo.of(-3), 2, 0),
        _Image(1, ALPHA, ALPHA),
        _Image(1, ALPHA**2, ALPHA**2),
    )),
    "Airy2": Example("Airy2", (0.0, 0.0, 1.0), 1, 2, (
        _Image(2, -ONE, ALPHA),
        _Boundary(2, ONE - ALPHA**2, 2, 0),
        _Boundary(2, I_UNIT * (ALPHA - 1), 1, 1),
        _Image(1, -ONE, ALPHA**2),
        _Boundary(1, ONE - ALPHA, 2, 0),
        _Boundary(1, I_UNIT * (ALPHA**2 - 1), 1, 1),
    )),
}


def example_for(disp: Dispersion) -> Example:
    for ex in EXAMPLES.values():
        if disp.coeffs == ex.coeffs:
            return ex
    raise ExpansionError(f"local expansions cover k^2 and +-k^3 only, got {disp.label()}")


def _degree(ex: Example) -> int:
    # coefficients start at k^1
    return len(ex.coeffs)


def corner_initial_coefficients(ex: Example, order: int) -> dict[int, Cyclo]:
    """Per component, the coefficient of ``q_o^(order)(0) I_{order, j}``."""
    out = {j: ONE for j in range(1, ex.components + 1)}  # real line, t > 0
    for term in ex.terms:
        if isinstance(term, _Image):
            out[term.component] = out[term.component] + term.weight * term.beta ** (-(order + 1))
    return out


def corner_boundary_coefficients(ex: Example, max_pole: int):
    """``(component, index, order, pole, coefficient)`` for ``g_index^(order)(0)``.

    The special function is ``I_{pole, component}``; only poles up to
    ``max_pole`` are listed.
    """
    n = _degree(ex)
    w = Cyclo.of(ex.leading)
    out = []
    for term in ex.terms:
        if not isinstance(term, _Boundary):
            continue
        order = 0
        while True:
            pole = n * (order + 1) - term.power - 1
            if pole > max_pole:
                break
            coef = term.weight * I_UNIT ** (pole + 1) / (I_UNIT * w) ** (order + 1) * (-1) ** (order + 1)
            out.append((term.component, term.index, order, pole, coef))
            order += 1
    return out


def compatibility_factor(ex: Example, order: int) -> Cyclo:
    """``g_j^(order)(0) = factor * q_o^(j + n order)(0)`` for compatible data."""
    n = _degree(ex)
    return (-I_UNIT * ex.leading * (-I_UNIT) ** n) ** order


# ---------------------------------------------------------------------------
# expansions


@dataclass(frozen=True)
class ExpansionTerm:
    """``coefficient * I_key(x - shift, t - delay)``."""

    coefficient: LinearForm
    key: SpecialFnKey
    shift: complex = 0.0
    delay: float = 0.0


@dataclass(frozen=True)
class Expansion:
    """Local approximation about ``center = (s, tau)``.

    ``constant`` and ``slope`` are numbers; ``constant_form`` and
    ``slope_form`` are symbolic and use ``values``.  The linear part is
    ``slope * (x - s)``.
    """

    center: tuple[float, float]
    terms: tuple[ExpansionTerm, ...] = ()
    constant: complex = 0j
    slope: complex = 0j
    constant_form: LinearForm = field(default_factory=LinearForm)
    slope_form: LinearForm = field(default_factory=LinearForm)
    error: tuple[float, float] = (0.5, 0.25)
    values: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.error[0] > 0 and self.error[1] > 0):
            raise ExpansionError("error exponents must be positive")
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "values", dict(self.values))

    def bind(self, **values: complex) -> "Expansion":
        merged = dict(self.values)
        merged.update(values)
        return Expansion(self.center, self.terms, self.constant, self.slope, self.constant_form,
                         self.slope_form, self.error, merged)

    def evaluate_detailed(self, xs, t: float, settings: QuadratureSettings | None = None):
        """Values, error estimates and worst regime label at real ``xs``."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        s = self.center[0]
        vals = np.full(xs.shape, self.constant + self.constant_form.evaluate(self.values), dtype=complex)
        vals += (self.slope + self.slope_form.evaluate(self.values)) * (xs - s)
        errs = np.zeros(xs.shape)
        rank = {"exact": 0, "quadrature": 1, "asymptotic": 2}
        level = np.zeros(xs.shape, dtype=int)
        for term in self.terms:
            c = term.coefficient.evaluate(self.values)
            if c == 0:
                continue
            v, e, r = special_eval_many(term.key, xs - term.shift, t - term.delay, settings, return_regime=True)
            vals += c * v
            errs += abs(c) * e
            level = np.maximum(level, [rank[x] for x in r])
        names = np.array(["exact", "quadrature", "asymptotic"], dtype=object)
        return vals, errs, names[level]

    def evaluate(self, x, t: float, settings: QuadratureSettings | None = None):
        out = self.evaluate_detailed(x, t, settings)[0]
        return out if np.ndim(x) else complex(out[0])

    def rows(self) -> list[dict[str, str]]:
        """Flat description for reports."""
        rows = []
        for term in self.terms:
            c = term.coefficient.evaluate(self.values) if set(term.coefficient.symbols) <= set(self.values) else None
            rows.append({
                "basis": f"I[m={term.key.m},{term.key.component}](x-{term.shift!r},t-{term.delay!r})",
                "symbolic": str(term.coefficient),
                "value": "" if c is None else repr(complex(c)),
            })
        return rows


# ---------------------------------------------------------------------------
# local solutions of the worked cases


_QLOC_DATA = {
    "LS": ("q0", "g0"),
    "Airy1": ("q0", "g0"),
    "Airy2-first": ("q0", "dq0", "g0", "g1"),
    "Airy2-second": ("q0", "dq0", "g0", "g1"),
}


def qloc(example: str, **data: complex) -> Expansion:
    """Exact local solution near the corner.

    ``data`` takes ``q0 = q_o(0)``, ``g0 = g_0(0)`` and for the Airy 2
    cases ``dq0 = q_o'(0)`` and ``g1 = g_1(0)``.
    """
    if example not in _QLOC_DATA:
        raise ExpansionError(f"unknown example {example!r}; choose from {', '.join(_QLOC_DATA)}")
    need = _QLOC_DATA[example]
    missing = [k for k in need if data.get(k) is None]
    if missing:
        raise ExpansionError(f"{example} needs data values {', '.join(missing)}")
    extra = set(data) - set(need)
    if extra:
        raise ExpansionError(f"unexpected data values {', '.join(sorted(extra))}")
    ex = EXAMPLES[example.split("-")[0]]
    disp = Dispersion(ex.coeffs)
    values = {
        sym_q(0): data["q0"],
        sym_g(0, 0): data["g0"],
    }
    q0 = LinearForm.single(sym_q(0))
    gap0 = q0 - LinearForm.single(sym_g(0, 0))
    terms = []
    for j, coef in corner_initial_coefficients(ex, 0).items():
        terms.append(ExpansionTerm(gap0.scaled(coef), SpecialFnKey(disp, 0, j)))
    slope = LinearForm()
    if ex.name == "Airy2":
        values[sym_q(1)] = data["dq0"]
        values[sym_g(1, 0)] = data["g1"]
        gap1 = LinearForm.single(sym_q(1)) - LinearForm.single(sym_g(1, 0))
        for j, coef in corner_initial_coefficients(ex, 1).items():
            terms.append(ExpansionTerm(gap1.scaled(coef), SpecialFnKey(disp, 1, j)))
        slope = LinearForm.single(sym_q(1))
        error = (1.5, 0.5)
    else:
        error = (0.5, 0.5 / _degree(ex))
    return Expansion((0.0, 0.0), tuple(terms), constant_form=q0, slope_form=slope, error=error,
                     values=values)


def residual_class(m: int, n: int) -> tuple[float, float]:
    return (m + 0.5, (m + 0.5) / n)


# ---------------------------------------------------------------------------
# zero boundary data


def _value_at(q: PiecewiseData, order: int, x: float, side: str) -> complex:
    return complex(q.derivative(order, x, side))


def expansion_zero_bc(spec: IBVPSpec, s: float, depth: int = 1) -> Expansion:
    """Expansion about ``(s, 0)`` for vanishing boundary data.

    ``depth`` 1 keeps the ``I_0`` terms; depth 2 adds the ``I_1`` terms and
    a linear part (Airy 2 only needs it, but all examples accept it).
    """
    ex = example_for(spec.dispersion)
    if any(not g.is_zero for g in spec.boundary):
        raise ExpansionError("expansion_zero_bc needs zero boundary data")
    if depth not in (1, 2):
        raise ExpansionError("depth must be 1 or 2")
    if s < 0:
        raise ExpansionError("expansion centre must satisfy s >= 0")
    q = spec.initial
    disp = spec.dispersion
    values: dict[str, complex] = {}
    terms = []
    for i in range(depth):
        values[sym_q(i)] = _value_at(q, i, 0.0, "right")
        for j, coef in corner_initial_coefficients(ex, i).items():
            terms.append(ExpansionTerm(LinearForm.single(sym_q(i), coef), SpecialFnKey(disp, i, j)))
    # a jump enters through the real line and through every image; the
    # images sit at complex shifts for the cubic cases and are then tiny
    images = [tm for tm in ex.terms if isinstance(tm, _Image)]
    jumps = {i: dict(q.jumps(i)) for i in range(depth)}
    for i in range(depth):
        for xm, J in jumps[i].items():
            values[sym_jump(i, xm)] = J
            terms.append(ExpansionTerm(LinearForm.single(sym_jump(i, xm)), SpecialFnKey(disp, i, "sum"), xm))
            for im in images:
                coef = im.weight * im.beta ** (-(i + 1))
                terms.append(ExpansionTerm(LinearForm.single(sym_jump(i, xm), coef),
                                           SpecialFnKey(disp, i, im.component), complex(im.beta) * xm))
    terms = [tm for tm in terms if tm.coefficient.evaluate(values) != 0]
    # real-line integral at t = 0: the step/ramp values of I^C at t = 0
    const = _value_at(q, 0, s, "right")
    slope = 0j
    for xm, J in jumps[0].items():
        if xm > s:
            const += J
    if depth == 2:
        slope = _value_at(q, 1, s, "right")
        for xm, J in jumps[1].items():
            if xm > s:
                const -= (xm - s) * J
                slope += J
    return Expansion((float(s), 0.0), tuple(terms), const, slope, error=residual_class(depth - 1, _degree(ex)),
                     values=values)


# ---------------------------------------------------------------------------
# zero initial data


def _leading_boundary_terms(ex: Example, disp: Dispersion) -> list[ExpansionTerm]:
    out = []
    for comp, index, order, pole, coef in corner_boundary_coefficients(ex, _degree(ex)):
        if order == 0:
            out.append(ExpansionTerm(LinearForm.single(sym_g(index, 0), coef), SpecialFnKey(disp, pole, comp)))
    return out


def _boundary_part(spec: IBVPSpec, xs: np.ndarray, tau: float, settings: QuadratureSettings) -> np.ndarray:
    """Full boundary-driven solution formula at ``(xs, tau)``, including ``x = 0``."""
    from .utm_solver import SolutionEvaluator, closed_form_atoms, closed_form_remainders, evaluate_atoms

    ev = SolutionEvaluator(spec, settings=settings)
    vals = evaluate_atoms(closed_form_atoms(ev, tau), xs, settings)[0]
    return vals + closed_form_remainders(ev, xs, tau)[0]


def expansion_zero_ic(spec: IBVPSpec, s: float, tau: float, settings: QuadratureSettings | None = None,
                      step: float = 1e-3) -> Expansion:
    """Expansion about ``(s, tau)`` for vanishing initial data.

    The leading terms carry ``g_j(0)``; the constant collects every other
    contribution of the solution formula evaluated at ``(s, tau)``.  For
    Airy 2 the linear part comes from a one-sided second-order difference
    of that constant with spacing ``step``.
    """
    ex = example_for(spec.dispersion)
    if not spec.initial.is_zero:
        raise ExpansionError("expansion_zero_ic needs zero initial data")
    if s < 0 or not 0 <= tau <= spec.T:
        raise ExpansionError("centre must satisfy s >= 0 and 0 <= tau <= T")
    settings = settings or QuadratureSettings()
    disp = spec.dispersion
    values = {sym_g(j, 0): _value_at(g, 0, 0.0, "right") for j, g in enumerate(spec.boundary)}
    terms = [tm for tm in _leading_boundary_terms(ex, disp) if tm.coefficient.evaluate(values) != 0]
    error = residual_class(1 if ex.name == "Airy2" else 0, _degree(ex))
    if not terms and all(g.is_zero for g in spec.boundary):
        return Expansion((float(s), float(tau)), (), error=error, values=values)
    if tau == 0:
        return Expansion((float(s), 0.0), tuple(terms), error=error, values=values)

    nodes = np.array([s, s + step, s + 2 * step]) if ex.name == "Airy2" else np.array([s])
    full = _boundary_part(spec, nodes, tau, settings)
    lead = np.zeros(nodes.shape, dtype=complex)
    for tm in terms:
        lead += tm.coefficient.evaluate(values) * special_eval_many(tm.key, nodes, tau, settings)[0]
    rest = full - lead
    slope = 0j
    if ex.name == "Airy2":
        slope = (-3 * rest[0] + 4 * rest[1] - rest[2]) / (2 * step)
    return Expansion((float(s), float(tau)), tuple(terms), complex(rest[0]), complex(slope), error=error,
                     values=values)


# ---------------------------------------------------------------------------
# cancellation at the corner


@dataclass(frozen=True)
class Cancellation:
    expansion: Expansion
    decay: int
    coefficients: Mapping[tuple[int, int], LinearForm]
    conditions: tuple[tuple[str, bool], ...]


def corner_table(ex: Example, max_pole: int) -> dict[tuple[int, int], LinearForm]:
    """Symbolic coefficient of ``I_{pole, j}`` in the combined corner expansion."""
    table: dict[tuple[int, int], LinearForm] = {}

    def add(key, form):
        table[key] = table.get(key, LinearForm()) + form

    for i in range(max_pole + 1):
        for j, coef in corner_initial_coefficients(ex, i).items():
            add((i, j), LinearForm.single(sym_q(i), coef))
    for comp, index, order, pole, coef in corner_boundary_coefficients(ex, max_pole):
        add((pole, comp), LinearForm.single(sym_g(index, order), coef))
    return table


def cancel_compatible(spec: IBVPSpec, m: int, tol: float = 1e-12) -> Cancellation:
    """Combine the corner terms up to pole order ``m`` and cancel exactly.

    Every compatibility condition that the data satisfies (to ``tol``) is
    substituted symbolically; coefficients that become the zero element are
    removed.  ``decay`` is the lowest pole order that survives (``m + 1``
    if none does).
    """
    ex = example_for(spec.dispersion)
    n = _degree(ex)
    disp = spec.dispersion
    table = corner_table(ex, m)
    rules: dict[str, LinearForm] = {}
    conditions = []
    values: dict[str, complex] = {}
    for i in range(m + 1):
        values[sym_q(i)] = _value_at(spec.initial, i, 0.0, "right")
    for j, g in enumerate(spec.boundary):
        order = 0
        while j + n * order <= m:
            qi = j + n * order
            factor = compatibility_factor(ex, order)
            gv = _value_at(g, order, 0.0, "right")
            values[sym_g(j, order)] = gv
            holds = abs(gv - complex(factor) * values[sym_q(qi)]) <= tol * max(1.0, abs(gv))
            conditions.append((f"{sym_g(j, order)} = {factor} * {sym_q(qi)}", bool(holds)))
            if holds:
                rules[sym_g(j, order)] = LinearForm.single(sym_q(qi), factor)
            order += 1
    reduced = {key: form.substitute(rules) for key, form in table.items()}
    survivors = {key: form for key, form in reduced.items() if not form.is_zero()}
    decay = min((key[0] for key in survivors), default=m + 1)
    terms = tuple(ExpansionTerm(form, SpecialFnKey(disp, pole, comp))
                  for (pole, comp), form in sorted(survivors.items()))
    exp = Expansion((0.0, 0.0), terms, error=residual_class(decay, n), values=values)
    return Cancellation(exp, decay, reduced, tuple(conditions))


# ---------------------------------------------------------------------------
# residual orders


@dataclass(frozen=True)
class ResidualFit:
    predicted: float
    slope: float
    halfwidth: float
    saturated: bool

    @property
    def meets_prediction(self) -> bool:
        return self.saturated or self.slope >= self.predicted - 0.1


def scaled_distance(x, t, s: float, tau: float, n: int):
    """``|x - s| + |t - tau|^(1/n)``, the distance matched to the x-t scaling."""
    return np.abs(np.asarray(x) - s) + np.abs(np.asarray(t) - tau) ** (1.0 / n)


def residual_order(m: int, n: int) -> float:
    """Predicted exponent of :func:`scaled_distance` in the residual."""
    if m < 0 or n < 2:
        raise ExpansionError("need m >= 0 and n >= 2")
    return m + 0.5


def fit_residual(hs, residuals, predicted: float, floor: float = 1e-13) -> ResidualFit:
    """Log-log slope of residuals against a scale ``h`` (scaled distance or ``t``).

    Residuals all below ``floor`` mean exact agreement: reported saturated.
    """
    from .oracles import rate_fit

    hs = np.asarray(hs, dtype=float)
    res = np.abs(np.asarray(residuals))
    if hs.size < 4 or res.size != hs.size:
        raise ExpansionError("fitting needs at least 4 matching samples")
    if np.all(res <= floor):
        return ResidualFit(predicted, math.nan, math.nan, True)
    order = np.argsort(-hs)
    fit = rate_fit(list(zip(hs[order], np.maximum(res[order], floor))))
    return ResidualFit(predicted, fit.slope, fit.halfwidth, fit.saturated)
