"""Command-line front end.

    utm eval --config run.json
    utm scenario airy2-discdata --out results/ [--t1 0.25] [--svg] [--dry-run]
    utm special --omega k^3 --m 0 --component 1 --points pts.csv
    utm verify anchors|oracles|rates|weakform|all
    utm converge --config run.json

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dispersion import Dispersion, DispersionError
from .oscillatory_quadrature import QuadratureSettings
from .piecewise_data import DataError, IBVPSpec, Piece, PiecewiseData
from .special_functions import SpecialDomainError, SpecialFnKey, special_eval_many
from .utm_solver import METHODS, FieldSample, SolutionEvaluator, SolverError, disc_data_spec, evaluate_grid

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
CSV_HEADER = ("x", "t", "re_q", "im_q", "err_est", "regime")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


# ---------------------------------------------------------------------------
# configuration


_TOP_KEYS = {"dispersion", "initial", "boundary", "T", "grid", "method", "quadrature", "outputs", "workers"}
_PIECE_KEYS = {"from", "to", "kind", "coeffs", "rate"}
_AXIS_KEYS = {"start", "stop", "count", "spacing", "values"}
_OUTPUT_KEYS = {"csv", "svg", "report"}
_QUAD_KEYS = {"tol", "n0", "max_doublings", "safety", "max_depth"}


@dataclass(frozen=True)
class ScenarioConfig:
    spec: IBVPSpec
    xs: tuple[float, ...]
    ts: tuple[float, ...]
    method: str = "auto"
    settings: QuadratureSettings = field(default_factory=QuadratureSettings)
    csv: str | None = None
    svg: str | None = None
    report: str | None = None
    workers: int = 1


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _check_keys(obj, allowed: set[str], where: str, text: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object", _line_of(text, where.split(".")[-1]))
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in {where}; allowed: {', '.join(sorted(allowed))}",
                              _line_of(text, k))


def _number(v, what: str, text: str, key: str) -> complex:
    try:
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TypeError
        return complex(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: {v!r} is not a number", _line_of(text, key)) from None


def _real(v, what: str, text: str, key: str) -> float:
    if v in ("inf", "infinity"):
        return math.inf
    z = _number(v, what, text, key)
    if z.imag:
        raise ConfigError(f"{what} must be real", _line_of(text, key))
    return z.real


def _coeff(z: complex):
    return z.real if z.imag == 0 else z


def _parse_data(obj, where: str, text: str) -> PiecewiseData:
    if obj == "zero":
        return PiecewiseData.zero()
    _check_keys(obj, {"pieces"}, where, text)
    pieces = obj.get("pieces")
    if not isinstance(pieces, list) or not pieces:
        raise ConfigError(f"{where}.pieces must be a non-empty list", _line_of(text, "pieces"))
    out = []
    for i, p in enumerate(pieces):
        label = f"{where}.pieces[{i}]"
        _check_keys(p, _PIECE_KEYS, label, text)
        for req in ("from", "to", "kind"):
            if req not in p:
                raise ConfigError(f"{label} is missing {req!r}", _line_of(text, "pieces"))
        a = _real(p["from"], f"{label}.from", text, "from")
        b = _real(p["to"], f"{label}.to", text, "to")
        kind = p["kind"]
        coeffs = tuple(_coeff(_number(c, f"{label}.coeffs", text, "coeffs")) for c in p.get("coeffs", [0.0]))
        try:
            if kind == "poly":
                if "rate" in p:
                    raise ConfigError(f"{label}: 'rate' only applies to polyexp pieces", _line_of(text, "rate"))
                out.append(Piece.poly(a, b, coeffs))
            elif kind == "polyexp":
                rate = _real(p.get("rate", 0.0), f"{label}.rate", text, "rate")
                out.append(Piece.polyexp(a, b, coeffs, rate))
            else:
                raise ConfigError(f"{label}.kind must be 'poly' or 'polyexp', got {kind!r}", _line_of(text, "kind"))
        except DataError as exc:
            raise ConfigError(f"{label}: {exc}", _line_of(text, "pieces")) from None
    try:
        return PiecewiseData(tuple(out))
    except DataError as exc:
        raise ConfigError(f"{where}: {exc}", _line_of(text, where.split(".")[0].split("[")[0])) from None


def _parse_axis(obj, name: str, text: str, allow_log: bool) -> tuple[float, ...]:
    _check_keys(obj, _AXIS_KEYS, f"grid.{name}", text)
    if "values" in obj:
        if set(obj) - {"values"}:
            raise ConfigError(f"grid.{name}: 'values' excludes the other keys", _line_of(text, "values"))
        vals = [_real(v, f"grid.{name}.values", text, "values") for v in obj["values"]]
    else:
        for req in ("start", "stop", "count"):
            if req not in obj:
                raise ConfigError(f"grid.{name} is missing {req!r}", _line_of(text, name))
        lo = _real(obj["start"], f"grid.{name}.start", text, "start")
        hi = _real(obj["stop"], f"grid.{name}.stop", text, "stop")
        count = obj["count"]
        if not isinstance(count, int) or count < 1:
            raise ConfigError(f"grid.{name}.count must be a positive integer", _line_of(text, "count"))
        spacing = obj.get("spacing", "linear")
        if spacing == "linear":
            vals = list(np.linspace(lo, hi, count))
        elif spacing == "log" and allow_log:
            if not (lo > 0 and hi > 0):
                raise ConfigError(f"grid.{name}: log spacing needs positive ends", _line_of(text, "spacing"))
            vals = list(np.geomspace(lo, hi, count))
        else:
            raise ConfigError(f"grid.{name}.spacing must be 'linear'{' or log' if allow_log else ''}",
                              _line_of(text, "spacing"))
    if not vals:
        raise ConfigError(f"grid.{name} is empty", _line_of(text, name))
    return tuple(float(v) for v in vals)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    """Validate a JSON configuration; raises :class:`ConfigError` with a line number."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    _check_keys(raw, _TOP_KEYS, "config", text)
    for req in ("dispersion", "initial", "boundary", "T", "grid"):
        if req not in raw:
            raise ConfigError(f"missing required key {req!r}", 1)
    d = raw["dispersion"]
    try:
        if isinstance(d, str):
            disp = Dispersion.parse(d)
        elif isinstance(d, list):
            disp = Dispersion(tuple(float(_real(c, "dispersion", text, "dispersion")) for c in d))
        else:
            raise DispersionError("dispersion must be a string like 'k^3' or a coefficient list")
    except (DispersionError, ValueError) as exc:
        raise ConfigError(f"dispersion: {exc}", _line_of(text, "dispersion")) from None
    T = _real(raw["T"], "T", text, "T")
    if not T > 0:
        raise ConfigError("T must be positive", _line_of(text, "T"))
    initial = _parse_data(raw["initial"], "initial", text)
    if not isinstance(raw["boundary"], list):
        raise ConfigError("boundary must be a list of data", _line_of(text, "boundary"))
    boundary = tuple(_parse_data(g, f"boundary[{j}]", text) for j, g in enumerate(raw["boundary"]))
    try:
        spec = IBVPSpec(disp, initial, boundary, T)
    except (DataError, DispersionError) as exc:
        raise ConfigError(str(exc), _line_of(text, "boundary")) from None
    grid = raw["grid"]
    _check_keys(grid, {"x", "t"}, "grid", text)
    if "x" not in grid or "t" not in grid:
        raise ConfigError("grid needs both 'x' and 't'", _line_of(text, "grid"))
    xs = _parse_axis(grid["x"], "x", text, allow_log=False)
    ts = _parse_axis(grid["t"], "t", text, allow_log=True)
    if min(xs) <= 0:
        raise ConfigError("grid.x values must be positive", _line_of(text, "x"))
    if min(ts) <= 0 or max(ts) > T:
        raise ConfigError(f"grid.t values must lie in (0, T = {T}]", _line_of(text, "t"))
    method = raw.get("method", "auto")
    if method != "auto" and method not in METHODS:
        raise ConfigError(f"method must be 'auto' or one of {', '.join(METHODS)}", _line_of(text, "method"))
    q = raw.get("quadrature", {})
    _check_keys(q, _QUAD_KEYS, "quadrature", text)
    try:
        settings = QuadratureSettings(**q)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"quadrature: {exc}", _line_of(text, "quadrature")) from None
    out = raw.get("outputs", {})
    _check_keys(out, _OUTPUT_KEYS, "outputs", text)
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer", _line_of(text, "workers"))
    cfg = ScenarioConfig(spec, xs, ts, method, settings, out.get("csv"), out.get("svg"), out.get("report"), workers)
    try:
        SolutionEvaluator(spec, method, settings)
    except (SolverError, DataError) as exc:
        raise ConfigError(str(exc), _line_of(text, "method") or _line_of(text, "dispersion")) from None
    return cfg


def load_config(path: str) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, path)


# ---------------------------------------------------------------------------
# output


def format_csv(samples: list[FieldSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in sorted(samples, key=lambda s: (s.t, s.x)):
        w.writerow([repr(float(s.x)), repr(float(s.t)), repr(float(s.value.real)), repr(float(s.value.imag)),
                    repr(float(s.error)), s.regime])
    failed = [s for s in samples if not s.ok]
    if failed:
        buf.write(f"# partial: {len(failed)} of {len(samples)} samples failed; first: {failed[0].message}\n")
    return buf.getvalue()


def render_svg(samples: list[FieldSample], title: str, width: int = 720, height: int = 420) -> str:
    """Static polylines of ``Re q`` against ``x``, one per time level."""
    good = [s for s in samples if s.ok]
    if not good:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"></svg>\n'
    xs = np.array([s.x for s in good])
    ys = np.array([s.value.real for s in good])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 40

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="{pad}" y="20" font-size="14">{title}</text>',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="#888"/>',
             f'<text x="{pad}" y="{height - 10}" font-size="11">x: {x0:.3g} .. {x1:.3g}   '
             f'Re q: {y0:.3g} .. {y1:.3g}</text>']
    for i, t in enumerate(sorted({s.t for s in good})):
        level = sorted((s for s in good if s.t == t), key=lambda s: s.x)
        pts = " ".join(f"{px(s.x):.2f},{py(s.value.real):.2f}" for s in level)
        colour = palette[i % len(palette)]
        lines.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}">'
                     f'<title>t = {t!r}</title></polyline>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _write(path: str | None, content: str):
    if path is None:
        sys.stdout.write(content)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(content)


# ---------------------------------------------------------------------------
# commands


def run_eval(cfg: ScenarioConfig) -> list[FieldSample]:
    ev = SolutionEvaluator(cfg.spec, cfg.method, cfg.settings)
    return evaluate_grid(ev, cfg.xs, cfg.ts, workers=cfg.workers)


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    if args.csv:
        cfg = replace(cfg, csv=args.csv)
    samples = run_eval(cfg)
    _write(cfg.csv, format_csv(samples))
    if cfg.svg:
        _write(cfg.svg, render_svg(samples, Path(args.config).stem))
    return EXIT_OK if all(s.ok for s in samples) else EXIT_NUMERIC


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str  # "qloc" or "discdata"
    params: dict
    xs: tuple[float, ...]
    ts: tuple[float, ...]


def _snapshots(scale: float, ratio: float, js) -> tuple[float, ...]:
    return tuple(scale * ratio**j for j in js)


def build_scenario(name: str, t1: float = 0.25) -> Scenario:
    if name == "ls-corner":
        return Scenario(name, "qloc", {"example": "LS", "q0": 1.0, "g0": -1.0},
                        tuple(np.linspace(0.0, 5.0, 201)), _snapshots(1 / 20, 1 / 6, range(4)))
    if name == "airy1-corner":
        return Scenario(name, "qloc", {"example": "Airy1", "q0": 1.0, "g0": -1.0},
                        tuple(np.linspace(0.0, 15.0, 301)), _snapshots(1 / 20, 1 / 6, (0, 1, 2, 5)))
    if name == "airy2-corner1":
        return Scenario(name, "qloc", {"example": "Airy2-first", "q0": 1.0, "dq0": -1.0, "g0": -1.0, "g1": -1.0},
                        tuple(np.linspace(0.0, 0.5, 201)), _snapshots(1 / 300, 1 / 8, range(6)))
    if name == "airy2-corner2":
        return Scenario(name, "qloc", {"example": "Airy2-second", "q0": 1.0, "dq0": 0.0, "g0": 1.0, "g1": -1.0},
                        tuple(np.linspace(0.0, 15.0, 301)), _snapshots(1 / 10, 1 / 8, range(5)))
    if name == "airy2-discdata":
        if not 0 < t1 < 1:
            raise ConfigError("t1 must lie in (0, 1)")
        return Scenario(name, "discdata", {"x1": 1.0, "x2": 2.0, "t1": t1, "C1": 1.0, "C2": -1.0, "T": 1.0},
                        tuple(np.linspace(0.05, 15.0, 300)), _snapshots(1 / 10, 1 / 19, (1, 2, 3, 5)))
    raise KeyError(name)


SCENARIOS = ("ls-corner", "airy1-corner", "airy2-corner1", "airy2-corner2", "airy2-discdata")


def run_scenario(sc: Scenario, settings: QuadratureSettings | None = None) -> list[FieldSample]:
    settings = settings or QuadratureSettings()
    if sc.kind == "discdata":
        p = sc.params
        spec = disc_data_spec(p["x1"], p["x2"], p["t1"], p["C1"], p["C2"], p["T"])
        return evaluate_grid(SolutionEvaluator(spec, settings=settings), sc.xs, sc.ts)
    from .local_expansions import qloc

    data = {k: v for k, v in sc.params.items() if k != "example"}
    exp = qloc(sc.params["example"], **data)
    out = []
    xs = np.array(sc.xs)
    for t in sorted(sc.ts):
        v, e, r = exp.evaluate_detailed(xs, t, settings)
        out += [FieldSample(float(x), float(t), complex(v[i]), float(e[i]), str(r[i])) for i, x in enumerate(xs)]
    return out


def cmd_scenario(args) -> int:
    if args.name not in SCENARIOS:
        print(f"unknown scenario {args.name!r}; valid names: {', '.join(SCENARIOS)}", file=sys.stderr)
        return EXIT_USAGE
    sc = build_scenario(args.name, args.t1)
    if args.dry_run:
        resolved = {"name": sc.name, "kind": sc.kind, "params": sc.params,
                    "x": {"start": sc.xs[0], "stop": sc.xs[-1], "count": len(sc.xs)}, "t": list(sc.ts)}
        print(json.dumps(resolved, indent=2))
        return EXIT_OK
    samples = run_scenario(sc)
    out = Path(args.out) if args.out else None
    _write(str(out / f"{sc.name}.csv") if out else None, format_csv(samples))
    if args.svg:
        _write(str((out or Path(".")) / f"{sc.name}.svg"), render_svg(samples, sc.name))
    return EXIT_OK if all(s.ok for s in samples) else EXIT_NUMERIC


def _read_points(path: str) -> list[tuple[complex, float]]:
    pts = []
    for lineno, row in enumerate(csv.reader(Path(path).read_text().splitlines()), start=1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        if len(row) != 2:
            raise ConfigError(f"expected 'x,t' per line, got {len(row)} fields", lineno)
        try:
            pts.append((complex(row[0].replace(" ", "")), float(row[1])))
        except ValueError:
            if lineno == 1:
                continue  # header
            raise ConfigError(f"cannot parse {','.join(row)!r}", lineno) from None
    if not pts:
        raise ConfigError("no points given")
    return pts


def cmd_special(args) -> int:
    try:
        disp = Dispersion.parse(args.omega)
        comp = args.component if args.component in ("sum", "C") else int(args.component)
        key = SpecialFnKey(disp, args.m, comp)
    except (DispersionError, SpecialDomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    pts = _read_points(args.points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("re_x", "im_x", "t", "re_I", "im_I", "err_est", "regime"))
    status = EXIT_OK
    for x, t in pts:
        try:
            v, e, r = special_eval_many(key, [x], t, return_regime=True)
            row = (v[0], e[0], r[0])
        except (SpecialDomainError, ValueError, ArithmeticError) as exc:
            print(f"error at x={x!r}, t={t!r}: {exc}", file=sys.stderr)
            row = (complex("nan+nanj"), math.inf, "failed")
            status = EXIT_NUMERIC
        w.writerow([repr(x.real), repr(x.imag), repr(t), repr(float(row[0].real)), repr(float(row[0].imag)),
                    repr(float(row[1])), row[2]])
    _write(args.out, buf.getvalue())
    return status


def cmd_verify(args) -> int:
    from .verification import SUITES, run_suite

    names = [s.strip() for s in args.suite.split(",") if s.strip()]
    if not names:
        print(f"empty suite selection; choose from {', '.join(SUITES)} or all", file=sys.stderr)
        return EXIT_USAGE
    if names == ["all"]:
        names = list(SUITES)
    bad = [n for n in names if n not in SUITES]
    if bad:
        print(f"unknown suite {bad[0]!r}; choose from {', '.join(SUITES)} or all", file=sys.stderr)
        return EXIT_USAGE
    rows = []
    for n in names:
        rows += run_suite(n)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("check", "expected", "actual", "tol", "pass"))
    for r in rows:
        w.writerow((r.check, r.expected, r.actual, repr(r.tol), "true" if r.passed else "false"))
    _write(args.report, buf.getvalue())
    return EXIT_OK if all(r.passed for r in rows) else EXIT_VERIFY


def cmd_converge(args) -> int:
    """Re-evaluate the grid at tightening quadrature tolerances."""
    cfg = load_config(args.config)
    tols = [1e-6, 1e-8, 1e-10, 1e-12]
    runs = []
    for tol in tols:
        st = replace(cfg.settings, tol=tol)
        runs.append(run_eval(replace(cfg, settings=st)))
    ref = np.array([s.value for s in sorted(runs[-1], key=lambda s: (s.t, s.x))])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("tol", "max_abs_diff", "max_err_est", "failed"))
    status = EXIT_OK
    for tol, run in zip(tols, runs):
        run = sorted(run, key=lambda s: (s.t, s.x))
        vals = np.array([s.value for s in run])
        ok = np.isfinite(vals) & np.isfinite(ref)
        diff = float(np.max(np.abs(vals[ok] - ref[ok]))) if ok.any() else math.nan
        est = max((s.error for s in run if s.ok), default=math.nan)
        failed = sum(not s.ok for s in run)
        if failed:
            status = EXIT_NUMERIC
        w.writerow((repr(tol), repr(diff), repr(float(est)), failed))
    _write(args.out or cfg.report, buf.getvalue())
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="utm", description="Half-line dispersive IBVP solver.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate a configured problem on a grid")
    e.add_argument("--config", required=True)
    e.add_argument("--csv", help="override outputs.csv")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("scenario", help="run a built-in figure scenario")
    s.add_argument("name")
    s.add_argument("--out", help="output directory (default: CSV to stdout)")
    s.add_argument("--t1", type=float, default=0.25, help="switch-off time of the Dirichlet datum (airy2-discdata)")
    s.add_argument("--svg", action="store_true", help="also write an SVG plot")
    s.add_argument("--dry-run", action="store_true", help="print the resolved configuration only")
    s.set_defaults(func=cmd_scenario)

    sp = sub.add_parser("special", help="evaluate a special function at listed points")
    sp.add_argument("--omega", required=True, help="dispersion, e.g. 'k^3' or '0,0,1'")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--component", default="1", help="1-based index, 'sum' or 'C'")
    sp.add_argument("--points", required=True, help="CSV file of x,t pairs (x may be complex)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_special)

    v = sub.add_parser("verify", help="run verification checks")
    v.add_argument("suite", help="anchors, oracles, rates, weakform, all, or a comma list")
    v.add_argument("--report", help="report CSV path (default stdout)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("converge", help="quadrature-tolerance convergence study")
    c.add_argument("--config", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_converge)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        where = getattr(args, "config", None) or getattr(args, "points", None) or "input"
        loc = f"{where}:{exc.line}: " if exc.line else f"{where}: "
        print(f"{loc}{exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, DataError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
