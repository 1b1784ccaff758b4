"""Command-line front end: classify | trace | verify | portrait | oracle.

stdout carries exactly one JSON document (or CSV for ``trace`` without
``-o``); diagnostics go to stderr.  Exit codes: 0 success, 1 error or
failed check, 2 degenerate singular point.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import curves as cv
from .classify import classify_singular_point, table1_case
from .errors import DegenerateError, PleatlabError
from .lift import ImplicitOde
from .nflab import check_integral_curve, make_oracle, oracle_integral_curve
from .portrait import PortraitSpec, default_density, render
from .rk45 import IntegSpec

EXIT_OK, EXIT_ERROR, EXIT_DEGENERATE = 0, 1, 2


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1: exit code 2 is reserved for degenerate points."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def jsonable(obj):
    """Plain-JSON copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _emit(doc, out=None):
    text = json.dumps(jsonable(doc), indent=2, sort_keys=True, allow_nan=False)
    (out or sys.stdout).write(text + "\n")


# --- argument handling -------------------------------------------------------------


def _parse_param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {name!r} is not a number: {value!r}") from None


def _parse_floats(text: str, n_min: int, n_max: int) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not n_min <= len(vals) <= n_max:
        raise argparse.ArgumentTypeError(f"expected {n_min}..{n_max} numbers, got {text!r}")
    return vals


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("equation")
    g.add_argument("-e", "--equation", help="expression F(x, y, p)")
    g.add_argument("--file", type=Path, help="file holding the expression (# comments allowed)")
    g.add_argument("-P", "--param", action="append", type=_parse_param, default=[], metavar="NAME=VALUE")
    g.add_argument("--oracle", help="oracle id, e.g. cubic:b=2 or wellfolded:alpha=-1")
    g.add_argument("--at", type=lambda s: _parse_floats(s, 3, 3), help="point O as x,y,p (default 0,0,0)")
    o = p.add_argument_group("numerics")
    o.add_argument("--window", type=lambda s: _parse_floats(s, 1, 2), help="half-widths X[,P] (P defaults to 2X)")
    o.add_argument("--tol-rel", type=float, default=1e-8)
    o.add_argument("--tol-abs", type=float, default=1e-10)
    o.add_argument("--fit-window", type=float, default=0.1, help="p-window of semicubic fits")
    o.add_argument("-o", "--out", type=Path, help="output file or directory")
    o.add_argument("--pretty", action="store_true", help="human-readable table instead of JSON")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="pleatlab", description="Singular points of implicit ODEs F(x, y, y') = 0.")
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("classify", parents=[common], help="classify the point O")
    c.add_argument("--epsilon", choices=["0", "1", "unknown"], default="unknown")
    t = sub.add_parser("trace", parents=[common], help="trace the criminant or an invariant curve through O")
    t.add_argument("--curve", choices=["criminant", "C", "Cprime"], default="criminant")
    v = sub.add_parser("verify", parents=[common], help="check the lemmas and Table 1 on an equation or oracle")
    v.add_argument("--sweep", help="b=v1,v2,...: Table 1 case assignment over the cubic family")
    sub.add_parser("portrait", parents=[common], help="write chart/plane SVG portraits and a manifest")
    o = sub.add_parser("oracle", parents=[common], help="describe an oracle family member")
    o.add_argument("id", nargs="?", help="oracle id (alternative to --oracle)")
    o.add_argument("--c", type=float, help="sample the integral curve with this constant")
    o.add_argument("--xi-range", type=lambda s: _parse_floats(s, 2, 2), default=[1e-3, 1.0])
    o.add_argument("--samples", type=int, default=50)
    return parser


def load_ode(args) -> ImplicitOde:
    sources = [s for s in (args.equation, args.file, args.oracle) if s is not None]
    if len(sources) != 1:
        raise CliError("give exactly one of -e/--equation, --file, --oracle")
    params = dict(args.param)
    origin = tuple(args.at) if args.at else (0.0, 0.0, 0.0)
    if args.oracle is not None:
        ode = make_oracle(args.oracle).ode
        if ode is None:
            raise CliError(f"oracle {args.oracle!r} is a planar field, not an equation")
        return ImplicitOde(ode.ast, {**ode.params, **params}, origin, ode.source)
    if args.file is not None:
        lines = [ln.split("#", 1)[0].strip() for ln in args.file.read_text().splitlines()]
        text = " ".join(ln for ln in lines if ln)
    else:
        text = args.equation
    return ImplicitOde.from_text(text, params, origin)


def curve_config(args) -> cv.CurveConfig:
    base = cv.CurveConfig()
    integ = replace(base.integ, rel_tol=args.tol_rel, abs_tol=args.tol_abs)
    return replace(base, p_fit=args.fit_window, integ=integ)


def portrait_spec(args) -> PortraitSpec:
    spec = PortraitSpec(density=default_density())
    kw = {"curves": curve_config(args), "integ": replace(spec.integ, rel_tol=args.tol_rel, abs_tol=args.tol_abs)}
    if args.window:
        kw["x_half"] = args.window[0]
        kw["p_half"] = args.window[1] if len(args.window) > 1 else 2 * args.window[0]
    return replace(spec, **kw)


# --- commands -------------------------------------------------------------------


def _pretty(rows: list[tuple[str, object]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


def cmd_classify(args) -> int:
    ode = load_ode(args)
    eps = args.epsilon if args.epsilon == "unknown" else int(args.epsilon)
    cls = classify_singular_point(ode, epsilon=eps)
    doc = cls.to_json()
    if args.pretty:
        sys.stdout.write(_pretty([(k, json.dumps(jsonable(v))) for k, v in doc.items()]))
    else:
        _emit(doc)
    return EXIT_DEGENERATE if cls.kind == "Degenerate" else EXIT_OK


def cmd_trace(args) -> int:
    ode = load_ode(args)
    cfg = curve_config(args)
    p_half = args.window[1] if args.window and len(args.window) > 1 else (2 * args.window[0] if args.window else 0.3)
    if args.curve == "criminant":
        traj = cv.trace_criminant(ode, (-p_half, p_half), step=min(0.005, cfg.p_fit / 20))
        beta, kind = None, "criminant"
    else:
        inv = cv.invariant_curve(ode, args.curve, config=cfg)
        traj, beta, kind = inv.curve, cv._curve_beta(inv), inv.kind
    try:
        fit = cv.fit_semicubic(traj, "chart", cfg.p_fit, beta).to_json()
    except PleatlabError as exc:
        fit = {"error": str(exc)}
    if args.out is None:
        sys.stdout.write(traj.to_csv())
        return EXIT_OK
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / f"{args.curve}.csv"
    fit_path = args.out / f"{args.curve}.fit.json"
    csv_path.write_text(traj.to_csv())
    fit_path.write_text(json.dumps(jsonable(fit), indent=2, sort_keys=True) + "\n")
    _emit({"curve": args.curve, "kind": kind, "samples": len(traj), "csv": str(csv_path), "fit": fit})
    return EXIT_OK


def _row(name, predicted, measured, tol, ok, **extra):
    return {"name": name, "predicted": predicted, "measured": measured, "tol": tol, "pass": bool(ok), **extra}


def _rel_row(name, predicted, measured, tol):
    ok = measured is not None and abs(measured - predicted) <= tol * abs(predicted)
    return _row(name, predicted, measured, tol, ok)


def verify_pleated(ode: ImplicitOde, cls, cfg: cv.CurveConfig, b_expected: float | None, exact_family: bool) -> list[dict]:
    b = cls.b
    rows = []
    expected = table1_case(b_expected if b_expected is not None else b)
    rows.append(_row("case", expected.case, cls.case, None, expected.case == cls.case))
    l2 = cv.lemma2_check(ode, cfg)
    if l2["mode"] == "invariance":
        if exact_family:
            r = l2["invariance_residual"]
            rows.append(_row("v0.invariance_residual", 0.0, r, 1e-10, r < 1e-10))
        rows.append(_row("v0", l2["v0_predicted"], l2.get("v0_fitted"), 0.01, True, informational=True))
    else:
        rows.append(_rel_row("v0", l2["v0_predicted"], l2["v0_fitted"], 0.01))
    measured_row, rep = cv.table1_from_fits(ode, cfg)
    rows.append(_rel_row("mK", 4.0 / 9.0 * b**3, rep.mK, 0.01))
    rows.append(_rel_row("mC", 4.0 / 9.0 * (3 * b - 2), rep.mC, 0.01))
    ej, mj = expected.to_json(), measured_row.to_json()
    for key in ("lifted_field", "signs", "inverse_ratio", "cube_ratio"):
        if ej[key] is not None:
            rows.append(_row(f"table1.{key}", ej[key], mj[key], None, ej[key] == mj[key]))
    same_pred = not (0 < b < 2.0 / 3.0)
    rows.append(_row("arrangement.same_semiplane", same_pred, rep.same_semiplane, None, same_pred == rep.same_semiplane))
    if same_pred:
        tongue_pred = abs(3 * b - 2) < abs(b**3)
        rows.append(_row("arrangement.c_in_tongue", tongue_pred, rep.c_in_tongue, None, tongue_pred == rep.c_in_tongue))
    return rows


def verify_oracle(oracle_id: str, cfg: cv.CurveConfig, integ: IntegSpec) -> list[dict]:
    oracle = make_oracle(oracle_id)
    if oracle.family == "cubic":
        cls = classify_singular_point(oracle.ode)
        if cls.kind != "PleatedImproper":
            raise DegenerateError(cls.reason or cls.kind)
        return verify_pleated(oracle.ode, cls, cfg, oracle.params["b"], exact_family=True)
    if oracle.family == "wellfolded":
        cls = classify_singular_point(oracle.ode)
        forms = oracle.closed_forms
        det = cls.linear_part.det if cls.linear_part is not None else None
        rows = [
            _row("kind", "FoldedImproper", cls.kind, None, cls.kind == "FoldedImproper"),
            _row("stability", forms["stability"], cls.stability, None, cls.stability == forms["stability"]),
        ]
        if det is not None:
            rows.append(_row("det", forms["det"], det, 1e-9, abs(det - forms["det"]) <= 1e-9 * max(1.0, abs(forms["det"]))))
        return rows
    rows = []
    for c in (-1.0, 0.5, 2.0):
        res = check_integral_curve(oracle, c, (1e-3, 1.0))
        rows.append(_row(f"closed_form[c={c:g}]", 0.0, res.max_error, 1e-8, res.max_error < 1e-8))
    return rows


def verify_sweep(text: str) -> list[dict]:
    name, sep, values = text.partition("=")
    if name.strip() != "b" or not sep:
        raise CliError("--sweep expects b=v1,v2,...")
    rows = []
    for b in _parse_floats(values, 1, 1000):
        expected = table1_case(b)
        cls = classify_singular_point(make_oracle(f"cubic:b={b!r}").ode)
        rows.append(_row(f"case[b={b:g}]", expected.case, cls.case, None, cls.case == expected.case))
    return rows


def cmd_verify(args) -> int:
    cfg = curve_config(args)
    integ = replace(cfg.integ)
    if args.sweep:
        rows = verify_sweep(args.sweep)
        subject = {"sweep": args.sweep}
    elif args.oracle and args.equation is None and args.file is None:
        rows = verify_oracle(args.oracle, cfg, integ)
        subject = {"oracle": args.oracle}
    else:
        ode = load_ode(args)
        cls = classify_singular_point(ode)
        if cls.kind == "Degenerate":
            _emit({"subject": {"equation": ode.text}, "rows": [], "all_pass": False, "degenerate": cls.reason})
            return EXIT_DEGENERATE
        if cls.kind != "PleatedImproper":
            raise CliError(f"verify needs a pleated improper point, O is {cls.kind}")
        rows = verify_pleated(ode, cls, cfg, None, exact_family=False)
        subject = {"equation": ode.text, "params": dict(ode.params)}
    counted = [r for r in rows if not r.get("informational")]
    all_pass = all(r["pass"] for r in counted)
    doc = {"subject": subject, "rows": rows, "passed": sum(r["pass"] for r in counted), "total": len(counted), "all_pass": all_pass}
    if args.pretty:
        table = [(r["name"], f"{'PASS' if r['pass'] else 'FAIL'}  predicted={r['predicted']}  measured={r['measured']}") for r in rows]
        sys.stdout.write(_pretty(table + [("summary", f"{doc['passed']}/{doc['total']}")]))
    else:
        _emit(doc)
    return EXIT_OK if all_pass else EXIT_ERROR


def cmd_portrait(args) -> int:
    ode = load_ode(args)
    spec = portrait_spec(args)
    pt = render(ode, spec)
    outdir = args.out or Path(".")
    paths = pt.write(outdir)
    _emit({"case": pt.case, "files": {k: str(v) for k, v in paths.items()}, "window": pt.manifest["window"]})
    return EXIT_OK


def cmd_oracle(args) -> int:
    oid = args.id or args.oracle
    if not oid:
        raise CliError("give an oracle id")
    oracle = make_oracle(oid)
    doc = {"id": oid, "family": oracle.family, "params": oracle.params}
    if oracle.ode is not None:
        doc["equation"] = oracle.ode.text
        doc["constants"] = {k: v for k, v in oracle.closed_forms.items() if not callable(v)}
    else:
        doc["field"] = oracle.field.label
    if args.c is not None:
        xi, eta = oracle_integral_curve(oracle, args.c, tuple(args.xi_range), args.samples)
        doc["samples"] = {"xi": xi, "eta": eta}
    _emit(doc)
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "trace": cmd_trace,
    "verify": cmd_verify,
    "portrait": cmd_portrait,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DegenerateError as exc:
        print(f"pleatlab: degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (PleatlabError, CliError, ValueError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"pleatlab: error: {message}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
