"""Command-line front end.

Inputs are JSON element files (see :mod:`weylstar.serialize`); outputs are
JSON on stdout or CSV files.  Exit codes: 0 success, 1 verification failure,
2 usage or schema error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import branch_tracker as bt
from . import lin_exp as le
from . import polar_algebra as pa
from . import quad_group as qg
from .errors import DegreeCapExceeded, DimensionMismatch, NumericalDomainError, SchemaError
from .serialize import envelope, load_file, to_object
from .suites import SUITES, run_suite
from .weyl_poly import ExpressionParameter, intertwine_poly, star_product

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str, *kinds: str):
    env = load_file(path)
    if env.type not in kinds:
        raise SchemaError(f"{path}: expected type {' or '.join(kinds)}, got {env.type}")
    return env.element


def _numeric_K(path: str) -> np.ndarray:
    K = _load(path, "K")
    if isinstance(K, ExpressionParameter):
        return K.to_array()
    return K


def _exact_K(path: str) -> ExpressionParameter:
    K = _load(path, "K")
    if not isinstance(K, ExpressionParameter):
        raise SchemaError(f"{path}: exact products need a K file with \"exact\": true")
    return K


def _alpha(path: str) -> np.ndarray:
    el = _load(path, "sp", "group_point")
    return el.alpha


def _complex_arg(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"expected 're' or 're,im', got {text!r}")


def _floats(text: str, n: int, what: str) -> list:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from exc
    if len(vals) != n:
        raise UsageError(f"{what}: expected {n} comma-separated numbers")
    return vals


def _csv(header: list, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([x if isinstance(x, int) else format(x, ".12g") for x in r])
    return buf.getvalue()


def _seed() -> int:
    raw = os.environ.get("WEYLSTAR_SEED", "0")
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"WEYLSTAR_SEED must be an integer, got {raw!r}") from exc


# subcommands


def cmd_star(args) -> int:
    f = _load(args.f, "polynomial")
    g = _load(args.g, "polynomial")
    out = star_product(f, g, _exact_K(args.K), degree_cap=args.degree_cap)
    _emit(_dump(out.to_json()) + "\n", args.out)
    return EXIT_OK


def cmd_intertwine(args) -> int:
    f = _load(args.f, "polynomial")
    out = intertwine_poly(f, _exact_K(args.K), _exact_K(args.K2))
    _emit(_dump(out.to_json()) + "\n", args.out)
    return EXIT_OK


def cmd_expquad(args) -> int:
    e = qg.exp_quad(_alpha(args.quad), _complex_arg(args.t), _numeric_K(args.K), args.hbar)
    _emit(_dump(to_object(envelope(e, {"hbar": args.hbar}))) + "\n", args.out)
    return EXIT_OK


def cmd_cayley(args) -> int:
    K = _numeric_K(args.K)
    kappa = qg.kappa_of(K)
    alpha = _alpha(args.sp)
    Y = qg.cayley(kappa, alpha)
    back = qg.cayley_inverse(kappa, Y)
    obj = {
        "Y": [[[z.real, z.imag] for z in row] for row in Y],
        "round_trip_residual": float(np.max(np.abs(back - alpha))),
    }
    _emit(_dump(obj) + "\n", args.out)
    return EXIT_OK


def cmd_gprod(args) -> int:
    K = _numeric_K(args.K)
    pts = []
    for path in (args.a, args.b):
        el = _load(path, "gaussian", "group_point")
        pts.append(el.group_point() if hasattr(el, "group_point") else el)
    out = qg.gaussian_product(pts[0], pts[1], qg.kappa_of(K))
    _emit(_dump(to_object(envelope(out.gaussian()))) + "\n", args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    window = _floats(args.window, 4, "--window")
    if args.step <= 0:
        raise UsageError("--step must be positive")
    rows = bt.scan_grid(_alpha(args.quad), _numeric_K(args.K), window, args.step)
    _emit(_csv(["t_re", "t_im", "abs_delta", "is_anchor", "line_index"], rows), args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    try:
        path = bt.PathSpec.parse(args.path, args.mode)
    except ValueError as exc:
        raise UsageError(f"--path: {exc}") from exc
    val = bt.trace_amplitude(_alpha(args.quad), _numeric_K(args.K), path, args.hbar)
    obj = {
        "value": to_object(envelope(val.value)),
        "sheet": val.sheet,
        "crossings": val.crossings,
        "principal_sign": val.principal_sign,
        "path": to_object(envelope(path)),
    }
    _emit(_dump(obj) + "\n", args.out)
    return EXIT_OK


def cmd_polar(args) -> int:
    K = _numeric_K(args.K)
    g = _load(args.g, "symplectic")
    el = pa.strict_polar(g, K, args.hbar) if args.strict else pa.polar_element(g, K, hbar=args.hbar)
    amp_res, phase_res = el.residuals(K)
    obj = {
        "value": to_object(envelope(el.gaussian)),
        "sheet": el.sheet,
        "path": to_object(envelope(el.path)),
        "amp_sq_det_K_residual": float(amp_res),
        "phase_residual": phase_res,
    }
    _emit(_dump(obj) + "\n", args.out)
    return EXIT_OK


def cmd_quaternion(args) -> int:
    report = pa.quaternion_structure(pa.k_re(args.rho, args.cprime))
    text = _dump(report) + "\n"
    _emit(text, args.report)
    if args.report:
        sys.stdout.write(f"{sum(r['passed'] for r in report['relations'])}/{len(report['relations'])} relations hold\n")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_verify(args) -> int:
    ok, report = run_suite(args.suite, _seed())
    text = _dump(report) + "\n"
    _emit(text, args.report)
    for name, res in report["suites"].items():
        bad = [c["check"] for c in res["checks"] if not c["passed"]]
        line = f"{name}: {'PASS' if res['passed'] else 'FAIL'} ({len(res['checks']) - len(bad)}/{len(res['checks'])})"
        print(line + ("" if not bad else " failing: " + "; ".join(bad)), file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_linexp(args) -> int:
    e = _load(args.e, "linexp")
    K = _numeric_K(args.K)
    lo, hi, n = _floats(args.grid, 3, "--grid")
    if n < 1 or n != int(n):
        raise UsageError("--grid: point count must be a positive integer")
    axis = np.linspace(lo, hi, int(n))
    mesh = np.stack(np.meshgrid(*([axis] * (2 * e.m)), indexing="ij"), axis=-1).reshape(-1, 2 * e.m)
    rows = le.linexp_grid(e, K, mesh, args.hbar)
    header = [f"u{i}" for i in range(2 * e.m)] + ["re", "im"]
    _emit(_csv(header, rows), args.out)
    return EXIT_OK


# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weylstar", description="Star products, star exponentials and their branches.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--hbar", type=float, default=1.0, help="positive value of hbar (default 1)")
        return sp

    s = add("star", cmd_star, "exact star product of two polynomials")
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--K", required=True, help="exact K file")
    s.add_argument("--degree-cap", type=int, default=16)

    s = add("intertwine", cmd_intertwine, "move a polynomial from K to K2")
    s.add_argument("--f", required=True)
    s.add_argument("--K", required=True)
    s.add_argument("--K2", required=True)

    s = add("expquad", cmd_expquad, "closed-form star exponential of a quadratic form")
    s.add_argument("--quad", required=True, help="sp element file")
    s.add_argument("--t", required=True, help="'re' or 're,im'")
    s.add_argument("--K", required=True)

    s = add("cayley", cmd_cayley, "twisted Cayley transform")
    s.add_argument("--sp", required=True)
    s.add_argument("--K", required=True)

    s = add("gprod", cmd_gprod, "product of two Gaussians")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--K", required=True)

    s = add("scan", cmd_scan, "CSV scan of |det| and singular points over a t-window")
    s.add_argument("--quad", required=True)
    s.add_argument("--K", required=True)
    s.add_argument("--window", required=True, help="x0,x1,y0,y1")
    s.add_argument("--step", type=float, default=0.01)

    s = add("trace", cmd_trace, "continue a star exponential along a path")
    s.add_argument("--quad", required=True)
    s.add_argument("--K", required=True)
    s.add_argument("--path", required=True, help="'re,im;re,im;...'")
    s.add_argument("--mode", choices=bt.MODES, default="straight")

    s = add("polar", cmd_polar, "polar element for g and K")
    s.add_argument("--K", required=True)
    s.add_argument("--g", required=True, help="symplectic matrix file")
    s.add_argument("--strict", action="store_true", help="same-sheet (strict) polar element")

    s = sub.add_parser("quaternion", help="relation table of e1, e2, e3 under K_re")
    s.set_defaults(func=cmd_quaternion)
    s.add_argument("--rho", type=float, default=pa.DEFAULT_RHO)
    s.add_argument("--cprime", type=float, default=pa.DEFAULT_CPRIME)
    s.add_argument("--report", help="write the JSON report here")

    s = sub.add_parser("verify", help="run a verification suite")
    s.set_defaults(func=cmd_verify)
    s.add_argument("suite", choices=SUITES + ("all",))
    s.add_argument("--report", help="write the JSON report here")

    s = add("linexp", cmd_linexp, "CSV grid of the K-expression of a linear exponential")
    s.add_argument("--e", required=True, help="linexp file")
    s.add_argument("--K", required=True)
    s.add_argument("--grid", required=True, help="lo,hi,n per coordinate")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "hbar", 1.0) <= 0:
        print("error: --hbar must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, SchemaError, DimensionMismatch, DegreeCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalDomainError as exc:
        print(f"numerical domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
