"""Command-line front end.

    lemniscate solve          --spec K.json --out DIR
    lemniscate build          --spec K.json --out DIR [--m M] [--q Q] [--c-scale C]
    lemniscate measure        --spec K.json --out DIR [--polynomial P.json]
    lemniscate sweep          --spec K.json --out DIR --n-list 64,128,... [--schedule loglog]
    lemniscate export-contour --spec K.json --out DIR --level S[,S...] [--m M]

Options may also come from a TOML file (``--config``); flags on the command
line win. Exit codes: 0 ok, 1 usage or parse error, 2 solver failure,
3 construction failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import SWEEP_COLUMNS, envelope_check, far_field_envelope, measure_sn, sweep
from .geometry import GeometryError, load_spec
from .green_solver import GreenSolution, SolverError, solution_from_dict, solve
from .lemniscate_builder import ConstructionError, build, load_polynomial, split_degrees
from .level_set import (TraceError, estimate_s_star, lemma21_diagnostics, level_curve,
                        minimal_m, paper_constant, partition_level)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_USAGE, EXIT_SOLVER, EXIT_CONSTRUCTION = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _n_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("n-list is empty")
    if min(vals) < 1:
        raise argparse.ArgumentTypeError("degrees must be positive")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of reals: {text!r}") from None


def _positive(kind):
    def conv(text):
        val = kind(text)
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val
    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="geometry JSON file")
    common.add_argument("--solution", help="solution.json from a previous solve (skips solving)")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--charges", type=_positive(int), default=64,
                        help="charges per component (default 64)")
    common.add_argument("--tol", type=_positive(float), default=1e-8,
                        help="boundary tolerance of the charge fit (default 1e-8)")
    common.add_argument("--depth", type=_positive(float), default=None,
                        help="charge depth in (0, 1); automatic by default")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
    common.add_argument("--config", help="TOML file with defaults for any option")

    construct = argparse.ArgumentParser(add_help=False)
    construct.add_argument("--m", type=_positive(int), default=None,
                           help="number of arcs (default: the minimal admissible m0)")
    construct.add_argument("--q", type=_positive(int), default=4, help="zeros per arc (default 4)")
    construct.add_argument("--c-scale", type=_positive(float), default=1.0,
                           help="multiplier on the construction constant c (default 1)")
    construct.add_argument("--c", type=_positive(float), default=None,
                           help="absolute construction constant; overrides --c-scale")

    parser = _Parser(prog="lemniscate", description="Lemniscate approximation of compact sets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="fit the Green function")
    sub.add_parser("build", parents=[common, construct], help="construct P_n")
    p = sub.add_parser("measure", parents=[common, construct], help="measure s_n of P_n")
    p.add_argument("--polynomial", help="polynomial.json; built inline when omitted")
    p.add_argument("--bracket-hi", type=_positive(float), default=None,
                   help="upper end of the bisection bracket (default: grown automatically)")
    p = sub.add_parser("sweep", parents=[common, construct], help="rate sweep over degrees")
    p.add_argument("--n-list", type=_n_list, required=False, help="comma-separated degrees")
    p.add_argument("--schedule", choices=("loglog", "fixed"), default="fixed",
                   help="fixed: q from --q; loglog: q = max(1, floor(2 ln ln m)) (default fixed)")
    p.add_argument("--jobs", type=_positive(int), default=1,
                   help="parallel worker processes (default 1)")
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    p = sub.add_parser("export-contour", parents=[common, construct], help="write K_s points")
    p.add_argument("--level", type=_float_list, default=None,
                   help="comma-separated levels (default: the construction level)")
    p.add_argument("--points", type=_positive(int), default=2048,
                   help="points per component (default 2048)")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as err:
        raise UsageError(f"cannot read config {path}: {err}") from None
    except tomllib.TOMLDecodeError as err:
        raise UsageError(f"config {path}: {err}") from None
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = _load_config(args.config)
        except UsageError as err:
            parser.error(str(err))
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(cfg) - set(known))
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        for key, val in cfg.items():
            act = known[key]
            if act.type is not None and isinstance(val, str):
                try:
                    cfg[key] = act.type(val)
                except (argparse.ArgumentTypeError, ValueError) as err:
                    parser.error(f"config key {key}: {err}")
            elif key == "n_list" and isinstance(val, list):
                cfg[key] = [int(v) for v in val]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if args.command == "sweep" and not args.n_list:
        parser.error("sweep needs a nonempty --n-list")
    if args.spec is None and args.solution is None:
        parser.error("one of --spec or --solution is required")
    return args


def _dump_json(path: Path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _solution(args) -> GreenSolution:
    if args.solution:
        with open(args.solution) as fh:
            return solution_from_dict(json.load(fh))
    spec = load_spec(args.spec)
    return solve(spec, args.charges, boundary_tol=args.tol, depth=args.depth)


def _summary(sol: GreenSolution) -> str:
    lines = [
        f"components        {sol.nu}",
        f"capacity          {sol.capacity:.12g}",
        f"robin constant    {sol.robin_constant:.12g}",
        f"boundary residual {sol.fit_residual:.3e}",
        f"charge depth      {sol.depth:g}",
        f"charges           {sol.charges.size}",
    ]
    for j, w in enumerate(sol.omegas):
        lines.append(f"omega[{j}]          {w:.12g}")
    lines.append(f"sum omega         {float(sol.omegas.sum()):.15g}")
    if sol.critical_values.size:
        lines.append(f"critical level    {sol.critical_level:.12g}")
    lines.append(f"s0                {sol.s0:.12g}")
    return "\n".join(lines) + "\n"


def _construction(args, sol):
    """(m, q, c, s, s_star) from the flags; m defaults to m0."""
    s_star = estimate_s_star(sol)
    c_paper = paper_constant(sol.omegas, s_star)
    c = args.c if args.c is not None else args.c_scale * c_paper
    q = args.q
    m = args.m if args.m is not None else minimal_m(c, q, s_star, sol.omegas)
    return m, q, c, c * q / m, s_star, c_paper


def _write_contour(path: Path, curves_by_level):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "component", "arc_index", "x", "y", "cum_measure"])
        for s, curves, parts in curves_by_level:
            for j, curve in enumerate(curves):
                mu = curve.cum_measure[:-1]
                if parts is None:
                    arc = np.zeros(mu.size, dtype=int)
                else:
                    p = parts[j]
                    rel = np.mod(mu - p.xi_measure[0], p.omega)
                    arc = np.minimum((rel / p.arc_mass).astype(int), p.m - 1) + 1
                for z, mu_i, a in zip(curve.points[:-1], mu, arc):
                    w.writerow([repr(float(s)), j, int(a), repr(float(z.real)),
                                repr(float(z.imag)), repr(float(mu_i))])


def cmd_solve(args, out: Path) -> int:
    sol = _solution(args)
    _dump_json(out / "solution.json", sol.to_dict())
    (out / "summary.txt").write_text(_summary(sol))
    sys.stdout.write(_summary(sol))
    return 0


def cmd_build(args, out: Path) -> int:
    sol = _solution(args)
    m, q, c, s, s_star, c_paper = _construction(args, sol)
    if not s < sol.critical_level:
        raise ConstructionError(f"construction level s = c q / m = {s:.4g} is not below the "
                                f"critical level {sol.critical_level:.4g}; increase --m")
    ms = split_degrees(sol.omegas, m, strict=False)
    part = partition_level(sol, s, ms, nodes_per_arc=max(8, q + 2))
    poly = build(sol, part, q, strict=True)
    diag = lemma21_diagnostics(part, sol.spec, q, c, s_star=s_star)
    poly.save(out / "polynomial.json")
    _write_contour(out / "contour.csv", [(s, [p.curve for p in part], list(part))])
    checks = {k: v for k, v in poly.checks.items() if k != "violations"}
    checks["violations"] = [{"component": j, "arc": k, "check": what}
                            for j, k, what in poly.checks["violations"]]
    report = {
        "n": poly.n, "m": m, "q": q, "ms": list(ms), "s": s, "c": c, "c_paper": c_paper,
        "c_scale": c / c_paper, "s_star": s_star,
        "cluster_checks": checks,
        "lemma21": diag.to_dict(),
    }
    _dump_json(out / "diagnostics.json", report)
    print(f"n = {poly.n} (m = {m}, q = {q}) at level s = {s:.6g}")
    print(f"worst chain margin {diag.worst_margin:.4g}, "
          f"{len(diag.violations)} violations; cluster violations: {len(checks['violations'])}")
    return 0


def cmd_measure(args, out: Path) -> int:
    sol = _solution(args)
    if args.polynomial:
        poly = load_polynomial(args.polynomial)
    else:
        m, q, c, s, _, _ = _construction(args, sol)
        poly = build(sol, partition_level(sol, s, split_degrees(sol.omegas, m, strict=False),
                                          nodes_per_arc=max(8, q + 2)), q)
    rep = measure_sn(poly, sol, bracket_hi=args.bracket_hi)
    rep.bound_envelope = envelope_check(poly, sol)
    rep.far_envelope = far_field_envelope(poly, sol, rng=np.random.default_rng(args.seed))
    _dump_json(out / "report.json", rep.to_dict())
    print(f"s_n upper bound {rep.s_n_emp:.6g} (n s_n = {rep.n * rep.s_n_emp:.4g}), "
          f"envelope {rep.bound_envelope:.4g}")
    return 0


def cmd_sweep(args, out: Path) -> int:
    sol = _solution(args)
    if args.c is not None:
        c = args.c
    else:
        c = args.c_scale * paper_constant(sol.omegas, estimate_s_star(sol))
    schedule = "loglog" if args.schedule == "loglog" else "fixed_q"
    rows = sweep(sol, args.n_list, schedule=schedule, q=args.q, c=c, jobs=args.jobs)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(r.csv_row(timing=args.timing))
    reports = []
    for r in rows:
        rep = dict(r.report)
        rep.update({"n": r.n, "far_envelope": r.far_envelope, "error": r.error})
        reports.append(rep)
    _dump_json(out / "sweep_reports.json", {"c": c, "schedule": schedule, "rows": reports})
    errors = [{"n": r.n, "error": r.error} for r in rows if r.error]
    if errors:
        _dump_json(out / "sweep_errors.json", errors)
    for r in rows:
        status = r.error or f"s_n {r.s_n_emp:.5g}  n s_n {r.sn_times_n:.4g}  env {r.envelope:.4g}"
        print(f"n = {r.n:6d}: {status}")
    return EXIT_CONSTRUCTION if len(errors) == len(rows) else 0


def cmd_export_contour(args, out: Path) -> int:
    sol = _solution(args)
    levels = args.level
    parts = None
    if levels is None or args.m is not None:
        m, q, c, s, _, _ = _construction(args, sol)
        levels = levels or [s]
        ms = split_degrees(sol.omegas, m, strict=False)
    blocks = []
    for s in levels:
        if args.m is not None:
            part = partition_level(sol, s, ms)
            parts = list(part)
            curves = [p.curve.resampled(max(args.points, len(p.curve))) for p in part]
        else:
            curves = [level_curve(sol, s, j, args.points) for j in range(sol.nu)]
        blocks.append((s, curves, parts))
    _write_contour(out / "contour.csv", blocks)
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "build": cmd_build,
    "measure": cmd_measure,
    "sweep": cmd_sweep,
    "export-contour": cmd_export_contour,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        print(f"error: cannot create output directory {out}: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except json.JSONDecodeError as err:
        print(f"error: {args.spec or args.solution}: malformed JSON at line {err.lineno}, "
              f"column {err.colno}: {err.msg}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as err:
        res = "" if math.isnan(err.residual) else f" (residual {err.residual:.3e})"
        print(f"solver error: {err}{res}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConstructionError, TraceError, ValueError) as err:
        print(f"construction error: {err}", file=sys.stderr)
        return EXIT_CONSTRUCTION


if __name__ == "__main__":
    sys.exit(main())
