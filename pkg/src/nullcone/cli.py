"""Command-line front end.

Exit codes: 0 when the command ran (verdicts are in the output), 1 for usage
errors (bad flags, unknown metric or surface, malformed points), 2 for math or
domain errors.
"""

from __future__ import annotations

import argparse
import itertools
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import jsonfmt
from .catalog import Catalog, CatalogEntry, load_catalog, parse_params, parse_point
from .curvature import metric_at
from .errors import CatalogError, NullconeError, StepUnderflowError
from .expr import parse
from .geodesic import (
    GeodesicState,
    conformal_invariance_check,
    integrate,
    is_null,
    null_project,
    principal_congruence_check,
)
from .lightlike import foliation_check, lightlike_test
from .ode import StepControl
from .petrov import Tolerances, classify
from .report import PointReport

EXIT_OK, EXIT_USAGE, EXIT_MATH = 0, 1, 2

_GRID = re.compile(r"^\s*(\w+)\s*=\s*([^.]+(?:\.\d+)?)\s*\.\.\s*(.+?)\s*:\s*(\d+)\s*$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _version() -> str:
    try:
        return version("nullcone")
    except PackageNotFoundError:
        return "0"


def parse_grid(spec: str, chart) -> tuple[int, np.ndarray]:
    """``name=a..b:n`` into the coordinate index and ``n`` inclusive samples."""
    m = _GRID.match(spec)
    if not m:
        raise UsageError(f"grid {spec!r} is not of the form name=a..b:n")
    name, a, b, n = m.groups()
    if name not in chart:
        raise UsageError(f"grid coordinate {name!r} is not in the chart {', '.join(chart)}")
    n = int(n)
    if n < 1:
        raise UsageError("a grid needs at least one sample")
    try:
        lo, hi = float(a), float(b)
    except ValueError:
        raise UsageError(f"grid bounds in {spec!r} must be numbers") from None
    return chart.index(name), np.linspace(lo, hi, n)


def grid_points(base, grids: list[tuple[int, np.ndarray]]) -> list[tuple[float, ...]]:
    """Cartesian product of the grid axes, other coordinates taken from ``base``."""
    axes = [idx for idx, _ in grids]
    if len(set(axes)) != len(axes):
        raise UsageError("a coordinate appears in more than one --grid")
    out = []
    for combo in itertools.product(*(vals for _, vals in grids)):
        p = list(base)
        for idx, v in zip(axes, combo):
            p[idx] = float(v)
        out.append(tuple(p))
    return out


# -- shared argument handling -------------------------------------------------------


def _common(p: argparse.ArgumentParser, point: bool = True) -> None:
    p.add_argument("--metric", required=True, help="catalog metric name")
    p.add_argument("--params", action="append", default=[], help="parameter overrides k=v[,k=v]")
    if point:
        p.add_argument("--point", help="chart point 'a,b,c,d' (default: the catalog sample)")
    p.add_argument("--tol-root", type=float, default=1e-4, help="root clustering radius (chordal)")
    p.add_argument("--tol-weyl-zero", type=float, default=1e-9, help="relative Weyl-zero threshold")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--out", help="write output to FILE")


def _entry(cat: Catalog, args) -> CatalogEntry:
    try:
        return cat[args.metric]
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _params(entry: CatalogEntry, args) -> dict[str, float]:
    merged: dict[str, float] = {}
    for text in args.params:
        try:
            merged.update(parse_params(text))
        except (ValueError, NullconeError) as exc:
            raise UsageError(f"--params: {exc}") from None
    try:
        return entry.spec.resolve_params(merged)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _point(text: str | None, default, flag: str = "--point") -> tuple[float, ...]:
    if text is None:
        return tuple(default)
    try:
        return parse_point(text)
    except (ValueError, NullconeError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _tolerances(args) -> Tolerances:
    return Tolerances(cluster_radius=args.tol_root, weyl_zero=args.tol_weyl_zero)


def _header(args, command: str) -> dict:
    return {"tool": "nullcone", "version": _version(), "command": command, "metric": args.metric}


def _emit(args, payload_json: dict, text: str) -> None:
    out = jsonfmt.dumps(payload_json) + "\n" if args.json else text
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


# -- commands ---------------------------------------------------------------------


def cmd_classify(cat: Catalog, args) -> int:
    entry = _entry(cat, args)
    params = _params(entry, args)
    base = _point(args.point, entry.sample)
    grids = [parse_grid(g, entry.spec.chart) for g in args.grid]
    points = grid_points(base, grids) if grids else [base]
    tol = _tolerances(args)

    def one(p):
        try:
            return PointReport.from_petrov(entry.name, params, classify(entry.spec, p, params, tol))
        except NullconeError as exc:
            return PointReport.failure(entry.name, p, params, f"{type(exc).__name__}: {exc}")

    if args.jobs > 1 and len(points) > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            reports = list(pool.map(one, points))  # map keeps input order
    else:
        reports = [one(p) for p in points]

    lines = []
    for r in reports:
        where = ", ".join(f"{c:.12g}" for c in r.point)
        if r.error:
            lines.append(f"({where})  ERROR  {r.error}")
            continue
        margin = r.diagnostics["margin"]
        lines.append(f"({where})  type {r.type}  margin {margin:.3g}")
        for w in r.warnings:
            print(f"warning at ({where}): {w}", file=sys.stderr)
    payload = {"header": _header(args, "classify"), "reports": [r.to_dict() for r in reports]}
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_MATH if any(r.error for r in reports) else EXIT_OK


def _direction(args, entry, x, params) -> np.ndarray:
    if args.direction is None:
        raise UsageError("--direction is required")
    xi = np.array(_point(args.direction, None, "--direction"))
    if args.null_project:
        try:
            xi = null_project(metric_at(entry.spec, x, params), xi, args.component)
        except ValueError as exc:
            raise UsageError(f"--null-project: {exc}") from None
    return xi


def cmd_geodesic(cat: Catalog, args) -> int:
    entry = _entry(cat, args)
    params = _params(entry, args)
    x = _point(args.point, entry.sample)
    xi = _direction(args, entry, x, params)
    state = GeodesicState(x, xi, 0.0)
    if args.require_null and not is_null(entry.spec, state, params):
        g = metric_at(entry.spec, x, params)
        print(
            f"refusing: initial direction is not null (g(xi, xi) = {xi @ g @ xi:.6g}); "
            "use --null-project to snap it onto the cone",
            file=sys.stderr,
        )
        return EXIT_MATH
    status = EXIT_OK
    try:
        traj = integrate(entry.spec, state, args.s_end, params, StepControl(rtol=args.rtol, atol=args.atol))
    except StepUnderflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        traj, status = exc.trajectory, EXIT_MATH
    if args.json or (args.out and args.out.endswith(".json")):
        body = traj.to_json() + "\n"
    else:
        body = traj.to_csv()
    if args.out:
        Path(args.out).write_text(body)
    else:
        sys.stdout.write(body)
    summary = f"termination {traj.termination}; max null-norm drift {traj.null_drift():.3e}"
    print(summary, file=sys.stderr if not args.out else sys.stdout)
    return status


def cmd_conformal(cat: Catalog, args) -> int:
    entry = _entry(cat, args)
    params = _params(entry, args)
    x = _point(args.point, entry.sample)
    xi = _direction(args, entry, x, params)
    sigma = entry.sigmas.get(args.sigma)
    if sigma is None:
        try:
            sigma = parse(args.sigma, entry.spec.chart, params)
        except NullconeError as exc:
            raise UsageError(f"--sigma: {exc}") from None
    rep = conformal_invariance_check(entry.spec, sigma, GeodesicState(x, xi), args.s_end, params, args.path_tol)
    verdict = "PASS" if rep.passed else "FAIL"
    text = (
        f"sigma = {rep.sigma}\n"
        f"null ray path distance     {rep.null_distance:.3e}\n"
        f"timelike control distance  {rep.control_distance:.3e}"
        f" ({'should coincide' if rep.constant_sigma else 'should separate'})\n"
        f"{verdict}\n"
    )
    payload = {
        "header": _header(args, "conformal"),
        "sigma": rep.sigma,
        "constant_sigma": rep.constant_sigma,
        "null_distance": rep.null_distance,
        "control_distance": rep.control_distance,
        "path_tol": rep.path_tol,
        "control_ok": rep.control_ok,
        "passed": rep.passed,
    }
    _emit(args, payload, text)
    return EXIT_OK


def cmd_hypersurface(cat: Catalog, args) -> int:
    entry = _entry(cat, args)
    params = _params(entry, args)
    if args.surface not in entry.surfaces:
        known = ", ".join(sorted(entry.surfaces)) or "none"
        raise UsageError(f"{entry.name} has no surface {args.surface!r} (has: {known})")
    surf = entry.surfaces[args.surface]
    seeds = [_point(s, None, "--seed") for s in args.seed] or list(surf.seeds)
    if not seeds:
        raise UsageError("no seeds given and the catalog lists none")
    results, lines = [], []
    for seed in seeds:
        lt = lightlike_test(entry.spec, surf, seed, params)
        item = {"seed": list(seed), "lightlike": lt.passed, "norm_scalar": lt.norm_scalar}
        where = ", ".join(f"{c:.12g}" for c in seed)
        if lt.passed:
            fr = foliation_check(entry.spec, surf, seed, args.s_end, params)
            item.update(
                max_F=fr.max_F, max_null=fr.max_null, max_residual=fr.max_residual,
                termination=fr.termination, passed=fr.passed,
            )
            lines.append(
                f"({where})  lightlike  |F| {fr.max_F:.2e}  null {fr.max_null:.2e}  "
                f"pregeodesic {fr.max_residual:.2e}  {'PASS' if fr.passed else 'FAIL'}"
            )
        else:
            item["passed"] = False
            lines.append(f"({where})  not lightlike: g(N, N) = {lt.norm_scalar:.6g}")
        results.append(item)
    payload = {"header": _header(args, "hypersurface"), "surface": surf.name, "results": results}
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_principal(cat: Catalog, args) -> int:
    entry = _entry(cat, args)
    params = _params(entry, args)
    x = _point(args.point, entry.sample)
    rep = principal_congruence_check(entry.spec, x, params, args.s_end, _tolerances(args), args.geo_tol)
    lines = [f"type {rep.type}"]
    if rep.message:
        lines.append(rep.message)
    curves = []
    for c in rep.curves:
        curves.append({
            "multiplicity": c.multiplicity,
            "direction": c.direction.tolist(),
            "samples": len(c.s),
            "max_residual": c.max_residual,
            "termination": c.termination,
            "failure": c.failure,
            "failure_point": list(c.failure_point) if c.failure_point else None,
        })
        status = f"FAILED at {c.failure_point}: {c.failure}" if c.failure else f"residual {c.max_residual:.3e}"
        lines.append(f"multiplicity {c.multiplicity}  {c.termination}  {status}")
    lines.append("PASS" if rep.passed else "FAIL" if rep.curves else "no principal directions")
    payload = {
        "header": _header(args, "principal"),
        "point": list(rep.point),
        "type": rep.type,
        "message": rep.message,
        "curves": curves,
        "passed": rep.passed,
    }
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_catalog(cat: Catalog, args) -> int:
    lines, items = [], []
    for e in cat:
        params = ", ".join(f"{k}={v:g}" for k, v in e.spec.params.items())
        lines.append(f"{e.name:24s} ({', '.join(e.spec.chart)})  {params}")
        if e.sigmas:
            lines.append(f"    sigma: {', '.join(e.sigmas)}")
        if e.surfaces:
            lines.append(f"    surfaces: {', '.join(e.surfaces)}")
        items.append({
            "name": e.name,
            "chart": list(e.spec.chart),
            "params": dict(e.spec.params),
            "sample": list(e.sample),
            "sigmas": {k: str(v) for k, v in e.sigmas.items()},
            "surfaces": {k: str(s.F) for k, s in e.surfaces.items()},
        })
    text = "\n".join(lines) + "\n"
    if args.json:
        text = jsonfmt.dumps({"header": {"tool": "nullcone", "version": _version(), "command": "catalog"}, "metrics": items}) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nullcone", description="Petrov classification and null-geodesic checks")
    parser.add_argument("--catalog", help="catalog file (default: the bundled one)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="Petrov type at points or over a grid")
    _common(p)
    p.add_argument("--grid", action="append", default=[], help="name=a..b:n, repeatable")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for grid sweeps")
    p.set_defaults(func=cmd_classify)

    def trajectory_flags(p):
        p.add_argument("--direction", help="initial tangent 'a,b,c,d'")
        p.add_argument("--null-project", action="store_true", help="snap the direction onto the null cone")
        p.add_argument("--component", type=int, default=0, help="component adjusted by --null-project")
        p.add_argument("--s-end", type=float, default=20.0)

    p = sub.add_parser("geodesic", help="integrate one geodesic and export it")
    _common(p)
    trajectory_flags(p)
    p.add_argument("--require-null", action="store_true", help="refuse non-null initial data")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("conformal", help="compare null rays of g and sigma*g")
    _common(p)
    trajectory_flags(p)
    p.add_argument("--sigma", required=True, help="catalog preset name or expression")
    p.add_argument("--path-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_conformal)

    p = sub.add_parser("hypersurface", help="lightlike test and generator foliation check")
    _common(p, point=False)
    p.add_argument("--surface", required=True)
    p.add_argument("--seed", action="append", default=[], help="seed point, repeatable")
    p.add_argument("--s-end", type=float, default=20.0)
    p.set_defaults(func=cmd_hypersurface)

    p = sub.add_parser("principal", help="principal null congruences are pregeodesic")
    _common(p)
    p.add_argument("--s-end", type=float, default=20.0)
    p.add_argument("--geo-tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_principal)

    p = sub.add_parser("catalog", help="list the catalog")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cat = load_catalog(args.catalog)
    except CatalogError as exc:
        print(f"error: invalid catalog\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(cat, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NullconeError, ValueError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
