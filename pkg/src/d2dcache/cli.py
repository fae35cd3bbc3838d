"""Command-line front end.

    d2dcache optimize  --config configs/table1.cfg --out dc.csv
    d2dcache waterfill --config configs/fig2.cfg
    d2dcache sweep     --config configs/table1.cfg --param lambda_h --grid 0:2e-5:6

Config files are flat ``key = value`` lines (``#`` starts a comment). Values
may be arithmetic over numbers and ``pi``, so densities can be written as
``5000/(pi*500^2)``. Any key can be overridden by a flag of the same name.
"""

from __future__ import annotations

import argparse
import ast
import csv
import dataclasses
import io
import math
import operator
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import SCHEMES, even_cache, non_joint, popular_cache
from .dc_solver import DcSettings, NonMonotoneDescentError, dc_optimize
from .extreme import usertier_solve, waterfill
from .model import ScenarioConfig, make_zipf, total_offload
from .simulator import CACHE_MODES, SimSettings, simulate_offloading

SUBCOMMANDS = ("optimize", "waterfill", "usertier", "baseline", "simulate", "sweep")
SWEEP_PARAMS = ("lambda_h", "lambda_ue", "alpha", "gamma", "n_contents")

PLACEMENT_COLUMNS = (
    "scheme",
    "content",
    "popularity",
    "p_ue",
    "p_h",
    "offload_analytic",
    "total_offload_analytic",
    "offload_empirical",
    "total_offload_empirical",
    "ci_halfwidth",
    "n_trials",
)
SWEEP_COLUMNS = (
    "parameter",
    "value",
    "scheme",
    "total_offload_analytic",
    "total_offload_empirical",
    "ci_halfwidth",
    "iterations",
    "converged",
)


class CliError(Exception):
    """Reported as a one-line diagnostic with a nonzero exit status."""

    def __init__(self, msg, status=2):
        super().__init__(msg)
        self.status = status


# --- config parsing ---------------------------------------------------------

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def _eval_number(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(text.strip().replace("^", "**"), mode="eval"))


def _field_types():
    types = {}
    for cls in (ScenarioConfig, DcSettings, SimSettings):
        for f in dataclasses.fields(cls):
            types[f.name] = f.type if isinstance(f.type, str) else f.type.__name__
    return types


FIELD_TYPES = _field_types()


def coerce(key: str, raw: str):
    kind = FIELD_TYPES.get(key)
    if kind is None:
        raise CliError(f"unknown config key {key!r}")
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise CliError(f"{key}: expected a boolean, got {raw!r}")
    try:
        value = _eval_number(raw)
    except (ValueError, SyntaxError, ZeroDivisionError) as exc:
        raise CliError(f"{key}: cannot parse {raw!r} ({exc})") from None
    if kind == "int":
        if float(value) != int(value):
            raise CliError(f"{key}: expected an integer, got {raw!r}")
        return int(value)
    return float(value)


def read_config(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, raw)
    return values


def _split(values: dict):
    pick = lambda cls: {k: v for k, v in values.items() if k in {f.name for f in dataclasses.fields(cls)}}
    try:
        return ScenarioConfig(**pick(ScenarioConfig)), DcSettings(**pick(DcSettings)), SimSettings(**pick(SimSettings))
    except ValueError as exc:
        raise CliError(f"infeasible config: {exc}") from None


def parse_grid(text: str) -> list[float]:
    text = (text or "").strip()
    if not text:
        raise CliError("empty grid")
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise CliError(f"grid {text!r} must be start:step:count")
            start, step = _eval_number(parts[0]), _eval_number(parts[1])
            count = int(parts[2])
            grid = [start + k * step for k in range(count)]
        else:
            grid = [_eval_number(t) for t in text.split(",") if t.strip()]
    except (ValueError, SyntaxError) as exc:
        raise CliError(f"cannot parse grid {text!r}: {exc}") from None
    if not grid:
        raise CliError("empty grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise CliError(f"grid must be strictly increasing: {text!r}")
    return grid


def parse_schemes(text: str) -> list[str]:
    schemes = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in schemes if s not in SCHEMES]
    if bad or not schemes:
        raise CliError(f"unknown scheme(s) {bad or text!r}; choose from {','.join(SCHEMES)}")
    return schemes


# --- evaluation -----------------------------------------------------------------


def fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(x)
    return format(float(x), ".10g")


def placement_for(scheme, cfg, q, dc):
    """Return ``(placement, dc_trace or None)``."""
    if scheme == "dc":
        return dc_optimize(cfg, q, dc)
    if scheme == "popular":
        return popular_cache(cfg), None
    if scheme == "even":
        return even_cache(cfg), None
    if scheme == "nonjoint":
        return non_joint(cfg, q), None
    raise CliError(f"unknown scheme {scheme!r}")


def _sweep_point(args):
    param, value, base, dc, sim, schemes, validate = args
    try:
        cfg = dataclasses.replace(base, **{param: int(value) if param == "n_contents" else value})
    except ValueError as exc:
        return [[param, value, s, None, None, None, None, False] for s in schemes], str(exc)
    q = make_zipf(cfg.n_contents, cfg.gamma)
    rows, err = [], None
    for scheme in schemes:
        try:
            pl, trace = placement_for(scheme, cfg, q, dc)
        except (ValueError, NonMonotoneDescentError) as exc:
            rows.append([param, value, scheme, None, None, None, None, False])
            err = f"{scheme} at {param}={fmt(value)}: {exc}"
            continue
        emp = half = None
        if validate:
            rep = simulate_offloading(cfg, q, pl, sim)
            emp, half = rep.total, rep.ci_halfwidth
        iters = trace.outer_iterations if trace else None
        conv = trace.converged if trace else None
        rows.append([param, value, scheme, total_offload(cfg, q, pl).total, emp, half, iters, conv])
    return rows, err


def write_csv(rows, columns, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    data = buf.getvalue()
    if out == "-":
        sys.stdout.write(data)
    else:
        Path(out).write_text(data, encoding="utf-8", newline="\n")
    return data


def _placement_rows(scheme, cfg, q, pl, report=None):
    ana = total_offload(cfg, q, pl)
    rows = []
    for i in range(cfg.n_contents):
        row = [scheme, i + 1, q.q[i], pl.p_ue[i], pl.p_h[i], ana.per_content[i], ana.total]
        if report is None:
            row += [None, None, None, None]
        else:
            row += [report.per_content[i], report.total, report.ci_halfwidth, report.n_trials]
        rows.append(row)
    return rows, ana


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output CSV path ('-' for stdout); default <subcommand>.csv")
    common.add_argument("--seed", type=int, help="Monte Carlo seed (rng_seed)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials (n_trials)")
    common.add_argument("--cache-mode", choices=CACHE_MODES)
    common.add_argument("--schemes", help=f"comma list from {','.join(SCHEMES)}")
    common.add_argument("--param", choices=SWEEP_PARAMS)
    common.add_argument("--grid", help="start:step:count or a comma list")
    common.add_argument("--validate", action="store_true", help="also run Monte Carlo at every sweep point")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")
    overrides = common.add_argument_group("config overrides")
    for key in FIELD_TYPES:
        overrides.add_argument(f"--{key}", dest=f"set_{key}", metavar="VALUE")

    parser = argparse.ArgumentParser(prog="d2dcache", description="Caching placement for D2D-assisted caching networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _settings(args):
    values = read_config(args.config) if args.config else {}
    for key in FIELD_TYPES:
        raw = getattr(args, f"set_{key}")
        if raw is not None:
            values[key] = coerce(key, raw)
    if args.seed is not None:
        values["rng_seed"] = args.seed
    if args.trials is not None:
        values["n_trials"] = args.trials
    if args.cache_mode is not None:
        values["cache_mode"] = args.cache_mode
    return _split(values)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg, dc, sim = _settings(args)
    q = make_zipf(cfg.n_contents, cfg.gamma)
    out = args.out or f"{args.command}.csv"
    cmd = args.command

    if cmd == "sweep":
        if not args.param:
            raise CliError("sweep needs --param")
        grid = parse_grid(args.grid)
        schemes = parse_schemes(args.schemes or ",".join(SCHEMES))
        tasks = [(args.param, v, cfg, dc, sim, schemes, args.validate) for v in grid]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_sweep_point, tasks))
        else:
            results = [_sweep_point(t) for t in tasks]
        rows = [r for point_rows, _ in results for r in point_rows]
        write_csv(rows, SWEEP_COLUMNS, out)
        for _, err in results:
            if err:
                print(f"d2dcache: warning: {err}", file=sys.stderr)
        return 0

    status = 0
    try:
        if cmd == "waterfill":
            blocks = [("waterfill", waterfill(cfg, q).placement, None)]
        elif cmd == "usertier":
            blocks = [("usertier", usertier_solve(cfg, q).placement, None)]
        elif cmd == "baseline":
            names = parse_schemes(args.schemes or "popular,even,nonjoint")
            blocks = [(s, *placement_for(s, cfg, q, dc)) for s in names]
        else:
            scheme = parse_schemes(args.schemes or "dc")
            if len(scheme) != 1:
                raise CliError(f"{cmd} takes a single scheme")
            blocks = [(scheme[0], *placement_for(scheme[0], cfg, q, dc))]
    except (ValueError, NonMonotoneDescentError) as exc:
        raise CliError(str(exc)) from None

    rows = []
    for scheme, pl, trace in blocks:
        report = simulate_offloading(cfg, q, pl, sim) if cmd == "simulate" else None
        block_rows, ana = _placement_rows(scheme, cfg, q, pl, report)
        rows += block_rows
        print(f"{scheme}: total_offload_analytic={fmt(ana.total)}")
        print(f"  p_ue = [{', '.join(fmt(x) for x in pl.p_ue)}]")
        print(f"  p_h  = [{', '.join(fmt(x) for x in pl.p_h)}]")
        if report is not None:
            print(f"  total_offload_empirical={fmt(report.total)} +/- {fmt(report.ci_halfwidth)} ({report.n_trials} trials)")
        if trace is not None and not trace.converged:
            print(f"d2dcache: error: dc did not converge in {trace.outer_iterations} iterations", file=sys.stderr)
            status = 3
    write_csv(rows, PLACEMENT_COLUMNS, out)
    return status


def main(argv=None) -> int:
    try:
        return run(argv)
    except CliError as exc:
        print(f"d2dcache: error: {exc}", file=sys.stderr)
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
