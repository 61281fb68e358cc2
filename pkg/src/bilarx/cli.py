"""Command-line front end.

Subcommands
-----------
identify   solve the lifted program on CSV data at the configured penalty
refine     bias-removal re-solve seeded by a previous result file
sweep      scan a penalty grid for a rank-one solution
baseline   naive two-step method (segment the output, then least squares)
ripcheck   restricted-isometry constant and uniqueness verdict
simulate   generate a named synthetic scenario as CSV

Data files are CSV with header ``t,y`` (single sequence) or ``t,y,series``;
extra columns are ignored, time indices are 1-based and consecutive per
series. Configuration is flat JSON with keys ``n_a, n_b, n_k, epsilon,
lambda, gamma, rho, max_iters, tol``. Results are JSON; all floats carry 17
significant digits so they parse back bit-exact.

Exit codes: 0 success, 1 usage or file-format error, 2 solver
non-convergence, 3 invalid or infeasible input data. The environment
variable ``BILARX_SEED`` overrides scenario seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import operator_from_problem, rip_report
from .baseline import naive_identify
from .datagen import SCENARIO_NAMES, scenario, simulate_arx
from .extract import change_points
from .problem import ArxOrders, OutputSeries, build_problem
from .solver import (
    BilSolution,
    SolverOptions,
    refine_pipeline,
    solve_bil,
    solve_refined,
    sweep_lambda,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2
EXIT_BAD_DATA = 3

_CONFIG_KEYS = {
    "n_a", "n_b", "n_k", "epsilon", "lambda", "gamma", "rho", "max_iters", "tol",
}


class _UsageError(Exception):
    pass


class _DataError(Exception):
    pass


def _fmt(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def _dumps(obj, indent=0) -> str:
    """JSON text with floats at 17 significant digits (round-trip exact)."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {_dumps(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{_dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _dumps(obj.tolist(), indent)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _write_json(path, obj):
    Path(path).write_text(_dumps(obj) + "\n")


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _UsageError(f"{path} is not valid JSON: {exc}") from exc


def _load_config(path):
    cfg = _load_json(path)
    if not isinstance(cfg, dict):
        raise _UsageError(f"{path}: config must be a JSON object")
    for key in cfg:
        if key not in _CONFIG_KEYS:
            raise _UsageError(f"{path}: unknown config key {key!r}")
    for key in ("n_a", "n_b"):
        if key not in cfg:
            raise _UsageError(f"{path}: missing required config key {key!r}")
    return cfg


def _config_orders(cfg) -> ArxOrders:
    try:
        return ArxOrders(n_a=int(cfg["n_a"]), n_b=int(cfg["n_b"]),
                         n_k=int(cfg.get("n_k", 0)))
    except ValueError as exc:
        raise _DataError(str(exc)) from exc


def _config_options(cfg) -> SolverOptions:
    tol = float(cfg.get("tol", 1e-7))
    return SolverOptions(
        rho=float(cfg.get("rho", 1.0)),
        max_iters=int(cfg.get("max_iters", 5000)),
        tol_primal=tol,
        tol_dual=tol,
    )


def _load_series_csv(path):
    """Read ``t,y[,series]`` rows into labeled sample arrays."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(text.splitlines())
    fields = reader.fieldnames or []
    if "t" not in fields or "y" not in fields:
        raise _UsageError(f"{path}: need columns 't' and 'y', got {fields}")
    has_series = "series" in fields
    rows = {}
    for lineno, row in enumerate(reader, start=2):
        label = row["series"] if has_series else "y1"
        try:
            t = int(row["t"])
            y = float(row["y"])
        except (TypeError, ValueError) as exc:
            raise _UsageError(f"{path}:{lineno}: bad t/y value") from exc
        rows.setdefault(label, []).append((t, y))
    if not rows:
        raise _DataError(f"{path}: no data rows")
    series = []
    for label, pairs in rows.items():
        pairs.sort()
        ts = [t for t, _ in pairs]
        if ts != list(range(1, len(ts) + 1)):
            raise _DataError(
                f"{path}: series {label!r} must have consecutive t = 1..N"
            )
        series.append(OutputSeries(np.array([y for _, y in pairs]), label=label))
    return series


def _build_spec(args, cfg):
    series = _load_series_csv(args.data)
    orders = _config_orders(cfg)
    try:
        return build_problem(series, orders, float(cfg.get("epsilon", 0.0)))
    except ValueError as exc:
        raise _DataError(str(exc)) from exc


def _solution_payload(spec, sol: BilSolution, gamma: float):
    labels = [s.label for s in spec.sequences]
    payload = {
        "a": list(sol.a_est),
        "b": None if sol.b_est is None else list(sol.b_est),
        "scale_note": "input and coefficients are determined up to a shared scalar",
        "u": {lab: list(u) for lab, u in zip(labels, sol.u_est)},
        "singular_values": list(sol.singular_values),
        "rank_gap": sol.rank_gap,
        "change_points": {
            lab: change_points(u, gamma) for lab, u in zip(labels, sol.u_est)
        },
        "lambda": sol.lam,
        "objective": sol.objective,
        "epsilon": spec.epsilon,
        "diagnostics": {
            "iterations": sol.diagnostics.iterations,
            "primal_residual": sol.diagnostics.primal_residual,
            "dual_residual": sol.diagnostics.dual_residual,
            "converged": sol.diagnostics.converged,
        },
    }
    return payload


def _write_plots(plot_dir, spec, sol: BilSolution):
    """Per-figure CSVs: measured vs model output, and the input estimate."""
    out = Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seq, u in zip(spec.sequences, sol.u_est):
        if sol.b_est is None:
            continue
        y_model = simulate_arx(sol.a_est, sol.b_est, spec.orders, np.asarray(u))
        with open(out / f"fit_{seq.label}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "y_measured", "y_model"])
            for t in range(1, len(seq) + 1):
                writer.writerow([t, _fmt(seq.samples[t - 1]), _fmt(y_model[t - 1])])
        with open(out / f"input_{seq.label}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "u_estimate"])
            for t in range(1, len(seq) + 1):
                writer.writerow([t, _fmt(u[t - 1])])


def _finish_solution(args, spec, sol, gamma):
    payload = _solution_payload(spec, sol, gamma)
    _write_json(args.out, payload)
    if getattr(args, "plot_dir", None):
        _write_plots(args.plot_dir, spec, sol)
    return EXIT_OK if sol.diagnostics.converged else EXIT_NOT_CONVERGED


def _cmd_identify(args):
    cfg = _load_config(args.config)
    if "lambda" not in cfg:
        raise _UsageError("identify needs 'lambda' in the config")
    spec = _build_spec(args, cfg)
    sol = solve_bil(spec, float(cfg["lambda"]), _config_options(cfg))
    return _finish_solution(args, spec, sol, float(cfg.get("gamma", 0.0)))


def _cmd_refine(args):
    cfg = _load_config(args.config)
    gamma = args.gamma if args.gamma is not None else cfg.get("gamma")
    if gamma is None:
        raise _UsageError("refine needs --gamma or 'gamma' in the config")
    gamma = float(gamma)
    spec = _build_spec(args, cfg)
    prior = _load_json(args.result)
    if "u" not in prior:
        raise _UsageError(f"{args.result}: missing 'u' estimates")
    freeze = []
    for seq in spec.sequences:
        if seq.label not in prior["u"]:
            raise _UsageError(f"{args.result}: no input estimate for {seq.label!r}")
        u = np.asarray(prior["u"][seq.label], dtype=float)
        if u.shape[0] != len(seq):
            raise _DataError(
                f"series {seq.label!r}: estimate length {u.shape[0]} does not "
                f"match data length {len(seq)}"
            )
        du = np.abs(u[:-1] - u[1:])
        freeze.append({int(i) + 1 for i in np.nonzero(du <= gamma)[0]})
    sol = solve_refined(spec, freeze, _config_options(cfg))
    return _finish_solution(args, spec, sol, gamma)


def _cmd_sweep(args):
    cfg = _load_config(args.config)
    try:
        grid = [float(v) for v in args.lambdas.split(",") if v.strip()]
    except ValueError as exc:
        raise _UsageError(f"cannot parse --lambdas {args.lambdas!r}") from exc
    spec = _build_spec(args, cfg)
    result = sweep_lambda(spec, grid, args.gap_target, _config_options(cfg))
    payload = _solution_payload(spec, result.solution, float(cfg.get("gamma", 0.0)))
    payload["sweep"] = {
        "lambda_chosen": result.lambda_chosen,
        "qualified": result.qualified,
        "trace": [{"lambda": lam, "rank_gap": gap} for lam, gap in result.trace],
    }
    _write_json(args.out, payload)
    if getattr(args, "plot_dir", None):
        _write_plots(args.plot_dir, spec, result.solution)
    return EXIT_OK if result.solution.diagnostics.converged else EXIT_NOT_CONVERGED


def _cmd_baseline(args):
    cfg = _load_config(args.config)
    spec = _build_spec(args, cfg)
    try:
        a_est, b_est, u_hats = naive_identify(spec, args.segments)
    except ValueError as exc:
        raise _DataError(str(exc)) from exc
    labels = [s.label for s in spec.sequences]
    payload = {
        "a": list(a_est),
        "b": list(b_est),
        "u": {lab: list(u) for lab, u in zip(labels, u_hats)},
        "change_points": {
            lab: change_points(u, 0.0) for lab, u in zip(labels, u_hats)
        },
        "segments": args.segments,
    }
    _write_json(args.out, payload)
    if getattr(args, "plot_dir", None):
        out = Path(args.plot_dir)
        out.mkdir(parents=True, exist_ok=True)
        for seq, u in zip(spec.sequences, u_hats):
            with open(out / f"baseline_{seq.label}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["t", "y_measured", "u_fit"])
                for t in range(1, len(seq) + 1):
                    writer.writerow([t, _fmt(seq.samples[t - 1]), _fmt(u[t - 1])])
    return EXIT_OK


def _cmd_ripcheck(args):
    cfg = _load_config(args.config)
    spec = _build_spec(args, cfg)
    try:
        operator = operator_from_problem(spec)
        report = rip_report(operator, args.k, budget=args.budget)
    except ValueError as exc:
        raise _DataError(str(exc)) from exc
    _write_json(args.out, {
        "k": report.k,
        "rip_epsilon": report.rip_epsilon,
        "patterns_checked": report.patterns_checked,
        "certified_unique": report.certified_unique,
    })
    return EXIT_OK


def _cmd_simulate(args):
    seed = args.seed
    env_seed = os.environ.get("BILARX_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise _UsageError(f"BILARX_SEED={env_seed!r} is not an integer") from exc
    try:
        scn = scenario(args.scenario, seed=seed)
    except ValueError as exc:
        raise _DataError(str(exc)) from exc
    multi = len(scn.spec.sequences) > 1
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "z", "y", "series"] if multi else ["t", "z", "y"])
        for seq, z in zip(scn.spec.sequences, scn.truth.z_blocks):
            for t in range(1, len(seq) + 1):
                row = [t, _fmt(z[t - 1]), _fmt(seq.samples[t - 1])]
                if multi:
                    row.append(seq.label)
                writer.writerow(row)
    if args.plot_dir:
        out = Path(args.plot_dir)
        out.mkdir(parents=True, exist_ok=True)
        for seq, u in zip(scn.spec.sequences, scn.truth.u_blocks):
            with open(out / f"true_input_{seq.label}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["t", "u_true"])
                for t in range(1, len(seq) + 1):
                    writer.writerow([t, _fmt(u[t - 1])])
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bilarx",
                     description="Blind ARX identification via convex lifting")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="input CSV (t,y[,series])")
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", required=True, help="output JSON path")
        p.add_argument("--plot-dir", default=None,
                       help="directory for per-figure CSV files")

    p = sub.add_parser("identify", help="solve the lifted convex program")
    add_io(p)
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("refine", help="re-solve with frozen small differences")
    add_io(p)
    p.add_argument("--result", required=True, help="result JSON of a prior solve")
    p.add_argument("--gamma", type=float, default=None,
                   help="difference threshold (overrides config)")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("sweep", help="scan penalty weights for a rank-one solution")
    add_io(p)
    p.add_argument("--lambdas", required=True,
                   help="comma-separated ascending penalty grid")
    p.add_argument("--gap-target", type=float, default=1e-3,
                   help="rank gap threshold for accepting a penalty")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("baseline", help="naive two-step identification")
    add_io(p)
    p.add_argument("--segments", type=int, required=True,
                   help="segment budget for the output fit")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("ripcheck", help="restricted-isometry uniqueness check")
    add_io(p)
    p.add_argument("--k", type=int, required=True, help="difference sparsity level")
    p.add_argument("--budget", type=int, default=100_000,
                   help="pattern enumeration budget")
    p.set_defaults(func=_cmd_ripcheck)

    p = sub.add_parser("simulate", help="generate a named synthetic scenario")
    p.add_argument("--scenario", required=True,
                   help=f"one of {', '.join(SCENARIO_NAMES)}")
    p.add_argument("--seed", type=int, default=None, help="noise seed")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--plot-dir", default=None,
                   help="directory for true-input CSV files")
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"bilarx: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DataError as exc:
        print(f"bilarx: {exc}", file=sys.stderr)
        return EXIT_BAD_DATA


if __name__ == "__main__":
    sys.exit(main())
