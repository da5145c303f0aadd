"""Command-line interface: ``jointmeas {validate,check,table1,scan,ssm}``.

Exit codes: 0 result produced, 2 input error, 3 numerical non-convergence.
Set ``JOINTMEAS_WORKERS`` to evaluate scan cells in parallel processes.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io as _io
import json
import operator
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import criteria
from .errors import JointMeasError
from .families import FAMILIES, METHODS, assess, build_pair, negativity_landscape
from .io import load_povm, load_state, load_statistics, read_json
from .optimizer import OptimizerConfig
from .povm import is_pvm, unsharpness_entropy, validate
from .ssm import (
    model_statistics,
    quasiprob_from_state,
    quasiprob_from_statistics,
    ssm_jm_test,
    ssm_wmeasure,
    worst_case_state,
)

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 2, 3
TABLE_ANGLES = (("0", 0.0), ("pi/6", np.pi / 6), ("pi/4", np.pi / 4), ("pi/3", np.pi / 3))


class InputError(JointMeasError):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    return x


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def manifest(args, config: OptimizerConfig | None, inputs, started: float) -> dict:
    return {
        "command": args.command,
        "inputs": [str(p) for p in inputs],
        "config": config.to_dict() if config else None,
        "seed": config.seed if config else None,
        "version": _version(),
        "wall_time_s": round(time.perf_counter() - started, 6),
    }


def _write_manifest(args, config, inputs, started) -> None:
    if args.out:
        text = json.dumps(_jsonable(manifest(args, config, inputs, started)), indent=2) + "\n"
        Path(str(args.out) + ".manifest.json").write_text(text)


def _config(args) -> OptimizerConfig:
    data = {}
    if getattr(args, "config", None):
        data.update(read_json(args.config))
    for flag, key in (("seed", "seed"), ("restarts", "restarts"), ("tolerance", "jm_tolerance")):
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    return OptimizerConfig.from_dict(data)


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _parse_value(text: str) -> float:
    """A number or simple arithmetic with ``pi``, e.g. ``2*pi/3``."""

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return float(np.pi)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError("unsupported expression")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval").body))
    except (SyntaxError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse number {text!r}") from exc


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"parameter must look like name=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = _parse_value(v)
    return params


def _pair(args):
    if args.family:
        if args.povm_a or args.povm_b:
            raise InputError("give either two POVM files or --family, not both")
        return build_pair(args.family, _parse_params(args.param)), []
    if not (args.povm_a and args.povm_b):
        raise InputError("need two POVM files (or --family with --param)")
    return (load_povm(args.povm_a), load_povm(args.povm_b)), [args.povm_a, args.povm_b]


# --- commands ------------------------------------------------------------------


def cmd_validate(args) -> int:
    p = load_povm(args.povm)
    report = validate(p)
    doc = {
        "ok": report.ok,
        "worst_eigenvalue": report.worst_eigenvalue,
        "completeness_residual": report.completeness_residual,
        "outcomes": p.outcomes,
        "dim": p.dim,
    }
    if report.ok:
        doc["unsharpness_entropy"] = unsharpness_entropy(p)
        doc["is_pvm"] = is_pvm(p)
    _emit(json.dumps(_jsonable(doc), indent=2) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_check(args) -> int:
    started = time.perf_counter()
    config = _config(args)
    (A, B), inputs = _pair(args)
    result = assess(A, B, args.method, config)
    v = result.verdict
    doc = {
        "method": result.method,
        "jointly_measurable": v.jointly_measurable,
        "criterion_margin": v.criterion_margin,
        "n_min": v.minimized_negativity,
        "conclusive": v.conclusive,
        "converged": result.converged,
        "details": v.details,
        "manifest": manifest(args, config, inputs, started),
    }
    _emit(json.dumps(_jsonable(doc), indent=2) + "\n", args.out)
    if not result.converged:
        print(f"optimizer did not converge after {result.evaluations} evaluations", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def table1_rows(resolution: int) -> list[tuple]:
    rows = [("table", phi, criteria.mu_threshold(phi), criteria.r_threshold(phi)) for _, phi in TABLE_ANGLES]
    for phi in np.linspace(0.0, 2 * np.pi / 3, resolution) if resolution > 0 else []:
        rows.append(("grid", float(phi), criteria.mu_threshold(phi), criteria.r_threshold(phi)))
    return rows


def cmd_table1(args) -> int:
    started = time.perf_counter()
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "phi", "mu_th", "R_th"])
    for kind, phi, mu, r in table1_rows(args.resolution):
        w.writerow([kind, fmt(phi), fmt(mu), fmt(r)])
    _emit(buf.getvalue(), args.out)
    _write_manifest(args, None, [], started)
    return EXIT_OK


def _parse_axis(text: str, resolution: int) -> tuple[str, np.ndarray]:
    """``name=start:stop[:count]`` or ``name=v1,v2,...``."""
    if "=" not in text:
        raise InputError(f"axis must look like name=start:stop[:count], got {text!r}")
    name, spec = text.split("=", 1)
    if "," in spec:
        return name, np.array([_parse_value(s) for s in spec.split(",")])
    parts = spec.split(":")
    if len(parts) == 1:
        return name, np.array([_parse_value(spec)])
    if len(parts) not in (2, 3):
        raise InputError(f"axis range must be start:stop[:count], got {spec!r}")
    start, stop = _parse_value(parts[0]), _parse_value(parts[1])
    count = int(parts[2]) if len(parts) == 3 else resolution
    if count < 0 or not np.isfinite([start, stop]).all():
        raise InputError(f"invalid axis range {spec!r}")
    return name, np.linspace(start, stop, count)


def _scan_cell(job):
    family, axes, fixed, config, method = job
    return negativity_landscape(family, axes, fixed, config, method)


def cmd_scan(args) -> int:
    started = time.perf_counter()
    config = _config(args)
    if args.resolution < 0:
        raise InputError("--resolution must be non-negative")
    axes = dict(_parse_axis(a, args.resolution) for a in args.axis)
    if not 1 <= len(axes) <= 2:
        raise InputError("scan needs one or two --axis options")
    fixed = _parse_params(args.fixed)
    names = list(axes)
    first, rest = names[0], {n: axes[n] for n in names[1:]}
    jobs = [(args.family, {first: [v], **rest}, fixed, config, args.method) for v in axes[first]]
    workers = int(os.environ.get("JOINTMEAS_WORKERS", "1") or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_scan_cell, jobs))
    else:
        chunks = [_scan_cell(j) for j in jobs]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + ["jm", "margin", "n_min"])
    for row in (r for chunk in chunks for r in chunk):
        jm = "none" if row["jm"] is None else fmt(row["jm"])
        w.writerow([fmt(row[n]) for n in names] + [jm, fmt(row["margin"]), fmt(row["n_min"])])
    _emit(buf.getvalue(), args.out)
    _write_manifest(args, config, [], started)
    return EXIT_OK


def cmd_ssm(args) -> int:
    started = time.perf_counter()
    (A, B), inputs = _pair(args)
    W = ssm_wmeasure(A, B, swapped=args.swapped)
    verdict = ssm_jm_test(A, B, swapped=args.swapped)
    if args.statistics:
        q = quasiprob_from_statistics(*load_statistics(args.statistics))
        inputs.append(args.statistics)
    else:
        if args.state:
            rho = load_state(args.state)
            inputs.append(args.state)
        else:
            rho = worst_case_state(W)
        q = quasiprob_from_state(W, rho)
        if args.show_statistics and not args.swapped:
            p_a, p_b, p_c = model_statistics(A, B, rho)
            q_stats = quasiprob_from_statistics(p_a, p_b, p_c)
            q_gap = float(np.max(np.abs(q_stats.table - q.table)))
        else:
            q_gap = None
    doc = {
        "Q": q.table,
        "source": q.source,
        "min_Q": q.min_entry,
        "argmin": list(q.argmin),
        "jointly_measurable": verdict.jointly_measurable,
        "criterion_margin": verdict.criterion_margin,
        "guarantee": verdict.details["guarantee"],
        "conclusive": verdict.conclusive,
        "manifest": manifest(args, None, inputs, started),
    }
    if not args.statistics and args.show_statistics and not args.swapped:
        doc["statistics_consistency"] = q_gap
    _emit(json.dumps(_jsonable(doc), indent=2) + "\n", args.out)
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------


def _optimizer_flags(p) -> None:
    p.add_argument("--seed", type=int, default=None, help="optimizer seed (default 0)")
    p.add_argument("--restarts", type=int, default=None, help="optimizer restart budget (default 8)")
    p.add_argument("--tolerance", type=float, default=None, help="negativity below which a pair counts as JM (default 1e-7)")
    p.add_argument("--config", default=None, help="optimizer configuration JSON")


def _pair_args(p) -> None:
    p.add_argument("povm_a", nargs="?", help="POVM JSON for A")
    p.add_argument("povm_b", nargs="?", help="POVM JSON for B")
    p.add_argument("--family", choices=FAMILIES, help="build the pair from a named family instead of files")
    p.add_argument("--param", action="append", help="family parameter name=value (repeatable; 'pi' allowed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jointmeas", description="Joint measurability of POVM pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a POVM file and report its unsharpness")
    p.add_argument("povm")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="decide joint measurability of two POVMs")
    _pair_args(p)
    p.add_argument("--method", choices=METHODS, default="auto")
    _optimizer_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("table1", help="threshold sharpness and unsharpness of trichotomic pairs (CSV)")
    p.add_argument("--resolution", type=int, default=25, help="number of grid angles on [0, 2pi/3]")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("scan", help="verdict grid over one or two family parameters (CSV)")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--axis", action="append", required=True, help="name=start:stop[:count] or name=v1,v2,...")
    p.add_argument("--fixed", action="append", help="fixed parameter name=value")
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--resolution", type=int, default=21, help="points per axis when not given in --axis")
    _optimizer_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("ssm", help="sequential-measurement quasiprobability and verdict")
    _pair_args(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--state", help="state JSON ({'rho': ...} or {'psi': ...}); default: worst-case eigenstate")
    g.add_argument("--statistics", help="measured statistics JSON with pA, pB, pC")
    p.add_argument("--swapped", action="store_true", help="measure B first")
    p.add_argument("--show-statistics", action="store_true", help="also rebuild Q from model statistics")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ssm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (JointMeasError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
