"""Command-line frontend.

Exit codes: 0 success, 1 tolerance failure, 2 usage error, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import correlators as corr
from .epr_state import EprState
from .lhv_phase_space import MonteCarlo, lhv_chsh_grid, random_shifts
from .numerics import QuadratureSpec
from .observables import (
    Boundedness,
    ObservableSpec,
    Profile,
    classify_boundedness,
    make_parity,
    make_parity_inversion,
    make_sign,
    make_unsharp,
    wigner_symbol,
)

EXIT_OK, EXIT_TOL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

PROFILES = ("parity", "sign", "rinv", "tanh", "expsat", "gausssat")
SIGN_NOTE = "sign follows the kernel algebra: parity-inversion E(0,0) is negative"


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return "%.12g" % x


def build_observable(profile: str, s: float | None = None, epsilon: int | None = None) -> ObservableSpec:
    if profile == "parity":
        spec = make_parity()
    elif profile == "sign":
        spec = make_sign()
    elif profile == "rinv":
        spec = make_parity_inversion()
    elif profile in ("tanh", "expsat", "gausssat"):
        if s is None or not s > 0:
            raise UsageError(f"profile {profile} needs --s > 0")
        spec = make_unsharp(("tanh", "expsat", "gausssat").index(profile) + 1, s)
    else:
        raise UsageError(f"unknown profile {profile!r}")
    if epsilon is not None and epsilon != spec.epsilon:
        if epsilon not in (1, -1):
            raise UsageError("--epsilon must be 1 or -1")
        spec = ObservableSpec(epsilon, Profile(spec.profile.tag, spec.profile.s, spec.profile.imaginary))
    if not spec.hermitian:
        raise UsageError(f"observable {spec.label} is not hermitian")
    return spec


def build_method(name: str, order: int | None = None, fock_n: int | None = None):
    if name == "closed":
        return corr.ClosedForm()
    if name == "quad":
        if order is None:
            return corr.Quadrature()
        if order < 1:
            raise UsageError("--order must be >= 1")
        return corr.Quadrature(QuadratureSpec(order=order, target_rel_error=1e-11,
                                              target_abs_error=1e-13, max_refinements=6))
    if name == "fock":
        if fock_n is not None and fock_n < 1:
            raise UsageError("--fock-n must be >= 1")
        return corr.FockTruncation(fock_n)
    raise UsageError(f"unknown method {name!r}")


def _state(n_mean: float) -> EprState:
    try:
        return EprState(n_mean)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _pair(text: str) -> tuple[float, float]:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected q,p but got {text!r}") from exc
    if len(parts) == 1:
        parts.append(0.0)
    if len(parts) != 2 or not all(math.isfinite(v) for v in parts):
        raise argparse.ArgumentTypeError(f"expected q,p but got {text!r}")
    return parts[0], parts[1]


def _grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise UsageError("steps must be >= 1")
    if hi < lo:
        raise UsageError("range is empty")
    return np.array([lo]) if steps == 1 else np.linspace(lo, hi, steps)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_correlate(args) -> int:
    state = _state(args.nmean)
    spec = build_observable(args.profile, args.s, args.epsilon)
    method = build_method(args.method, args.order, args.fock_n)
    try:
        res = corr.correlation_detail(state, spec.shifted(*args.alice), spec.shifted(*args.bob), method)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    record = {
        "observable": spec.label,
        "n_mean": state.n_mean,
        "alice": list(args.alice),
        "bob": list(args.bob),
        "method": res.method,
        "E": res.value,
        "abs_E": abs(res.value),
        "error": res.error,
        "converged": res.converged,
        "note": SIGN_NOTE,
    }
    if args.format == "json":
        _emit(json.dumps(record, indent=2) + "\n", args.output)
    else:
        lines = [f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in record.items()]
        _emit("\n".join(lines) + "\n", args.output)
    if not res.converged:
        print(f"error: correlation did not converge (estimate {res.error:.3e})", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def scan_rows(result: corr.ScanResult, only_violations: bool = False):
    for d, n, b, ok in result.rows():
        if only_violations and not abs(b) > 2:
            continue
        yield d, n, b, ok


def write_scan_csv(result: corr.ScanResult, only_violations: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["d", "n_mean", "B", "converged"])
    for d, n, b, ok in scan_rows(result, only_violations):
        writer.writerow([_fmt(d), _fmt(n), _fmt(b), "true" if ok else "false"])
    return buf.getvalue()


def write_scan_json(result: corr.ScanResult, only_violations: bool = False) -> str:
    rows = [{"d": float(_fmt(d)), "n_mean": float(_fmt(n)), "B": float(_fmt(b)), "converged": ok}
            for d, n, b, ok in scan_rows(result, only_violations)]
    return json.dumps(rows, indent=1) + "\n"


def cmd_scan(args) -> int:
    spec = build_observable(args.profile, args.s, args.epsilon)
    n_grid = _grid(args.nmean_min, args.nmean_max, args.nmean_steps)
    if n_grid[0] < 0:
        raise UsageError("n_mean must be >= 0")
    d_grid = _grid(args.d_min, args.d_max, args.d_steps)
    method_name = args.method or ("closed" if (args.kind == "real" and args.profile == "rinv") else "quad")
    method = build_method(method_name, args.order, args.fock_n)
    try:
        if args.kind == "real":
            result = corr.bell_real_scan(n_grid, d_grid, spec, method)
        else:
            result = corr.bell_complex_scan(n_grid, d_grid, spec, method)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    writer = write_scan_json if args.format == "json" else write_scan_csv
    _emit(writer(result, args.only_violations), args.output)
    failed = int(np.sum(~result.converged))
    if failed:
        print(f"warning: {failed} cell(s) did not converge", file=sys.stderr)
        if args.strict:
            return EXIT_NUMERIC
    return EXIT_OK


def cmd_lhv(args) -> int:
    state = _state(args.nmean)
    spec = build_observable(args.profile, args.s, args.epsilon)
    if spec.epsilon != 1:
        spec_sym = None
    else:
        spec_sym = wigner_symbol(spec)
    if spec_sym is None or classify_boundedness(spec_sym) is not Boundedness.BOUNDED:
        raise UsageError(
            f"profile {args.profile} has a singular Wigner symbol; the phase-space bound "
            "|B| <= 2 applies only to observables with bounded Wigner symbols"
        )
    if args.settings < 2:
        raise UsageError("--settings must be >= 2")
    alice = random_shifts(args.settings, args.seed, args.scale)
    bob = random_shifts(args.settings, args.seed + 1, args.scale)
    method = MonteCarlo(args.count, args.seed) if args.method == "mc" else corr.Quadrature()
    best, idx, _ = lhv_chsh_grid(state, spec_sym, alice, bob, method)
    tol = args.tol if args.tol is not None else (5e-3 if args.method == "mc" else 1e-6)
    ok = best <= 2 + tol
    summary = {
        "observable": spec.label,
        "n_mean": state.n_mean,
        "method": method.tag,
        "settings": args.settings,
        "max_abs_B": best,
        "argmax": {"a": alice[idx[0]], "a2": alice[idx[1]], "b": bob[idx[2]], "b2": bob[idx[3]]},
        "bound": 2.0,
        "tolerance": tol,
        "result": "PASS" if ok else "FAIL",
    }
    if args.format == "json":
        _emit(json.dumps(summary, indent=2) + "\n", args.output)
    else:
        _emit(f"max|B|={_fmt(best)} over {args.settings}x{args.settings} shifts "
              f"({method.tag}) {summary['result']}\n", args.output)
    return EXIT_OK if ok else EXIT_TOL


def cmd_oracle(args) -> int:
    state = _state(args.nmean)
    spec = build_observable(args.profile, args.s, args.epsilon)
    if args.settings < 1:
        raise UsageError("settings list is empty (--settings must be >= 1)")
    rng = np.random.Generator(np.random.PCG64(args.seed))
    q = rng.uniform(-args.scale, args.scale, size=(args.settings, 2))
    p = rng.uniform(-args.scale / 2, args.scale / 2, size=(args.settings, 2))
    if args.kind == "real":
        p[:] = 0.0
    settings = [((float(q[i, 0]), float(p[i, 0])), (float(q[i, 1]), float(p[i, 1])))
                for i in range(args.settings)]
    methods = [corr.Quadrature(), corr.FockTruncation(args.fock_n)]
    if args.kind == "real" and args.profile == "rinv":
        methods.append(corr.ClosedForm())
    report = corr.oracle_compare(state, spec, settings, methods)
    worst = max(report.values())
    lines = [f"{a} vs {b}: max discrepancy {_fmt(v)}" for (a, b), v in report.items()]
    lines.append(f"worst={_fmt(worst)} tol={_fmt(args.tol)} {'PASS' if worst <= args.tol else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.output)
    if not math.isfinite(worst):
        return EXIT_NUMERIC
    return EXIT_OK if worst <= args.tol else EXIT_TOL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=PROFILES, default="rinv")
    p.add_argument("--s", type=float, default=None, help="steepness of the smooth profiles")
    p.add_argument("--epsilon", type=int, default=None, help="override the reflection sign")
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", default=None, help="key=value file merged beneath flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvbell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlate", help="one correlation E(alpha, beta)")
    _common(p)
    p.add_argument("--nmean", type=float, default=10.0)
    p.add_argument("--alice", type=_pair, default=(0.0, 0.0), help="q,p shift")
    p.add_argument("--bob", type=_pair, default=(0.0, 0.0), help="q,p shift")
    p.add_argument("--method", choices=("closed", "quad", "fock"), default="quad")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--fock-n", type=int, default=None)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("scan", help="Bell combination over a (n_mean, d) grid")
    _common(p)
    p.add_argument("--kind", choices=("real", "complex"), default="real")
    p.add_argument("--nmean-min", type=float, default=0.0)
    p.add_argument("--nmean-max", type=float, default=20.0)
    p.add_argument("--nmean-steps", type=int, default=21)
    p.add_argument("--d-min", type=float, default=0.0)
    p.add_argument("--d-max", type=float, default=0.6)
    p.add_argument("--d-steps", type=int, default=61)
    p.add_argument("--method", choices=("closed", "quad", "fock"), default=None)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--fock-n", type=int, default=None)
    p.add_argument("--only-violations", action="store_true")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("lhv", help="phase-space CHSH bound for bounded-symbol observables")
    _common(p)
    p.set_defaults(profile="sign")
    p.add_argument("--nmean", type=float, default=10.0)
    p.add_argument("--settings", type=int, default=20, help="random shifts per party")
    p.add_argument("--scale", type=float, default=0.5)
    p.add_argument("--method", choices=("quad", "mc"), default="quad")
    p.add_argument("--count", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tol", type=float, default=None, help="default 1e-6 (quad), 5e-3 (mc)")
    p.set_defaults(func=cmd_lhv)

    p = sub.add_parser("oracle", help="cross-method discrepancy report")
    _common(p)
    p.add_argument("--nmean", type=float, default=10.0)
    p.add_argument("--settings", type=int, default=10)
    p.add_argument("--kind", choices=("real", "complex"), default="complex")
    p.add_argument("--scale", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fock-n", type=int, default=256)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_oracle)
    return parser


def read_config(path: str) -> dict[str, str]:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def _apply_config(parser, argv, args):
    """Re-parse with config values as defaults so explicit flags win."""
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in known or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            defaults[key] = action.type(value)
        else:
            defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except corr.ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
