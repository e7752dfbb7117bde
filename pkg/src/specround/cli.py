"""Command-line front end.

Exit status: 0 certified success, 1 input error, 2 certificate violation or
failed verification, 3 iteration cap (or exhausted retries).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import jsonio
from .concentration import default_chains, simulate_and_check, write_rows_csv
from .errors import (
    BudgetTooSmall,
    CertificateViolation,
    GraphError,
    InvalidInstance,
    IterationCapExceeded,
    NotIsotropic,
    NumericalFailure,
    SpecroundError,
    UnluckyRun,
)
from .expdesign import DesignProblem, moment_ratio, round_design, solve_relaxation
from .graph import read_edge_list
from .instance import VectorInstance
from .linalg import lambda_min
from .netdesign import (
    NetworkDesignInstance,
    load_sidecar,
    round_network,
    verify_spectral_implications,
)
from .rounding import EXACT_SLACK, exact_round, randomized_swap
from .signing import verify_two_sided
from .sparsify import greedy_additive_sparsify, verify_additive

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATION = 2
EXIT_CAP = 3

#: Tolerance when re-checking a certificate's reported numbers.
VERIFY_TOL = 1e-9

HISTORY_COLUMNS = ("t", "lambda_min", "cost", "delta_plus", "delta_minus")


class VerificationFailed(SpecroundError):
    """A certificate did not re-verify."""


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _write(result: dict, output: str | None) -> None:
    text = jsonio.dumps(result)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _write_history(cert, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for s in cert.history:
            w.writerow(
                [
                    s.t,
                    jsonio.format_float(s.lambda_min),
                    jsonio.format_float(s.cost),
                    jsonio.format_float(s.delta_plus),
                    jsonio.format_float(s.delta_minus),
                ]
            )


def cmd_round(args, exact: bool) -> int:
    inst = VectorInstance.load(args.input)
    fn = exact_round if exact else randomized_swap
    cert = fn(inst, args.eps, args.seed, args.q_cap)
    _write(cert.to_dict(), args.output)
    if args.emit_history:
        _write_history(cert, args.emit_history)
    return EXIT_OK


def cmd_sparsify(args) -> int:
    G = read_edge_list(args.input)
    cert = greedy_additive_sparsify(G, args.eps, args.q)
    _write(cert.to_dict(), args.output)
    return EXIT_OK


def cmd_design(args) -> int:
    p = DesignProblem.load(args.input)
    if np.any(p.instance.x > 0):
        # A supplied fractional design is rounded as is.
        x = p.instance.x
        relax = None
    else:
        relax = solve_relaxation(p, args.iters, args.tol)
        x = relax.x
    out = round_design(p, x, args.eps, args.seed, q_cap=args.q_cap)
    result = out.to_dict()
    result["eps"] = args.eps
    result["x"] = x.tolist()
    if relax is not None:
        result["relaxation"] = {
            "objective": relax.objective,
            "gap": relax.gap,
            "iterations": relax.iterations,
        }
    _write(result, args.output)
    return EXIT_OK


def _load_network(graph_path: str, sidecar: str | None) -> NetworkDesignInstance:
    G = read_edge_list(graph_path)
    data = load_sidecar(sidecar) if sidecar else {}
    return NetworkDesignInstance.from_sidecar(G, data)


def cmd_netdesign(args) -> int:
    nd = _load_network(args.input, args.sidecar)
    sol = round_network(nd, args.eps, args.seed, args.q_cap)
    result = sol.to_dict()
    result["eps_band"] = 1e-7
    _write(result, args.output)
    if args.emit_history:
        _write_history(sol.certificate, args.emit_history)
    if not sol.report.passed:
        print("constraint report failed: " + _failed_families(sol.report), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _failed_families(report) -> str:
    return ", ".join(f.name for f in report.families if f.passed is False)


def _verify_rounding(cert: dict, args) -> dict:
    inst = VectorInstance.load(args.input)
    sel = np.asarray(cert["selected"], dtype=np.int64)
    if sel.size and (sel.min() < 0 or sel.max() >= inst.m):
        raise VerificationFailed("selected index out of range")
    if np.unique(sel).size != sel.size:
        raise VerificationFailed("selected indices repeat")
    lam = lambda_min(inst.vectors[sel].T @ inst.vectors[sel]) if sel.size else 0.0
    cost = float(inst.c[sel].sum())
    if cert["kind"] == "exact_round":
        need = 1.0 - EXACT_SLACK
    else:
        need = 1.0 - 2.0 * float(cert["eps"])
    checks = {
        "lambda_min": lam,
        "lambda_min_ok": lam >= need - VERIFY_TOL,
        "lambda_min_matches": abs(lam - float(cert["lambda_min"])) <= 1e-7,
        "cost": cost,
        "cost_matches": abs(cost - float(cert["cost"])) <= VERIFY_TOL * max(1.0, cost),
        "regret_slack_ok": float(cert["regret_slack"]) >= -1e-7,
    }
    checks["passed"] = all(v for k, v in checks.items() if k.endswith("_ok") or k.endswith("_matches"))
    return checks


def _verify_sparsify(cert: dict, args) -> dict:
    G = read_edge_list(args.input)
    edges = cert["edges"]
    rep = verify_additive(G, edges, float(cert["eps"]))
    d = max(rep.d, 1)
    result = rep.to_dict()
    matches = (
        abs(rep.upper / d - float(cert["upper_residual"])) <= 1e-7
        and abs(rep.lower_shifted / d - float(cert["lower_residual"])) <= 1e-7
    )
    result["residuals_match"] = bool(matches)
    result["distinct"] = len(set(edges)) == len(edges)
    result["passed"] = bool(matches and result["distinct"])
    return result


def _verify_network(cert: dict, args) -> dict:
    nd = _load_network(args.input, args.sidecar)
    z = np.asarray(cert["z"], dtype=float)
    if z.shape[0] != nd.graph.m or np.any(z[nd.x <= 0] > 0):
        raise VerificationFailed("z has the wrong length or selects outside the support")
    rep = verify_spectral_implications(nd, z, float(cert.get("eps_band", 1e-7)))
    return rep.to_dict()


def _verify_design(cert: dict, args) -> dict:
    p = DesignProblem.load(args.input)
    z = np.asarray(cert["z"], dtype=float)
    x = np.asarray(cert["x"], dtype=float)
    budget = float(p.instance.c @ x)
    ratio = moment_ratio(p.instance, x, z)
    eps = float(cert["eps"])
    cost = float(p.instance.c @ z)
    checks = {
        "cost": cost,
        "budget": budget,
        "budget_ok": cost <= budget,
        "lambda_ratio": ratio,
        "ratio_ok": ratio >= 1.0 - 4.0 * eps - 1e-7,
    }
    checks["passed"] = checks["budget_ok"] and checks["ratio_ok"]
    return checks


def _verify_two_sided(cert: dict, args) -> dict:
    inst = VectorInstance.load(args.input)
    rep = verify_two_sided(inst, cert["z"], float(cert["eps"]), float(cert.get("band", 8.0)))
    return rep.to_dict()


def cmd_verify(args) -> int:
    try:
        cert = json.loads(Path(args.certificate).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    kind = cert.get("kind")
    handlers = {
        "randomized_swap": _verify_rounding,
        "exact_round": _verify_rounding,
        "sparsify": _verify_sparsify,
        "netdesign": _verify_network,
        "design": _verify_design,
        "two_sided": _verify_two_sided,
    }
    if kind not in handlers:
        raise InvalidInstance(f"unknown certificate kind {kind!r}")
    result = handlers[kind](cert, args)
    result = {"kind": kind, **result}
    _write(result, args.output)
    if not result["passed"]:
        print(f"verification failed for {kind} certificate", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_concheck(args) -> int:
    ok = True
    rows = []
    summary = []
    for i, chain in enumerate(default_chains()):
        rep = simulate_and_check(chain, args.etas, args.trials, args.seed + i)
        rows.extend(rep.rows)
        ok &= rep.passed
        summary.append({"chain": rep.chain, "horizon": rep.horizon, "passed": rep.passed})
    if args.csv:
        write_rows_csv(args.csv, rows)
    _write({"kind": "concheck", "trials": args.trials, "chains": summary, "passed": ok}, args.output)
    return EXIT_OK if ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specround", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, eps_default, with_seed=True):
        p.add_argument("--eps", type=float, default=eps_default)
        if with_seed:
            p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("-o", "--output", help="write JSON here instead of stdout")

    for name in ("round", "exact-round"):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} a vector instance (JSON)")
        p.add_argument("input")
        common(p, 0.2)
        p.add_argument("--q-cap", type=float, default=4.0)
        p.add_argument("--emit-history", metavar="CSV")

    p = sub.add_parser("sparsify", help="greedy additive sparsifier of an edge-list graph")
    p.add_argument("input")
    common(p, 0.5, with_seed=False)
    p.add_argument("--q", type=float, default=0.1)

    p = sub.add_parser("design", help="solve and round an experimental design problem")
    p.add_argument("input")
    common(p, 0.2)
    p.add_argument("--q-cap", type=float, default=4.0)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("netdesign", help="round a fractional network design")
    p.add_argument("input", help="edge list; weights hold x")
    p.add_argument("--sidecar", help="JSON with requirements and bounds")
    common(p, 0.2)
    p.add_argument("--q-cap", type=float, default=4.0)
    p.add_argument("--emit-history", metavar="CSV")

    p = sub.add_parser("verify", help="re-verify an emitted certificate")
    p.add_argument("certificate")
    p.add_argument("--input", required=True, help="the instance the certificate is for")
    p.add_argument("--sidecar")
    p.add_argument("-o", "--output")

    p = sub.add_parser("concheck", help="validate the tail bounds by simulation")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--etas", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    p.add_argument("--csv", help="write the tail table here")
    p.add_argument("-o", "--output")
    return parser


def _thread_limit():
    value = os.environ.get("SPECROUND_THREADS")
    if not value:
        return contextlib.nullcontext()
    try:
        limit = max(1, int(value))
    except ValueError:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=limit)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "round": lambda a: cmd_round(a, exact=False),
        "exact-round": lambda a: cmd_round(a, exact=True),
        "sparsify": cmd_sparsify,
        "design": cmd_design,
        "netdesign": cmd_netdesign,
        "verify": cmd_verify,
        "concheck": cmd_concheck,
    }
    try:
        with _thread_limit():
            return handlers[args.command](args)
    except IterationCapExceeded as exc:
        print(f"iteration cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except UnluckyRun as exc:
        print(f"retries exhausted: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (CertificateViolation, NumericalFailure, VerificationFailed) as exc:
        print(f"certificate violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (InvalidInstance, GraphError, NotIsotropic, BudgetTooSmall, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
