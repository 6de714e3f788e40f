"""Command-line entry point: ``eipstab <subcommand> ...``.

Exit codes: 0 success (or certified), 2 not certified (``certify`` only),
1 any error including bad usage.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .certify import LyapunovWeights, certify_theorem1, q_matrix, verify_lemma1
from .dampopt import DEFAULT_GAP_TOL, damping_for_margin, pareto_sweep, solve_min_damping
from .eip import eip_profile, region_table
from .interconnect import build_matrices
from .netmodel import (
    DEFAULT_SETPOINT_TOL,
    NetworkError,
    load_network,
    save_network,
    validate_setpoints,
)
from .output import csv_text, dumps_json, matrix_csv
from .sim import SimConfig, SimulationError, gen_synthetic_feeder, parse_initial, simulate

log = logging.getLogger("eipstab")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CERTIFIED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _digest(path) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class _Run:
    """Collects primary output and writes it together with a run manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.start = time.perf_counter()

    def manifest(self) -> dict:
        return {
            "tool": "eipstab",
            "version": __version__,
            "subcommand": self.args.command,
            "argv": self.argv,
            "input_sha256": _digest(getattr(self.args, "network", None)),
            "wall_time_s": time.perf_counter() - self.start,
        }

    def emit(self, text: str, out: str | None = None) -> None:
        if not text.endswith("\n"):
            text += "\n"
        if out:
            Path(out).write_text(text)
            Path(str(out) + ".manifest.json").write_text(dumps_json(self.manifest()) + "\n")
        else:
            sys.stdout.write(text)
            self.stderr_manifest()

    def stderr_manifest(self) -> None:
        if self.args.manifest:
            Path(self.args.manifest).write_text(dumps_json(self.manifest()) + "\n")
        elif not self.args.quiet:
            sys.stderr.write("manifest: " + dumps_json(self.manifest(), indent=0) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args, run: _Run) -> int:
    net = load_network(args.network)
    rep = validate_setpoints(net, args.tol)
    doc = {
        "n": net.n,
        "m": net.m,
        "setpoints_consistent": rep.consistent,
        "tol": rep.tol,
        "residuals": rep.residuals,
        "flagged_buses": [net.buses[k].id for k in rep.flagged],
    }
    run.emit(dumps_json(doc), args.out)
    return EXIT_ERROR if (args.strict and not rep.consistent) else EXIT_OK


def cmd_matrices(args, run: _Run) -> int:
    net = load_network(args.network)
    mats = build_matrices(net, algorithm1_compat=args.algorithm1_compat)
    if not mats.dense:
        raise NetworkError("network too large for dense matrix export")
    blocks = {
        "phi_nl": mats.phi_nl,
        "phi_ln": mats.phi_ln,
        "psi": mats.psi,
        "m1": mats.m1,
        "m2": mats.m2,
    }
    if args.format == "json" or args.json:
        run.emit(dumps_json({k: v for k, v in blocks.items()}), args.out)
        return EXIT_OK
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, mat in blocks.items():
        (out_dir / f"{name}.csv").write_text(matrix_csv(mat))
    (out_dir / "manifest.json").write_text(dumps_json(run.manifest()) + "\n")
    return EXIT_OK


def cmd_certify(args, run: _Run) -> int:
    net = load_network(args.network)
    if args.damping:
        net = net.with_damping(json.loads(Path(args.damping).read_text()))
    mats = build_matrices(net, algorithm1_compat=args.algorithm1_compat)
    eps = eip_profile(net)
    q = q_matrix(net, mats, eps)
    rep = certify_theorem1(net, q)
    doc = {
        "feasible": rep.feasible,
        "margin": rep.margin,
        "sigma": rep.sigma,
        "per_bus_slack": rep.per_bus_slack,
    }
    certified = rep.feasible
    if args.c_file:
        c = np.asarray(json.loads(Path(args.c_file).read_text()), dtype=float)
        ok, lam_max = verify_lemma1(mats, eps, LyapunovWeights(c))
        doc["lemma1"] = {"feasible": ok, "lambda_max": lam_max}
        certified = ok
    run.emit(dumps_json(doc), args.out)
    return EXIT_OK if certified else EXIT_NOT_CERTIFIED


def cmd_optimize(args, run: _Run) -> int:
    net = load_network(args.network)
    if args.beta is not None and args.beta_file:
        raise UsageError("use either --beta or --beta-file")
    if args.beta is not None or args.beta_file:
        if args.beta_file:
            raw = json.loads(Path(args.beta_file).read_text())
            beta = [raw[str(ln.id)] for ln in net.lines] if isinstance(raw, dict) else raw
        else:
            beta = args.beta
        alphas, sol = damping_for_margin(net, beta, args.gap_tol, args.norm)
    else:
        alphas = net.alpha
        sol = solve_min_damping(q_matrix(net), args.gap_tol, args.norm)
    tuned = net.with_alphas(alphas).with_damping(sol.d)
    doc = {
        "alphas": alphas,
        "d": sol.d,
        "norm": sol.objective,
        "norm_type": sol.norm,
        "margin": sol.margin,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "certified": certify_theorem1(tuned).feasible,
    }
    if args.write_network:
        save_network(tuned, args.write_network)
    run.emit(dumps_json(doc), args.out)
    return EXIT_OK if sol.converged else EXIT_ERROR


PARETO_HEADER = ["alpha", "gamma", "region_width", "min_norm", "feasible"]


def cmd_pareto(args, run: _Run) -> int:
    net = load_network(args.network)
    points = pareto_sweep(
        net,
        args.line,
        args.alpha_min,
        args.alpha_max,
        args.steps,
        gap_tol=args.gap_tol,
        norm=args.norm,
        threads=args.threads,
    )
    if args.json:
        rows = [
            dict(zip(PARETO_HEADER, (p.alpha, p.gamma, p.region_width, p.min_damping_norm, p.feasible)))
            for p in points
        ]
        run.emit(dumps_json(rows), args.out)
    else:
        rows = [
            (p.alpha, p.gamma, p.region_width, p.min_damping_norm, p.feasible) for p in points
        ]
        run.emit(csv_text(PARETO_HEADER, rows), args.out)
    return EXIT_OK


def cmd_simulate(args, run: _Run) -> int:
    net = load_network(args.network)
    x0 = parse_initial(args.initial, net) if args.initial else net.delta_star.copy()
    cfg = SimConfig(t_end=args.t_end, dt=args.dt, record_every=args.record_every)
    traj = simulate(net, x0, cfg)
    header = ["t"] + [f"delta_{b.id}" for b in net.buses] + ["V"]
    if args.json:
        doc = {"t": traj.times, "delta": traj.states.tolist(), "V": traj.lyapunov}
        run.emit(dumps_json(doc), args.out)
    else:
        rows = (
            [t, *x, v] for t, x, v in zip(traj.times, traj.states, traj.lyapunov)
        )
        run.emit(csv_text(header, rows), args.out)
    return EXIT_OK


REGION_HEADER = [
    "line", "from", "to", "gamma", "eip_lo", "eip_hi",
    "delta_star_ij", "stab_lo", "stab_hi", "width",
]


def cmd_region(args, run: _Run) -> int:
    net = load_network(args.network)
    rows = region_table(net, args.beta)
    if args.json:
        run.emit(dumps_json(rows), args.out)
        return EXIT_OK
    header = REGION_HEADER + (["alpha_min"] if args.beta is not None else [])
    run.emit(csv_text(header, ([r[h] for h in header] for r in rows)), args.out)
    return EXIT_OK


def cmd_gen(args, run: _Run) -> int:
    net = gen_synthetic_feeder(
        args.buses, args.topology, args.seed, damping=args.damping, alpha=args.alpha
    )
    if args.out:
        save_network(net, args.out)
        Path(str(args.out) + ".manifest.json").write_text(dumps_json(run.manifest()) + "\n")
    else:
        from .netmodel import network_to_dict

        sys.stdout.write(dumps_json(network_to_dict(net)) + "\n")
        run.stderr_manifest()
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _global_flags(parser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--quiet", action="store_true", default=default(False),
                        help="no diagnostics on stderr")
    parser.add_argument("--json", action="store_true", default=default(False),
                        help="force JSON on stdout")
    parser.add_argument("--threads", type=int, default=default(1),
                        help="worker threads for sweeps")
    parser.add_argument("--manifest", default=default(None),
                        help="write the run manifest here instead of stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="eipstab",
        description="Transient-stability certificates for lossy distribution networks.",
    )
    parser.add_argument("--version", action="version", version=f"eipstab {__version__}")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "load a network and report setpoint residuals")
    p.add_argument("network")
    p.add_argument("--tol", type=float, default=DEFAULT_SETPOINT_TOL)
    p.add_argument("--strict", action="store_true", help="exit 1 when setpoints are inconsistent")
    p.add_argument("--out")

    p = add("matrices", cmd_matrices, "export the interconnection matrices")
    p.add_argument("network")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out-dir", help="directory for the CSV files")
    p.add_argument("--out", help="file for the JSON document")
    p.add_argument("--algorithm1-compat", action="store_true")

    p = add("certify", cmd_certify, "check the damping certificate")
    p.add_argument("network")
    p.add_argument("--c-file", help="JSON array of Lyapunov weights (length n+2m)")
    p.add_argument("--damping", help="JSON file with an array overriding the d_a values")
    p.add_argument("--algorithm1-compat", action="store_true")
    p.add_argument("--out")

    p = add("optimize", cmd_optimize, "least-norm certified damping")
    p.add_argument("network")
    p.add_argument("--beta", type=float, help="angle margin for every line, rad")
    p.add_argument("--beta-file", help="JSON list (line order) or {line_id: beta}")
    p.add_argument("--gap-tol", type=float, default=DEFAULT_GAP_TOL)
    p.add_argument("--norm", choices=["l2", "l1"], default="l2")
    p.add_argument("--write-network", help="save the tuned network with the optimal d")
    p.add_argument("--out")

    p = add("pareto", cmd_pareto, "sweep alpha on one line")
    p.add_argument("network")
    p.add_argument("--line", type=int, required=True)
    p.add_argument("--alpha-min", type=float, default=0.1)
    p.add_argument("--alpha-max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--gap-tol", type=float, default=DEFAULT_GAP_TOL)
    p.add_argument("--norm", choices=["l2", "l1"], default="l2")
    p.add_argument("--out")

    p = add("simulate", cmd_simulate, "integrate the closed-loop dynamics")
    p.add_argument("network")
    p.add_argument("--initial", help='JSON array of angles or "perturb:<rad>:<seed>"')
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--out")

    p = add("region", cmd_region, "per-line EIP and stability intervals")
    p.add_argument("network")
    p.add_argument("--beta", type=float, help="margin for the minimal-alpha column, rad")
    p.add_argument("--out")

    p = add("gen", cmd_gen, "generate a synthetic feeder")
    p.add_argument("--buses", type=int, required=True)
    p.add_argument("--topology", choices=["radial", "meshed"], default="radial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--damping", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    run = _Run(args, argv)
    try:
        return args.func(args, run)
    except (NetworkError, SimulationError, ValueError, OSError, KeyError, UsageError,
            json.JSONDecodeError, RuntimeError) as exc:
        print(f"eipstab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
