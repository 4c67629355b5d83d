"""Command-line interface: estimate, dim, simulate.

CSV input format: first row is a header, the column named "y" is the
response, every other column is a predictor in file order.  Exit codes
follow the usual convention: 0 success, 2 unreadable input, 3 estimation
failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .basis import build_basis
from .estimator import SolverOptions, run_samm, standardize
from .kernels import KernelSpec, MetricShape
from .locallinear import Dataset, compute_betas, data_driven_h1, local_linear_fit
from .pimax import dimension_scan
from .simgen import SimSpec, run_campaign

__all__ = [
    "main",
    "cmd_estimate",
    "cmd_simulate",
    "cmd_dim",
    "read_dataset_csv",
    "write_dataset_csv",
    "CliInputError",
]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3
EXIT_USAGE = 64


class CliInputError(Exception):
    """Unreadable or malformed input file."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the documented usage code is 64.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_dataset_csv(path: str) -> Dataset:
    """Parse a dataset CSV; raises CliInputError naming the path or line."""
    if not os.path.exists(path):
        raise CliInputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CliInputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "y" not in header:
            raise CliInputError(f"{path}: header must contain a 'y' column")
        y_idx = header.index("y")
        x_idx = [i for i in range(len(header)) if i != y_idx]
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CliInputError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise CliInputError(f"{path}: line {lineno}: {exc}") from None
            xs.append([vals[i] for i in x_idx])
            ys.append(vals[y_idx])
    try:
        return Dataset(X=np.array(xs, dtype=float), Y=np.array(ys, dtype=float))
    except ValueError as exc:
        raise CliInputError(f"{path}: {exc}") from None


def write_dataset_csv(path: str, data: Dataset) -> None:
    """Write a dataset in the CLI input format with full-precision floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(data.d)] + ["y"])
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in data.X[i]] + [repr(float(data.Y[i]))])


def _solver_options(args) -> SolverOptions:
    max_freq = "full" if args.max_freq is None else args.max_freq
    return SolverOptions(
        tol=args.tol,
        max_iter=args.max_iter,
        kernel=KernelSpec(args.kernel),
        max_freq=max_freq,
    )


def cmd_estimate(args) -> int:
    try:
        data = read_dataset_csv(args.input)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        result = run_samm(data, args.m_star, options=_solver_options(args))
    except Exception as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    m = args.m_star
    basis_vectors = [result.pi_relaxed_final.eigvecs[:, j].tolist() for j in range(m)]
    iterations = []
    if not args.quiet:
        iterations = [
            {
                "k": rec.k,
                "h": rec.h,
                "rho": rec.rho,
                "objective": rec.report.objective,
                "gap": rec.report.gap,
                "certified": rec.report.certified,
            }
            for rec in result.iterations
        ]
    sched = result.schedule
    payload = {
        "pi_hat": result.pi_hat.tolist(),
        "basis_vectors": basis_vectors,
        "iterations": iterations,
        "schedule": {
            "h1": sched.h1,
            "rho1": sched.rho1,
            "a_h": sched.a_h,
            "a_rho": sched.a_rho,
            "h_max": sched.h_max,
            "rho_min": sched.rho_min,
            "m_star": sched.m_star,
            "d": sched.d,
        },
        "config": {
            "command": "estimate",
            "input": args.input,
            "m_star": args.m_star,
            "tol": args.tol,
            "max_iter": args.max_iter,
            "kernel": args.kernel,
            "max_freq": args.max_freq,
            "quiet": args.quiet,
        },
        "version": __version__,
    }
    _emit(args.output, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        spec = SimSpec(
            example=f"ex{args.example}",
            n=args.n,
            d=args.d,
            sigma=args.sigma,
            reps=args.reps,
            seed=args.seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        summary = run_campaign(spec, options=_solver_options(args), threads=args.threads)
    except Exception as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    lines = ["rep,loss_first,loss_final"]
    for rep in range(spec.reps):
        lines.append(f"{rep},{float(summary.per_rep_first[rep])!r},{float(summary.per_rep_final[rep])!r}")
    lines.append(f"mean,{summary.mean_loss_first!r},{summary.mean_loss_final!r}")
    lines.append(f"std,{summary.std_first!r},{summary.std_final!r}")
    _emit(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_dim(args) -> int:
    try:
        data = read_dataset_csv(args.input)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        std_data, _, _ = standardize(data)
        h1 = data_driven_h1(std_data)
        shape = MetricShape(pi_hat=np.zeros((data.d, data.d)), rho=1.0, h=h1)
        grads = local_linear_fit(std_data, shape, ridge=1.0 / data.n, kernel=KernelSpec(args.kernel))
        max_freq = "full" if args.max_freq is None else args.max_freq
        betas = compute_betas(grads, build_basis(data.X, max_freq))
        profile, m_hat = dimension_scan(betas, tol=args.tol, max_iter=args.max_iter)
    except Exception as exc:
        print(f"dimension scan failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if args.format == "json":
        text = json.dumps({"R": profile.tolist(), "m_hat": m_hat}, indent=2) + "\n"
    else:
        lines = ["m,R"] + [f"{m + 1},{profile[m]!r}" for m in range(len(profile))]
        lines.append(f"m_hat,{m_hat}")
        text = "\n".join(lines) + "\n"
    _emit(args.output, text)
    return EXIT_OK


def _emit(path, text: str) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-6, help="relative certification tolerance")
    p.add_argument("--max-iter", type=int, default=5000, help="extraction iteration cap")
    p.add_argument("--kernel", choices=["linear_decay", "quartic"], default="linear_decay")
    p.add_argument("--max-freq", type=int, default=None, help="cap the basis frequency (default: full family)")
    p.add_argument("--output", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="samm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_est = sub.add_parser("estimate", help="estimate the index subspace from a CSV dataset")
    p_est.add_argument("--input", required=True, help="dataset CSV (column 'y' is the response)")
    p_est.add_argument("--m-star", type=int, required=True, dest="m_star", help="structural dimension")
    p_est.add_argument("--quiet", action="store_true", help="omit the iteration trace from the JSON")
    _add_solver_flags(p_est)
    p_est.set_defaults(func=cmd_estimate)

    p_dim = sub.add_parser("dim", help="residual profile R(m) and suggested dimension")
    p_dim.add_argument("--input", required=True)
    p_dim.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_solver_flags(p_dim)
    p_dim.set_defaults(func=cmd_dim)

    p_sim = sub.add_parser("simulate", help="run a seeded replication campaign")
    p_sim.add_argument("--example", type=int, choices=[1, 2, 3, 4], required=True)
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--d", type=int, default=None)
    p_sim.add_argument("--sigma", type=float, default=None)
    p_sim.add_argument("--reps", type=int, default=50)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("SAMM_THREADS", "1")),
        help="replication parallelism (default: SAMM_THREADS or 1)",
    )
    _add_solver_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
