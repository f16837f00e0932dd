"""Command-line surface: analyze, scan, simulate, gen, verify.

Exit codes: 0 success, 1 analysis failure, 2 input error. All file outputs
are byte-deterministic for identical inputs and seeds. Logging verbosity is
controlled by the GAPBOUND_LOG environment variable (error, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import ensembles, io, verify
from .bound import bound_verdict
from .dynamics import DynamicsError, jump_process_sample, relaxation_rate, evolve
from .generator import (
    DetailedBalanceError,
    GeneratorError,
    GeneratorMatrix,
    check_detailed_balance,
    generator_from_matrix,
    symmetrize,
)
from .spectra import EigensolverError, HermitianOperator, SpectraError

log = logging.getLogger("gapbound")

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_INPUT = 2


class InputError(Exception):
    """Raised for problems that map to exit code 2."""


class AnalysisError(Exception):
    """Raised for problems that map to exit code 1."""


def _configure_logging():
    level = os.environ.get("GAPBOUND_LOG", "error").lower()
    mapping = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=mapping.get(level, logging.ERROR), format="%(levelname)s %(message)s")


def _load_input(path):
    """Load either an edge-list generator or a matrix-dump operator file."""
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        first = ""
        for raw in fh:
            first = raw.split("#", 1)[0].strip()
            if first:
                break
    if not first:
        raise InputError(f"{path}: empty file")
    try:
        if first.startswith(io.EDGE_LIST_MAGIC.split()[0]):
            return io.read_edge_list(path)
        return io.read_matrix(path)
    except io.FileFormatError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _resolve_g(args, M: int) -> float:
    if args.g is not None and args.alpha is not None:
        raise InputError("--g and --alpha are mutually exclusive")
    if args.g is not None:
        if args.g <= 0:
            raise InputError("--g must be positive")
        return args.g
    if args.alpha is not None:
        if not 0 < args.alpha < 1:
            raise InputError("--alpha must lie in (0, 1)")
        return 1.0 / math.log(M) ** args.alpha
    raise InputError("provide --g or --alpha")


def cmd_analyze(args) -> int:
    loaded = _load_input(args.input)
    try:
        if isinstance(loaded, GeneratorMatrix):
            if loaded.is_symmetric:
                H = HermitianOperator.from_matrix(loaded.matrix)
            else:
                H = symmetrize(loaded, check_detailed_balance(loaded))
        else:
            H = HermitianOperator.from_matrix(loaded)
    except SpectraError as exc:
        raise InputError(f"{args.input}: {exc}") from exc
    except (DetailedBalanceError, GeneratorError) as exc:
        raise AnalysisError(str(exc)) from exc
    g = _resolve_g(args, H.size)
    try:
        report = bound_verdict(H, g, ergodicity_threshold=args.ergodicity_tol)
    except (EigensolverError, SpectraError, ValueError) as exc:
        raise AnalysisError(str(exc)) from exc
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(io.report_to_json(report))
        log.info("report written to %s", args.out)
    print(f"{report.verdict} {report.ratio!r} {report.mu2!r} {report.min_V!r}")
    return EXIT_OK


def cmd_scan(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {args.spec}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"{args.spec}: spec must be a JSON object")
    known = {f for f in ensembles.EnsembleSpec.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"unknown spec field(s): {', '.join(sorted(unknown))}")
    try:
        spec = ensembles.EnsembleSpec(**raw)
    except (ensembles.EnsembleError, TypeError) as exc:
        raise InputError(str(exc)) from exc
    rows = ensembles.scan(spec, jobs=args.jobs)
    io.write_scan_csv(args.out, rows)
    ratios = [r.ratio for r in rows if not math.isnan(r.ratio)]
    lo = min(ratios) if ratios else math.nan
    hi = max(ratios) if ratios else math.nan
    print(f"rows={len(rows)} min_ratio={lo!r} max_ratio={hi!r} out={args.out}")
    errors = [r for r in rows if r.verdict.startswith("error")]
    return EXIT_ANALYSIS if errors else EXIT_OK


def _parse_p0(text: str, M: int):
    if text == "uniform":
        return np.full(M, 1.0 / M), None
    if text.startswith("delta:"):
        try:
            n = int(text.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad delta spec {text!r}") from None
        if not 1 <= n <= M:
            raise InputError(f"delta state {n} outside 1..{M}")
        p0 = np.zeros(M)
        p0[n - 1] = 1.0
        return p0, n
    if not os.path.exists(text):
        raise InputError(f"p0 file not found: {text}")
    values = np.loadtxt(text)
    values = np.atleast_1d(values)
    if values.shape != (M,):
        raise InputError(f"p0 file has shape {values.shape}, expected ({M},)")
    if (values < 0).any() or values.sum() <= 0:
        raise InputError("p0 is not normalizable")
    return values / values.sum(), None


def cmd_simulate(args) -> int:
    loaded = _load_input(args.input)
    if not isinstance(loaded, GeneratorMatrix):
        loaded = generator_from_matrix(loaded)
    if not loaded.is_valid_generator:
        raise InputError(f"{args.input}: not a valid generator")
    p0, delta_state = _parse_p0(args.p0, loaded.size)
    if args.t_max < 0:
        raise InputError("--t-max must be non-negative")
    if args.t_max == 0:
        times = np.array([0.0])
    else:
        times = np.linspace(0.0, args.t_max, max(2, args.t_points))
    try:
        traj = evolve(loaded, p0, times)
    except (DynamicsError, GeneratorError) as exc:
        raise AnalysisError(str(exc)) from exc
    io.write_trajectory_csv(args.out, traj)
    summary = [f"trajectory={args.out}"]
    code = EXIT_OK
    try:
        fit = relaxation_rate(loaded, p0)
        fit_path = args.out + ".fit.json"
        with open(fit_path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "rate": fit.rate,
                    "prefactor": fit.prefactor,
                    "window": list(fit.window),
                    "residual": fit.residual,
                    "n_points": fit.n_points,
                    "flagged": fit.flagged,
                    "spectral_mu2": fit.spectral_mu2,
                },
                fh,
                indent=2,
            )
            fh.write("\n")
        summary.append(f"fitted_rate={fit.rate!r} spectral_mu2={fit.spectral_mu2!r}")
    except (DynamicsError, GeneratorError) as exc:
        summary.append(f"fit_failed={exc}")
        code = EXIT_ANALYSIS
    if args.jump_process:
        if delta_state is None:
            raise InputError("--jump-process requires a delta:<n> initial condition")
        hist = jump_process_sample(
            loaded, delta_state, args.t_max, args.seed, repetitions=args.jump_process
        )
        hist_path = args.out + ".hist.csv"
        io.write_histogram_csv(hist_path, hist)
        summary.append(f"histogram={hist_path} reps={hist.repetitions} seed={args.seed}")
    print(" ".join(summary))
    return code


def cmd_gen(args) -> int:
    try:
        if args.family == "complete":
            L = ensembles.complete_graph(args.size)
        elif args.family == "cycle":
            L = ensembles.cycle_graph(args.size)
        elif args.family == "star":
            L = ensembles.star_graph(args.size)
        elif args.family == "random-regular":
            if args.k is None:
                raise InputError("random-regular needs --k")
            L = ensembles.random_regular(args.size, args.k, args.seed)
        elif args.family == "er-connected":
            if args.p is None:
                raise InputError("er-connected needs --p")
            L = ensembles.er_connected(args.size, args.p, args.seed)
        elif args.family == "metropolis":
            base = (
                ensembles.complete_graph(args.size)
                if args.base == "complete"
                else ensembles.cycle_graph(args.size)
            )
            L = ensembles.metropolis_chain(
                None, args.beta, base, seed=args.seed, energy_scale=args.energy_scale
            )
        else:  # pragma: no cover - argparse restricts choices
            raise InputError(f"unknown family {args.family!r}")
        if args.rescale_alpha is not None:
            L = ensembles.infinitesimal_rescale(L, args.rescale_alpha)
    except ensembles.EnsembleError as exc:
        raise InputError(str(exc)) from exc
    io.write_edge_list(args.out, L)
    print(f"family={args.family} M={L.size} out={args.out} seed={args.seed}")
    return EXIT_OK


verify_run_all = verify.run_all


def cmd_verify(args) -> int:
    results = verify_run_all(args.scale)
    failed = [r for r in results if not r.ok]
    print(f"suites={len(results)} failed={len(failed)}")
    return EXIT_ANALYSIS if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapbound",
        description="Spectral-gap lower-bound diagnostics for master equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the bound diagnostics on an operator or generator file")
    p.add_argument("input", help="edge-list generator or matrix-dump operator file")
    p.add_argument("--g", type=float, default=None, help="hypothesis envelope value g (default: none)")
    p.add_argument("--alpha", type=float, default=None,
                   help="envelope exponent, g = 1/(ln M)^alpha, alpha in (0,1) (default: none)")
    p.add_argument("--ergodicity-tol", type=float, default=1e-3,
                   help="threshold on min |u_n| (default: 1e-3)")
    p.add_argument("--out", default=None, help="write the JSON report here (default: stdout only)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan", help="run an ensemble scan from a JSON spec")
    p.add_argument("spec", help="EnsembleSpec JSON file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--jobs", type=int, default=1, help="parallel rows (default: 1)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="integrate the master equation and fit the relaxation rate")
    p.add_argument("input", help="generator file (edge list or matrix dump)")
    p.add_argument("--p0", default="uniform",
                   help="initial condition: uniform, delta:<n>, or a vector file (default: uniform)")
    p.add_argument("--t-max", type=float, default=10.0, help="time horizon (default: 10)")
    p.add_argument("--t-points", type=int, default=64, help="trajectory grid size (default: 64)")
    p.add_argument("--seed", type=int, default=1, help="jump-process seed (default: 1)")
    p.add_argument("--jump-process", type=int, default=None, metavar="R",
                   help="also sample R jump-process repetitions (default: off)")
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="write an ensemble instance as an edge-list file")
    p.add_argument("family", choices=ensembles.FAMILIES)
    p.add_argument("--size", type=int, required=True, help="number of states M")
    p.add_argument("--k", type=int, default=None, help="degree for random-regular (default: none)")
    p.add_argument("--p", type=float, default=None, help="edge probability for er-connected (default: none)")
    p.add_argument("--beta", type=float, default=1.0, help="inverse temperature (default: 1)")
    p.add_argument("--energy-scale", type=float, default=1.0, help="energy scale (default: 1)")
    p.add_argument("--base", choices=("complete", "cycle"), default="complete",
                   help="metropolis base graph (default: complete)")
    p.add_argument("--rescale-alpha", type=float, default=None,
                   help="rescale rates onto the 1/(ln M)^alpha envelope (default: off)")
    p.add_argument("--seed", type=int, default=1, help="instance seed (default: 1)")
    p.add_argument("--out", required=True, help="output edge-list path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--scale", choices=("small", "full"), default="small",
                   help="suite size (default: small)")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnalysisError as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
