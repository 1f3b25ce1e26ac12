"""Command-line front end: run the optimization, certify state files,
compute robustness and emit scan curves.

Exit codes: 0 success, 2 when an optimization finished without finding a
violation of the separable bound, 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .conic import SolverOptions
from .core import (JZ_QUBIT, DensityMatrix, DimensionSpec, PartitionMask,
                   hermitize, min_bipartite_negativity, partial_transpose,
                   split_diag)
from .metrology import qfi, separable_bound, skew_information, sld
from .programs import LambdaMin, NegativityCap, Ppt
from .seesaw import SeesawConfig, run, scan_lambda_min, scan_negativity, white_noise_robustness
from .programs import robustness_lower_bound
from .stateio import load_state, save_state

SCHEMA_VERSION = 1
# a violation below this margin is treated as solver noise, not usefulness
USEFUL_MARGIN = 1e-6


def g6(x) -> str:
    """6-significant-digit rendering used for all reported numbers."""
    if x is None:
        return "n/a"
    return f"{x:.6g}"


def parse_dims(text: str) -> DimensionSpec:
    """Accepts '4x4' style or comma lists like '2,2,2'."""
    text = text.strip().lower()
    if "x" in text:
        parts = text.split("x")
    else:
        parts = text.split(",")
    try:
        return DimensionSpec(tuple(int(p) for p in parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse dims {text!r}") from exc


def parse_mask(text: str, dims: DimensionSpec) -> PartitionMask:
    """'all', 'T1', or explicit splits like '1:23' (1-based party labels)."""
    text = text.strip()
    n = dims.n_parties
    if text.lower() == "all":
        return PartitionMask.all_bipartitions(n)
    if text.upper() == "T1":
        return PartitionMask.single({0}, n)
    if ":" in text:
        left = text.split(":")[0]
        parties = [int(c) - 1 for c in left.replace(",", "")]
        return PartitionMask.single(parties, n)
    raise argparse.ArgumentTypeError(f"cannot parse PPT mask {text!r}")


def build_local_ops(spec: str, dims: DimensionSpec) -> list[np.ndarray]:
    """Resolve an operator name to one local generator per party."""
    spec = spec.strip()
    if spec == "jz":
        if any(d != 2 for d in dims.local_dims):
            raise ValueError("operator 'jz' needs qubit parties")
        return [JZ_QUBIT] * dims.n_parties
    if spec == "jz12":
        if dims.local_dims != (2, 2, 2):
            raise ValueError("operator 'jz12' is defined on three qubits")
        return [JZ_QUBIT, JZ_QUBIT, np.zeros((2, 2))]
    if spec == "D":
        if dims.n_parties != 2 or dims.local_dims[0] != dims.local_dims[1]:
            raise ValueError("operator 'D' needs a bipartite d x d system")
        return [split_diag(dims.local_dims[0])] * 2
    if spec.startswith("file:"):
        op = load_state(spec[5:])
        ops = []
        for d in dims.local_dims:
            if op.shape != (d, d):
                raise ValueError(f"operator file shape {op.shape} does not fit party dim {d}")
            ops.append(hermitize(op))
        return ops
    raise ValueError(f"unknown operator spec {spec!r}")


def solver_options_from_args(args) -> SolverOptions:
    kwargs = {}
    if getattr(args, "solver", None):
        kwargs["solver"] = args.solver
    return SolverOptions.from_env(**kwargs)


def write_report(out_dir: str, payload: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def state_report(rho: DensityMatrix, local_ops, mask: PartitionMask) -> dict:
    """Certification block shared by verify and optimize."""
    from .core import collective_from_locals

    a = collective_from_locals(local_ops)
    fq = qfi(rho, a)
    bound = separable_bound(local_ops)
    pt_eigs = {}
    for subset in mask:
        pt = hermitize(rho.partial_transpose(subset))
        pt_eigs[mask.label(subset)] = float(np.linalg.eigvalsh(pt).min())
    ppt = all(v >= -1e-8 for v in pt_eigs.values()) if pt_eigs else True
    useful = ppt and fq > bound + USEFUL_MARGIN * max(1.0, bound)
    return {
        "trace": float(np.trace(rho.mat).real),
        "min_eigenvalue": float(np.linalg.eigvalsh(rho.mat).min()),
        "pt_min_eigenvalues": pt_eigs,
        "qfi": fq,
        "separable_bound": bound,
        "violation": fq - bound,
        "skew_information": skew_information(rho, a),
        "min_bipartite_negativity": min_bipartite_negativity(rho.mat, rho.dims),
        "ppt_on_mask": ppt,
        "useful": useful,
    }


def _load_config_defaults(subparsers: list[argparse.ArgumentParser], argv) -> None:
    """--config file supplies defaults; explicit flags win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        with open(known.config) as fh:
            data = json.load(fh)
        defaults = {k.replace("-", "_"): v for k, v in data.items()}
        for sp in subparsers:
            sp.set_defaults(**defaults)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise ValueError("missing required option(s): "
                         + ", ".join("--" + n.replace("_", "-") for n in missing))


def _common_opt_flags(p: argparse.ArgumentParser):
    p.add_argument("--dims", help="'4x4' or '2,2,2[,2]'")
    p.add_argument("--operator", help="jz | jz12 | D | file:<path>")
    p.add_argument("--ppt", default="all", help="all | T1 | 1:23 (default: all)")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-7, help="see-saw convergence tolerance")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--measurement", choices=["complex", "imag"], default="complex",
                   help="random-start ensemble; 'imag' keeps real problems real")
    p.add_argument("--solver", choices=["cvxopt", "clarabel", "scs"], default=None)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--config", help="JSON file with flag defaults")
    p.add_argument("--dump-program", action="store_true",
                   help="print the first SDP in a human-readable listing")


def _make_config(args, dims, mask, relaxation) -> SeesawConfig:
    local_ops = build_local_ops(args.operator, dims)
    return SeesawConfig(
        dims=dims,
        local_ops=tuple(local_ops),
        mask=mask,
        restarts=args.restarts,
        max_iterations=args.max_iter,
        convergence_tol=args.tol,
        rng_seed=args.seed,
        relaxation=relaxation,
        measurement=args.measurement,
        solver=solver_options_from_args(args),
    )


def cmd_optimize(args) -> int:
    _require(args, "dims", "operator")
    dims = parse_dims(args.dims)
    mask = parse_mask(args.ppt, dims)
    if args.lambda_min is not None and args.negativity is not None:
        print("error: --lambda-min and --negativity are mutually exclusive", file=sys.stderr)
        return 1
    relaxation = Ppt()
    if args.lambda_min is not None:
        relaxation = LambdaMin(args.lambda_min)
    if args.negativity is not None and args.negativity > 0:
        relaxation = NegativityCap(args.negativity)
    cfg = _make_config(args, dims, mask, relaxation)

    if args.dump_program:
        from .programs import FmQuery, build_fm_program
        from .seesaw import initial_x, random_measurement
        rng = np.random.default_rng(cfg.rng_seed)
        m = random_measurement(dims, rng, cfg.measurement)
        q = FmQuery(m, cfg.a, initial_x(m, cfg.a), 0.0, dims, mask, relaxation)
        print(build_fm_program(q).describe())

    t0 = time.time()
    trace = run(cfg)
    elapsed = time.time() - t0

    os.makedirs(args.out, exist_ok=True)
    state_files = save_state(os.path.join(args.out, "state"), trace.final_state.mat)
    cert = state_report(trace.final_state, cfg.local_ops, mask)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "optimize",
        "version": __version__,
        "config": cfg.to_dict(),
        "results": {"seesaw": trace.to_dict(state_file=state_files[0]),
                    "certification": cert},
        "timing_seconds": elapsed,
        "artifacts": {"state_files": state_files},
    }
    path = write_report(args.out, report)
    print(f"final QFI {g6(trace.final_qfi)} vs separable bound {g6(trace.separable_bound)} "
          f"(violation {g6(trace.violation)})")
    print(f"converged={trace.converged} restart={trace.restart_index} "
          f"iterations={len(trace.iterations)} time={g6(elapsed)}s")
    print(f"state -> {', '.join(state_files)}\nreport -> {path}")
    violated = trace.final_qfi > trace.separable_bound + USEFUL_MARGIN * max(
        1.0, trace.separable_bound)
    return 0 if violated else 2


def cmd_verify(args) -> int:
    _require(args, "dims", "operator")
    dims = parse_dims(args.dims)
    mask = parse_mask(args.ppt, dims)
    local_ops = build_local_ops(args.operator, dims)
    rho = DensityMatrix.from_solver(load_state(args.state), dims, eig_floor=0.0)
    cert = state_report(rho, local_ops, mask)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "version": __version__,
        "config": {"state": args.state, "dims": list(dims.local_dims),
                   "operator": args.operator, "ppt": args.ppt},
        "results": cert,
    }
    if args.out:
        path = write_report(args.out, report)
        print(f"report -> {path}")
    print(f"trace {g6(cert['trace'])}  min eigenvalue {g6(cert['min_eigenvalue'])}")
    for label, val in cert["pt_min_eigenvalues"].items():
        print(f"partial transpose {label}: min eigenvalue {g6(val)}")
    print(f"QFI {g6(cert['qfi'])}  separable bound {g6(cert['separable_bound'])}  "
          f"violation {g6(cert['violation'])}")
    print(f"skew information {g6(cert['skew_information'])}  "
          f"min bipartite negativity {g6(cert['min_bipartite_negativity'])}")
    verdict = "metrologically useful PPT state" if cert["useful"] \
        else "not a useful PPT state"
    print(verdict)
    return 0


def cmd_robustness(args) -> int:
    _require(args, "dims", "operator")
    dims = parse_dims(args.dims)
    mask = parse_mask(args.ppt, dims)
    local_ops = build_local_ops(args.operator, dims)
    from .core import collective_from_locals

    a = collective_from_locals(local_ops)
    rho = DensityMatrix.from_solver(load_state(args.state), dims, eig_floor=0.0)
    f_sep = separable_bound(local_ops)
    fq = qfi(rho, a)
    results: dict = {"qfi": fq, "separable_bound": f_sep}
    t0 = time.time()
    if fq <= f_sep:
        results["notice"] = "state does not beat the separable bound; robustness is 0"
        results["white_noise"] = 0.0
        results["ppt_lower_bound"] = 0.0
    else:
        if args.mode in ("white", "both"):
            results["white_noise"] = white_noise_robustness(rho, a, f_sep)
            print(f"white-noise robustness {g6(results['white_noise'])}")
        if args.mode in ("ppt-lb", "both"):
            m = sld(rho, a)
            p, best_x = robustness_lower_bound(
                rho, a, m, f_sep, mask, solver_options_from_args(args),
                grid_points=args.grid_points)
            results["ppt_lower_bound"] = p
            results["ppt_lower_bound_x"] = best_x
            print(f"PPT-noise robustness lower bound {g6(p)} (at X {g6(best_x)})")
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "robustness",
        "version": __version__,
        "config": {"state": args.state, "dims": list(dims.local_dims),
                   "operator": args.operator, "ppt": args.ppt, "mode": args.mode},
        "results": results,
        "timing_seconds": time.time() - t0,
    }
    if args.out:
        path = write_report(args.out, report)
        print(f"report -> {path}")
    return 0


def cmd_scan(args) -> int:
    _require(args, "dims", "operator", "scan_type", "grid")
    dims = parse_dims(args.dims)
    mask = parse_mask(args.ppt, dims)
    grid = [float(tok) for tok in args.grid.split(",") if tok.strip()]
    if not grid:
        print("error: empty grid", file=sys.stderr)
        return 1
    cfg = _make_config(args, dims, mask, Ppt())
    t0 = time.time()
    if args.scan_type == "negativity":
        points = scan_negativity(cfg, grid)
    else:
        points = scan_lambda_min(cfg, grid)
    elapsed = time.time() - t0

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, f"scan_{args.scan_type.replace('-', '_')}.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["constraint_value", "best_qfi", "converged", "error"])
        for pt in points:
            writer.writerow([pt.constraint_value,
                             "" if math.isnan(pt.qfi) else repr(pt.qfi),
                             pt.converged, pt.error or ""])
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "scan",
        "version": __version__,
        "config": {**cfg.to_dict(), "scan_type": args.scan_type, "grid": grid},
        "results": {"points": [pt.to_dict() for pt in points]},
        "timing_seconds": elapsed,
        "artifacts": {"csv": csv_path},
    }
    path = write_report(args.out, report)
    for pt in points:
        print(f"{args.scan_type}={g6(pt.constraint_value)}: QFI {g6(pt.qfi)} "
              f"converged={pt.converged}" + (f" error={pt.error}" if pt.error else ""))
    print(f"curve -> {csv_path}\nreport -> {path}")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = argparse.ArgumentParser(
        prog="pptmet",
        description="Search for PPT states beating the separable precision bound, "
                    "and certify or scan them.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="run the see-saw search")
    _common_opt_flags(p_opt)
    p_opt.add_argument("--lambda-min", type=float, default=None,
                       help="relax PPT to partial-transpose eigenvalues >= this")
    p_opt.add_argument("--negativity", type=float, default=None,
                       help="cap each bipartite negativity instead of PPT")
    p_opt.set_defaults(func=cmd_optimize)

    p_ver = sub.add_parser("verify", help="re-certify a state text file")
    p_ver.add_argument("state", help="state file (or base name of an _r/_i pair)")
    p_ver.add_argument("--dims")
    p_ver.add_argument("--operator")
    p_ver.add_argument("--ppt", default="all")
    p_ver.add_argument("--out", default=None)
    p_ver.add_argument("--config", help="JSON file with flag defaults")
    p_ver.set_defaults(func=cmd_verify)

    p_rob = sub.add_parser("robustness", help="noise robustness of a state file")
    p_rob.add_argument("state")
    p_rob.add_argument("--dims")
    p_rob.add_argument("--operator")
    p_rob.add_argument("--ppt", default="all", help="mask for the PPT-noise bound")
    p_rob.add_argument("--mode", choices=["white", "ppt-lb", "both"], default="both")
    p_rob.add_argument("--grid-points", type=int, default=33)
    p_rob.add_argument("--solver", choices=["cvxopt", "clarabel", "scs"], default=None)
    p_rob.add_argument("--out", default=None)
    p_rob.add_argument("--config", help="JSON file with flag defaults")
    p_rob.set_defaults(func=cmd_robustness)

    p_scan = sub.add_parser("scan", help="constraint-relaxation scan (CSV curve)")
    _common_opt_flags(p_scan)
    p_scan.add_argument("--scan-type", choices=["lambda-min", "negativity"])
    p_scan.add_argument("--grid", help="comma-separated values")
    p_scan.set_defaults(func=cmd_scan)

    _load_config_defaults([p_opt, p_ver, p_rob, p_scan], argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
