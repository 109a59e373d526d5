"""Command-line front end.

Subcommands: ``optimize`` (one seeded scenario through the alternating
optimizer), ``sweep`` (power or location Monte-Carlo experiment),
``validate-config`` and ``gradcheck``.  Progress goes to stderr; stdout
carries a single machine-readable JSON summary.  Every output set is
accompanied by a manifest holding the fully resolved configuration, the
seed and the command line, and ``--from-manifest`` re-runs it so outputs
can be reproduced bit for bit regardless of ``--jobs``.

Exit codes: 0 success, 1 failed check (gradcheck), 2 configuration
error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__, core, simulator
from .channel import realization_rng, sample_scenario
from .core import ConfigError, SystemConfig
from .optimizer import gradient_check_suite, write_trace_csv
from .simulator import build_bs_precoder, solve_jamming

OUT_DIR_ENV = "MAJAM_OUT_DIR"
GRAD_TOLERANCE = 1e-5


def _default_jobs() -> int:
    return max(1, os.cpu_count() or 1)


def _resolve_out_dir(args) -> str:
    out = args.out_dir or os.environ.get(OUT_DIR_ENV) or "majam-out"
    os.makedirs(out, exist_ok=True)
    return out


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="ascii", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _load_config(args) -> SystemConfig:
    cfg = core.load_config(args.config) if args.config else SystemConfig()
    if getattr(args, "seed", None) is not None:
        cfg = core.with_master_seed(cfg, args.seed)
    if getattr(args, "runs", None) is not None:
        alg = dataclasses.replace(cfg.algorithm, monte_carlo_runs=args.runs)
        cfg = dataclasses.replace(cfg, algorithm=alg)
    if getattr(args, "paper_faithful", False):
        alg = dataclasses.replace(cfg.algorithm, paper_faithful=True)
        cfg = dataclasses.replace(cfg, algorithm=alg)
    return cfg


def _write_manifest(out_dir: str, command: str, cfg: SystemConfig,
                    extra: dict, outputs: dict, duration: float) -> str:
    manifest = {
        "tool": "majam",
        "version": __version__,
        "command": command,
        "argv": sys.argv[1:],
        "master_seed": cfg.algorithm.master_seed,
        "config": core.config_to_dict(cfg),
        "outputs": outputs,
        "duration_s": duration,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _complex_matrix_text(matrix: np.ndarray) -> str:
    lines = []
    for row in matrix:
        lines.append(" ".join(f"{float(v.real)!r},{float(v.imag)!r}"
                              for v in np.atleast_1d(row)))
    return "\n".join(lines) + "\n"


def _float_matrix_text(matrix: np.ndarray) -> str:
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in matrix) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate_config(args) -> int:
    cfg = _load_config(args)
    sys.stdout.write(core.format_config(cfg))
    return 0


def cmd_optimize(args) -> int:
    if args.from_manifest:
        with open(args.from_manifest, encoding="ascii") as handle:
            manifest = json.load(handle)
        cfg = core.config_from_dict(manifest["config"])
        args.mode = manifest["optimize"]["mode"]
        args.realization = manifest["optimize"]["realization"]
    else:
        cfg = _load_config(args)
    out_dir = _resolve_out_dir(args)
    start = time.monotonic()
    rng = realization_rng(cfg.algorithm.master_seed, args.realization)
    envs = sample_scenario(cfg, rng)
    precoder = build_bs_precoder(envs, cfg) if args.mode.endswith("full") else None
    beams, positions, trace = solve_jamming(envs, cfg, args.mode, precoder)
    outputs = {}
    trace_path = os.path.join(out_dir, "trace.csv")
    if trace is not None:
        write_trace_csv(trace, trace_path)
        outputs["trace_csv"] = trace_path
    v_path = os.path.join(out_dir, "beams.txt")
    p_path = os.path.join(out_dir, "positions.txt")
    _atomic_write(v_path, _complex_matrix_text(beams))
    _atomic_write(p_path, _float_matrix_text(positions))
    outputs["beams"] = v_path
    outputs["positions"] = p_path
    duration = time.monotonic() - start
    manifest = _write_manifest(
        out_dir, "optimize", cfg,
        {"optimize": {"mode": args.mode, "realization": args.realization}},
        outputs, duration)
    summary = {
        "command": "optimize",
        "mode": args.mode,
        "jam_objective": None if trace is None or not trace.objective
        else trace.objective[-1],
        "termination": None if trace is None else trace.termination,
        "outputs": outputs,
        "manifest": manifest,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _sweep_from_args(cfg: SystemConfig, args):
    modes = tuple(args.modes.split(",")) if args.modes else None
    progress = None
    if not args.quiet:
        def progress(done, total):
            if done == total or done % 50 == 0:
                print(f"sweep: {done}/{total} realizations", file=sys.stderr)
    if args.axis == "power":
        values = tuple(float(v) for v in args.powers.split(",")) \
            if args.powers else None
        return simulator.sweep_power(cfg, values, modes, jobs=args.jobs,
                                     progress=progress)
    values = tuple(float(v) for v in args.x_coords.split(",")) \
        if args.x_coords else None
    return simulator.sweep_jammer_location(cfg, values, modes, jobs=args.jobs,
                                           progress=progress)


def cmd_sweep(args) -> int:
    if args.from_manifest:
        with open(args.from_manifest, encoding="ascii") as handle:
            manifest = json.load(handle)
        cfg = core.config_from_dict(manifest["config"])
        sweep_info = manifest["sweep"]
        args.axis = sweep_info["axis"]
        args.modes = ",".join(sweep_info["modes"])
        if args.axis == "power":
            args.powers = ",".join(repr(v) for v in sweep_info["values"])
        else:
            args.x_coords = ",".join(repr(v) for v in sweep_info["values"])
    else:
        cfg = _load_config(args)
    out_dir = _resolve_out_dir(args)
    start = time.monotonic()
    result = _sweep_from_args(cfg, args)
    raw_path = os.path.join(out_dir, "raw.csv")
    agg_path = os.path.join(out_dir, "aggregate.csv")
    # Write-then-rename so an interrupted run never leaves partial CSVs.
    simulator.write_raw_csv(result, raw_path + ".tmp")
    os.replace(raw_path + ".tmp", raw_path)
    simulator.write_aggregate_csv(result, agg_path + ".tmp")
    os.replace(agg_path + ".tmp", agg_path)
    outputs = {"raw_csv": raw_path, "aggregate_csv": agg_path}
    duration = time.monotonic() - start
    manifest_path = _write_manifest(
        out_dir, "sweep", cfg,
        {"sweep": {"axis": "power" if result.axis_name == "power_w" else "location",
                   "values": list(result.axis_values),
                   "modes": list(result.modes),
                   "runs": result.runs}},
        outputs, duration)
    summary = {
        "command": "sweep",
        "axis": result.axis_name,
        "points": len(result.axis_values),
        "modes": list(result.modes),
        "runs": result.runs,
        "outputs": outputs,
        "manifest": manifest_path,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_gradcheck(args) -> int:
    cfg = _load_config(args)
    report = gradient_check_suite(cfg, instances=args.instances, seed=args.seed or 0)
    print(f"position gradient: max relative error {report.position_error:.3e} "
          f"over {report.instances} instances")
    print(f"beamforming gradient: max relative error {report.beam_error:.3e}")
    print(f"sum-rate gradient: max relative error {report.sum_rate_error:.3e}")
    ok = report.max_error() < GRAD_TOLERANCE
    print("gradcheck " + ("PASS" if ok else "FAIL")
          + f" (tolerance {GRAD_TOLERANCE:g})")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="majam",
        description="Movable-antenna jammer simulator and optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="TOML config file (defaults if omitted)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out-dir",
                       help=f"output directory (default ${OUT_DIR_ENV} or majam-out)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output on stderr")

    p_val = sub.add_parser("validate-config",
                           help="parse, validate and print the resolved config")
    p_val.add_argument("--config", help="TOML config file")
    p_val.set_defaults(func=cmd_validate_config)

    p_opt = sub.add_parser("optimize",
                           help="run one seeded scenario through the optimizer")
    add_common(p_opt)
    p_opt.add_argument("--mode", default="ma-partial",
                       choices=[m for m in core.JAM_MODES if m != "none"])
    p_opt.add_argument("--realization", type=int, default=0,
                       help="realization index fed to the seed scheme")
    p_opt.add_argument("--paper-faithful", action="store_true",
                       help="disable the trust region in position steps")
    p_opt.add_argument("--from-manifest",
                       help="re-run the optimization recorded in a manifest.json")
    p_opt.set_defaults(func=cmd_optimize)

    p_sweep = sub.add_parser("sweep", help="run a Monte-Carlo sweep")
    add_common(p_sweep)
    p_sweep.add_argument("--axis", choices=("power", "location"),
                         default="power")
    p_sweep.add_argument("--modes", help="comma-separated jamming modes")
    p_sweep.add_argument("--powers", help="comma-separated powers in watts")
    p_sweep.add_argument("--x-coords", help="comma-separated x positions in m")
    p_sweep.add_argument("--runs", type=int, help="Monte-Carlo realizations")
    p_sweep.add_argument("--jobs", type=int, default=_default_jobs(),
                         help="concurrent realizations (results independent of it)")
    p_sweep.add_argument("--paper-faithful", action="store_true")
    p_sweep.add_argument("--from-manifest",
                         help="re-run the sweep recorded in a manifest.json")
    p_sweep.set_defaults(func=cmd_sweep)

    p_grad = sub.add_parser("gradcheck",
                            help="finite-difference audit of the analytic gradients")
    p_grad.add_argument("--config", help="TOML config file")
    p_grad.add_argument("--seed", type=int, help="seed for the random instances")
    p_grad.add_argument("--instances", type=int, default=100)
    p_grad.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
