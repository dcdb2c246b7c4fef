"""Command-line interface.

Subcommands: simulate, gridsearch, gain-profile, optimize-tones.
Common flags: --config <path> (INI, defaults = shipped paper.cfg values),
--seed <u64>, --out <dir>, --full (full-scale batch counts), --jobs <n>
for grid parallelism.  Exit code 0 on success, 2 on configuration or
numerical errors.
"""

import argparse
import os
import sys
from dataclasses import replace

from .config import default_config, load_config
from .errors import FopaeqError
from .experiment import (
    run_gain_profile,
    run_gridsearch,
    run_optimize_tones,
    run_simulate,
)

FULL_SCALE_BATCHES = 100
FULL_SCALE_GRID_SYMBOLS = 50 * 65536


def _build_parser():
    p = argparse.ArgumentParser(
        prog="fopaeq",
        description="Kernel-adaptive equalization experiments for "
        "pump-dithered parametric amplifier cascades.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, descr in [
        ("simulate", "transmission + per-stage kernel vs LMS equalization"),
        ("gridsearch", "kernel hyperparameter grid on a shared channel"),
        ("gain-profile", "static amplifier profile and dither RMS scan"),
        ("optimize-tones", "flatten the pump comb over tone amps/phases"),
    ]:
        q = sub.add_parser(name, help=descr)
        q.add_argument("--config", help="INI config file (defaults when omitted)")
        q.add_argument("--seed", type=int, help="override the config seed")
        q.add_argument("--out", default=".", help="output directory for CSV/JSON")
        q.add_argument("--full", action="store_true",
                       help="full-scale symbol counts instead of desk scale")
        q.add_argument("--quiet", action="store_true", help="suppress progress")
        if name == "gridsearch":
            q.add_argument("--jobs", type=int, default=1,
                           help="parallel worker processes for grid cells")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    log = (lambda msg: None) if args.quiet else lambda msg: print(msg, flush=True)

    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.full:
            cfg = replace(
                cfg,
                n_batches=FULL_SCALE_BATCHES,
                grid=replace(cfg.grid, symbols_budget=FULL_SCALE_GRID_SYMBOLS),
            )
        os.makedirs(args.out, exist_ok=True)

        if args.command == "simulate":
            metrics = run_simulate(cfg, out_dir=args.out, log=log)
            for i, s in enumerate(metrics.stages):
                log(
                    f"stage {s:2d}: BER kernel {metrics.ber_kernel[i]:.3e} "
                    f"({metrics.errors_kernel[i]}), LMS {metrics.ber_lms[i]:.3e} "
                    f"({metrics.errors_lms[i]})"
                )
            print(
                f"simulate done: {metrics.bits_total} bits/stage, "
                f"{metrics.runtime_s:.1f} s, skipped updates "
                f"{metrics.n_skipped_kernel}; results in {args.out}"
            )
        elif args.command == "gridsearch":
            rows, best = run_gridsearch(cfg, out_dir=args.out, jobs=args.jobs, log=log)
            print(
                f"gridsearch done: best cell M={best[0]} sigma={best[1]:.6g} "
                f"lambda={best[2]:.6g} BER={best[3]:.3e}; results in {args.out}"
            )
        elif args.command == "gain-profile":
            prof = run_gain_profile(cfg, out_dir=args.out)
            k = int(prof["mean_amp_db"].argmax())
            print(
                f"gain-profile done: peak {prof['mean_amp_db'][k]:.2f} dB at "
                f"{prof['detuning_nm'][k]:+.2f} nm; results in {args.out}"
            )
        elif args.command == "optimize-tones":
            result = run_optimize_tones(cfg, out_dir=args.out)
            note = "" if result.converged else " (budget exhausted: best-so-far)"
            print(
                f"optimize-tones done{note}: line-power variance "
                f"{result.objective_initial:.3e} -> {result.objective_final:.3e}; "
                f"results in {args.out}"
            )
            if not result.converged:
                print("warning: optimizer budget exhausted before convergence",
                      file=sys.stderr)
    except FopaeqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
