"""Command-line interface.

Subcommands: `run` (single rollout to CSV + metrics), `optimize` (two-step
reflex-parameter search with checkpointing), `analyze` (metrics and SVG
figures from an existing CSV log), `validate-config`.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config


def _add_common(p):
    p.add_argument("--config", default=None, help="TOML config overriding the defaults")


def _build_parser():
    ap = argparse.ArgumentParser(prog="exogait",
                                 description="Reflex-driven gait simulation of a "
                                             "human walking with a hip exoskeleton")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write CSV + metrics")
    _add_common(p)
    p.add_argument("--scenario", choices=("flat", "uphill"), default="flat")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--params", default=None, help="reflex parameter TOML (default: shipped seed)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--plots", action="store_true", help="also write SVG figures")

    p = sub.add_parser("optimize", help="two-step reflex parameter optimization")
    _add_common(p)
    p.add_argument("--scenario", choices=("flat", "uphill"), default="flat")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--psi", type=float, default=None, help="step-1 target distance (m)")
    p.add_argument("--max-gens", type=int, default=None, help="step-1 generation budget")
    p.add_argument("--step2-gens", type=int, default=None)
    p.add_argument("--sigma0", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", default=None, help="checkpoint file to resume from")
    p.add_argument("--params", default=None, help="starting parameter TOML")
    p.add_argument("--out", default="opt", help="output directory")

    p = sub.add_parser("analyze", help="recompute metrics (and figures) from a CSV log")
    _add_common(p)
    p.add_argument("--log", required=True)
    p.add_argument("--metrics", action="store_true", help="print the metrics summary")
    p.add_argument("--plots", action="store_true")
    p.add_argument("--out", default=None, help="output directory (default: log's directory)")

    p = sub.add_parser("validate-config", help="validate a configuration file")
    p.add_argument("config")
    return ap


def _cmd_run(args):
    from .fitness import FitnessConfig
    from .harness import SimModel, make_scenario, run_scenario
    from .optimize import load_params, load_seed_params

    cfg = load_config(args.config)
    model = SimModel(cfg)
    sc = make_scenario(cfg, args.scenario, args.speed, horizon=args.horizon)
    params = load_params(args.params) if args.params else load_seed_params()
    result = run_scenario(model, params, sc, out_dir=args.out,
                          fitness_config=FitnessConfig.from_config(cfg, sc))
    print(f"status={result.status} steps={result.steps} "
          f"x_com={result.x_com_final:.3f} m")
    for k, v in result.fitness.items():
        print(f"{k} = {v:.6g}")
    if args.plots:
        from .plots import emit_plots
        files = emit_plots(result.metrics, args.out)
        for f in files.values():
            print("wrote", f)
    print(f"log: {Path(args.out) / (sc.name + '.csv')}")
    return 0


def _cmd_optimize(args):
    from .harness import SimModel, make_scenario
    from .optimize import (initial_mean, load_params, run_optimization,
                           save_params, to_normalized, project_box)

    cfg = load_config(args.config)
    model = SimModel(cfg)
    sc = make_scenario(cfg, args.scenario, args.speed, horizon=args.horizon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    x0 = None
    if args.params:
        x0 = project_box(to_normalized(load_params(args.params).to_array()))
    state = run_optimization(model, sc, seed=args.seed,
                             step1_gens=args.max_gens, step2_gens=args.step2_gens,
                             sigma0=args.sigma0, workers=args.workers,
                             checkpoint=out / "checkpoint.json",
                             resume=args.resume, x0=x0, psi=args.psi)
    save_params(out / "best_params.toml", state.best_params())
    print(f"status={state.status} generations={state.generation} "
          f"best_fitness={state.best_fitness:.6g}")
    print(f"best parameters: {out / 'best_params.toml'}")
    print(f"checkpoint: {out / 'checkpoint.json'}")
    return 0 if state.status in ("done", "step2") else 1


def _cmd_analyze(args):
    from .harness import read_log_csv
    from .metrics import gait_metrics, metrics_summary_text

    cfg = load_config(args.config)
    log = read_log_csv(args.log)
    body = cfg.body_params()
    metrics = gait_metrics(log, body, cfg["simulation.dt_sim_s"])
    out_dir = Path(args.out) if args.out else Path(args.log).parent
    if args.metrics or not args.plots:
        print(metrics_summary_text(metrics), end="")
    if args.plots:
        from .plots import emit_plots
        files = emit_plots(metrics, out_dir)
        for f in files.values():
            print("wrote", f)
    return 0


def _cmd_validate(args):
    load_config(args.config)
    print(f"{args.config}: OK")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "optimize":
            return _cmd_optimize(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "validate-config":
            return _cmd_validate(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
