"""Command-line interface: instance generation, PAC and regret runs, benchmarks.

Exit codes: 0 success, 2 configuration error, 3 runtime abort.
"""
from __future__ import annotations

import argparse
import json
import sys

from .env import ConfigurationError, ValidationError, build_from_spec, save_model
from .harness import (ExperimentConfig, config_from_json, determinism_hash,
                      run_experiment, summarize, write_results)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lumpband",
                                description="Context-lumpable bandit benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-instance", help="build an instance from a JSON spec")
    g.add_argument("--spec", required=True, help="path to the generator spec JSON")
    g.add_argument("--out", required=True, help="output path for the model JSON")

    pac = sub.add_parser("pac", help="run a PAC learner")
    pac.add_argument("--instance", required=True)
    pac.add_argument("--algo", default="uniform",
                     choices=["uniform", "general", "naive", "lowrank"])
    pac.add_argument("--eps", type=float, required=True)
    pac.add_argument("--delta", type=float, required=True)
    pac.add_argument("--r", type=int, default=None)
    pac.add_argument("--B", type=float, default=None, help="bound for --algo lowrank")
    pac.add_argument("--seed", type=int, nargs="+", default=[0])
    pac.add_argument("--scale", type=float, default=1.0)
    pac.add_argument("--id", default="pac")
    pac.add_argument("--out", required=True, help="output CSV path")

    reg = sub.add_parser("regret", help="run a regret minimizer or baseline")
    reg.add_argument("--instance", required=True)
    reg.add_argument("--algo", default="uniform",
                     choices=["uniform", "nonuniform", "general", "ucb", "exp3",
                              "lowrank"])
    reg.add_argument("--r", type=int, default=None)
    reg.add_argument("--B", type=float, default=None)
    reg.add_argument("--steps", type=int, required=True)
    reg.add_argument("--seed", type=int, nargs="+", default=[0])
    reg.add_argument("--checkpoint-every", type=int, default=None)
    reg.add_argument("--scale", type=float, default=1.0)
    reg.add_argument("--id", default="regret")
    reg.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run a full experiment config")
    b.add_argument("--config", required=True, help="experiment config JSON")
    b.add_argument("--out", required=True)
    b.add_argument("--summary", action="store_true",
                   help="print summary statistics to stdout")
    return p


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read {path}: {e}") from None


def _run_and_write(cfg: ExperimentConfig, out: str, summary: bool = False) -> None:
    rows = run_experiment(cfg)
    write_results(rows, out)
    if summary:
        for rec in summarize(rows):
            print(json.dumps(rec))
    print(f"determinism-hash: {determinism_hash(rows)}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "gen-instance":
            model = build_from_spec(_load_json(args.spec))
            save_model(model, args.out)
            print(f"wrote {args.out}")
        elif args.command == "pac":
            params = {"eps": args.eps, "delta": args.delta}
            if args.r is not None:
                params["r"] = args.r
            if args.B is not None:
                params["B"] = args.B
            cfg = ExperimentConfig(experiment_id=args.id, instance=args.instance,
                                   algorithm=f"pac-{args.algo}", seeds=args.seed,
                                   params=params, scale=args.scale)
            _run_and_write(cfg, args.out)
        elif args.command == "regret":
            algo = args.algo if args.algo in ("ucb", "exp3") else f"regret-{args.algo}"
            params = {"steps": args.steps}
            if args.r is not None:
                params["r"] = args.r
            if args.B is not None:
                params["B"] = args.B
            every = args.checkpoint_every
            checkpoints = (list(range(every, args.steps + 1, every))
                           if every else [args.steps])
            if checkpoints[-1] != args.steps:
                checkpoints.append(args.steps)
            cfg = ExperimentConfig(experiment_id=args.id, instance=args.instance,
                                   algorithm=algo, seeds=args.seed, params=params,
                                   checkpoints=checkpoints, scale=args.scale)
            _run_and_write(cfg, args.out)
        else:  # bench
            cfg = config_from_json(_load_json(args.config))
            _run_and_write(cfg, args.out, summary=args.summary)
    except (ConfigurationError, ValidationError, KeyError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime abort: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
