"""Command line entry point.

    wallsim <experiment> --config <path> [--replicas N] [--seed U64]
            [--out PATH] [--threads N]

Runs one experiment section from the config file, writes the CSV table and
its JSON manifest, and exits 0 iff every declared pass criterion holds.
"""
from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENT_NAMES, load_config
from .experiments import run_experiment, write_outputs


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wallsim",
                                description="moving-wall TASEP experiments")
    p.add_argument("experiment", choices=EXPERIMENT_NAMES)
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--threads", type=int, default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config, args.experiment, replicas=args.replicas,
                      seed=args.seed, threads=args.threads, out=args.out)
    result = run_experiment(cfg)
    out = cfg.out if cfg.out else f"{cfg.experiment}.csv"
    csv_path, man_path = write_outputs(result, out)
    print(f"{cfg.experiment}: {len(result.rows)} rows -> {csv_path} "
          f"(manifest {man_path})")
    if result.passed:
        print(f"{cfg.experiment}: PASS")
        return 0
    print(f"{cfg.experiment}: FAIL", file=sys.stderr)
    for line in result.failures:
        print(f"  {line}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
