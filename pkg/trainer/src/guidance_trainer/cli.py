"""Command line entry point: train a guidance policy and export its weights."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import TrainConfigError, load_config
from .export import save_policy
from .ppo import train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="guidance-train",
        description="Train the shared navigation guidance policy with "
                    "independent PPO and export portable weights")
    parser.add_argument("--config", required=True, help="JSON training config")
    parser.add_argument("--out", required=True, help="weights output path")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except TrainConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    def progress(steps, mean_return):
        print(f"env steps {steps:>9}  mean episode return {mean_return:8.3f}",
              flush=True)

    try:
        result = train(cfg, progress=progress)
    except RuntimeError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2

    save_policy(result.model, cfg.env, args.out)
    returns = result.episode_returns
    if returns:
        q = max(1, len(returns) // 4)
        print(f"episodes {len(returns)}, first-quartile mean "
              f"{np.mean(returns[:q]):.3f}, last-quartile mean "
              f"{np.mean(returns[-q:]):.3f}")
    print(f"weights written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
