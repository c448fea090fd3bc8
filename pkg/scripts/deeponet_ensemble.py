"""Antiderivative operator learned by a deep ensemble of DeepONets.

    python scripts/deeponet_ensemble.py [--members 5] [--iterations 10000]
"""

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from sciuq import cli

CONFIG = Path(__file__).parents[1] / "configs" / "antiderivative_dens.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--members", type=int, default=5)
    ap.add_argument("--iterations", type=int)
    args = ap.parse_args()

    cfg = cli.load_config(CONFIG)
    changes = {"ensemble_size": args.members}
    if args.iterations:
        changes["iterations"] = args.iterations
    cfg.inference = dataclasses.replace(cfg.inference, **changes)
    res = cli.run_pipeline(cfg)
    s = res.summary
    print(f"members {args.members}: held-out rl2e {res.metrics['rl2e']:.4f}")
    print(f"mean std: total {np.sqrt(s.var_total).mean():.4f}, "
          f"epistemic {np.sqrt(s.var_epistemic).mean():.4f}")
    print(f"artifacts in {cfg.output_dir}")


if __name__ == "__main__":
    main()
