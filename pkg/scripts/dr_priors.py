"""Diffusion-reaction inverse problem under three priors on k_r.

Runs the normal, half-normal and log-normal configurations and prints the
posterior of the reaction rate next to the truth k_r = 0.2.

    python scripts/dr_priors.py [--priors normal lognormal]
"""

import argparse
from pathlib import Path

from sciuq import cli

CONFIGS = Path(__file__).parents[1] / "configs"


def main():
    ap = argparse.ArgumentParser(description="k_r posterior under different priors")
    ap.add_argument("--priors", nargs="+", default=["normal", "halfnormal", "lognormal"])
    args = ap.parse_args()

    rows = []
    for prior in args.priors:
        cfg = cli.load_config(CONFIGS / f"diffusion_reaction_{prior}.toml")
        m = cli.run_pipeline(cfg).metrics
        rows.append((prior, m["k_r_mean"], m["k_r_std"], m["rl2e"], m["wall_time_s"]))

    print(f"{'prior':12s} {'k_r mean':>9s} {'k_r std':>8s} {'|err|/std':>9s} {'u rl2e':>8s} {'time':>6s}")
    for prior, mean, std, err, secs in rows:
        print(f"{prior:12s} {mean:9.4f} {std:8.4f} {abs(mean - 0.2) / std:9.2f} "
              f"{err:8.4f} {secs:5.0f}s")


if __name__ == "__main__":
    main()
