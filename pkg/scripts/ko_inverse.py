"""Inverse Kraichnan-Orszag: infer a and b with HMC and report the posterior.

    python scripts/ko_inverse.py [--out runs/kraichnan_orszag_hmc]
"""

import argparse
from pathlib import Path

from sciuq import cli

CONFIG = Path(__file__).parents[1] / "configs" / "kraichnan_orszag_hmc.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(CONFIG))
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = cli.load_config(args.config)
    if args.out:
        cfg.output_dir = args.out
    res = cli.run_pipeline(cfg)
    m = res.metrics
    print(f"{'param':6s} {'truth':>6s} {'mean':>8s} {'std':>8s}")
    for key in ("a", "b"):
        print(f"{key:6s} {1.0:6.2f} {m[key + '_mean']:8.4f} {m[key + '_std']:8.4f}")
    print(f"trajectory rl2e {m['rl2e']:.4f}, acceptance {m['acceptance_rate']:.3f}, "
          f"{m['wall_time_s']:.0f}s; artifacts in {cfg.output_dir}")


if __name__ == "__main__":
    main()
