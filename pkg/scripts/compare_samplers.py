"""Head-to-head: local ball walk, small-world walk and simulated tempering on the two-mode circle.

Prints median mode-occupancy error and median TV distance per sampler.
"""
import argparse
from pathlib import Path

import numpy as np

from smallworld.harness.config import load_config
from smallworld.harness.experiments import run_sampling, run_tempering_experiment

CONFIGS = {"local": "run_local.cfg", "small_world": "run_smallworld.cfg", "tempering": "tempering.cfg"}

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--L", type=float, default=5.0)
    args = ap.parse_args()
    root = Path(__file__).resolve().parents[1] / "configs"
    print(f"{'sampler':<12} {'median occ. error':>18} {'median TV':>10}")
    for name, file in CONFIGS.items():
        cfg = load_config(root / file, [f"steps={args.steps}", f"seeds={args.seeds}", f"target.L={args.L}"])
        res = run_tempering_experiment(cfg) if cfg.kind == "tempering" else run_sampling(cfg)
        err = np.median([r["occupancy_error"] for r in res.rows])
        tv = np.median([r["tv"] for r in res.rows])
        print(f"{name:<12} {err:>18.4f} {tv:>10.4f}")
