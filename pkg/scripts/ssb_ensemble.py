#!/usr/bin/env python3
"""Symmetry-breaking ensemble: many seeds launched from the unstable fixed
point with projection noise; writes trajectories.csv and symmetry_stats.json."""

import argparse
import math

from spinloop.config import ExperimentConfig
from spinloop.loop_sim import LoopConfig
from spinloop.measurement import MeasurementModel
from spinloop.models import LmgParams
from spinloop.scenarios import run_scenario
from spinloop.spin_core import SphericalAngles


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/ssb")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--shots", type=int, default=300)
    ap.add_argument("--s", type=float, default=0.7)
    ap.add_argument("--latency", type=float, default=6e-6)
    args = ap.parse_args()

    alpha_lin = 2.0 * math.pi * 6.25e3
    cfg = ExperimentConfig(
        kind="ssb-ensemble",
        loop=LoopConfig(
            latency=args.latency, duration=1.5e-3, decay_half_time=None,
            initial_state=SphericalAngles(math.pi / 2.0, 0.0), qpn=True,
        ),
        measurement=MeasurementModel(),
        lmg=LmgParams(s=args.s, lambda_=alpha_lin / (1.0 - args.s)),
        n_shots=args.shots,
        master_seed=args.seed,
        out_dir=args.out,
    )
    man = run_scenario(cfg)
    print(f"wrote {', '.join(man.outputs)} to {args.out} "
          f"({man.wall_clock_s:.1f} s)")


if __name__ == "__main__":
    main()
