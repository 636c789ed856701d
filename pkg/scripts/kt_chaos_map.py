#!/usr/bin/env python3
"""Kicked-top chaos survey: largest Lyapunov exponent on a grid of initial
conditions for a given kick strength.  Writes lyapunov_map.csv suitable for
a phase-space heat map."""

import argparse
import math

from spinloop.analysis import lyapunov_jacobian
from spinloop.models import KtParams
from spinloop.runio import emit_csv
from spinloop.spin_core import SphericalAngles, from_angles


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/lyapunov_map.csv")
    ap.add_argument("--k", type=float, default=2.5)
    ap.add_argument("--alpha", type=float, default=math.pi / 2.0)
    ap.add_argument("--grid", type=int, default=24, help="points per angle axis")
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args()

    p = KtParams(alpha=args.alpha, k=args.k)
    rows = []
    for i in range(args.grid):
        theta = math.pi * (i + 0.5) / args.grid
        for jj in range(args.grid):
            phi = -math.pi + 2.0 * math.pi * (jj + 0.5) / args.grid
            x0 = from_angles(SphericalAngles(theta, phi))
            lam = lyapunov_jacobian(p, x0, args.steps).lambda_max
            rows.append((theta, phi, lam))
    emit_csv(args.out, "theta,phi,lambda_max", rows)
    print(f"wrote {args.out} ({args.grid * args.grid} points)")


if __name__ == "__main__":
    main()
