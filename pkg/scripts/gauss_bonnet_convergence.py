"""Gauss-Bonnet closure residual under simultaneous refinement of curve and grid.

    python scripts/gauss_bonnet_convergence.py --method boundary
"""

import argparse

import numpy as np

from prescribed_curvature import ConformalMetric, DiscreteCurve, check_gauss_bonnet


def star(N, r=np.pi / 3, amp=0.15, freq=3):
    th = 2 * np.pi * np.arange(N) / N
    rr = r + amp * np.sin(freq * th)
    return DiscreteCurve(np.stack([np.sin(rr) * np.cos(th), np.sin(rr) * np.sin(th), np.cos(rr)], 1))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--method", choices=("boundary", "grid"), default="boundary")
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()

    metric = ConformalMetric(((2, 0, 0.1), (3, 1, 0.05)))
    prev = None
    print(f"{'N':>6} {'grid':>6} {'residual':>12} {'ratio':>8}")
    for k in range(args.levels):
        N, grid = 64 * 2 ** k, 32 * 2 ** k
        res = check_gauss_bonnet(star(N), metric, grid, method=args.method)
        ratio = f"{prev / res:8.3f}" if prev else " " * 8
        print(f"{N:6d} {grid:6d} {res:12.4e} {ratio}")
        prev = res


if __name__ == "__main__":
    main()
