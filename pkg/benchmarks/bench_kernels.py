"""Time the compiled grid kernel against the numpy fallback on oracle-sized inputs.

Usage: python benchmarks/bench_kernels.py [--points 64] [--repeats 5] [--csv out.csv]
"""

import argparse
import csv
import sys
import timeit

import numpy as np

from hybridnoma import kernels
from hybridnoma._grid_numpy import maxmin_grid as numpy_grid
from hybridnoma.grouping import group_users
from hybridnoma.oracle import GridSpec, grid_maxmin
from hybridnoma.scenario import SystemParams, make_scenario


def kernel_inputs(points: int, seed: int = 0):
    sc = make_scenario(SystemParams(num_users=4, num_clusters=2), seed=seed)
    idx = np.asarray(group_users(sc.channels).clusters)
    h, n = sc.gains[idx], sc.noise_vars[idx]
    strong = np.exp(np.linspace(np.log(1e-12), np.log(0.5), points))
    axes = np.vstack([strong, strong])
    unit = np.linspace(0.0, 1.0, points)
    cols = [np.ascontiguousarray(a) for a in (h[:, 0], h[:, 1], n[:, 0], n[:, 1])]
    return (*cols, 10.0, 10.0, axes, unit, unit)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--csv", help="optional CSV output path")
    args = ap.parse_args(argv)

    impls = {"numpy": numpy_grid}
    if kernels.BACKEND == "cython":
        impls["cython"] = kernels.get_kernel("cython")
    else:
        print("compiled kernel unavailable; timing the numpy fallback only", file=sys.stderr)

    inputs = kernel_inputs(args.points)
    sc = make_scenario(SystemParams(num_users=4, num_clusters=2), seed=0)
    cl = group_users(sc.channels)
    rows = []
    for name, fn in impls.items():
        one_pass = min(timeit.repeat(lambda: fn(*inputs), number=1, repeat=args.repeats))
        spec = GridSpec(args.points, args.points, 3)
        oracle = min(timeit.repeat(lambda: grid_maxmin(sc, cl, spec, kernel=name), number=1, repeat=args.repeats))
        rows.append((name, args.points, one_pass, oracle))

    print(f"{'kernel':8} {'points':>6} {'grid pass (s)':>14} {'full oracle (s)':>16}")
    for name, pts, a, b in rows:
        print(f"{name:8} {pts:6d} {a:14.4f} {b:16.4f}")
    if len(rows) == 2:
        print(f"speedup (numpy / cython): {rows[0][2] / rows[1][2]:.1f}x per pass, {rows[0][3] / rows[1][3]:.1f}x oracle")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "points", "grid_pass_s", "oracle_s"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
