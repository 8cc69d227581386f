"""Integrate the mean-field flow from a fan of starting points.

Writes one long-format CSV with a trajectory id, time, the occupation
coordinates, and the potential value, suitable for plotting a phase portrait.
Also prints the equilibrium table for the chosen model so the endpoints can be
matched against attractors.

Example:
    python3 scripts/flow_portrait.py --n 3 --alpha 2.5 --flows 12 --t-end 40 \
        --out portrait.csv
"""

import argparse
import csv
import sys

import numpy as np

from vrrw import ModelParameters, enumerate_all, integrate_flow, summarize


def parse_args(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--alpha", type=float, default=2.5)
    ap.add_argument("--flows", type=int, default=12, help="number of random starts")
    ap.add_argument("--t-end", type=float, default=40.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--thin", type=int, default=25, help="keep every k-th sample")
    ap.add_argument("--out", default="portrait.csv")
    return ap.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    p = ModelParameters.for_complete_graph(args.n, args.alpha)
    rng = np.random.default_rng(args.seed)

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["flow", "t"] + [f"v_{i}" for i in range(1, args.n + 1)] + ["H"])
        for idx in range(args.flows):
            v0 = rng.dirichlet(np.ones(args.n))
            traj = integrate_flow(p, v0, t_end=args.t_end, dt=args.dt)
            keep = np.arange(0, len(traj.times), args.thin)
            if keep[-1] != len(traj.times) - 1:
                keep = np.append(keep, len(traj.times) - 1)
            for j in keep:
                row = [idx, f"{traj.times[j]:.3f}"]
                row += [f"{x:.10f}" for x in traj.states[j]]
                row.append(f"{traj.lyapunov_values[j]:.12f}")
                w.writerow(row)
            end = traj.states[-1]
            print(
                f"flow {idx:2d}: end {np.array2string(end, precision=4)} "
                f"H {traj.lyapunov_values[-1]:.6f}"
            )

    if args.n <= 12:
        print("\nequilibria (support size / kind / count / verdict):")
        for line in summarize(enumerate_all(args.n, args.alpha)):
            print(
                f"  {line['support_size']}  {line['kind']:<11} x{line['count']:<3} "
                f"{line['verdict']}"
            )
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
