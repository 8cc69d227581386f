"""Sweep the reinforcement exponent and tabulate localization frequencies.

Runs one Monte Carlo campaign per exponent on the hollow complete graph and
reports how often the walk settles on supports of each size. The two-site
fraction rising toward 1 as the exponent crosses the size-3 threshold (alpha=2
for N=3) is the headline phase transition.

Example:
    python3 scripts/phase_sweep.py --n 3 --alphas 1.3,1.6,1.9,2.2,2.5 \
        --replicas 200 --horizon 20000 --out sweep.csv
"""

import argparse
import csv
import sys
import time

from vrrw import DetectionConfig, ExperimentConfig, ModelParameters, run_campaign


def parse_args(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3, help="number of sites")
    ap.add_argument("--c", type=float, default=0.0, help="loop weight on the diagonal")
    ap.add_argument(
        "--alphas",
        default="1.3,1.6,1.9,2.2,2.5",
        help="comma-separated reinforcement exponents",
    )
    ap.add_argument("--replicas", type=int, default=200)
    ap.add_argument("--horizon", type=int, default=20_000)
    ap.add_argument("--base-seed", type=int, default=20240817)
    ap.add_argument("--out", default=None, help="optional CSV path for the table")
    return ap.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    alphas = [float(a) for a in args.alphas.split(",")]
    sizes = list(range(1, args.n + 1))

    rows = []
    for alpha in alphas:
        cfg = ExperimentConfig(
            model=ModelParameters.for_complete_graph(args.n, alpha, loop_c=args.c),
            replicas=args.replicas,
            horizon=args.horizon,
            base_seed=args.base_seed,
            detection=DetectionConfig(),
        )
        t0 = time.perf_counter()
        result = run_campaign(cfg)
        elapsed = time.perf_counter() - t0
        total = len(result.replicas)
        fracs = {s: result.support_histogram.get(s, 0) / total for s in sizes}
        rows.append((alpha, fracs, elapsed))

    header = ["alpha"] + [f"frac_{s}" for s in sizes] + ["seconds"]
    print("  ".join(f"{h:>8}" for h in header))
    for alpha, fracs, elapsed in rows:
        cells = [f"{alpha:8.3f}"] + [f"{fracs[s]:8.3f}" for s in sizes] + [f"{elapsed:8.1f}"]
        print("  ".join(cells))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for alpha, fracs, elapsed in rows:
                w.writerow([alpha] + [fracs[s] for s in sizes] + [round(elapsed, 2)])
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
