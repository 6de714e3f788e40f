"""Trade-off between stability-region width and least damping, sweeping alpha on one line."""
import argparse
import sys

from eipstab.cli import PARETO_HEADER
from eipstab.dampopt import pareto_sweep
from eipstab.output import csv_text
from eipstab.sim import gen_synthetic_feeder


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--buses", type=int, default=5)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--line", type=int, default=1)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    net = gen_synthetic_feeder(args.buses, "radial", args.seed)
    pts = pareto_sweep(net, args.line, 0.1, 2.0, args.steps, threads=args.threads)
    rows = ((p.alpha, p.gamma, p.region_width, p.min_damping_norm, p.feasible) for p in pts)
    sys.stdout.write(csv_text(PARETO_HEADER, rows))


if __name__ == "__main__":
    main()
