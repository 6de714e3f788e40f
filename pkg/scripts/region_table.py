"""Per-line EIP and stability intervals for a synthetic feeder, as CSV."""
import argparse
import sys

from eipstab.cli import REGION_HEADER
from eipstab.eip import region_table
from eipstab.output import csv_text
from eipstab.sim import gen_synthetic_feeder


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--buses", type=int, default=5)
    ap.add_argument("--topology", choices=["radial", "meshed"], default="radial")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--beta", type=float, default=None, help="margin for the alpha_min column")
    args = ap.parse_args()

    net = gen_synthetic_feeder(args.buses, args.topology, args.seed)
    header = REGION_HEADER + (["alpha_min"] if args.beta is not None else [])
    rows = region_table(net, args.beta)
    sys.stdout.write(csv_text(header, ([r[h] for h in header] for r in rows)))


if __name__ == "__main__":
    main()
