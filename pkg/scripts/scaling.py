"""Wall time of optimize + certify on synthetic feeders of growing size."""
import argparse
import time

from eipstab.certify import certify_theorem1, q_matrix
from eipstab.dampopt import solve_min_damping
from eipstab.sim import gen_synthetic_feeder


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 33, 69, 123, 200])
    ap.add_argument("--topology", choices=["radial", "meshed"], default="radial")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    print("buses,lines,optimize_s,certify_s,norm,certified")
    for n in args.sizes:
        net = gen_synthetic_feeder(n, args.topology, args.seed)
        t0 = time.perf_counter()
        q = q_matrix(net)
        sol = solve_min_damping(q)
        t1 = time.perf_counter()
        rep = certify_theorem1(net.with_damping(sol.d), q)
        t2 = time.perf_counter()
        print(f"{n},{net.m},{t1 - t0:.3f},{t2 - t1:.3f},{sol.objective:.6g},{str(rep.feasible).lower()}")


if __name__ == "__main__":
    main()
