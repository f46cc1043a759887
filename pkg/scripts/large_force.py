"""Twisting-load fiber solution against the minimizing parabola, written as CSV."""
import argparse
import csv
import sys

from nhfiber.cell import torsion_constant
from nhfiber.geometry import make_cross_section
from nhfiber.limit1d import FiberForces, isotropic_fiber_problem, large_force_profiles, solve_fiber


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=2.0)
    ap.add_argument("--beta0", type=float, default=1.0)
    ap.add_argument("--a0", type=float, default=0.0)
    ap.add_argument("--nodes", type=int, default=200)
    ap.add_argument("--h", type=float, default=0.05)
    args = ap.parse_args()

    D = make_cross_section("disc")
    F = FiberForces.zero(args.nodes)
    F.beta0_mean[:] = args.beta0
    F.a0_mean[:] = args.a0
    fp = isotropic_fiber_problem("finite_kappa", 1.0, 1.0, args.kappa, D, n=args.nodes, forces=F, h=args.h)
    t = solve_fiber(fp)
    delta, w = large_force_profiles(fp.tau, D, args.kappa, 1.0, 1.0, torsion_constant(D), args.beta0, args.a0,
                                    fp.grid)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["x3", "delta", "delta_parabola", "w", "w_parabola"])
    for row in zip(fp.grid, t.delta, delta, t.w, w):
        out.writerow([f"{v:.10g}" for v in row])


if __name__ == "__main__":
    main()
