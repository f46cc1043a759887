"""Logarithmically scaled p=2 capacities of the disc along r = 2^-k.

Prints, per k, the FEM value of |log r| cap for an in-plane and the
antiplane translation, the exact annulus value at the same (r, R), and at
the end the fitted limit next to the exact limit and the constants quoted
as targets.
"""
import argparse
import math

from nhfiber.capacity import default_outer_radius, isotropic_annulus_capacities, p2_ladder
from nhfiber.energy import isotropic
from nhfiber.geometry import make_cross_section


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--kmin", type=int, default=6)
    ap.add_argument("--kmax", type=int, default=14)
    args = ap.parse_args()

    lam, mu = args.lam, args.mu
    lad = p2_ladder(isotropic(lam, mu), make_cross_section("disc"), range(args.kmin, args.kmax + 1), args.h)
    print(f"{'k':>3} {'inplane':>10} {'exact':>10} {'antiplane':>10} {'exact':>10}")
    for k, pt in zip(lad.ks, lad.points):
        L = abs(math.log(pt.r))
        ex = isotropic_annulus_capacities(lam, mu, pt.r, default_outer_radius(pt.r))
        print(f"{k:3d} {pt.value[0]:10.5f} {L * ex['inplane']:10.5f} {pt.value[2]:10.5f} {L * ex['antiplane']:10.5f}")
    nu = lam / (2 * (lam + mu))
    print()
    print(f"fitted limit   inplane {lad.extrapolated[0]:.5f}  antiplane {lad.extrapolated[2]:.5f}")
    print(f"exact limit    inplane {4 * math.pi * mu * (1 - nu) / (3 - 4 * nu):.5f}  antiplane {math.pi * mu:.5f}")
    print(f"target values  inplane {4 * math.pi * mu * (lam + 2 * mu) / (lam + 3 * mu):.5f}  "
          f"antiplane {2 * math.pi * mu:.5f}")


if __name__ == "__main__":
    main()
