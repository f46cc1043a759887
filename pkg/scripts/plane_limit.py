"""R-ladder of p<2 capacities and their Richardson limit, for a few directions."""
import argparse

import numpy as np

from nhfiber.capacity import capacity_plane_limit
from nhfiber.energy import norton_hoff
from nhfiber.geometry import make_cross_section

DIRECTIONS = {
    "a1": ([1.0, 0.0, 0.0], 0.0),
    "a3": ([0.0, 0.0, 1.0], 0.0),
    "zeta": ([0.0, 0.0, 0.0], 1.0),
    "mixed": ([1.0, 0.0, 0.0], 1.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--d", type=float, default=0.5)
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--radii", type=float, nargs="+", default=[4, 8, 16, 32])
    args = ap.parse_args()

    f = norton_hoff(args.c, args.d, args.p)
    S = make_cross_section("disc")
    print("direction  " + "  ".join(f"R={R:<8g}" for R in args.radii) + "  limit      error")
    for name, (a, z) in DIRECTIONS.items():
        lim = capacity_plane_limit(f, S, np.array(a), z, tuple(args.radii), args.h)
        vals = "  ".join(f"{v:10.5f}" for v in lim.values)
        print(f"{name:9s}  {vals}  {lim.extrapolated:9.5f}  {lim.error_estimate / lim.extrapolated:.2%}")


if __name__ == "__main__":
    main()
