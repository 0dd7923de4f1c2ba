"""Conditional probability of the odd cascade versus uniform reflectance.

Prints CSV columns rho, p_cond, p_all_11 (printed herald weights) and
p_cond_tracked (herald phase kept), followed by the critical reflectances.
"""
import argparse
import csv
import math
import sys

import numpy as np

from noondistill.cascade import CascadeSpec, analytics, critical_reflectance
from noondistill.cli import parse_angle


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=7)
    p.add_argument("--phi", type=parse_angle, default=math.pi / 14)
    p.add_argument("--points", type=int, default=99)
    p.add_argument("--targets", default="0.5,0.9")
    args = p.parse_args(argv)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["rho", "p_cond", "p_all_11", "p_cond_tracked"])
    for rho in np.linspace(0.01, 0.99, args.points):
        spec = CascadeSpec.uniform(args.N, args.phi, float(rho))
        printed = analytics(spec)
        tracked = analytics(spec, track_herald_phase=True)
        writer.writerow([f"{rho:.4f}", f"{printed.p_cond:.10g}", f"{printed.p_all_11:.10g}", f"{tracked.p_cond:.10g}"])
    for target in map(float, args.targets.split(",")):
        rho_c = critical_reflectance(args.N, args.phi, target)
        print(f"# critical rho for p_cond={target}: {rho_c:.6f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(run())
