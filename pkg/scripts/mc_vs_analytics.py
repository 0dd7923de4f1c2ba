"""Monte Carlo estimates next to the closed forms for the headline configurations."""
import argparse
import math
import sys
import time

from noondistill.cascade import CascadeSpec, analytics, resolving_analytics
from noondistill.montecarlo import DetectorModel, compare, simulate_cascade, simulate_resolving


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--shots", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--shards", type=int, default=4)
    args = p.parse_args(argv)

    det = DetectorModel("threshold", args.eta)
    cases = [
        ("odd N=5 optimal", CascadeSpec.optimal(5, 0.0)),
        ("even N=4 optimal", CascadeSpec.optimal(4, 0.0)),
        ("odd N=7 rho=0.31 phi=pi/14", CascadeSpec.uniform(7, math.pi / 14, 0.31)),
    ]
    print(f"{'case':34s} {'eff_hat':>10s} {'eff_ref':>10s} {'fid_hat':>8s} {'fid_ref':>8s}  status  seconds")
    failed = 0
    for label, spec in cases:
        t0 = time.perf_counter()
        rep = simulate_cascade(spec, det, args.shots, args.seed, args.shards)
        ref = analytics(spec, track_herald_phase=True)
        v = compare(rep, ref) if args.eta == 1.0 else None
        status = v.status if v else "n/a"
        failed += status == "fail"
        fid = f"{rep.fidelity_hat:.4f}" if rep.fidelity_hat is not None else "-"
        print(f"{label:34s} {rep.efficiency_hat:10.6f} {rep.reference['p_success_penalized']:10.6f} "
              f"{fid:>8s} {ref.p_cond:8.4f}  {status:6s}  {time.perf_counter() - t0:.2f}")
    t0 = time.perf_counter()
    rep = simulate_resolving(4, 0.0, 0.75, args.eta, args.shots, args.seed, args.shards)
    ref = resolving_analytics(4, 0.75)
    status = compare(rep, ref).status if args.eta == 1.0 else "n/a"
    failed += status == "fail"
    print(f"{'resolving N=4 rho=3/4':34s} {rep.efficiency_hat:10.6f} {rep.reference['p_success_penalized']:10.6f} "
          f"{rep.fidelity_hat:8.4f} {ref.p_cond:8.4f}  {status:6s}  {time.perf_counter() - t0:.2f}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(run())
