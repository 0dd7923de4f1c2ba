"""Write the two-photon detection tables and the protocol comparison sweep as CSV.

    python scripts/reproduce_tables_and_sweep.py --outdir results/
"""
import argparse
import sys
from pathlib import Path

from noondistill.cli import main


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--outdir", type=Path, default=Path("results"))
    p.add_argument("--rho", default="0.3")
    p.add_argument("--phi", default="0.7")
    args = p.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    jobs = {
        "tables.csv": ["tables", "--rho", args.rho, "--phi", args.phi],
        "sweep.csv": ["sweep", "--N-min", "2", "--N-max", "20"],
        "unit_N4.csv": ["unit", "--N", "4", "--rho", args.rho, "--phi", args.phi],
    }
    for name, argv_ in jobs.items():
        code = main(argv_ + ["--out", str(args.outdir / name)])
        if code:
            return code
        print(f"wrote {args.outdir / name}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
