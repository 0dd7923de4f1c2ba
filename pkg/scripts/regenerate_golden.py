"""Rewrite tests/golden/* from the current CLI. Run only after an intended output change."""
import json
import sys
from pathlib import Path

from noondistill.cli import main

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def run() -> int:
    cases = json.loads((GOLDEN / "cases.json").read_text())
    for name, argv in cases.items():
        code = main(argv + ["--out", str(GOLDEN / name)])
        if code:
            print(f"{name}: exit {code}", file=sys.stderr)
            return code
        print(f"wrote {name}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
