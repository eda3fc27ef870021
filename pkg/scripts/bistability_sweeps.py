"""Bistability sweeps at the graphene/microwave parameters.

Runs the eta sweep for several cross-Kerr strengths and the delta sweep at
eta/gamma = 31.22, printing jump positions and window widths, and writes the
CSV/JSON files through the CLI into ``--out``.
"""

import argparse
from pathlib import Path

from optokerr.cli import run

CONFIGS = Path(__file__).parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/graphene")
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()
    for name in ("graphene_eta_sweep", "graphene_delta_sweep"):
        print(f"== {name}")
        code = run(["steady-sweep", "--config", str(CONFIGS / f"{name}.json"),
                    "--out", str(Path(args.out) / name), "--threads", str(args.threads)])
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
