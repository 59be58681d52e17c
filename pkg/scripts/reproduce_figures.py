"""Write the CSV curve data behind the loss-function and oracle comparison figures.

    python3 scripts/reproduce_figures.py --outdir figures/
"""
import argparse
import os
import sys

from ridgecert.cli import main as cli

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, os.pardir, "configs")

RUNS = [
    ("curves", "curves.json", "loss_curves.csv"),
    ("oracle", "oracle_algebraic.json", "oracle_algebraic.csv"),
    ("oracle", "oracle_exponential.json", "oracle_exponential.csv"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="figures")
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    for command, cfg, out in RUNS:
        path = os.path.join(args.outdir, out)
        code = cli([command, "--config", os.path.join(CONFIGS, cfg), "--out", path])
        if code:
            sys.exit(code)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
