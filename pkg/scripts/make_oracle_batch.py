"""Write an importance-weighted gradient batch for a linear-Gaussian oracle problem.

    python3 scripts/make_oracle_batch.py --d 5 --n 100000 --out batch.csv
"""
import argparse

import numpy as np

from ridgecert.batchio import write_batch_binary, write_batch_csv
from ridgecert.oracle import exponential_spectrum, from_spectrum, importance_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--trace", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--binary", action="store_true", help="write the RCGB binary format")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    lam = exponential_spectrum(args.d, args.rho, args.trace)
    p = from_spectrum(lam, seed=args.seed)
    batch = importance_batch(p, args.n, args.seed)
    (write_batch_binary if args.binary else write_batch_csv)(batch, args.out)
    tails = np.cumsum(lam[::-1])[::-1]
    print("exact tails (r = 0..d-1):", " ".join(f"{t:.6g}" for t in tails))


if __name__ == "__main__":
    main()
