#!/usr/bin/env python3
"""Write a structured asymmetric TSP instance in TSPLIB FULL_MATRIX format.

Cities are uniform points in a square; the cost of i->j is the Euclidean
distance scaled by an independent factor in [1, 1 + skew] drawn separately for
each direction, rounded to an integer.

    tools/make_asym_instance.py --n 56 --seed 5601 --name asym56 > data/asym56.atsp
"""
import argparse
import math
import random


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, required=True)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--name", required=True)
    ap.add_argument("--side", type=float, default=1000.0)
    ap.add_argument("--skew", type=float, default=0.35)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    pts = [(rng.uniform(0, args.side), rng.uniform(0, args.side)) for _ in range(args.n)]
    print(f"NAME: {args.name}")
    print("TYPE: ATSP")
    print(f"COMMENT: perturbed Euclidean, seed {args.seed}, skew {args.skew}")
    print(f"DIMENSION: {args.n}")
    print("EDGE_WEIGHT_TYPE: EXPLICIT")
    print("EDGE_WEIGHT_FORMAT: FULL_MATRIX")
    print("EDGE_WEIGHT_SECTION")
    for i in range(args.n):
        row = []
        for j in range(args.n):
            if i == j:
                row.append(0)
                continue
            d = math.dist(pts[i], pts[j]) * (1.0 + rng.uniform(0.0, args.skew))
            row.append(int(d + 0.5))
        print(" ".join(str(v) for v in row))
    print("EOF")


if __name__ == "__main__":
    main()
