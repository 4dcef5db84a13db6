#!/usr/bin/env python3
"""Sampled GB statistics per K: degree classes, spurious solutions and timings.

Each K gets ``--keys`` random keys with ``--per-key`` random wrong guesses.
Usage: python3 scripts/gb_stats.py --K 51 59 63 --keys 8 --per-key 512 --out gb_stats.json
"""
import argparse
import json
import math
import sys
import time

from e0attack.attack import random_key_campaign

# Reference rows: K -> (deg0 %, deg1 %, deg2 %, mean sols deg1, mean sols deg2)
REFERENCE = {
    51: (83.781, 15.243, 0.975, 1.442, 3.154),
    53: (94.023, 5.971, 0.005, 1.047, 3.0),
    55: (98.438, 1.561, 0.0001, 1.011, 3.0),
    57: (99.613, 0.386, 0.0, 1.004, None),
    59: (99.901, 0.098, 0.0, 1.0, None),
    61: (99.976, 0.023, 0.0, 1.0, None),
    63: (99.993, 0.006, 0.0, 1.0, None),
}


def band(p_pct: float, n: int, sigmas: float = 3.0) -> tuple[float, float]:
    p = p_pct / 100
    s = math.sqrt(max(p * (1 - p), 1e-12) / n)
    return 100 * max(0.0, p - sigmas * s), 100 * min(1.0, p + sigmas * s)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, nargs="+", default=[51, 59, 63])
    ap.add_argument("--keys", type=int, default=8)
    ap.add_argument("--per-key", type=int, default=512)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out")
    args = ap.parse_args()
    report = {}
    for K in args.K:
        t0 = time.time()
        st = random_key_campaign(K, args.keys, args.per_key, args.seed)
        print(st.table())
        n = st.total
        if K in REFERENCE:
            pub = REFERENCE[K]
            for name, p in zip(("Deg0", "Deg1", "Deg2"), pub[:3]):
                lo, hi = band(p, n)
                got = 100 * st.fraction(name)
                print(f"    {name}: {got:7.3f}%  reference {p:7.3f}%  3-sigma band [{lo:.3f}, {hi:.3f}]")
        print(f"    wall {time.time() - t0:.1f}s", flush=True)
        report[K] = st.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
