#!/usr/bin/env python3
"""Recover one random key from keystream observed at a later clock.

The keystream starts at clock ``--offset``; the attack recovers the state at
that clock from the true guess plus some random wrong ones, then the inverse
system rewinds it to clock 0.
Usage: python3 scripts/recover_demo.py --K 55 --seed 3 --wrong 32
"""
import argparse
import random

from e0attack.attack import AttackConfig, IncludeTruth, recover_initial_state, run_campaign
from e0attack.e0 import CipherState, Keystream, advance, oracle_run


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=55)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--wrong", type=int, default=32, help="random wrong guesses besides the true one")
    ap.add_argument("--offset", type=int, default=200)
    args = ap.parse_args()

    cfg = AttackConfig(K=args.K)
    key = CipherState.random(random.Random(args.seed))
    mid = advance(key, args.offset)
    _, bits = oracle_run(mid, cfg.keystream_bits_needed)
    ks = Keystream(tuple(bits), args.offset)
    print(f"key        {key.to_hex()}")
    print(f"keystream  {ks.to_ascii()}  (from clock {args.offset})")

    st = run_campaign(cfg, ks, IncludeTruth(args.wrong, args.seed), truth=mid)
    print(st.table())
    for h in st.recovered_states:
        rewound = recover_initial_state(CipherState.from_hex(h), args.offset)
        print(f"recovered  {h} at clock {args.offset}; rewound {rewound.to_hex()}  "
              f"{'matches' if rewound == key else 'DIFFERS'}")
    return 0 if [key] == [recover_initial_state(CipherState.from_hex(h), args.offset)
                          for h in st.recovered_states] else 1


if __name__ == "__main__":
    raise SystemExit(main())
