#!/usr/bin/env python3
"""Zero counts of the 14-variable consistency polynomial, both closed forms.

The last column counts the 14-bit points where the two forms disagree.
Usage: python3 scripts/gbalance.py
"""
import itertools

from e0attack.attack import g_table


def main() -> None:
    print(" b0 b1 b2 | derived zeros | printed zeros | printed != derived")
    for bits in itertools.product((0, 1), repeat=3):
        der, pri = g_table(*bits, form="derived"), g_table(*bits, form="printed")
        diff = sum(a != b for a, b in zip(der, pri))
        print(f"  {bits[0]}  {bits[1]}  {bits[2]} | {der.count(0):13d} | {pri.count(0):13d} | {diff:18d}")


if __name__ == "__main__":
    main()
