"""Command line interface: ``e0attack <command> ...``.

Exit codes: 0 ok, 2 usage, 3 system not invertible, 4 resource budget
exceeded, 5 a requested check failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import random
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from . import attack as atk
from . import cnf as cnfmod
from .diffsys import DiffSystem, NotInvertible, SystemState, invert, reverse_windows
from .e0 import CipherState, Keystream, Route, advance, e0_system, keystream, oracle_run
from .groebner import ResourceBudgetExceeded

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_INVERTIBLE = 3
EXIT_BUDGET = 4
EXIT_ASSERTION = 5

OUTDIR_ENV = "E0ATTACK_OUTDIR"


class UsageError(Exception):
    pass


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def outdir(args) -> Path:
    p = Path(args.outdir or os.environ.get(OUTDIR_ENV) or ".")
    p.mkdir(parents=True, exist_ok=True)
    return p


def write_manifest(args, command: str, config: dict, outputs: Sequence[Path], started: str,
                   seed: int | None = None) -> Path:
    manifest = {
        "command": command,
        "argv": list(args._argv),
        "config": config,
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
    }
    path = outdir(args) / f"{command}-manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _key_from_args(args) -> tuple[CipherState, int | None]:
    if getattr(args, "state", None):
        try:
            return CipherState.from_hex(args.state), None
        except ValueError as e:
            raise UsageError(str(e)) from None
    if getattr(args, "random_key", None) is not None:
        return CipherState.random(random.Random(f"key:{args.random_key}")), args.random_key
    raise UsageError("give a state with --state HEX or --random-key SEED")


# -- keystream --------------------------------------------------------------------

def cmd_keystream(args) -> int:
    started = _now()
    key, seed = _key_from_args(args)
    if args.n < 0:
        raise UsageError("-n must be non-negative")
    start = advance(key, args.start_clock) if args.start_clock else key
    ks = keystream(start, args.n, Route(args.route), start_clock=args.start_clock)
    if args.out is None:
        if args.format == "binary":
            sys.stdout.buffer.write(ks.to_bytes())
        else:
            print(ks.to_ascii())
        return EXIT_OK
    path = outdir(args) / args.out
    if args.format == "binary":
        path.write_bytes(ks.to_bytes())
    else:
        path.write_text(ks.to_ascii() + "\n")
    write_manifest(args, "keystream", {"n": args.n, "route": args.route, "format": args.format,
                                       "start_clock": args.start_clock, "state": key.to_hex()},
                   [path], started, seed)
    print(path)
    return EXIT_OK


# -- invert ------------------------------------------------------------------------

def _load_system(args) -> DiffSystem:
    if args.preset:
        if args.preset != "e0":
            raise UsageError(f"unknown preset {args.preset!r}")
        return e0_system()
    if not args.system:
        raise UsageError("give a system file or --preset e0")
    try:
        return DiffSystem.from_text(Path(args.system).read_text())
    except (OSError, ValueError) as e:
        raise UsageError(str(e)) from None


def cmd_invert(args) -> int:
    started = _now()
    system = _load_system(args)
    try:
        inv = invert(system)
    except NotInvertible as e:
        print(f"not invertible: {e}", file=sys.stderr)
        return EXIT_NOT_INVERTIBLE
    text = inv.to_text()
    if args.roundtrip:
        rng = random.Random(args.seed)
        for _ in range(args.roundtrip):
            v = SystemState(tuple(rng.getrandbits(1) for _ in range(system.width)))
            back = reverse_windows(system, inv.step(reverse_windows(system, system.step(v))))
            if back != v:
                print("roundtrip FAILED", file=sys.stderr)
                return EXIT_ASSERTION
        print(f"# roundtrip ok on {args.roundtrip} states", file=sys.stderr)
    if args.out:
        path = outdir(args) / args.out
        path.write_text(text)
        write_manifest(args, "invert", {"preset": args.preset, "system": args.system,
                                        "roundtrip": args.roundtrip}, [path], started, args.seed)
        print(path)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- gbalance ---------------------------------------------------------------------

def cmd_gbalance(args) -> int:
    if args.all:
        cases = [(b & 1, b >> 1 & 1, b >> 2 & 1) for b in range(8)]
    elif len(args.bits) == 3 and set(args.bits) <= {0, 1}:
        cases = [tuple(args.bits)]
    else:
        raise UsageError("give three bits b0 b1 b2 or --all")
    ok = True
    for b0, b1, b2 in cases:
        zeros = atk.g_zero_count(b0, b1, b2, args.form)
        ones = (1 << 14) - zeros
        ok &= zeros == 1 << 13
        print(f"{b0} {b1} {b2}  zeros={zeros}  ones={ones}  total={zeros + ones}")
    if args.check and not ok:
        return EXIT_ASSERTION
    return EXIT_OK


# -- attack ------------------------------------------------------------------------

def _attack_config(args) -> atk.AttackConfig:
    kw = {"K": args.K, "extra_check_bits": args.extra_bits, "max_reductions": args.max_reductions,
          "fast_reject": not args.no_fast_reject, "g_form": args.g_form}
    if args.guess_vars:
        kw["guess_vars"] = atk.read_guess_vars(Path(args.guess_vars).read_text())
    try:
        return atk.AttackConfig(**kw)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _sampler(args):
    if args.exhaustive:
        lo, hi = args.exhaustive
        return atk.ExhaustiveRange(lo, hi)
    if args.include_truth:
        return atk.IncludeTruth(args.random or 0, args.seed)
    if args.random:
        return atk.Random(args.random, args.seed)
    raise UsageError("choose a sampler: --include-truth, --random N or --exhaustive LO HI")


def cmd_attack(args) -> int:
    started = _now()
    key, seed = _key_from_args(args)
    cfg = _attack_config(args)
    sampler = _sampler(args)
    onset = advance(key, args.offset)
    _, bits = oracle_run(onset, cfg.keystream_bits_needed)
    ks = Keystream(tuple(bits), args.offset)
    out = outdir(args)
    outputs: list[Path] = []
    if args.export_cnf:
        outputs += _export_campaign_cnf(args, cfg, ks, onset, sampler, out)
    try:
        stats = atk.run_campaign(cfg, ks, sampler, truth=onset,
                                 checkpoint=out / args.checkpoint if args.checkpoint else None,
                                 workers=args.workers)
    except AssertionError as e:
        print(f"assertion failed: {e}", file=sys.stderr)
        return EXIT_ASSERTION
    report = stats.to_json()
    if args.include_truth:
        recovered = [CipherState.from_hex(h) for h in stats.recovered_states]
        keys = [atk.recover_initial_state(s, args.offset) for s in recovered]
        report["key_recovered"] = key in keys
        report["recovered_keys"] = [k.to_hex() for k in keys]
        if key not in keys:
            print("assertion failed: key not recovered", file=sys.stderr)
            return EXIT_ASSERTION
    stats_path = out / (args.stats or f"attack-K{cfg.K}.json")
    stats_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs.append(stats_path)
    write_manifest(args, "attack", {"attack": cfg.to_json(), "sampler": atk.sampler_to_json(sampler),
                                    "offset": args.offset, "key": key.to_hex(),
                                    "workers": args.workers}, outputs, started, seed)
    print(stats.table())
    if args.include_truth:
        print(f"key recovered: {report['key_recovered']}  survivors: {stats.survivors}")
    if stats.counts["Budget"] and args.fail_on_budget:
        return EXIT_BUDGET
    return EXIT_OK


def _export_campaign_cnf(args, cfg, ks, onset, sampler, out: Path) -> list[Path]:
    inst = atk.build_instance(cfg, ks)
    base = cnfmod.compile(inst, cut=args.cut)
    base_path = out / f"attack-K{cfg.K}.cnf"
    cnfmod.write_dimacs(base, base_path)
    paths = [base_path, Path(str(base_path) + ".map")]
    cm = atk.CompiledAttack(cfg, ks)
    truth_word = cm.truth_word(onset)
    for i, w in enumerate(sampler.words(cm, truth_word)):
        if i >= args.export_cnf:
            break
        guess = {v: w >> j & 1 for j, v in enumerate(cfg.guess_vars)}
        p = out / f"attack-K{cfg.K}-guess{i:05d}.cnf"
        cnfmod.write_dimacs(cnfmod.inject_guess(base, guess), p, write_map=False)
        paths.append(p)
    return paths


# -- cnf ---------------------------------------------------------------------------

def cmd_cnf(args) -> int:
    started = _now()
    key, seed = _key_from_args(args)
    cfg = _attack_config(args)
    _, bits = oracle_run(key, cfg.K)
    inst = atk.build_instance(cfg, Keystream(tuple(bits)))
    formula = cnfmod.compile(inst, cut=args.cut, native_xor=args.xor)
    if args.guess != "none":
        cm = atk.CompiledAttack(cfg, Keystream(tuple(bits)))
        w = cm.truth_word(key)
        if args.guess == "random":
            w = random.Random(f"guess:{args.seed}").getrandbits(len(cfg.guess_vars))
        formula = cnfmod.inject_guess(formula, {v: w >> j & 1 for j, v in enumerate(cfg.guess_vars)})
    path = outdir(args) / (args.out or f"instance-K{cfg.K}.cnf")
    cnfmod.write_dimacs(formula, path)
    write_manifest(args, "cnf", {"attack": cfg.to_json(), "cut": args.cut, "xor": args.xor,
                                 "guess": args.guess, "key": key.to_hex()},
                   [path, Path(str(path) + ".map")], started, seed)
    print(f"{path}: {formula.num_vars} variables, {formula.num_clauses} clauses")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def _add_key_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--state", help="132-bit state as 33 hex digits")
    g.add_argument("--random-key", type=int, metavar="SEED", help="pseudo-random state from SEED")


def _add_attack_args(p):
    p.add_argument("-K", type=int, default=59, help="keystream bits in the system (default 59)")
    p.add_argument("--extra-bits", type=int, default=32, help="extra keystream bits for filtering")
    p.add_argument("--max-reductions", type=int, default=10**6)
    p.add_argument("--no-fast-reject", action="store_true")
    p.add_argument("--g-form", choices=("derived", "printed"), default="derived")
    p.add_argument("--guess-vars", metavar="FILE", help="file listing the guessed variables")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="e0attack", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV} or .)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keystream", help="generate keystream bits")
    _add_key_args(p)
    p.add_argument("-n", type=int, default=64)
    p.add_argument("--route", choices=[r.value for r in Route], default="oracle")
    p.add_argument("--format", choices=("ascii", "binary"), default="ascii")
    p.add_argument("--start-clock", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_keystream)

    p = sub.add_parser("invert", help="derive the inverse of a difference system")
    p.add_argument("system", nargs="?", help="system file")
    p.add_argument("--preset", choices=("e0",))
    p.add_argument("--roundtrip", type=int, default=0, metavar="N",
                   help="check inverse-step after step on N random states")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("gbalance", help="count zeros of the 14-variable consistency polynomial")
    p.add_argument("bits", nargs="*", type=int, help="three keystream bits b0 b1 b2")
    p.add_argument("--all", action="store_true")
    p.add_argument("--form", choices=("derived", "printed"), default="derived")
    p.add_argument("--check", action="store_true", help="exit 5 unless every count is 8192")
    p.set_defaults(func=cmd_gbalance)

    p = sub.add_parser("attack", help="run a guess-and-determine campaign")
    _add_key_args(p)
    _add_attack_args(p)
    p.add_argument("--offset", type=int, default=0, help="keystream starts at this clock of the key")
    p.add_argument("--include-truth", action="store_true")
    p.add_argument("--random", type=int, metavar="N")
    p.add_argument("--exhaustive", type=int, nargs=2, metavar=("LO", "HI"),
                   help="range over the 14 special variables, others from the true key")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoint", help="checkpoint file name (resumed if present)")
    p.add_argument("--stats", help="stats JSON file name")
    p.add_argument("--export-cnf", type=int, default=0, metavar="M",
                   help="also write the base CNF and the first M guessed CNFs")
    p.add_argument("--cut", type=int, default=4)
    p.add_argument("--fail-on-budget", action="store_true")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("cnf", help="export an attack instance as DIMACS")
    _add_key_args(p)
    _add_attack_args(p)
    p.add_argument("--cut", type=int, default=4)
    p.add_argument("--xor", action="store_true", help="emit native XOR lines")
    p.add_argument("--guess", choices=("none", "truth", "random"), default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cnf)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except UsageError as e:
        print(f"e0attack: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceBudgetExceeded as e:
        print(f"resource budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except NotInvertible as e:
        print(f"not invertible: {e}", file=sys.stderr)
        return EXIT_NOT_INVERTIBLE


if __name__ == "__main__":
    sys.exit(main())
