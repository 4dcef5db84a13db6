"""Guess-and-determine attack on E0 with Boolean Gröbner bases.

The attack system for ``K`` keystream bits uses the combiner recurrences at
clocks ``t = 0..K-2``.  LFSR cells are reduced to the 128 initial variables,
and every ``c(t+1)``, ``t < K``, is replaced through the keystream relation
``c(t+1) = x(t+1) + y(t+7) + z(t+1) + u(t+7) + b(t)``.  What is left is a
system of ``2(K-1)`` polynomials in the LFSR initials, ``c(0)`` and
``d(0..K)``.

Two routes build it.  :func:`build_instance` expands the generators
symbolically over the full variable set; it is used for audits and tests.
:class:`CompiledAttack` builds the same polynomials already restricted to a
guess, working on the (much smaller) post-guess linear forms; it is what
:func:`run_guess` uses.
"""

from __future__ import annotations

import enum
import json
import math
import random
import statistics
import struct
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .diffsys import LinearWindow, reverse_state
from .e0 import (CipherState, Keystream, e0_inverse_system, e0_system, lfsr_window, oracle_run,
                 oracle_step, state_from_mask)
from .groebner import (ResourceBudgetExceeded, Status, buchberger_local, count_standard_monomials,
                       enumerate_local)
from .order import LocalRing, MonomialOrder, normal_form
from .poly import LFSR_STREAMS, BoolPoly, Stream, Var, c, d, iter_bits, mask_of, u, x, y, z

SPECIAL_VARS: tuple[Var, ...] = (
    x(1), x(2), x(3), y(7), y(8), y(9), z(1), z(2), z(3), u(7), u(8), u(9), c(0), d(0),
)
DEFAULT_GUESS_VARS: tuple[Var, ...] = tuple(
    [x(i) for i in range(25)]
    + [y(i) for i in range(27)] + [y(29)]
    + [z(i) for i in range(11)] + [z(i) for i in range(29, 33)]
    + [u(i) for i in range(10)] + [u(35), u(36), u(37)]
    + [c(0), d(0)]
)
LFSR_WINDOW: tuple[Var, ...] = tuple(v for v in e0_system().window if v.stream in LFSR_STREAMS)


class InsufficientKeystream(ValueError):
    pass


class DegreeClass(str, enum.Enum):
    DEG0 = "Deg0"
    DEG1 = "Deg1"
    DEG2 = "Deg2"
    HIGHER = "Higher"
    BUDGET = "Budget"


CLASSES = tuple(DegreeClass)


@dataclass(frozen=True)
class AttackConfig:
    K: int = 59
    B: int | None = None
    guess_vars: tuple[Var, ...] = DEFAULT_GUESS_VARS
    extra_check_bits: int = 32
    max_reductions: int = 10**6
    solution_limit: int = 256
    fast_reject: bool = True
    g_form: str = "derived"

    def __post_init__(self):
        if self.K < 3:
            raise ValueError("K must be at least 3")
        if self.B is None:
            object.__setattr__(self, "B", self.K + 6)
        object.__setattr__(self, "guess_vars", tuple(self.guess_vars))
        if len(set(self.guess_vars)) != len(self.guess_vars):
            raise ValueError("guess variables must be distinct")
        allowed = set(attack_variables(self.K))
        bad = [str(v) for v in self.guess_vars if v not in allowed]
        if bad:
            raise ValueError(f"guess variables outside the attack system: {', '.join(bad)}")
        if self.g_form not in ("derived", "printed"):
            raise ValueError("g_form must be 'derived' or 'printed'")

    @property
    def keystream_bits_needed(self) -> int:
        return self.K + self.extra_check_bits

    @property
    def uses_fast_reject(self) -> bool:
        return self.fast_reject and set(SPECIAL_VARS) <= set(self.guess_vars)

    def to_json(self) -> dict:
        out = asdict(self)
        out["guess_vars"] = [str(v) for v in self.guess_vars]
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "AttackConfig":
        data = dict(data)
        if "guess_vars" in data:
            data["guess_vars"] = tuple(Var.parse(s) for s in data["guess_vars"])
        return cls(**data)


def attack_variables(K: int) -> list[Var]:
    return list(LFSR_WINDOW) + [c(0)] + [d(t) for t in range(K + 1)]


def read_guess_vars(text: str) -> tuple[Var, ...]:
    """Whitespace or comma separated variable names; ``#`` starts a comment."""
    names = []
    for line in text.splitlines():
        names.extend(line.split("#", 1)[0].replace(",", " ").split())
    return tuple(Var.parse(n) for n in names)


# -- symbolic construction -----------------------------------------------------

def combiner_inputs(t: int, window: LinearWindow) -> tuple[BoolPoly, ...]:
    """``x(t+1), y(t+7), z(t+1), u(t+7)`` over the LFSR initial windows."""
    return tuple(window.poly(v) for v in (x(t + 1), y(t + 7), z(t + 1), u(t + 7)))


def raw_recurrences(t: int, window: LinearWindow) -> tuple[BoolPoly, BoolPoly]:
    """Combiner recurrences at clock ``t`` with LFSR cells reduced, c and d untouched."""
    sys = e0_system()
    cr = BoolPoly.var(c(t + 2)) + sys.feedback(Stream.C).shift(t)
    dr = BoolPoly.var(d(t + 2)) + sys.feedback(Stream.D).shift(t)
    return window.reduce(cr), window.reduce(dr)


def keystream_relation(t: int, bit: int) -> BoolPoly:
    return e0_system().keystream_poly.shift(t) + bit


def c_images(ks: Sequence[int], K: int, window: LinearWindow) -> dict[Var, BoolPoly]:
    """``c(t+1) -> x(t+1) + y(t+7) + z(t+1) + u(t+7) + b(t)`` for ``t < K``."""
    images = {}
    for t in range(K):
        acc = BoolPoly.const(ks[t])
        for p in combiner_inputs(t, window):
            acc = acc + p
        images[c(t + 1)] = acc
    return images


@dataclass(frozen=True)
class AttackInstance:
    K: int
    generators: tuple[BoolPoly, ...]
    keystream: Keystream
    variables: tuple[Var, ...]


def _check_keystream(K: int, ks: Keystream | Sequence[int]) -> Keystream:
    if not isinstance(ks, Keystream):
        ks = Keystream(tuple(ks))
    if len(ks) < K:
        raise InsufficientKeystream(f"need {K} keystream bits, got {len(ks)}")
    return ks


def build_instance(cfg: AttackConfig, ks: Keystream | Sequence[int]) -> AttackInstance:
    ks = _check_keystream(cfg.K, ks)
    K = cfg.K
    window = lfsr_window(K + 7)
    images = c_images(ks.bits, K, window)
    gens = []
    for t in range(K - 1):
        for p in raw_recurrences(t, window):
            gens.append(p.compose(images))
    return AttackInstance(K, tuple(gens), ks, tuple(attack_variables(K)))


# -- the 14-variable polynomial ---------------------------------------------------

@dataclass(frozen=True)
class GParts:
    G1: BoolPoly
    G2: BoolPoly
    G3: BoolPoly
    A1: BoolPoly
    A2: BoolPoly
    A3: BoolPoly
    A4: BoolPoly

    def g(self, form: str = "derived") -> BoolPoly:
        if form == "derived":
            return self.A1 * (self.A3 + 1) + self.A2 + self.A4
        if form == "printed":
            return (self.A1 + 1) * self.A3 + self.A2 + self.A4
        raise ValueError(form)


@lru_cache(maxsize=16)
def g_parts(b0: int, b1: int, b2: int) -> GParts:
    """Reduce the first combiner polynomials modulo the first keystream relations."""
    sys = e0_system()
    g0, g1 = sys.feedback(Stream.C), sys.feedback(Stream.D)
    C0 = BoolPoly.var(c(2)) + g0
    C1 = BoolPoly.var(c(3)) + g0.shift(1)
    D0 = BoolPoly.var(d(2)) + g1
    Bs = [keystream_relation(i, b) for i, b in enumerate((b0, b1, b2))]
    order = MonomialOrder.degrevlex(list(SPECIAL_VARS) + [c(1), c(2), c(3), d(1), d(2)])
    G1, G2, G3 = (normal_form(p, Bs, order) for p in (C0, C1, D0))
    d1, d2 = BoolPoly.var(d(1)), BoolPoly.var(d(2))
    A1 = G1 + d1
    A2 = G2 + d1 + d2
    A4 = G3.substitute(d(1), 0) + d2
    A3 = G3.substitute(d(1), 1) + G3.substitute(d(1), 0)
    dmask = d(1).mask | d(2).mask
    for name, p in (("A1", A1), ("A2", A2), ("A3", A3), ("A4", A4)):
        if p.support() & dmask:
            raise AssertionError(f"{name} still depends on d(1), d(2)")
    return GParts(G1, G2, G3, A1, A2, A3, A4)


def build_g_polynomial(b0: int, b1: int, b2: int, form: str = "derived") -> BoolPoly:
    """Consistency polynomial in the 14 special variables; nonzero means no solution."""
    return g_parts(b0 & 1, b1 & 1, b2 & 1).g(form)


@lru_cache(maxsize=32)
def g_table(b0: int, b1: int, b2: int, form: str = "derived") -> bytes:
    """Values of G indexed by the special variables, bit ``j`` of the index being ``SPECIAL_VARS[j]``."""
    from .poly import truth_table
    return bytes(truth_table(build_g_polynomial(b0, b1, b2, form), SPECIAL_VARS))


def g_zero_count(b0: int, b1: int, b2: int, form: str = "derived") -> int:
    return g_table(b0, b1, b2, form).count(0)


# -- per-guess compiled systems ----------------------------------------------------

def _lin(mask: int, const: int) -> set[int]:
    s = {1 << j for j in iter_bits(mask)}
    if const:
        s.add(0)
    return s


def _mul(p: set[int], q: set[int]) -> set[int]:
    out: set[int] = set()
    for a in p:
        for b in q:
            w = a | b
            if w in out:
                out.remove(w)
            else:
                out.add(w)
    return out


def _elementary(forms: Sequence[set[int]]) -> list[set[int]]:
    e = [{0}] + [set() for _ in forms]
    for L in forms:
        for k in range(len(forms), 0, -1):
            if e[k - 1]:
                e[k] ^= _mul(L, e[k - 1])
    return e


@dataclass
class GuessOutcome:
    degree_class: DegreeClass
    raw_solution_count: int
    survivors: tuple[CipherState, ...]
    elapsed: float
    fast_rejected: bool = False
    reductions: int = 0
    enumerated: bool = True

    @property
    def ran_groebner(self) -> bool:
        return not self.fast_rejected


class CompiledAttack:
    """Everything about one (config, keystream) pair that does not depend on the guess.

    Guesses are integers: bit ``j`` is the value of ``cfg.guess_vars[j]``.
    """

    def __init__(self, cfg: AttackConfig, ks: Keystream | Sequence[int]):
        self.cfg = cfg
        self.ks = ks = _check_keystream(cfg.K, ks)
        K = cfg.K
        self.window = window = lfsr_window(K + 7)
        guess_pos = {v: j for j, v in enumerate(cfg.guess_vars)}
        self.guess_pos = guess_pos
        unknowns = [v for v in attack_variables(K) if v not in guess_pos]
        self.unknowns = tuple(unknowns)
        self.order = MonomialOrder.degrevlex(unknowns)
        self.ring: LocalRing = self.order.ring
        self.universe = self.ring.full
        self.bits = ks.bits

        def split(gmask: int, const: int) -> tuple[int, int, int]:
            local = word = 0
            for i in iter_bits(gmask):
                v = Var.from_index(i)
                j = guess_pos.get(v)
                if j is None:
                    local |= self.ring.var_bit(v)
                else:
                    word |= 1 << j
            return local, word, const

        self.forms = []
        for t in range(K):
            self.forms.append(tuple(split(*window.form(v))
                                    for v in (x(t + 1), y(t + 7), z(t + 1), u(t + 7))))
        self.c0 = split(c(0).mask, 0)
        self.d0 = split(d(0).mask, 0)
        self.dbit = [0] + [self.ring.var_bit(d(t)) for t in range(1, K + 1)]

        self.fast = cfg.uses_fast_reject
        if self.fast:
            b0, b1, b2 = ks.bits[:3]
            self.gtab = g_table(b0, b1, b2, cfg.g_form)
            self.special_pos = tuple(guess_pos[v] for v in SPECIAL_VARS)
            parts = g_parts(b0, b1, b2)
            self.A1, self.A2 = parts.A1, parts.A2
        self.state_pos = tuple((guess_pos.get(v), v) for v in e0_system().window)

    # -- guess encoding ------------------------------------------------------------
    def guess_word(self, guess: Mapping[Var, int] | int) -> int:
        if isinstance(guess, int):
            return guess
        missing = [str(v) for v in self.cfg.guess_vars if v not in guess]
        if missing:
            raise ValueError(f"guess leaves unassigned: {', '.join(missing[:5])}")
        w = 0
        for v, j in self.guess_pos.items():
            if guess[v] & 1:
                w |= 1 << j
        return w

    def truth_word(self, state: CipherState) -> int:
        """Guess word of the true values, from a clock-0 state."""
        return self.guess_word(self.trajectory_values(state))

    def trajectory_values(self, state: CipherState) -> dict[Var, int]:
        vals = state.assignment()
        # d(t) for t >= 2 from the oracle trajectory.
        s = state
        for t in range(2, self.cfg.K + 1):
            s, _ = oracle_step(s)
            vals[d(t)] = s.d1
        return vals

    def guess_ones(self, word: int) -> int:
        ones = 0
        for j, v in enumerate(self.cfg.guess_vars):
            if word >> j & 1:
                ones |= v.mask
        return ones

    # -- fast reject -------------------------------------------------------------
    def special_index(self, word: int) -> int:
        idx = 0
        for k, j in enumerate(self.special_pos):
            idx |= (word >> j & 1) << k
        return idx

    def fast_rejects(self, word: int) -> bool:
        return bool(self.gtab[self.special_index(word)])

    # -- generators ----------------------------------------------------------------
    def _value(self, spec: tuple[int, int, int], word: int) -> set[int]:
        local, sel, const = spec
        return _lin(local, ((sel & word).bit_count() ^ const) & 1)

    def generators(self, word: int, fast_relations: bool = False) -> list[frozenset[int]]:
        """Local polynomials of the attack system restricted to the guess."""
        K, bits = self.cfg.K, self.bits
        E = []
        for t in range(K):
            E.append(_elementary([self._value(f, word) for f in self.forms[t]]))
        cpoly = [self._value(self.c0, word)]
        for t in range(1, K + 1):
            p = set(E[t - 1][1])
            if bits[t - 1]:
                p ^= {0}
            cpoly.append(p)
        dpoly = [self._value(self.d0, word)] + [{b} for b in self.dbit[1:]]
        gens: list[frozenset[int]] = []
        for t in range(K - 1):
            e = E[t]
            b = bits[t]
            cr = set(cpoly[t + 1 + 1]) ^ e[2] ^ dpoly[t + 1] ^ dpoly[t] ^ cpoly[t]
            if b:
                cr ^= e[1]
                cr ^= {0}
            dr = set(dpoly[t + 2]) ^ e[4] ^ cpoly[t]
            coeff = set(e[2]) ^ {0}
            if not b:
                coeff ^= e[1]
                dr ^= e[3]
            dr ^= _mul(coeff, dpoly[t + 1])
            # c(t+2) came in as E1(t+1) + b(t+1) through cpoly; cr is complete.
            gens.append(frozenset(cr))
            gens.append(frozenset(dr))
        if fast_relations:
            gones = self.guess_ones(word)
            a1 = self.A1.eval_mask(gones)
            a2 = self.A2.eval_mask(gones)
            gens.append(frozenset(_lin(self.dbit[1], a1)))
            gens.append(frozenset(_lin(self.dbit[2], a1 ^ a2)))
        return [g for g in gens if g]

    # -- candidates ----------------------------------------------------------------
    def candidate_state(self, word: int, local_ones: int) -> CipherState:
        ones = self.guess_ones(word) | self.ring.to_global(local_ones)
        wx = 0
        for v in (x(1), y(7), z(1), u(7)):
            wx ^= 1 if ones & v.mask else 0
        if wx ^ self.bits[0]:
            ones |= c(1).mask
        return state_from_mask(ones)

    def check(self, state: CipherState) -> bool:
        n = min(len(self.ks), self.cfg.keystream_bits_needed)
        return oracle_run(state, n)[1] == list(self.ks.bits[:n])

    # -- one guess ----------------------------------------------------------------
    def run(self, guess: Mapping[Var, int] | int, fast_reject: bool | None = None) -> GuessOutcome:
        word = self.guess_word(guess)
        fast = self.fast if fast_reject is None else (fast_reject and self.fast)
        t0 = time.perf_counter()
        if fast and self.fast_rejects(word):
            return GuessOutcome(DegreeClass.DEG0, 0, (), time.perf_counter() - t0, fast_rejected=True)
        gens = self.generators(word, fast_relations=fast)
        try:
            basis, status, reductions = buchberger_local(
                gens, self.ring, stop_on_unit=True, stop_on_all_vars_linear=True,
                max_reductions=self.cfg.max_reductions)
        except ResourceBudgetExceeded:
            return GuessOutcome(DegreeClass.BUDGET, 0, (), time.perf_counter() - t0,
                                reductions=self.cfg.max_reductions, enumerated=False)
        if status is Status.INCONSISTENT:
            return GuessOutcome(DegreeClass.DEG0, 0, (), time.perf_counter() - t0, reductions=reductions)
        deg = max(max(m.bit_count() for m in g) for g in basis)
        cls = {1: DegreeClass.DEG1, 2: DegreeClass.DEG2}.get(deg, DegreeClass.HIGHER)
        count = count_standard_monomials([max(g, key=self.ring.key) for g in basis], self.universe)
        survivors: list[CipherState] = []
        enumerated = count <= self.cfg.solution_limit
        if enumerated:
            for sol in enumerate_local(basis, self.ring):
                st = self.candidate_state(word, sol)
                if self.check(st):
                    survivors.append(st)
        return GuessOutcome(cls, count, tuple(survivors), time.perf_counter() - t0,
                            reductions=reductions, enumerated=enumerated)


def run_guess(inst: AttackInstance | CompiledAttack, guess: Mapping[Var, int] | int,
              full_ks: Keystream | None = None, cfg: AttackConfig | None = None) -> GuessOutcome:
    """Evaluate one guess.  ``inst`` may be a symbolic instance, compiled on the fly."""
    if isinstance(inst, AttackInstance):
        cfg = cfg or AttackConfig(K=inst.K)
        inst = CompiledAttack(cfg, full_ks if full_ks is not None else inst.keystream)
    return inst.run(guess)


# -- statistics ------------------------------------------------------------------

@dataclass
class AttackStats:
    config: dict = field(default_factory=dict)
    counts: dict = field(default_factory=lambda: {k.value: 0 for k in CLASSES})
    solutions: dict = field(default_factory=lambda: {k.value: 0 for k in CLASSES})
    fast_rejects: int = 0
    survivors: int = 0
    true_recoveries: int = 0
    recovered_states: list = field(default_factory=list)
    unenumerated: int = 0
    gb_times: list = field(default_factory=list)
    fast_times: list = field(default_factory=list)

    def add(self, out: GuessOutcome, truth: CipherState | None = None) -> None:
        k = out.degree_class.value
        self.counts[k] += 1
        self.solutions[k] += out.raw_solution_count
        self.survivors += len(out.survivors)
        if not out.enumerated:
            self.unenumerated += 1
        for s in out.survivors:
            h = s.to_hex()
            if h not in self.recovered_states:
                self.recovered_states.append(h)
            if truth is not None and s == truth:
                self.true_recoveries += 1
        if out.fast_rejected:
            self.fast_rejects += 1
            self.fast_times.append(out.elapsed)
        else:
            self.gb_times.append(out.elapsed)

    def merge(self, other: "AttackStats") -> "AttackStats":
        out = AttackStats(config=self.config or other.config)
        for k in out.counts:
            out.counts[k] = self.counts[k] + other.counts[k]
            out.solutions[k] = self.solutions[k] + other.solutions[k]
        out.fast_rejects = self.fast_rejects + other.fast_rejects
        out.survivors = self.survivors + other.survivors
        out.true_recoveries = self.true_recoveries + other.true_recoveries
        out.unenumerated = self.unenumerated + other.unenumerated
        out.recovered_states = sorted(set(self.recovered_states) | set(other.recovered_states))
        out.gb_times = sorted(self.gb_times + other.gb_times)
        out.fast_times = sorted(self.fast_times + other.fast_times)
        return out

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def fraction(self, cls: DegreeClass | str) -> float:
        k = DegreeClass(cls).value
        return self.counts[k] / self.total if self.total else 0.0

    def mean_solutions(self, cls: DegreeClass | str) -> float | None:
        k = DegreeClass(cls).value
        return self.solutions[k] / self.counts[k] if self.counts[k] else None

    @property
    def all_times(self) -> list[float]:
        return self.gb_times + self.fast_times

    def time_summary(self) -> dict:
        def agg(ts):
            if not ts:
                return None
            return {"avg": statistics.fmean(ts), "min": min(ts), "max": max(ts),
                    "median": statistics.median(ts), "n": len(ts)}
        allt = self.all_times
        return {
            "all": agg(allt),
            "groebner": agg(self.gb_times),
            "fast_reject": agg(self.fast_times),
            # Report-only: 2^83 guesses at the measured average cost.
            "extrapolated_total_seconds": 2.0**83 * statistics.fmean(allt) if allt else None,
        }

    def deterministic_view(self) -> dict:
        """Everything except wall-clock timings."""
        return {
            "config": self.config,
            "counts": dict(self.counts),
            "solutions": dict(self.solutions),
            "fast_rejects": self.fast_rejects,
            "survivors": self.survivors,
            "true_recoveries": self.true_recoveries,
            "recovered_states": sorted(self.recovered_states),
            "unenumerated": self.unenumerated,
        }

    def to_json(self) -> dict:
        out = self.deterministic_view()
        out["total"] = self.total
        out["fractions"] = {k.value: self.fraction(k) for k in CLASSES}
        out["mean_solutions"] = {k.value: self.mean_solutions(k) for k in CLASSES}
        out["timing"] = self.time_summary()
        out["gb_times"] = sorted(self.gb_times)
        out["fast_times"] = sorted(self.fast_times)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "AttackStats":
        s = cls(config=dict(data.get("config", {})))
        s.counts.update(data["counts"])
        s.solutions.update(data["solutions"])
        s.fast_rejects = data["fast_rejects"]
        s.survivors = data["survivors"]
        s.true_recoveries = data["true_recoveries"]
        s.recovered_states = list(data["recovered_states"])
        s.unenumerated = data["unenumerated"]
        s.gb_times = list(data.get("gb_times", []))
        s.fast_times = list(data.get("fast_times", []))
        return s

    def table(self) -> str:
        """Aligned text in the column layout of the usual GB statistics tables."""
        K = self.config.get("K", "?")
        t = self.time_summary()["all"] or {"avg": 0, "min": 0, "max": 0}
        ms = lambda v: f"{1000 * v:8.2f}"
        def pct(k):
            return f"{100 * self.fraction(k):8.3f}%"
        def sol(k):
            v = self.mean_solutions(k)
            return f"{v:8.3f}" if v is not None else "       -"
        head = (f"{'K':>3} {'avg ms':>8} {'min ms':>8} {'max ms':>8} | {'deg0':>9} {'deg1':>9} "
                f"{'deg2':>9} {'higher':>9} {'budget':>9} | {'sol1':>8} {'sol2':>8} | {'n':>7}")
        row = (f"{K:>3} {ms(t['avg'])} {ms(t['min'])} {ms(t['max'])} | {pct('Deg0')} {pct('Deg1')} "
               f"{pct('Deg2')} {pct('Higher')} {pct('Budget')} | {sol('Deg1')} {sol('Deg2')} | {self.total:>7}")
        return head + "\n" + row


# -- samplers -------------------------------------------------------------------

def _random_word(seed: int, i: int, nbits: int) -> int:
    return random.Random(f"e0attack:{seed}:{i}").getrandbits(nbits)


@dataclass(frozen=True)
class Random:
    """``n`` uniform guesses; guess ``i`` depends only on ``(seed, i)``."""

    n: int
    seed: int = 0
    exclude_truth: bool = True

    def __len__(self) -> int:
        return self.n

    def words(self, cm: CompiledAttack, truth_word: int | None, start: int = 0) -> Iterator[int]:
        nbits = len(cm.cfg.guess_vars)
        for i in range(start, self.n):
            w = _random_word(self.seed, i, nbits)
            k = 0
            while self.exclude_truth and truth_word is not None and w == truth_word:
                k += 1
                w = _random_word(self.seed, i + (k << 40), nbits)
            yield w


@dataclass(frozen=True)
class ExhaustiveRange:
    """Guesses ``lo..hi-1`` over the ``vary`` variables; all others come from ``base``."""

    lo: int
    hi: int
    vary: tuple[Var, ...] = SPECIAL_VARS
    base: int | None = None

    def __len__(self) -> int:
        return max(0, self.hi - self.lo)

    def words(self, cm: CompiledAttack, truth_word: int | None, start: int = 0) -> Iterator[int]:
        base = self.base if self.base is not None else (truth_word or 0)
        pos = [cm.guess_pos[v] for v in self.vary]
        clear = ~sum(1 << j for j in pos)
        for i in range(self.lo + start, self.hi):
            w = base & clear
            for k, j in enumerate(pos):
                w |= (i >> k & 1) << j
            yield w


@dataclass(frozen=True)
class IncludeTruth:
    """The true guess first, then ``n_random`` random guesses."""

    n_random: int = 0
    seed: int = 0

    def __len__(self) -> int:
        return 1 + self.n_random

    def words(self, cm: CompiledAttack, truth_word: int | None, start: int = 0) -> Iterator[int]:
        if truth_word is None:
            raise ValueError("IncludeTruth needs the true key")
        if start == 0:
            yield truth_word
        yield from Random(self.n_random, self.seed).words(cm, truth_word, max(0, start - 1))


Sampler = Random | ExhaustiveRange | IncludeTruth


def sampler_to_json(s: Sampler) -> dict:
    out = {"kind": type(s).__name__}
    for k, v in asdict(s).items():
        out[k] = [str(x) for x in v] if k == "vary" else v
    return out


# -- checkpoints -------------------------------------------------------------------

CHECKPOINT_MAGIC = b"E0CK"
CHECKPOINT_VERSION = 1


def write_checkpoint(path: Path | str, stats: AttackStats, cursor: int, meta: Mapping) -> None:
    payload = json.dumps({"cursor": cursor, "meta": dict(meta), "stats": stats.to_json()},
                         sort_keys=True).encode()
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(CHECKPOINT_MAGIC + struct.pack(">BI", CHECKPOINT_VERSION, len(payload)) + payload)
    tmp.replace(path)


def read_checkpoint(path: Path | str) -> tuple[AttackStats, int, dict]:
    data = Path(path).read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise ValueError("not a checkpoint file")
    version, n = struct.unpack(">BI", data[4:9])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    obj = json.loads(data[9:9 + n])
    return AttackStats.from_json(obj["stats"]), obj["cursor"], obj["meta"]


# -- campaigns -------------------------------------------------------------------

def _worker_chunk(args) -> AttackStats:
    cfg_json, ks_bits, words, truth_hex = args
    cfg = AttackConfig.from_json(cfg_json)
    cm = _compiled(cfg, ks_bits)
    truth = CipherState.from_hex(truth_hex) if truth_hex else None
    st = AttackStats(config=cfg.to_json())
    for w in words:
        st.add(cm.run(w), truth)
    return st


@lru_cache(maxsize=4)
def _compiled(cfg: AttackConfig, ks_bits: tuple[int, ...]) -> CompiledAttack:
    return CompiledAttack(cfg, Keystream(ks_bits))


def run_campaign(cfg: AttackConfig, ks: Keystream | Sequence[int], sampler: Sampler,
                 truth: CipherState | None = None, checkpoint: Path | str | None = None,
                 checkpoint_every: int = 256, workers: int = 1,
                 compiled: CompiledAttack | None = None) -> AttackStats:
    """Run every guess of ``sampler`` and aggregate.

    ``truth`` is the clock-0 state that produced ``ks``; it is needed by
    :class:`IncludeTruth` and for counting true recoveries.  With a
    checkpoint path, an existing checkpoint is resumed from its cursor.
    """
    ks = _check_keystream(cfg.K, ks)
    cm = compiled or CompiledAttack(cfg, ks)
    truth_word = cm.truth_word(truth) if truth is not None else None
    stats = AttackStats(config=cfg.to_json())
    cursor = 0
    meta = {"sampler": sampler_to_json(sampler), "config": cfg.to_json()}
    if checkpoint is not None and Path(checkpoint).exists():
        stats, cursor, old = read_checkpoint(checkpoint)
        if old.get("sampler") != meta["sampler"] or old.get("config") != meta["config"]:
            raise ValueError("checkpoint belongs to a different campaign")
    words = sampler.words(cm, truth_word, cursor)
    if workers > 1:
        stats = _run_parallel(cfg, ks, list(words), truth, workers, stats)
        cursor = len(sampler)
    else:
        for w in words:
            stats.add(cm.run(w), truth)
            cursor += 1
            if checkpoint is not None and cursor % checkpoint_every == 0:
                write_checkpoint(checkpoint, stats, cursor, meta)
    if checkpoint is not None:
        write_checkpoint(checkpoint, stats, cursor, meta)
    if isinstance(sampler, IncludeTruth) and stats.true_recoveries < 1:
        raise AssertionError("the true state was not recovered")
    return stats


def _run_parallel(cfg, ks, words, truth, workers, stats):
    from concurrent.futures import ProcessPoolExecutor
    size = max(1, math.ceil(len(words) / (4 * workers)))
    chunks = [words[i:i + size] for i in range(0, len(words), size)]
    args = [(cfg.to_json(), ks.bits, ch, truth.to_hex() if truth else None) for ch in chunks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(_worker_chunk, args):
            stats = stats.merge(part)
    stats.config = cfg.to_json()
    return stats


def recover_initial_state(recovered: CipherState, t: int) -> CipherState:
    """The clock-0 state whose ``t``-fold evolution is ``recovered``."""
    v = reverse_state(e0_system(), e0_inverse_system(), recovered.to_system_state(), t)
    return CipherState.from_system_state(v)


def random_key_campaign(K: int, n_keys: int, per_key: int, seed: int,
                        cfg: AttackConfig | None = None, include_truth: bool = False,
                        progress=None) -> AttackStats:
    """Random keys, each attacked with ``per_key`` random guesses; stats merged."""
    cfg = cfg or AttackConfig(K=K)
    rng = random.Random(f"keys:{seed}")
    total = AttackStats(config=cfg.to_json())
    for k in range(n_keys):
        key = CipherState.random(rng)
        _, bits = oracle_run(key, cfg.keystream_bits_needed)
        sampler = (IncludeTruth(per_key, seed * 1000 + k) if include_truth
                   else Random(per_key, seed * 1000 + k))
        st = run_campaign(cfg, Keystream(tuple(bits)), sampler, truth=key)
        total = total.merge(st)
        if progress:
            progress(k, st)
    return total


__all__ = [
    "SPECIAL_VARS",
    "DEFAULT_GUESS_VARS",
    "InsufficientKeystream",
    "DegreeClass",
    "AttackConfig",
    "AttackInstance",
    "GuessOutcome",
    "AttackStats",
    "CompiledAttack",
    "GParts",
    "attack_variables",
    "read_guess_vars",
    "combiner_inputs",
    "raw_recurrences",
    "keystream_relation",
    "build_instance",
    "g_parts",
    "build_g_polynomial",
    "g_table",
    "g_zero_count",
    "run_guess",
    "Random",
    "ExhaustiveRange",
    "IncludeTruth",
    "run_campaign",
    "random_key_campaign",
    "recover_initial_state",
    "write_checkpoint",
    "read_checkpoint",
]
