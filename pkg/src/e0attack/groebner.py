"""Buchberger's algorithm in the boolean quotient ring.

Field equations are never materialised: monomials are squarefree, and the
S-polynomials against ``x^2 + x`` appear as the products ``x * g`` for every
variable ``x`` of ``LM(g)``.  Pair selection is the normal strategy with the
Gebauer-Möller update for pairs of basis elements.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .order import LPoly, LocalRing, MonomialOrder, Reducers, reduce_terms, universe_of
from .poly import BoolPoly, Var, iter_bits

DEFAULT_MAX_REDUCTIONS = 10**6


class ResourceBudgetExceeded(RuntimeError):
    pass


class TooManySolutions(ValueError):
    pass


class Status(enum.Enum):
    INCONSISTENT = "inconsistent"
    SOLVED = "solved"
    FINISHED = "finished"


@dataclass
class IdealBasis:
    gens: list[BoolPoly]
    order: MonomialOrder

    def __post_init__(self):
        self.gens = [g for g in self.gens if g]

    @classmethod
    def degrevlex(cls, gens: Sequence[BoolPoly], variables: Iterable[Var] | None = None):
        gens = list(gens)
        if variables is None:
            variables = universe_of(gens)
        return cls(gens, MonomialOrder.degrevlex(variables))


@dataclass
class GroebnerResult:
    basis: list[BoolPoly]
    degree: int
    dimension: int
    status: Status
    order: MonomialOrder = field(repr=False)
    reductions: int = 0
    local_basis: list[frozenset[int]] = field(default_factory=list, repr=False)

    @property
    def inconsistent(self) -> bool:
        return self.status is Status.INCONSISTENT


def buchberger(ideal: IdealBasis, stop_on_unit: bool = True,
               stop_on_all_vars_linear: bool = False,
               max_reductions: int = DEFAULT_MAX_REDUCTIONS) -> GroebnerResult:
    """Reduced Gröbner basis of ``ideal`` plus the field equations."""
    ring = ideal.order.ring
    local = [ring.poly_to_local(g) for g in ideal.gens]
    basis, status, work = buchberger_local(local, ring, stop_on_unit,
                                           stop_on_all_vars_linear, max_reductions)
    return result_from_local(basis, status, ideal.order, work)


def result_from_local(basis: list[frozenset[int]], status: Status, order: MonomialOrder,
                      work: int = 0) -> GroebnerResult:
    ring = order.ring
    if status is Status.INCONSISTENT:
        return GroebnerResult([BoolPoly.one()], 0, 0, status, order, work, [frozenset((0,))])
    degree = max((max(m.bit_count() for m in g) for g in basis), default=0)
    lms = [max(g, key=ring.key) for g in basis]
    dim = count_standard_monomials(lms, ring.full)
    if dim == 1:
        status = Status.SOLVED
    polys = [ring.poly_to_global(g) for g in basis]
    return GroebnerResult(polys, degree, dim, status, order, work, basis)


def buchberger_local(gens: Sequence[frozenset[int]], ring: LocalRing, stop_on_unit: bool = True,
                     stop_on_all_vars_linear: bool = False,
                     max_reductions: int = DEFAULT_MAX_REDUCTIONS):
    """Core engine on local polynomials.

    Returns ``(reduced basis, status, reductions)``; the basis is sorted by
    descending leading monomial.
    """
    return _Engine(ring, stop_on_unit, stop_on_all_vars_linear, max_reductions).run(gens)


class _Unit(Exception):
    pass


class _AllLinear(Exception):
    pass


class _Engine:
    def __init__(self, ring: LocalRing, stop_on_unit: bool, stop_on_linear: bool,
                 max_reductions: int):
        self.ring = ring
        self.key = ring.key
        self.stop_on_unit = stop_on_unit
        self.stop_on_linear = stop_on_linear
        self.max_reductions = max_reductions
        self.G: list[LPoly] = []
        self.active: list[bool] = []
        self.red = Reducers()
        self.pairs: dict[tuple[int, int], int] = {}   # (i, j) -> lcm, i < j
        self.heap: list = []
        self.linear_vars = 0
        self.counter = [0]
        self.pair_count = 0

    # -- pair bookkeeping ----------------------------------------------------
    def _push_pair(self, i: int, j: int, lcm: int) -> None:
        self.pairs[(i, j)] = lcm
        heapq.heappush(self.heap, (lcm.bit_count(), self.key(lcm), i, j))

    def _push_field(self, i: int, bit: int) -> None:
        lm = self.G[i].lm
        heapq.heappush(self.heap, (lm.bit_count() + 1, self.key(lm), i, -bit))

    def _update(self, h: LPoly, k: int) -> None:
        G, active = self.G, self.active
        hlm = h.lm
        cand = [(i, G[i].lm | hlm) for i in range(k) if active[i]]
        kept: list[tuple[int, int, bool]] = []
        for idx, (i, lcm) in enumerate(cand):
            coprime = not (G[i].lm & hlm)
            if not coprime:
                dominated = False
                for _, l2 in cand[idx + 1:]:
                    if l2 & lcm == l2:
                        dominated = True
                        break
                if not dominated:
                    for _, l2, _ in kept:
                        if l2 & lcm == l2:
                            dominated = True
                            break
                if dominated:
                    continue
            kept.append((i, lcm, coprime))
        # Old pairs whose lcm is strictly dominated through h.
        stale = []
        for (i, j), lcm in self.pairs.items():
            if hlm & lcm == hlm:
                if (G[i].lm | hlm) != lcm and (G[j].lm | hlm) != lcm:
                    stale.append((i, j))
        for p in stale:
            del self.pairs[p]
        for i, lcm, coprime in kept:
            if not coprime:
                self._push_pair(i, k, lcm)
        for i in range(k):
            if active[i] and G[i].lm & hlm == hlm:
                active[i] = False

    def _add(self, terms: frozenset[int]) -> None:
        if terms == _UNIT:
            raise _Unit
        h = LPoly(terms, self.key)
        k = len(self.G)
        self._update(h, k)
        self.G.append(h)
        self.active.append(True)
        self.red.add(h)
        lm = h.lm
        for b in iter_bits(lm):
            bit = 1 << b
            if any(not (t & bit) for t in terms):
                self._push_field(k, bit)
        if lm.bit_count() == 1 and h.degree == 1:
            self.linear_vars |= lm
            if self.stop_on_linear and self.linear_vars == self.ring.full:
                raise _AllLinear

    def _reduce(self, terms) -> frozenset[int]:
        if self.counter[0] > self.max_reductions:
            raise ResourceBudgetExceeded(
                f"more than {self.max_reductions} reduction steps")
        return reduce_terms(terms, self.red, self.key, self.counter)

    def _spoly(self, i: int, j: int) -> set[int]:
        f, g = self.G[i], self.G[j]
        lcm = f.lm | g.lm
        out: set[int] = set()
        for src, lm in ((f, f.lm), (g, g.lm)):
            t = lcm ^ lm
            for s in src.terms:
                w = t | s
                if w in out:
                    out.remove(w)
                else:
                    out.add(w)
        return out

    def _field_spoly(self, i: int, bit: int) -> set[int]:
        out: set[int] = set()
        for s in self.G[i].terms:
            w = s | bit
            if w in out:
                out.remove(w)
            else:
                out.add(w)
        return out

    # -- main loop -----------------------------------------------------------
    def run(self, gens: Sequence[frozenset[int]]):
        status = Status.FINISHED
        try:
            for terms in sorted((g for g in gens if g), key=lambda g: max(map(self.key, g))):
                r = self._reduce(terms)
                if r:
                    self._add(r)
            while self.heap:
                _, _, i, j = heapq.heappop(self.heap)
                if j >= 0:
                    if self.pairs.pop((i, j), None) is None:
                        continue
                    s = self._spoly(i, j)
                else:
                    s = self._field_spoly(i, -j)
                self.pair_count += 1
                r = self._reduce(s)
                if r:
                    self._add(r)
        except _Unit:
            return [_UNIT], Status.INCONSISTENT, self.counter[0]
        except _AllLinear:
            status = Status.SOLVED
            basis = self._finish_linear()
            if basis is None:
                return [_UNIT], Status.INCONSISTENT, self.counter[0]
            return basis, status, self.counter[0]
        basis = self._reduced_basis()
        if basis == [_UNIT]:
            return basis, Status.INCONSISTENT, self.counter[0]
        return basis, status, self.counter[0]

    def _reduced_basis(self) -> list[frozenset[int]]:
        elems = [g for g, a in zip(self.G, self.active) if a]
        return interreduce(elems, self.key)

    def _finish_linear(self):
        lin = [g for g in self.G if g.lm.bit_count() == 1 and g.degree == 1]
        basis = interreduce(lin, self.key)
        red = Reducers(LPoly(b, self.key) for b in basis)
        for g in self.G:
            if reduce_terms(g.terms, red, self.key):
                return None
        return basis


_UNIT = frozenset((0,))


def interreduce(elems: Sequence[LPoly], key) -> list[frozenset[int]]:
    """Minimalise and fully interreduce; returns terms sorted by descending LM.

    Elements are processed by ascending leading monomial: a tail term can only
    be divisible by a strictly smaller leading monomial, so one pass suffices.
    """
    elems = sorted(elems, key=lambda g: g.lmkey)
    red = Reducers()
    out: list[frozenset[int]] = []
    for g in elems:
        if g.lm == 0:
            return [_UNIT]
        if red.find(g.lm) is not None:
            continue
        tail = reduce_terms(g.terms - {g.lm}, red, key)
        t = tail | {g.lm}
        red.add(LPoly(t, key))
        out.append(t)
    out.reverse()
    return out


def count_standard_monomials(lms: Sequence[int], universe: int) -> int:
    """Number of squarefree monomials over ``universe`` divisible by no element of ``lms``."""
    lms = list(lms)
    if any(lm == 0 for lm in lms):
        return 0
    for lm in lms:
        if lm.bit_count() == 1:
            universe &= ~lm
    rest = tuple(sorted(set(lm for lm in lms if lm.bit_count() > 1 and lm & ~universe == 0)))
    return _count(universe, rest)


@lru_cache(maxsize=4096)
def _count(universe: int, lms: tuple[int, ...]) -> int:
    lms = tuple(sorted(set(lms)))
    minimal = tuple(l for l in lms if not any(o != l and o & l == o for o in lms))
    if not minimal:
        return 1 << universe.bit_count()
    if any(l == 0 for l in minimal):
        return 0
    v = minimal[0] & -minimal[0]
    rest = universe & ~v
    without = tuple(l for l in minimal if not l & v)
    with_v = tuple(l & ~v for l in minimal)
    return _count(rest, without) + _count(rest, with_v)


def count_solutions(res: GroebnerResult) -> int:
    return res.dimension


def enumerate_solutions(res: GroebnerResult, limit: int = 64) -> list[dict[Var, int]]:
    """All GF(2) points of the variety, sorted, by backtracking on the reduced basis."""
    if res.status is Status.INCONSISTENT:
        return []
    if res.dimension > limit:
        raise TooManySolutions(f"{res.dimension} solutions exceed the limit {limit}")
    ring = res.order.ring
    sols = enumerate_local(res.local_basis, ring)
    out = []
    for s in sols:
        out.append({ring.var_of_bit(j): (s >> j) & 1 for j in range(ring.n)})
    return out


def enumerate_local(basis: Sequence[frozenset[int]], ring: LocalRing) -> list[int]:
    """Solutions as local bitmasks of the variables set to 1 (ascending)."""
    key = ring.key
    linear: list[tuple[int, frozenset[int]]] = []
    nonlinear: list[frozenset[int]] = []
    for g in basis:
        lm = max(g, key=key)
        if lm.bit_count() == 1 and all(m.bit_count() <= 1 for m in g):
            linear.append((lm, g - {lm}))
        else:
            nonlinear.append(g)
    determined = 0
    for lm, _ in linear:
        determined |= lm
    free = [1 << j for j in range(ring.n) if not determined >> j & 1]
    # Check each nonlinear element as soon as its last free variable is set.
    position = {b: k for k, b in enumerate(free)}
    checks: list[list[frozenset[int]]] = [[] for _ in free]
    ready_now: list[frozenset[int]] = []
    for g in nonlinear:
        sup = 0
        for m in g:
            sup |= m
        bits = [1 << j for j in iter_bits(sup)]
        if not bits:
            ready_now.append(g)
            continue
        checks[max(position[b] for b in bits)].append(g)
    if any(_eval_local(g, 0) for g in ready_now):
        return []
    sols: list[int] = []

    def rec(k: int, ones: int) -> None:
        if k == len(free):
            full = ones
            for lm, tail in linear:
                if _eval_local(tail, ones):
                    full |= lm
            sols.append(full)
            return
        for val in (0, 1):
            cur = ones | free[k] if val else ones
            if all(not _eval_local(g, cur) for g in checks[k]):
                rec(k + 1, cur)

    rec(0, 0)
    return sorted(sols)


def _eval_local(terms: Iterable[int], ones: int) -> int:
    n = 0
    for m in terms:
        if m & ones == m:
            n += 1
    return n & 1


def spoly_reduces_to_zero(res: GroebnerResult) -> bool:
    """Post-hoc Buchberger criterion check, field S-polynomials included."""
    ring = res.order.ring
    key = ring.key
    polys = [LPoly(g, key) for g in res.local_basis]
    red = Reducers(polys)
    for a in range(len(polys)):
        f = polys[a]
        for b in iter_bits(f.lm):
            bit = 1 << b
            s = _toggle_product(bit, f.terms)
            if reduce_terms(s, red, key):
                return False
        for bidx in range(a + 1, len(polys)):
            g = polys[bidx]
            lcm = f.lm | g.lm
            s = _toggle_product(lcm ^ f.lm, f.terms) ^ _toggle_product(lcm ^ g.lm, g.terms)
            if reduce_terms(s, red, key):
                return False
    return True


def _toggle_product(t: int, terms: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for s in terms:
        w = t | s
        if w in out:
            out.remove(w)
        else:
            out.add(w)
    return out
