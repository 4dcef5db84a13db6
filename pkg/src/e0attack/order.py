"""Monomial orders on a finite variable universe, and reduction.

An order is instantiated on an explicit list of variables.  Internally it
re-encodes monomials into a *local* bit layout where the largest variable of
each block sits at the lowest bit; with that layout DegRevLex becomes a
single integer comparison, which is what the Gröbner engine needs in its
inner loops.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .poly import BoolPoly, Var, iter_bits, mask_of

DEGREVLEX = "degrevlex"
LEX = "lex"
PRODUCT = "product"


@dataclass(frozen=True)
class MonomialOrder:
    """DegRevLex, Lex, or a block product of DegRevLex orders.

    ``blocks`` lists the variable blocks, most significant block first; every
    block is stored in ascending variable order.  Single-block orders use one
    block.
    """

    kind: str
    blocks: tuple[tuple[Var, ...], ...]
    _ring: "LocalRing" = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in (DEGREVLEX, LEX, PRODUCT):
            raise ValueError(f"unknown order kind {self.kind!r}")
        seen: set[Var] = set()
        for block in self.blocks:
            for v in block:
                if v in seen:
                    raise ValueError(f"variable {v} listed twice")
                seen.add(v)
        object.__setattr__(self, "_ring", LocalRing(self))

    @classmethod
    def degrevlex(cls, variables: Iterable[Var]) -> "MonomialOrder":
        return cls(DEGREVLEX, (tuple(sorted(set(variables))),))

    @classmethod
    def lex(cls, variables: Iterable[Var]) -> "MonomialOrder":
        return cls(LEX, (tuple(sorted(set(variables))),))

    @classmethod
    def product(cls, *blocks: Iterable[Var]) -> "MonomialOrder":
        """Elimination order: every variable of ``blocks[0]`` dominates ``blocks[1]``, ..."""
        return cls(PRODUCT, tuple(tuple(sorted(set(b))) for b in blocks))

    @property
    def variables(self) -> tuple[Var, ...]:
        return tuple(v for block in self.blocks for v in block)

    @property
    def ring(self) -> "LocalRing":
        return self._ring

    def key(self, monomial: int) -> int:
        """Integer sort key of a global monomial mask under this order."""
        r = self._ring
        return r.key(r.to_local(monomial))

    def compare(self, m1: int, m2: int) -> int:
        k1, k2 = self.key(m1), self.key(m2)
        return (k1 > k2) - (k1 < k2)

    def leading_monomial(self, p: BoolPoly) -> int:
        if not p.terms:
            raise ValueError("zero polynomial has no leading monomial")
        return max(p.terms, key=self.key)

    def sorted_terms(self, p: BoolPoly) -> list[int]:
        return sorted(p.terms, key=self.key, reverse=True)


class LocalRing:
    """Dense re-encoding of the order's universe.

    Local bit ``j`` of a block is its ``j``-th largest variable; blocks are
    laid out one after another starting with the most significant.
    """

    def __init__(self, order: MonomialOrder):
        layout: list[int] = []
        block_masks: list[int] = []
        for block in order.blocks:
            start = len(layout)
            layout.extend(v.index for v in reversed(block))
            block_masks.append(((1 << len(layout)) - 1) ^ ((1 << start) - 1))
        self.order_kind = order.kind
        self.layout = tuple(layout)
        self.n = n = len(layout)
        self.full = (1 << n) - 1
        self.global_mask = 0
        self._g2l: dict[int, int] = {}
        for j, gi in enumerate(layout):
            self._g2l[gi] = j
            self.global_mask |= 1 << gi
        self.block_masks = tuple(block_masks)
        self.key = self._make_key(order.kind)

    def _make_key(self, kind: str) -> Callable[[int], int]:
        n, full = self.n, self.full
        if kind == DEGREVLEX:
            return lambda m: (m.bit_count() << n) | (full ^ m)
        if kind == LEX:
            width = max(n, 1)
            return lambda m: int(format(m, f"0{width}b")[::-1], 2)
        shift = n + n.bit_length() + 1
        masks = self.block_masks

        def key(m: int) -> int:
            k = 0
            for bm in masks:
                part = m & bm
                k = (k << shift) | (part.bit_count() << n) | (bm ^ part)
            return k

        return key

    def to_local(self, gm: int) -> int:
        if gm & ~self.global_mask:
            missing = [str(Var.from_index(i)) for i in iter_bits(gm & ~self.global_mask)]
            raise ValueError(f"variables outside the order's universe: {', '.join(missing)}")
        out = 0
        g2l = self._g2l
        for i in iter_bits(gm):
            out |= 1 << g2l[i]
        return out

    def to_global(self, lm: int) -> int:
        out = 0
        layout = self.layout
        for j in iter_bits(lm):
            out |= 1 << layout[j]
        return out

    def poly_to_local(self, p: BoolPoly) -> frozenset[int]:
        return frozenset(self.to_local(m) for m in p.terms)

    def poly_to_global(self, terms: Iterable[int]) -> BoolPoly:
        return BoolPoly._raw(frozenset(self.to_global(m) for m in terms))

    def var_bit(self, v: Var) -> int:
        return 1 << self._g2l[v.index]

    def var_of_bit(self, j: int) -> Var:
        return Var.from_index(self.layout[j])


class LPoly:
    """Polynomial in a local ring with its leading monomial cached."""

    __slots__ = ("terms", "lm", "lmkey")

    def __init__(self, terms: frozenset[int], key: Callable[[int], int]):
        self.terms = terms
        self.lm = max(terms, key=key)
        self.lmkey = key(self.lm)

    @property
    def degree(self) -> int:
        return max(m.bit_count() for m in self.terms)


class Reducers:
    """Index of polynomials by leading monomial for divisor lookup."""

    __slots__ = ("by_lm", "polys")

    def __init__(self, polys: Iterable[LPoly] = ()):
        self.by_lm: dict[int, LPoly] = {}
        self.polys: list[LPoly] = []
        for p in polys:
            self.add(p)

    def add(self, p: LPoly) -> None:
        if p.lm not in self.by_lm:
            self.by_lm[p.lm] = p
            self.polys.append(p)

    def find(self, m: int) -> LPoly | None:
        by_lm = self.by_lm
        hit = by_lm.get(m)
        if hit is not None:
            return hit
        deg = m.bit_count()
        if deg <= 7 and (1 << deg) < 4 * len(self.polys):
            s = (m - 1) & m
            while True:
                hit = by_lm.get(s)
                if hit is not None:
                    return hit
                if s == 0:
                    return None
                s = (s - 1) & m
        for p in self.polys:
            if p.lm & m == p.lm:
                return p
        return None


def reduce_terms(terms: Iterable[int], reducers: Reducers, key: Callable[[int], int],
                 counter: list[int] | None = None) -> frozenset[int]:
    """Full reduction of a local polynomial; returns the remainder's terms."""
    cur = set(terms)
    if not cur:
        return frozenset()
    heap = [(-key(m), m) for m in cur]
    heapq.heapify(heap)
    out = []
    find = reducers.find
    push = heapq.heappush
    pop = heapq.heappop
    steps = 0
    while heap:
        _, m = pop(heap)
        if m not in cur:
            continue
        g = find(m)
        if g is None:
            cur.remove(m)
            out.append(m)
            continue
        steps += 1
        t = m ^ g.lm
        for s in g.terms:
            w = t | s
            if w in cur:
                cur.remove(w)
            else:
                cur.add(w)
                push(heap, (-key(w), w))
    if counter is not None:
        counter[0] += steps
    return frozenset(out)


def normal_form(p: BoolPoly, basis: Sequence[BoolPoly], order: MonomialOrder) -> BoolPoly:
    """Remainder of ``p`` modulo ``basis`` after full reduction.

    The result is canonical when ``basis`` is a Gröbner basis, or when its
    leading monomials are pairwise distinct variables (as for the LFSR relations).
    """
    ring = order.ring
    reducers = Reducers(LPoly(ring.poly_to_local(g), ring.key) for g in basis if g)
    return ring.poly_to_global(reduce_terms(ring.poly_to_local(p), reducers, ring.key))


def universe_of(polys: Iterable[BoolPoly]) -> list[Var]:
    sup = 0
    for p in polys:
        sup |= p.support()
    return sorted(Var.from_index(i) for i in iter_bits(sup))


__all__ = [
    "MonomialOrder",
    "LocalRing",
    "LPoly",
    "Reducers",
    "reduce_terms",
    "normal_form",
    "universe_of",
    "mask_of",
]
