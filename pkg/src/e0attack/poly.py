"""Boolean polynomials in algebraic normal form.

Everything lives in the quotient ring GF(2)[X] / <x^2 + x>: a monomial is a
squarefree product of variables and a polynomial is a set of monomials.

Monomials are encoded as Python ints.  Variable ``s(t)`` (stream ``s``,
clock ``t``) owns bit ``6*t + s`` so that shifting every clock by ``k`` is a
left shift by ``6*k`` bits.  The encoding is global and stateless; the
monomial order of the attack (see :mod:`e0attack.order`) is applied on top of
it when needed.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, Mapping, Sequence


class Stream(IntEnum):
    X = 0
    Y = 1
    Z = 2
    U = 3
    C = 4
    D = 5

    @property
    def letter(self) -> str:
        return "xyzucd"[self]

    @classmethod
    def from_letter(cls, ch: str) -> "Stream":
        return cls("xyzucd".index(ch))


NSTREAMS = 6
LFSR_STREAMS = (Stream.X, Stream.Y, Stream.Z, Stream.U)


class UnassignedVariable(KeyError):
    pass


class IncompleteTable(ValueError):
    pass


def var_index(stream: int, clock: int) -> int:
    return NSTREAMS * clock + stream


def order_key(index: int) -> tuple[int, int, int]:
    """Sort key of a variable index: LFSR cells by (clock, stream), then c, then d."""
    clock, s = divmod(index, NSTREAMS)
    if s < 4:
        return (0, clock, s)
    return (s - 3, clock, 0)


@dataclass(frozen=True, slots=True)
class Var:
    stream: Stream
    clock: int

    def __post_init__(self):
        if self.clock < 0:
            raise ValueError("clock must be non-negative")
        object.__setattr__(self, "stream", Stream(self.stream))

    @property
    def index(self) -> int:
        return NSTREAMS * self.clock + self.stream

    @property
    def mask(self) -> int:
        return 1 << self.index

    @classmethod
    def from_index(cls, index: int) -> "Var":
        clock, s = divmod(index, NSTREAMS)
        return cls(Stream(s), clock)

    @classmethod
    def parse(cls, name: str) -> "Var":
        m = re.fullmatch(r"([xyzucd])(\d+)", name.strip())
        if not m:
            raise ValueError(f"bad variable name {name!r}")
        return cls(Stream.from_letter(m.group(1)), int(m.group(2)))

    def shift(self, k: int) -> "Var":
        return Var(self.stream, self.clock + k)

    def sort_key(self):
        return order_key(self.index)

    def __lt__(self, other: "Var") -> bool:
        return self.sort_key() < other.sort_key()

    def __le__(self, other: "Var") -> bool:
        return self.sort_key() <= other.sort_key()

    def __gt__(self, other: "Var") -> bool:
        return self.sort_key() > other.sort_key()

    def __ge__(self, other: "Var") -> bool:
        return self.sort_key() >= other.sort_key()

    def __str__(self) -> str:
        return f"{self.stream.letter}{self.clock}"

    __repr__ = __str__


def x(t: int) -> Var:
    return Var(Stream.X, t)


def y(t: int) -> Var:
    return Var(Stream.Y, t)


def z(t: int) -> Var:
    return Var(Stream.Z, t)


def u(t: int) -> Var:
    return Var(Stream.U, t)


def c(t: int) -> Var:
    return Var(Stream.C, t)


def d(t: int) -> Var:
    return Var(Stream.D, t)


def iter_bits(m: int) -> Iterator[int]:
    """Indices of the set bits of ``m``, lowest first."""
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


def mask_of(variables: Iterable[Var]) -> int:
    out = 0
    for v in variables:
        out |= 1 << v.index
    return out


def _parity_terms(items: Iterable[int]) -> frozenset[int]:
    return frozenset(m for m, n in Counter(items).items() if n & 1)


class Monomial:
    """Squarefree product of variables; the empty product is 1."""

    __slots__ = ("mask",)

    def __init__(self, variables: Iterable[Var] | int = ()):
        if isinstance(variables, int):
            self.mask = variables
        else:
            self.mask = mask_of(variables)

    @property
    def vars(self) -> tuple[Var, ...]:
        return tuple(sorted(Var.from_index(i) for i in iter_bits(self.mask)))

    @property
    def degree(self) -> int:
        return self.mask.bit_count()

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.mask | other.mask)

    def divides(self, other: "Monomial") -> bool:
        return self.mask & ~other.mask == 0

    def __eq__(self, other):
        return isinstance(other, Monomial) and self.mask == other.mask

    def __hash__(self):
        return hash(("mono", self.mask))

    def __str__(self) -> str:
        return _monomial_str(self.mask)

    __repr__ = __str__


def _monomial_str(m: int) -> str:
    if m == 0:
        return "1"
    idx = sorted(iter_bits(m), key=order_key)
    return "*".join(str(Var.from_index(i)) for i in idx)


class BoolPoly:
    """Immutable polynomial over GF(2) modulo the field equations.

    ``terms`` is a frozenset of monomial masks; equality is set equality.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[int] = ()):
        if not isinstance(terms, frozenset):
            terms = _parity_terms(terms)
        self.terms = terms

    @classmethod
    def _raw(cls, terms: frozenset[int]) -> "BoolPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def zero(cls) -> "BoolPoly":
        return _ZERO

    @classmethod
    def one(cls) -> "BoolPoly":
        return _ONE

    @classmethod
    def const(cls, value: int) -> "BoolPoly":
        return _ONE if value & 1 else _ZERO

    @classmethod
    def var(cls, v: Var) -> "BoolPoly":
        return cls._raw(frozenset((1 << v.index,)))

    @classmethod
    def monomial(cls, variables: Iterable[Var]) -> "BoolPoly":
        return cls._raw(frozenset((mask_of(variables),)))

    @classmethod
    def linear(cls, variables: Iterable[Var], constant: int = 0) -> "BoolPoly":
        items = [1 << v.index for v in variables]
        if constant & 1:
            items.append(0)
        return cls(items)

    @classmethod
    def parse(cls, text: str) -> "BoolPoly":
        return parse_poly(text)

    # -- ring operations -------------------------------------------------
    def __add__(self, other) -> "BoolPoly":
        other = _coerce(other)
        return BoolPoly._raw(self.terms ^ other.terms)

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__
    __xor__ = __add__

    def __mul__(self, other) -> "BoolPoly":
        other = _coerce(other)
        a, b = self.terms, other.terms
        if not a or not b:
            return _ZERO
        if b == _ONE.terms:
            return self
        if a == _ONE.terms:
            return other
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (t,) = b
            if all(not (t & s) for s in a):
                return BoolPoly._raw(frozenset(t | s for s in a))
            return BoolPoly(t | s for s in a)
        return BoolPoly(s | t for s in a for t in b)

    __rmul__ = __mul__
    __and__ = __mul__

    def __pow__(self, k: int) -> "BoolPoly":
        if k < 0:
            raise ValueError("negative power")
        return _ONE if k == 0 else self

    def __neg__(self) -> "BoolPoly":
        return self

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = BoolPoly.const(other)
        return isinstance(other, BoolPoly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Monomial]:
        return (Monomial(m) for m in self.sorted_terms())

    # -- inspection ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self.terms == _ONE.terms

    def is_constant(self) -> bool:
        return not self.terms or self.terms == _ONE.terms

    def constant_term(self) -> int:
        return int(0 in self.terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((m.bit_count() for m in self.terms), default=-1)

    def support(self) -> int:
        out = 0
        for m in self.terms:
            out |= m
        return out

    def variables(self) -> list[Var]:
        return sorted(Var.from_index(i) for i in iter_bits(self.support()))

    def contains(self, monomial: Iterable[Var] | Monomial) -> bool:
        if not isinstance(monomial, Monomial):
            monomial = Monomial(monomial)
        return monomial.mask in self.terms

    def sorted_terms(self) -> list[int]:
        """Monomials in descending DegRevLex order of the global variable order."""
        return sorted(self.terms, key=_drl_sort_key, reverse=True)

    # -- evaluation and substitution ---------------------------------------
    def evaluate(self, assignment: Mapping[Var, int]) -> int:
        ones = 0
        for i in iter_bits(self.support()):
            v = Var.from_index(i)
            try:
                val = assignment[v]
            except KeyError:
                raise UnassignedVariable(str(v)) from None
            if val & 1:
                ones |= 1 << i
        return self.eval_mask(ones)

    def eval_mask(self, ones: int) -> int:
        """Evaluate with every variable in ``ones`` set to 1 and all others 0."""
        n = 0
        for m in self.terms:
            if m & ones == m:
                n += 1
        return n & 1

    def substitute(self, v: Var, r: "BoolPoly | int") -> "BoolPoly":
        r = _coerce(r)
        bit = 1 << v.index
        keep = [m for m in self.terms if not m & bit]
        hit = [m ^ bit for m in self.terms if m & bit]
        if not hit:
            return self
        return BoolPoly(keep) + BoolPoly(hit) * r

    def restrict(self, values: Mapping[Var, int]) -> "BoolPoly":
        """Substitute constants for several variables at once."""
        ones = zeros = 0
        for v, val in values.items():
            if val & 1:
                ones |= 1 << v.index
            else:
                zeros |= 1 << v.index
        return self.restrict_masks(ones, zeros)

    def restrict_masks(self, ones: int, zeros: int) -> "BoolPoly":
        keep = ~ones
        return BoolPoly(m & keep for m in self.terms if not m & zeros)

    def compose(self, images: Mapping[Var, "BoolPoly"]) -> "BoolPoly":
        """Simultaneous substitution ``v -> images[v]``; other variables are kept."""
        img = {v.index: _coerce(p) for v, p in images.items()}
        touched = 0
        for i in img:
            touched |= 1 << i
        cache: dict[int, BoolPoly] = {}
        acc: Counter = Counter()
        for m in self.terms:
            hit = m & touched
            if not hit:
                acc[m] += 1
                continue
            prod = cache.get(hit)
            if prod is None:
                prod = _ONE
                for i in iter_bits(hit):
                    prod = prod * img[i]
                cache[hit] = prod
            rest = m ^ hit
            if rest:
                prod = prod * BoolPoly._raw(frozenset((rest,)))
            acc.update(prod.terms)
        return BoolPoly._raw(frozenset(t for t, n in acc.items() if n & 1))

    def shift(self, k: int) -> "BoolPoly":
        if k < 0:
            raise ValueError("shift must be non-negative")
        if k == 0:
            return self
        s = NSTREAMS * k
        return BoolPoly._raw(frozenset(m << s for m in self.terms))

    # -- text ---------------------------------------------------------------
    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(_monomial_str(m) for m in self.sorted_terms())

    def __repr__(self) -> str:
        return f"BoolPoly({str(self)!r})"


_ZERO = BoolPoly._raw(frozenset())
_ONE = BoolPoly._raw(frozenset((0,)))


def _coerce(p) -> BoolPoly:
    if isinstance(p, BoolPoly):
        return p
    if isinstance(p, Var):
        return BoolPoly.var(p)
    if isinstance(p, int):
        return BoolPoly.const(p)
    raise TypeError(f"cannot use {type(p).__name__} as a polynomial")


def _drl_sort_key(m: int):
    # Equal degrees: the monomial holding the smallest differing variable is
    # the smaller one, which is plain lexicographic order on ascending var lists.
    return (m.bit_count(), sorted(order_key(i) for i in iter_bits(m)))


_TOKEN = re.compile(r"\s*([xyzucd]\d+|[01]|\+|\*|\(|\))")


def parse_poly(text: str) -> BoolPoly:
    """Parse ``x1*y7 + c0 + 1``; parentheses and implicit products are accepted."""
    pos = 0
    tokens: list[str] = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected input at {pos}: {text[pos:pos + 10]!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    if not tokens:
        raise ValueError("empty polynomial")
    it = _Parser(tokens)
    p = it.expr()
    if it.i != len(tokens):
        raise ValueError(f"trailing tokens in {text!r}")
    return p


class _Parser:
    def __init__(self, tokens: Sequence[str]):
        self.t = tokens
        self.i = 0

    def peek(self):
        return self.t[self.i] if self.i < len(self.t) else None

    def take(self):
        tok = self.t[self.i]
        self.i += 1
        return tok

    def expr(self) -> BoolPoly:
        p = self.term()
        while self.peek() == "+":
            self.take()
            p = p + self.term()
        return p

    def term(self) -> BoolPoly:
        p = self.atom()
        while self.peek() not in (None, "+", ")"):
            if self.peek() == "*":
                self.take()
            p = p * self.atom()
        return p

    def atom(self) -> BoolPoly:
        tok = self.peek()
        if tok is None:
            raise ValueError("unexpected end of polynomial")
        self.take()
        if tok == "(":
            p = self.expr()
            if self.peek() != ")":
                raise ValueError("unbalanced parenthesis")
            self.take()
            return p
        if tok in ("0", "1"):
            return BoolPoly.const(int(tok))
        if tok in ("+", "*", ")"):
            raise ValueError(f"unexpected {tok!r}")
        return BoolPoly.var(Var.parse(tok))


def truth_table(p: BoolPoly, variables: Sequence[Var]) -> list[int]:
    """Values of ``p`` at all 2^n points; bit j of the row index is ``variables[j]``."""
    if p.support() & ~mask_of(variables):
        raise UnassignedVariable("polynomial has variables outside the table")
    n = len(variables)
    table = [0] * (1 << n)
    local = [(1 << v.index, 1 << j) for j, v in enumerate(variables)]
    for m in p.terms:
        lm = 0
        for g, l in local:
            if m & g:
                lm |= l
        table[lm] ^= 1
    # ANF coefficients -> values: superset (upward) Moebius transform.
    step = 1
    while step < len(table):
        for i in range(len(table)):
            if i & step:
                table[i] ^= table[i ^ step]
        step <<= 1
    return table


def anf_from_truth_table(table: Sequence[int] | Mapping[tuple[int, ...], int],
                         variables: Sequence[Var]) -> BoolPoly:
    """Unique ANF reproducing ``table``.

    ``table`` is either a sequence indexed like :func:`truth_table` or a mapping
    from n-tuples of bits (ordered like ``variables``) to values.
    """
    n = len(variables)
    size = 1 << n
    if isinstance(table, Mapping):
        vals = [None] * size
        for point, val in table.items():
            if len(point) != n:
                raise IncompleteTable(f"point {point} has wrong arity")
            idx = sum((b & 1) << j for j, b in enumerate(point))
            vals[idx] = val & 1
        if any(v is None for v in vals):
            raise IncompleteTable("table does not cover every point")
    else:
        if len(table) != size:
            raise IncompleteTable(f"expected {size} entries, got {len(table)}")
        vals = [v & 1 for v in table]
    step = 1
    while step < size:
        for i in range(size):
            if i & step:
                vals[i] ^= vals[i ^ step]
        step <<= 1
    terms = []
    for idx, coef in enumerate(vals):
        if coef:
            m = 0
            for j in iter_bits(idx):
                m |= 1 << variables[j].index
            terms.append(m)
    return BoolPoly(frozenset(terms))


def elementary_symmetric(polys: Sequence[BoolPoly]) -> list[BoolPoly]:
    """[e_0, e_1, ..., e_n] of the given ring elements."""
    e = [_ONE] + [_ZERO] * len(polys)
    for k, p in enumerate(polys, start=1):
        for j in range(k, 0, -1):
            e[j] = e[j] + p * e[j - 1]
    return e
