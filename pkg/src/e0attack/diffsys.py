"""Explicit difference systems over GF(2).

A system has one stream per :class:`Stream` letter in use.  Stream ``i`` has
order ``r_i`` and a feedback ``f_i`` over the initial window
``X = {x_j(0..r_j-1)}``; the recurrence is ``x_i(t + r_i) = sigma^t(f_i)``.

States are held internally as a global monomial mask of the window
variables that are 1, which lets the feedbacks be evaluated directly with
:meth:`BoolPoly.eval_mask`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .groebner import IdealBasis, buchberger
from .order import MonomialOrder
from .poly import NSTREAMS, BoolPoly, Stream, Var, iter_bits


class NotInvertible(Exception):
    """The state transition map of the system is not bijective."""


@dataclass(frozen=True)
class StreamSpec:
    stream: Stream
    order: int
    feedback: BoolPoly

    def __post_init__(self):
        object.__setattr__(self, "stream", Stream(self.stream))
        if self.order < 1:
            raise ValueError("stream order must be >= 1")

    @property
    def window(self) -> tuple[Var, ...]:
        return tuple(Var(self.stream, k) for k in range(self.order))

    @property
    def is_linear(self) -> bool:
        return self.feedback.degree() <= 1


@dataclass(frozen=True)
class SystemState:
    """State bits laid out stream by stream, each window in increasing clock."""

    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) & 1 for b in self.bits))

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class DiffSystem:
    streams: tuple[StreamSpec, ...]
    keystream_poly: BoolPoly | None = None
    _window_mask: int = field(init=False, repr=False, compare=False)
    _top_bits: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "streams", tuple(self.streams))
        seen = set()
        wmask = 0
        for s in self.streams:
            if s.stream in seen:
                raise ValueError(f"stream {s.stream.letter} defined twice")
            seen.add(s.stream)
            for v in s.window:
                wmask |= v.mask
        for s in self.streams:
            outside = s.feedback.support() & ~wmask
            if outside:
                names = ", ".join(str(Var.from_index(i)) for i in iter_bits(outside))
                raise ValueError(f"feedback of {s.stream.letter} leaves the window: {names}")
        if self.keystream_poly is not None and self.keystream_poly.support() & ~wmask:
            raise ValueError("keystream polynomial leaves the window")
        object.__setattr__(self, "_window_mask", wmask)
        object.__setattr__(self, "_top_bits", tuple(Var(s.stream, s.order - 1).mask for s in self.streams))

    # -- basic shape ----------------------------------------------------------
    @property
    def width(self) -> int:
        return sum(s.order for s in self.streams)

    @property
    def window(self) -> tuple[Var, ...]:
        return tuple(v for s in self.streams for v in s.window)

    @property
    def window_mask(self) -> int:
        return self._window_mask

    def spec(self, stream: Stream) -> StreamSpec:
        for s in self.streams:
            if s.stream == stream:
                return s
        raise KeyError(stream)

    def feedback(self, stream: Stream) -> BoolPoly:
        return self.spec(stream).feedback

    # -- states ---------------------------------------------------------------
    def state_mask(self, v: SystemState) -> int:
        if len(v) != self.width:
            raise ValueError(f"state has {len(v)} bits, system width is {self.width}")
        ones = 0
        for var, b in zip(self.window, v.bits):
            if b:
                ones |= var.mask
        return ones

    def state_from_mask(self, ones: int) -> SystemState:
        return SystemState(tuple(1 if ones & var.mask else 0 for var in self.window))

    def assignment(self, v: SystemState) -> dict[Var, int]:
        return dict(zip(self.window, v.bits))

    def step_mask(self, ones: int) -> int:
        tops = 0
        for s, top in zip(self.streams, self._top_bits):
            if s.feedback.eval_mask(ones):
                tops |= top
        # Drop clock 0 of every window, move everything down one clock.
        return ((ones >> NSTREAMS) & self._window_mask) | tops

    def step(self, v: SystemState) -> SystemState:
        return self.state_from_mask(self.step_mask(self.state_mask(v)))

    def run(self, v: SystemState, t: int) -> SystemState:
        ones = self.state_mask(v)
        for _ in range(t):
            ones = self.step_mask(ones)
        return self.state_from_mask(ones)

    def keystream_masks(self, ones: int, n: int) -> Iterator[int]:
        if self.keystream_poly is None:
            raise ValueError("system has no keystream polynomial")
        f = self.keystream_poly
        for _ in range(n):
            yield f.eval_mask(ones)
            ones = self.step_mask(ones)

    # -- endomorphisms ----------------------------------------------------------
    def transition_images(self) -> dict[Var, BoolPoly]:
        images: dict[Var, BoolPoly] = {}
        for s in self.streams:
            for k in range(s.order - 1):
                images[Var(s.stream, k)] = BoolPoly.var(Var(s.stream, k + 1))
            images[Var(s.stream, s.order - 1)] = s.feedback
        return images

    def transition_endo(self, p: BoolPoly) -> BoolPoly:
        if p.support() & ~self._window_mask:
            raise ValueError("polynomial is not over the initial window")
        return p.compose(self.transition_images())

    def partial_transition_endo(self, m: int, p: BoolPoly) -> BoolPoly:
        """T_m: the first ``m`` streams follow the system, the rest are shifted."""
        if not 0 <= m <= len(self.streams):
            raise ValueError("m out of range")
        inner = self.streams[:m]
        inner_ids = {s.stream for s in inner}
        for s in inner:
            for i in iter_bits(s.feedback.support()):
                if Var.from_index(i).stream not in inner_ids:
                    raise ValueError("feedbacks of the first m streams must not involve later streams")
        images: dict[Var, BoolPoly] = {}
        for v in p.variables():
            if v.stream in inner_ids:
                s = self.spec(v.stream)
                if v.clock >= s.order:
                    raise ValueError(f"{v} lies outside the window of a system stream")
                images[v] = s.feedback if v.clock == s.order - 1 else BoolPoly.var(v.shift(1))
            else:
                images[v] = BoolPoly.var(v.shift(1))
        return p.compose(images)

    # -- text format ----------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{s.stream.letter} {s.order}: {s.feedback}" for s in self.streams]
        if self.keystream_poly is not None:
            lines.append(f"keystream: {self.keystream_poly}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DiffSystem":
        streams = []
        ks = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = re.fullmatch(r"keystream\s*:\s*(.+)", line)
            if m:
                ks = BoolPoly.parse(m.group(1))
                continue
            m = re.fullmatch(r"([xyzucd])\s+(\d+)\s*:\s*(.+)", line)
            if not m:
                raise ValueError(f"line {lineno}: expected '<stream> <order>: <feedback>'")
            streams.append(StreamSpec(Stream.from_letter(m.group(1)), int(m.group(2)),
                                      BoolPoly.parse(m.group(3))))
        return cls(tuple(streams), ks)


def shift(p: BoolPoly, k: int) -> BoolPoly:
    return p.shift(k)


def step(sys: DiffSystem, v: SystemState) -> SystemState:
    return sys.step(v)


def transition_endo(sys: DiffSystem, p: BoolPoly) -> BoolPoly:
    return sys.transition_endo(p)


def partial_transition_endo(sys: DiffSystem, m: int, p: BoolPoly) -> BoolPoly:
    return sys.partial_transition_endo(m, p)


# -- inversion ----------------------------------------------------------------

def _primed_offset(sys: DiffSystem) -> int:
    return max(s.order for s in sys.streams)


def inversion_ideal(sys: DiffSystem) -> tuple[list[BoolPoly], MonomialOrder, int]:
    """Generators ``x'_i(k) + T(x_i(k))`` of the doubled ring and the product order.

    Primed variables are encoded as ``x'_i(k) = x_i(k + M)`` with ``M`` the
    largest order, which keeps them disjoint from the window.
    """
    M = _primed_offset(sys)
    images = sys.transition_images()
    gens = [BoolPoly.var(v.shift(M)) + images[v] for v in sys.window]
    primed = [v.shift(M) for v in sys.window]
    return gens, MonomialOrder.product(sys.window, primed), M


def invert(sys: DiffSystem, max_reductions: int = 10**6) -> DiffSystem:
    """Inverse system, or :class:`NotInvertible`.

    The reduced basis under the elimination order must consist of exactly
    one element ``x_i(k) + g_ik(X')`` per window variable.  The inverse
    feedback of stream ``i`` is ``g_i0`` read through the window reversal
    ``x'_j(k) -> x_j(r_j - 1 - k)``.
    """
    gens, order, M = inversion_ideal(sys)
    res = buchberger(IdealBasis(gens, order), stop_on_unit=False, max_reductions=max_reductions)
    wmask = sys.window_mask
    solved: dict[Var, BoolPoly] = {}
    for g in res.basis:
        head = [m for m in g.terms if m & wmask]
        if len(head) != 1 or head[0].bit_count() != 1:
            raise NotInvertible("the reduced elimination basis is not triangular")
        v = Var.from_index(head[0].bit_length() - 1)
        solved[v] = g + BoolPoly.var(v)
    if len(solved) != sys.width or len(res.basis) != sys.width:
        raise NotInvertible("elimination ideal is non-trivial")
    reversal: dict[Var, BoolPoly] = {}
    for s in sys.streams:
        for k in range(s.order):
            reversal[Var(s.stream, k + M)] = BoolPoly.var(Var(s.stream, s.order - 1 - k))
    streams = tuple(StreamSpec(s.stream, s.order, solved[Var(s.stream, 0)].compose(reversal))
                    for s in sys.streams)
    return DiffSystem(streams)


def reverse_windows(sys: DiffSystem, v: SystemState) -> SystemState:
    out: list[int] = []
    pos = 0
    for s in sys.streams:
        out.extend(reversed(v.bits[pos:pos + s.order]))
        pos += s.order
    return SystemState(tuple(out))


def reverse_state(sys: DiffSystem, inv: DiffSystem, v: SystemState, t: int) -> SystemState:
    """State ``u`` with ``step^t(sys, u) = v``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    w = reverse_windows(sys, v)
    w = inv.run(w, t)
    return reverse_windows(sys, w)


# -- linear streams -------------------------------------------------------------

class LinearWindow:
    """Expresses cells of linear streams, at any clock, over their initial window.

    ``forms[stream][t]`` is ``(mask, const)`` with ``x(t) = sum(mask) + const``.
    This is the normal form modulo the shifted linear recurrences, computed by
    running the recurrence on linear forms instead of bits.
    """

    def __init__(self, sys: DiffSystem, streams: Iterable[Stream], bound: int):
        self.sys = sys
        self.bound = bound
        self.forms: dict[Stream, list[tuple[int, int]]] = {}
        self._mask_by_bit: dict[int, tuple[int, int]] = {}
        for st in streams:
            spec = sys.spec(st)
            if not spec.is_linear:
                raise ValueError(f"stream {st.letter} is not linear")
            fb = spec.feedback
            taps = [m.bit_length() - 1 for m in fb.terms if m]
            const = fb.constant_term()
            forms = [(Var(st, k).mask, 0) for k in range(min(spec.order, bound + 1))]
            for t in range(spec.order, bound + 1):
                acc, cst = 0, const
                for i in taps:
                    mm, cc = forms[Var.from_index(i).clock + t - spec.order]
                    acc ^= mm
                    cst ^= cc
                forms.append((acc, cst))
            self.forms[st] = forms
            for t, f in enumerate(forms):
                self._mask_by_bit[Var(st, t).index] = f

    def form(self, v: Var) -> tuple[int, int]:
        return self._mask_by_bit[v.index]

    def poly(self, v: Var) -> BoolPoly:
        mask, const = self.form(v)
        return BoolPoly.linear([Var.from_index(i) for i in iter_bits(mask)], const)

    def reduce(self, p: BoolPoly) -> BoolPoly:
        images = {}
        for v in p.variables():
            if v.index in self._mask_by_bit:
                images[v] = self.poly(v)
            elif v.stream in self.forms:
                raise ValueError(f"{v} is beyond the bound {self.bound}")
        return p.compose(images)

    def relations(self) -> list[BoolPoly]:
        """The shifted recurrences ``x(r+s) + sigma^s(f)`` up to the bound."""
        rels = []
        for st in self.forms:
            spec = self.sys.spec(st)
            for s in range(self.bound - spec.order + 1):
                rels.append(BoolPoly.var(Var(st, spec.order + s)) + spec.feedback.shift(s))
        return rels


__all__ = [
    "NotInvertible",
    "StreamSpec",
    "SystemState",
    "DiffSystem",
    "shift",
    "step",
    "transition_endo",
    "partial_transition_endo",
    "inversion_ideal",
    "invert",
    "reverse_windows",
    "reverse_state",
    "LinearWindow",
]
