"""The E0 keystream generator, twice.

``oracle_step`` is a plain integer implementation of the combiner (four
LFSRs, integer sum, carry, 2-bit delay line).  ``e0_system`` is the same
cipher as an explicit difference system over GF(2).  The two share no code
and are cross-checked in the tests.

Bit convention: in an LFSR register, bit ``i`` holds the cell ``x(t+i)``,
so bit 0 is the cell that leaves the register at clock ``t``.
"""

from __future__ import annotations

import enum
import random
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import BinaryIO, Iterator, Sequence

from .diffsys import DiffSystem, LinearWindow, StreamSpec, SystemState
from .poly import LFSR_STREAMS, BoolPoly, Stream, Var

# Primitive connection polynomials as exponent lists (the constant term is implied).
LFSR_POLYNOMIALS = {
    Stream.X: (25, 17, 13, 5),
    Stream.Y: (31, 19, 15, 7),
    Stream.Z: (33, 29, 9, 5),
    Stream.U: (39, 35, 11, 3),
}
LFSR_LENGTHS = {s: e[0] for s, e in LFSR_POLYNOMIALS.items()}
# Offsets of the cells feeding the combiner and the keystream, relative to clock t.
COMBINER_TAPS = {Stream.X: 1, Stream.Y: 7, Stream.Z: 1, Stream.U: 7}
STATE_BITS = 132


def _taps(stream: Stream) -> tuple[int, ...]:
    deg, *rest = LFSR_POLYNOMIALS[stream]
    return (0, *rest)


# -- bitwise oracle ---------------------------------------------------------------

@dataclass(frozen=True)
class CipherState:
    lfsr_x: int
    lfsr_y: int
    lfsr_z: int
    lfsr_u: int
    c0: int = 0
    c1: int = 0
    d0: int = 0
    d1: int = 0

    def __post_init__(self):
        for name, s in zip(("lfsr_x", "lfsr_y", "lfsr_z", "lfsr_u"), LFSR_STREAMS):
            val = getattr(self, name)
            if not 0 <= val < 1 << LFSR_LENGTHS[s]:
                raise ValueError(f"{name} does not fit in {LFSR_LENGTHS[s]} bits")
        for name in ("c0", "c1", "d0", "d1"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be a bit")

    @property
    def registers(self) -> tuple[int, int, int, int]:
        return (self.lfsr_x, self.lfsr_y, self.lfsr_z, self.lfsr_u)

    @property
    def fsm(self) -> tuple[int, int, int, int]:
        return (self.c0, self.c1, self.d0, self.d1)

    @classmethod
    def zero(cls) -> "CipherState":
        return cls(0, 0, 0, 0)

    @classmethod
    def random(cls, rng: random.Random) -> "CipherState":
        return cls.from_int(rng.getrandbits(STATE_BITS))

    # Flat layout: x0..x24, y0..y30, z0..z32, u0..u38, c0, c1, d0, d1.
    def to_int(self) -> int:
        n, pos = 0, 0
        for reg, s in zip(self.registers, LFSR_STREAMS):
            n |= reg << pos
            pos += LFSR_LENGTHS[s]
        for b in self.fsm:
            n |= b << pos
            pos += 1
        return n

    @classmethod
    def from_int(cls, n: int) -> "CipherState":
        if not 0 <= n < 1 << STATE_BITS:
            raise ValueError("state integer out of range")
        regs = []
        for s in LFSR_STREAMS:
            w = LFSR_LENGTHS[s]
            regs.append(n & ((1 << w) - 1))
            n >>= w
        return cls(*regs, n & 1, n >> 1 & 1, n >> 2 & 1, n >> 3 & 1)

    def to_bits(self) -> tuple[int, ...]:
        n = self.to_int()
        return tuple(n >> i & 1 for i in range(STATE_BITS))

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "CipherState":
        if len(bits) != STATE_BITS:
            raise ValueError(f"expected {STATE_BITS} bits")
        return cls.from_int(sum((b & 1) << i for i, b in enumerate(bits)))

    def to_hex(self) -> str:
        """33 lowercase hex digits; digit ``j`` carries flat bits ``4j..4j+3``, LSB first."""
        n = self.to_int()
        return "".join("0123456789abcdef"[n >> (4 * j) & 15] for j in range(33))

    @classmethod
    def from_hex(cls, text: str) -> "CipherState":
        text = text.strip().lower()
        if len(text) != 33 or any(ch not in "0123456789abcdef" for ch in text):
            raise ValueError("state hex must be exactly 33 hex digits")
        n = sum(int(ch, 16) << (4 * j) for j, ch in enumerate(text))
        if n >> STATE_BITS:
            raise ValueError("state hex has bits set beyond bit 131")
        return cls.from_int(n)

    # -- difference-system view --------------------------------------------------
    def to_system_state(self) -> SystemState:
        return SystemState(self.to_bits())

    @classmethod
    def from_system_state(cls, v: SystemState) -> "CipherState":
        return cls.from_bits(v.bits)

    def assignment(self) -> dict[Var, int]:
        """Values of the 132 window variables."""
        return dict(zip(e0_system().window, self.to_bits()))

    # -- Bluetooth layout ----------------------------------------------------------
    def to_bluetooth_bits(self) -> tuple[int, ...]:
        """Each LFSR window reversed, FSM as (c0, d0, c1, d1).

        This is the reordering under which the difference-system equations are
        said to match Bluetooth's reference data; no reference vectors ship here.
        """
        out: list[int] = []
        for reg, s in zip(self.registers, LFSR_STREAMS):
            w = LFSR_LENGTHS[s]
            out.extend(reg >> (w - 1 - i) & 1 for i in range(w))
        out.extend((self.c0, self.d0, self.c1, self.d1))
        return tuple(out)

    @classmethod
    def from_bluetooth_bits(cls, bits: Sequence[int]) -> "CipherState":
        if len(bits) != STATE_BITS:
            raise ValueError(f"expected {STATE_BITS} bits")
        regs, pos = [], 0
        for s in LFSR_STREAMS:
            w = LFSR_LENGTHS[s]
            regs.append(sum((bits[pos + i] & 1) << (w - 1 - i) for i in range(w)))
            pos += w
        c0, d0, c1, d1 = bits[pos:pos + 4]
        return cls(*regs, c0, c1, d0, d1)


def _lfsr_advance(reg: int, stream: Stream) -> int:
    w = LFSR_LENGTHS[stream]
    fb = 0
    for tap in _taps(stream):
        fb ^= reg >> tap
    return (reg >> 1) | ((fb & 1) << (w - 1))


def oracle_step(s: CipherState) -> tuple[CipherState, int]:
    """One clock of the integer combiner; returns the next state and ``k(t)``."""
    xs, ys, zs, us = s.registers
    x1 = xs >> 1 & 1
    y7 = ys >> 7 & 1
    z1 = zs >> 1 & 1
    u7 = us >> 7 & 1
    F = x1 + y7 + z1 + u7
    C = 2 * s.d1 + s.c1
    G = (F + C) // 2
    g1, g0 = G >> 1, G & 1
    d2 = g1 ^ s.d1 ^ s.c0
    c2 = g0 ^ s.c1 ^ s.d0 ^ s.c0
    bit = x1 ^ y7 ^ z1 ^ u7 ^ s.c1
    nxt = CipherState(_lfsr_advance(xs, Stream.X), _lfsr_advance(ys, Stream.Y),
                      _lfsr_advance(zs, Stream.Z), _lfsr_advance(us, Stream.U),
                      s.c1, c2, s.d1, d2)
    return nxt, bit


def oracle_run(s: CipherState, n: int) -> tuple[CipherState, list[int]]:
    """``n`` clocks of the oracle; a tight loop on plain ints."""
    xs, ys, zs, us = s.registers
    c0, c1, d0, d1 = s.fsm
    bits = []
    for _ in range(n):
        x1 = xs >> 1 & 1
        y7 = ys >> 7 & 1
        z1 = zs >> 1 & 1
        u7 = us >> 7 & 1
        G = (x1 + y7 + z1 + u7 + 2 * d1 + c1) >> 1
        bits.append(x1 ^ y7 ^ z1 ^ u7 ^ c1)
        c0, c1, d0, d1 = c1, (G & 1) ^ c1 ^ d0 ^ c0, d1, (G >> 1) ^ d1 ^ c0
        xs = (xs >> 1) | (((xs ^ xs >> 5 ^ xs >> 13 ^ xs >> 17) & 1) << 24)
        ys = (ys >> 1) | (((ys ^ ys >> 7 ^ ys >> 15 ^ ys >> 19) & 1) << 30)
        zs = (zs >> 1) | (((zs ^ zs >> 5 ^ zs >> 9 ^ zs >> 29) & 1) << 32)
        us = (us >> 1) | (((us ^ us >> 3 ^ us >> 11 ^ us >> 35) & 1) << 38)
    return CipherState(xs, ys, zs, us, c0, c1, d0, d1), bits


# -- algebraic system -------------------------------------------------------------

G0_TEXT = (
    "x1*c1 + y7*c1 + z1*c1 + u7*c1 + x1*y7 + x1*z1 + x1*u7 + y7*z1 + y7*u7 + z1*u7"
    " + c1 + d1 + c0 + d0"
)
G1_TEXT = (
    "x1*y7*z1*u7 + x1*y7*d1 + x1*z1*d1 + x1*u7*d1 + y7*z1*d1 + y7*u7*d1 + z1*u7*d1"
    " + x1*c1*d1 + y7*c1*d1 + z1*c1*d1 + u7*c1*d1 + x1*y7*z1*c1 + x1*y7*u7*c1"
    " + x1*z1*u7*c1 + y7*z1*u7*c1 + d1 + c0"
)
H0_TEXT = (
    "x24*y24*z32*u32 + x24*y24*z32*c1 + x24*y24*u32*c1 + x24*z32*u32*c1 + y24*z32*u32*c1"
    " + x24*y24*d1 + x24*z32*d1 + y24*z32*d1 + x24*u32*d1 + y24*u32*d1 + z32*u32*d1"
    " + x24*c1*d1 + y24*c1*d1 + z32*c1*d1 + u32*c1*d1 + d1 + d0"
)
H1_TEXT = (
    H0_TEXT[: H0_TEXT.rindex(" + d1 + d0")]
    + " + x24*y24 + x24*z32 + y24*z32 + x24*u32 + y24*u32 + z32*u32"
    " + x24*c1 + y24*c1 + z32*c1 + u32*c1 + c1 + c0 + d0"
)
KEYSTREAM_TEXT = "x1 + y7 + z1 + u7 + c1"


def _linear_feedback(stream: Stream, taps: Sequence[int]) -> StreamSpec:
    return StreamSpec(stream, LFSR_LENGTHS[stream], BoolPoly.linear([Var(stream, t) for t in taps]))


@lru_cache(maxsize=None)
def e0_system() -> DiffSystem:
    streams = [_linear_feedback(s, _taps(s)) for s in LFSR_STREAMS]
    streams.append(StreamSpec(Stream.C, 2, BoolPoly.parse(G0_TEXT)))
    streams.append(StreamSpec(Stream.D, 2, BoolPoly.parse(G1_TEXT)))
    return DiffSystem(tuple(streams), BoolPoly.parse(KEYSTREAM_TEXT))


@lru_cache(maxsize=None)
def e0_inverse_system() -> DiffSystem:
    streams = []
    for s in LFSR_STREAMS:
        w = LFSR_LENGTHS[s]
        streams.append(_linear_feedback(s, sorted(w - t for t in LFSR_POLYNOMIALS[s][1:]) + [0]))
    streams.append(StreamSpec(Stream.C, 2, BoolPoly.parse(H0_TEXT)))
    streams.append(StreamSpec(Stream.D, 2, BoolPoly.parse(H1_TEXT)))
    return DiffSystem(tuple(streams))


def state_to_mask(s: CipherState) -> int:
    """Global monomial mask of the window variables equal to 1."""
    ones = 0
    n = s.to_int()
    for i, var in enumerate(_WINDOW):
        if n >> i & 1:
            ones |= var.mask
    return ones


def state_from_mask(ones: int) -> CipherState:
    n = 0
    for i, var in enumerate(_WINDOW):
        if ones & var.mask:
            n |= 1 << i
    return CipherState.from_int(n)


_WINDOW = e0_system().window


def lfsr_relations(bound: int) -> list[BoolPoly]:
    """Shifted LFSR recurrences ``x(25+s) + x(s) + ...`` for all cells up to clock ``bound``."""
    return LinearWindow(e0_system(), LFSR_STREAMS, bound).relations()


@lru_cache(maxsize=8)
def lfsr_window(bound: int) -> LinearWindow:
    return LinearWindow(e0_system(), LFSR_STREAMS, bound)


# -- keystreams -------------------------------------------------------------------

class Route(enum.Enum):
    ORACLE = "oracle"
    ALGEBRAIC = "algebraic"


@dataclass(frozen=True)
class Keystream:
    bits: tuple[int, ...]
    start_clock: int = 0

    MAGIC = b"E0"

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) & 1 for b in self.bits))
        if self.start_clock < 0:
            raise ValueError("start clock must be non-negative")

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def to_ascii(self) -> str:
        return "".join("01"[b] for b in self.bits)

    @classmethod
    def from_ascii(cls, text: str, start_clock: int = 0) -> "Keystream":
        text = "".join(text.split())
        if any(ch not in "01" for ch in text):
            raise ValueError("keystream text must contain only 0 and 1")
        return cls(tuple(int(ch) for ch in text), start_clock)

    def to_bytes(self) -> bytes:
        """8-byte header (magic, uint16 start clock, uint32 length, big-endian), bits MSB first."""
        if self.start_clock >= 1 << 16:
            raise ValueError("start clock does not fit the binary header")
        body = bytearray((len(self.bits) + 7) // 8)
        for i, b in enumerate(self.bits):
            if b:
                body[i >> 3] |= 0x80 >> (i & 7)
        return self.MAGIC + struct.pack(">HI", self.start_clock, len(self.bits)) + bytes(body)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Keystream":
        if len(data) < 8 or data[:2] != cls.MAGIC:
            raise ValueError("not a keystream file")
        start, n = struct.unpack(">HI", data[2:8])
        body = data[8:]
        if len(body) != (n + 7) // 8:
            raise ValueError("keystream length does not match header")
        return cls(tuple(body[i >> 3] >> (7 - (i & 7)) & 1 for i in range(n)), start)

    def write(self, fh: BinaryIO) -> None:
        fh.write(self.to_bytes())


def keystream(s: CipherState, n: int, route: Route | str = Route.ORACLE, start_clock: int = 0) -> Keystream:
    route = Route(route)
    if n < 0:
        raise ValueError("n must be non-negative")
    if route is Route.ORACLE:
        _, bits = oracle_run(s, n)
        return Keystream(tuple(bits), start_clock)
    sys = e0_system()
    return Keystream(tuple(sys.keystream_masks(state_to_mask(s), n)), start_clock)


def trajectory(s: CipherState, n: int, route: Route | str = Route.ORACLE) -> Iterator[CipherState]:
    """States at clocks 0..n."""
    route = Route(route)
    yield s
    if route is Route.ORACLE:
        for _ in range(n):
            s, _ = oracle_step(s)
            yield s
    else:
        sys = e0_system()
        ones = state_to_mask(s)
        for _ in range(n):
            ones = sys.step_mask(ones)
            yield state_from_mask(ones)


def advance(s: CipherState, t: int) -> CipherState:
    return oracle_run(s, t)[0]


__all__ = [
    "LFSR_POLYNOMIALS",
    "LFSR_LENGTHS",
    "STATE_BITS",
    "CipherState",
    "oracle_step",
    "oracle_run",
    "e0_system",
    "e0_inverse_system",
    "state_to_mask",
    "state_from_mask",
    "lfsr_relations",
    "lfsr_window",
    "Route",
    "Keystream",
    "keystream",
    "trajectory",
    "advance",
]
