import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from e0attack.diffsys import (DiffSystem, NotInvertible, StreamSpec, SystemState, invert,
                              partial_transition_endo, reverse_state, reverse_windows, shift, step,
                              transition_endo)
from e0attack.e0 import G0_TEXT, LFSR_LENGTHS, e0_inverse_system, e0_system, lfsr_relations
from e0attack.order import MonomialOrder, normal_form, universe_of
from e0attack.poly import BoolPoly, Stream, Var, c, d, u, x, y, z

from oracles import eval_terms, random_poly

P = BoolPoly.parse
GOLDEN = Path(__file__).parent / "golden"


def fib():
    return DiffSystem((StreamSpec(Stream.X, 2, P("x0 + x1")),))


def e0_state(rng):
    return SystemState(tuple(rng.getrandbits(1) for _ in range(132)))


# -- random small systems and an independent stepper ---------------------------------------

def random_system(rng, max_streams=3, max_order=4, invertible_bias=True):
    streams = rng.sample(list(Stream), rng.randint(1, max_streams))
    orders = [rng.randint(1, max_order) for _ in streams]
    window = [Var(s, k) for s, r in zip(streams, orders) for k in range(r)]
    specs = []
    # Half of the time build a system that is bijective by construction: the
    # feedback is x_i(0) plus a function of clocks >= 1 only.
    shaped = invertible_bias and rng.getrandbits(1)
    late = [v for v in window if v.clock >= 1]
    for s, r in zip(streams, orders):
        if shaped:
            fb = BoolPoly.var(Var(s, 0)) + (random_poly(rng, late, 4, 3) if late else 0)
        else:
            fb = random_poly(rng, window, 5, 3)
        specs.append(StreamSpec(s, r, fb))
    return DiffSystem(tuple(specs))


def naive_step(sys, bits):
    """Shift plus feedback, by direct evaluation of the term lists."""
    point = dict(zip(sys.window, bits))
    out = []
    for s in sys.streams:
        out.extend(point[Var(s.stream, k)] for k in range(1, s.order))
        out.append(eval_terms(s.feedback, point))
    return tuple(out)


def is_bijective(sys):
    images = {naive_step(sys, bits) for bits in itertools.product((0, 1), repeat=sys.width)}
    return len(images) == 1 << sys.width


# -- construction and text format ------------------------------------------------------------

def test_feedback_must_stay_in_window():
    with pytest.raises(ValueError):
        DiffSystem((StreamSpec(Stream.X, 2, P("x2")),))
    with pytest.raises(ValueError):
        DiffSystem((StreamSpec(Stream.X, 2, P("x0 + y0")),))
    with pytest.raises(ValueError):
        StreamSpec(Stream.X, 0, P("0"))


def test_text_roundtrip():
    for sys in (fib(), e0_system(), e0_inverse_system()):
        assert DiffSystem.from_text(sys.to_text()) == sys


def test_text_rejects_garbage():
    with pytest.raises(ValueError):
        DiffSystem.from_text("x two: x0\n")


def test_e0_system_matches_golden_listing():
    golden = DiffSystem.from_text((GOLDEN / "e0_system.txt").read_text())
    assert golden == e0_system()
    assert e0_system().width == 132


# -- step ---------------------------------------------------------------------------------

def test_step_examples():
    sys = e0_system()
    zero = SystemState((0,) * 132)
    assert step(sys, zero) == zero
    assert step(fib(), SystemState((1, 0))) == SystemState((0, 1))

    only_c0 = dict.fromkeys(sys.window, 0)
    only_c0[c(0)] = 1
    nxt = sys.assignment(step(sys, SystemState(tuple(only_c0[v] for v in sys.window))))
    assert (nxt[c(0)], nxt[c(1)]) == (0, 1)
    assert (nxt[d(0)], nxt[d(1)]) == (0, 1)
    assert sum(nxt.values()) == 2


def test_step_matches_naive_stepper():
    rng = random.Random(3)
    for _ in range(300):
        sys = random_system(rng)
        bits = tuple(rng.getrandbits(1) for _ in range(sys.width))
        assert step(sys, SystemState(bits)).bits == naive_step(sys, bits)
    sys = e0_system()
    for _ in range(50):
        v = e0_state(rng)
        assert step(sys, v).bits == naive_step(sys, v.bits)


def test_state_width_checked():
    with pytest.raises(ValueError):
        fib().state_mask(SystemState((1, 0, 1)))


# -- transition endomorphism ----------------------------------------------------------------

def test_transition_endo_examples():
    sys = e0_system()
    assert transition_endo(sys, P("x0")) == P("x1")
    assert transition_endo(sys, P("x24")) == P("x0 + x5 + x13 + x17")
    assert transition_endo(sys, P("c1")) == P(G0_TEXT)


def test_semantics_bridge_seeded():
    rng = random.Random(99)
    for _ in range(10_000):
        sys = random_system(rng, invertible_bias=False)
        p = random_poly(rng, sys.window, 4, 3)
        bits = tuple(rng.getrandbits(1) for _ in range(sys.width))
        pt_next = dict(zip(sys.window, naive_step(sys, bits)))
        assert eval_terms(transition_endo(sys, p), dict(zip(sys.window, bits))) == eval_terms(p, pt_next)


@given(st.randoms(use_true_random=False))
def test_semantics_bridge_property(rng):
    sys = random_system(rng, invertible_bias=False)
    p = random_poly(rng, sys.window, 5, 4)
    v = SystemState(tuple(rng.getrandbits(1) for _ in range(sys.width)))
    assert transition_endo(sys, p).evaluate(sys.assignment(v)) == p.evaluate(sys.assignment(step(sys, v)))


# -- shift ---------------------------------------------------------------------------------

def test_shift_examples():
    assert shift(P("x0"), 1) == P("x1")
    f = e0_system().keystream_poly
    assert shift(f, 0) == f
    assert shift(f, 3) == P("x4 + y10 + z4 + u10 + c4")


# -- partial transition endomorphism -----------------------------------------------------------

def test_partial_transition_examples():
    sys = e0_system()
    assert partial_transition_endo(sys, 0, P("x24")) == P("x25")
    assert partial_transition_endo(sys, 4, P("x24")) == P("x0 + x5 + x13 + x17")
    assert partial_transition_endo(sys, 4, P("c5")) == P("c6")
    assert partial_transition_endo(sys, 6, P("c1")) == transition_endo(sys, P("c1"))


def test_partial_transition_agrees_with_normal_form():
    sys = e0_system()
    f = sys.keystream_poly
    rels = lfsr_relations(90)
    acc = f
    for t in range(41):
        target = f.shift(t)
        order = MonomialOrder.degrevlex(set(universe_of(rels)) | set(target.variables()))
        assert acc == normal_form(target, rels, order), t
        acc = partial_transition_endo(sys, 4, acc)


# -- inversion -----------------------------------------------------------------------------

def test_invert_single_lfsr():
    lfsr = DiffSystem((StreamSpec(Stream.X, 25, P("x0 + x5 + x13 + x17")),))
    inv = invert(lfsr)
    assert inv.feedback(Stream.X) == P("x20 + x12 + x8 + x0")


def test_invert_involution():
    sys = DiffSystem((StreamSpec(Stream.X, 1, P("x0 + 1")),))
    assert invert(sys) == sys


def test_not_invertible_example():
    sys = DiffSystem((StreamSpec(Stream.X, 1, P("x0*y0")), StreamSpec(Stream.Y, 1, P("y0"))))
    assert not is_bijective(sys)
    with pytest.raises(NotInvertible):
        invert(sys)


def test_invert_e0_matches_golden_listing():
    golden = DiffSystem.from_text((GOLDEN / "e0_inverse.txt").read_text())
    inv = invert(e0_system())
    for s in golden.streams:
        assert inv.feedback(s.stream).terms == s.feedback.terms, s.stream.letter
    assert inv == e0_inverse_system()


def _roundtrip_all_states(sys, inv):
    for bits in itertools.product((0, 1), repeat=sys.width):
        v = SystemState(bits)
        assert reverse_state(sys, inv, step(sys, v), 1) == v


def test_inversion_matches_bijectivity_oracle():
    rng = random.Random(1701)
    seen = {True: 0, False: 0}
    for _ in range(150):
        sys = random_system(rng, max_order=3)
        bij = is_bijective(sys)
        seen[bij] += 1
        try:
            inv = invert(sys)
        except NotInvertible:
            assert not bij, sys.to_text()
            continue
        assert bij, sys.to_text()
        _roundtrip_all_states(sys, inv)
    assert seen[True] > 20 and seen[False] > 20


@pytest.mark.slow
def test_inversion_matches_bijectivity_oracle_width_12():
    rng = random.Random(4242)
    done = 0
    while done < 12:
        sys = random_system(rng, max_streams=3, max_order=4)
        if sys.width != 12:
            continue
        done += 1
        bij = is_bijective(sys)
        try:
            inv = invert(sys)
        except NotInvertible:
            assert not bij
            continue
        assert bij
        _roundtrip_all_states(sys, inv)


def test_e0_inverse_undoes_one_step():
    rng = random.Random(8)
    sys, inv = e0_system(), e0_inverse_system()
    for _ in range(10_000):
        v = e0_state(rng)
        w = reverse_windows(sys, step(sys, v))
        assert reverse_windows(sys, step(inv, w)) == v


# -- state reversal ---------------------------------------------------------------------------

def test_reverse_state_examples():
    sys, inv = e0_system(), e0_inverse_system()
    rng = random.Random(12)
    v = e0_state(rng)
    assert reverse_state(sys, inv, v, 0) == v
    assert reverse_state(sys, inv, sys.run(v, 200), 200) == v
    f = fib()
    assert reverse_state(f, invert(f), SystemState((0, 1)), 1) == SystemState((1, 0))


@settings(max_examples=25)
@given(st.randoms(use_true_random=False), st.integers(0, 256))
def test_reverse_state_inverts_run(rng, t):
    sys, inv = e0_system(), e0_inverse_system()
    v = e0_state(rng)
    assert reverse_state(sys, inv, sys.run(v, t), t) == v


def test_reverse_state_rejects_negative_clock():
    with pytest.raises(ValueError):
        reverse_state(fib(), invert(fib()), SystemState((0, 1)), -1)
