import itertools
import random

import pytest
from hypothesis import given, strategies as st

from e0attack.attack import g_parts
from e0attack.e0 import lfsr_relations
from e0attack.order import MonomialOrder, normal_form, universe_of
from e0attack.poly import (BoolPoly, IncompleteTable, Monomial, Stream, UnassignedVariable, Var,
                           anf_from_truth_table, c, d, elementary_symmetric, truth_table, u, x, y, z)

from oracles import eval_terms, random_poly

P = BoolPoly.parse
VARS12 = [Var(Stream(s), t) for t in range(2) for s in range(6)]


# -- Var order -----------------------------------------------------------------

def test_var_order_interleaves_lfsr_streams_by_clock():
    chain = [x(0), y(0), z(0), u(0), x(1), y(1), z(1), u(1), x(40), c(0), c(1), c(99), d(0), d(1)]
    assert chain == sorted(reversed(chain))
    for a, b in zip(chain, chain[1:]):
        assert a < b and not b < a


def test_var_parse_and_str():
    for v in (x(0), y(30), z(32), u(38), c(7), d(70)):
        assert Var.parse(str(v)) == v
    with pytest.raises(ValueError):
        Var.parse("w3")


@given(st.integers(0, 5), st.integers(0, 50), st.integers(0, 5), st.integers(0, 50))
def test_var_order_is_total_and_antisymmetric(s1, t1, s2, t2):
    a, b = Var(Stream(s1), t1), Var(Stream(s2), t2)
    assert (a < b) + (b < a) + (a == b) == 1


# -- add / mul --------------------------------------------------------------------

def test_add_examples():
    assert P("x0 + 1") + P("x0") == BoolPoly.one()
    p = P("x1*y7 + z3 + 1")
    assert p + BoolPoly.zero() == p
    assert P("x1*y7") + P("x1*y7") == BoolPoly.zero()


def test_mul_examples():
    assert P("x1") * P("x1") == P("x1")
    assert P("x1 + y7") * P("x1 + y7") == P("x1 + y7")
    prod = P("x1 + 1") * P("x1")
    assert prod == BoolPoly.zero()
    # four-point truth table check of the same product
    for a, b in itertools.product((0, 1), repeat=2):
        pt = {x(1): a, y(7): b}
        assert prod.evaluate(pt) == ((a + 1) % 2) * a


def test_monomial_type():
    m = Monomial([x(1), y(7)])
    assert m.degree == 2 and Monomial() .degree == 0
    assert (m * Monomial([x(1)])) == m
    assert Monomial([x(1)]).divides(m)


# -- evaluate ----------------------------------------------------------------------

def test_evaluate_examples():
    g0 = P("x1*c1 + y7*c1 + z1*c1 + u7*c1 + x1*y7 + x1*z1 + x1*u7 + y7*z1 + y7*u7 + z1*u7"
           " + c1 + d1 + c0 + d0")
    assert g0.evaluate({v: 0 for v in g0.variables()}) == 0
    assert P("x1*y7 + c0").evaluate({x(1): 1, y(7): 1, c(0): 1}) == 0


def test_evaluate_unassigned():
    with pytest.raises(UnassignedVariable):
        P("x1*y7").evaluate({x(1): 1})


def test_carry_bit_one_of_integer_sum():
    # f1 is bit 1 of x(t) + y(t+6) + z(t) + u(t+6) as integers: build it from the
    # 16-row integer table, then evaluate at the example point.
    vs = [x(0), y(6), z(0), u(6)]
    table = {bits: (sum(bits) >> 1) & 1 for bits in itertools.product((0, 1), repeat=4)}
    f1 = anf_from_truth_table(table, vs)
    assert f1 == elementary_symmetric([BoolPoly.var(v) for v in vs])[2]
    assert f1.evaluate({x(0): 1, y(6): 1, z(0): 0, u(6): 0}) == 1


# -- substitute --------------------------------------------------------------------

def test_substitute_examples():
    b0 = 1
    r = P("x1") + b0
    assert P("c1 + x1").substitute(c(1), r) == BoolPoly.const(b0)
    assert P("x1*y7").substitute(x(1), 1) == P("y7")
    parts = g_parts(0, 1, 0)
    assert parts.G1.substitute(d(1), parts.A1) == BoolPoly.zero()


@given(st.randoms(use_true_random=False))
def test_substitute_agrees_with_evaluation(rng):
    vs = VARS12[:6]
    p, r = random_poly(rng, vs), random_poly(rng, vs[1:])
    v = vs[0]
    q = p.substitute(v, r)
    for bits in itertools.product((0, 1), repeat=len(vs)):
        pt = dict(zip(vs, bits))
        pt2 = dict(pt)
        pt2[v] = eval_terms(r, pt)
        assert eval_terms(q, pt) == eval_terms(p, pt2)


# -- normal form ------------------------------------------------------------------

def test_normal_form_of_lfsr_cells():
    rels = lfsr_relations(40)
    order = MonomialOrder.degrevlex(universe_of(rels))
    assert normal_form(P("x25"), rels, order) == P("x0 + x5 + x13 + x17")
    assert normal_form(P("x26"), rels, order) == P("x1 + x6 + x14 + x18")
    p = P("x3*y2 + z5")
    assert normal_form(p, [], order) == p


@given(st.randoms(use_true_random=False))
def test_normal_form_idempotent(rng):
    rels = lfsr_relations(30)
    pool = [x(t) for t in range(31)] + [y(t) for t in range(31)]
    order = MonomialOrder.degrevlex(set(universe_of(rels)) | set(pool))
    p = random_poly(rng, pool, max_terms=5, max_deg=3)
    nf = normal_form(p, rels, order)
    assert normal_form(nf, rels, order) == nf
    assert all(v.clock < {Stream.X: 25, Stream.Y: 31}[v.stream] for v in nf.variables())


# -- ANF / truth tables -------------------------------------------------------------

def test_anf_examples():
    vs = [x(0), y(6), z(0), u(6)]
    rows = list(itertools.product((0, 1), repeat=4))
    bit2 = {r: (sum(r) >> 2) & 1 for r in rows}
    bit0 = {r: sum(r) & 1 for r in rows}
    assert anf_from_truth_table(bit2, vs) == P("x0*y6*z0*u6")
    assert anf_from_truth_table(bit0, vs) == P("x0 + y6 + z0 + u6")
    assert anf_from_truth_table([0] * 16, vs) == BoolPoly.zero()


def test_anf_incomplete_table():
    with pytest.raises(IncompleteTable):
        anf_from_truth_table([0, 1, 1], [x(0), x(1)])
    with pytest.raises(IncompleteTable):
        anf_from_truth_table({(0, 0): 1}, [x(0), x(1)])


@given(st.randoms(use_true_random=False), st.integers(0, 10))
def test_anf_roundtrip(rng, n):
    vs = [Var(Stream(k % 6), k // 6) for k in range(n)]
    p = random_poly(rng, vs, max_terms=8, max_deg=4) if vs else BoolPoly.const(rng.getrandbits(1))
    assert anf_from_truth_table(truth_table(p, vs), vs) == p


def test_truth_table_matches_direct_evaluation():
    rng = random.Random(11)
    vs = VARS12[:7]
    for _ in range(50):
        p = random_poly(rng, vs, max_terms=8, max_deg=4)
        tab = truth_table(p, vs)
        for idx in range(1 << len(vs)):
            pt = {v: idx >> j & 1 for j, v in enumerate(vs)}
            assert tab[idx] == eval_terms(p, pt)


# -- ring laws ---------------------------------------------------------------------

def test_ring_laws_random_trials():
    rng = random.Random(1234)
    for _ in range(10_000):
        n = rng.randint(1, 12)
        vs = VARS12[:n]
        p, q, r = (random_poly(rng, vs, max_terms=4, max_deg=3) for _ in range(3))
        assert p + q == q + p
        assert p * q == q * p
        assert (p + q) + r == p + (q + r)
        assert (p * q) * r == p * (q * r)
        assert p * (q + r) == p * q + p * r
        assert p * p == p
        pt = {v: rng.getrandbits(1) for v in vs}
        assert (p * q).evaluate(pt) == p.evaluate(pt) & q.evaluate(pt)
        assert (p + q).evaluate(pt) == p.evaluate(pt) ^ q.evaluate(pt)


# -- monomial orders -----------------------------------------------------------------

def test_degrevlex_three_variable_ties():
    a, b, cc = x(0), y(0), z(0)          # a < b < cc
    order = MonomialOrder.degrevlex([a, b, cc])
    ms = [BoolPoly.monomial(s) for s in ([], [a], [b], [cc], [a, b], [a, cc], [b, cc], [a, b, cc])]
    keys = [order.key(next(iter(m.terms))) for m in ms]
    assert keys == sorted(keys) and len(set(keys)) == 8
    # among equal degrees, containing the smallest variable makes a monomial smaller
    assert order.leading_monomial(P("x0*y0 + x0*z0 + y0*z0")) == next(iter(P("y0*z0").terms))
    assert order.leading_monomial(P("x0*y0 + x0*z0")) == next(iter(P("x0*z0").terms))


def test_lex_and_product_orders():
    a, b, cc = x(0), y(0), z(0)
    lex = MonomialOrder.lex([a, b, cc])
    assert lex.leading_monomial(P("x0*y0 + z0")) == next(iter(P("z0").terms))
    prod = MonomialOrder.product([cc], [a, b])
    assert prod.leading_monomial(P("x0*y0 + z0")) == next(iter(P("z0").terms))
    assert prod.leading_monomial(P("x0*y0 + x0 + 1")) == next(iter(P("x0*y0").terms))


@given(st.randoms(use_true_random=False))
def test_order_is_multiplicative_with_one_minimal(rng):
    vs = VARS12[:8]
    for order in (MonomialOrder.degrevlex(vs), MonomialOrder.lex(vs),
                  MonomialOrder.product(vs[4:], vs[:4])):
        m1, m2, m = (sum(v.mask for v in vs if rng.getrandbits(1)) for _ in range(3))
        if order.key(m1) > order.key(m2):
            m1, m2 = m2, m1
        assert order.key(m | m1) <= order.key(m | m2) or (m | m1) == (m | m2) or m & (m1 ^ m2)
        assert order.key(0) <= order.key(m1)


def test_order_multiplicative_disjoint_exhaustive():
    # With m disjoint from m1, m2 the squarefree product is the ordinary one, so
    # m1 < m2 must imply m*m1 < m*m2.
    vs = VARS12[:5]
    for order in (MonomialOrder.degrevlex(vs), MonomialOrder.lex(vs), MonomialOrder.product(vs[3:], vs[:3])):
        masks = [sum(v.mask for j, v in enumerate(vs) if k >> j & 1) for k in range(32)]
        for m1, m2, m in itertools.product(masks, repeat=3):
            if m & (m1 | m2):
                continue
            if order.key(m1) < order.key(m2):
                assert order.key(m | m1) < order.key(m | m2)


# -- text format ------------------------------------------------------------------------

def test_print_parse_roundtrip():
    p = P("x1*y7 + c0 + 1")
    assert str(p) == "x1*y7 + c0 + 1"
    assert str(BoolPoly.zero()) == "0"
    assert P(str(p)) == p


@given(st.randoms(use_true_random=False))
def test_print_parse_roundtrip_random(rng):
    p = random_poly(rng, VARS12, max_terms=8, max_deg=4)
    assert P(str(p)) == p
    assert str(P(str(p))) == str(p)


def test_parser_handles_parentheses():
    assert P("(x1 + 1)*(y7 + 1)") == P("x1*y7 + x1 + y7 + 1")
    with pytest.raises(ValueError):
        P("x1 + * y7")


def test_shift():
    assert P("x0").shift(1) == P("x1")
    f = P("x1 + y7 + z1 + u7 + c1")
    assert f.shift(0) == f
    assert f.shift(3) == P("x4 + y10 + z4 + u10 + c4")
