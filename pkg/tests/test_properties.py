"""Randomised checks against the reference evaluator and the literal encodings."""

import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import encode_reference, holds, increment_reference, rank
from relog.execution import apply_delete, apply_insert
from relog.logic import (
    And,
    Atom,
    Eq,
    Exists,
    Exists2,
    Forall,
    Implies,
    Not,
    Or,
    collapse_eso,
    eval_eso,
    eval_fo,
    format_formula,
    parse_formula,
)
from relog.model import (
    Structure,
    Vocabulary,
    decode,
    encode,
    int_to_relation,
    lex_rank,
    linear_order,
    relation_increment,
    relation_to_int,
    validate_order,
)
from relog.syntax import Dialect, parse_rule

VOCAB = Vocabulary.of(("P", 1), ("E", 2), ("Q", 0))
ORD = Vocabulary.of(("<", 2), ("P", 1), order="<")
VARS = ("x", "y", "z")


@st.composite
def structures(draw, vocab=VOCAB, max_size=3):
    n = draw(st.integers(0, max_size))
    rels = {}
    for s in vocab:
        if s.arity == 0:
            rels[s.name] = draw(st.booleans())
        else:
            tuples = list(itertools.product(range(n), repeat=s.arity))
            rels[s.name] = draw(st.sets(st.sampled_from(tuples))) if tuples else set()
    return Structure(vocab, n, rels)


def formulas(extra_atoms=()):
    var = st.sampled_from(VARS)
    leaves = st.one_of(
        st.builds(lambda v: Atom("P", (v,)), var),
        st.builds(lambda a, b: Atom("E", (a, b)), var, var),
        st.just(Atom("Q")),
        st.builds(Eq, var, var),
        *[st.just(a) for a in extra_atoms],
    )

    def extend(sub):
        return st.one_of(
            st.builds(Not, sub),
            st.builds(And, sub, sub),
            st.builds(Or, sub, sub),
            st.builds(Implies, sub, sub),
            st.builds(Exists, var, sub),
            st.builds(Forall, var, sub),
        )

    return st.recursive(leaves, extend, max_leaves=8)


def close(f):
    for v in VARS:
        f = Forall(v, f) if v == "y" else Exists(v, f)
    return f


@settings(max_examples=200, deadline=None)
@given(formulas(), structures())
def test_fo_agrees_with_reference(f, m):
    f = close(f)
    assert eval_fo(f, m) == holds(f, m)


@settings(max_examples=100, deadline=None)
@given(formulas(), structures(max_size=2))
def test_eso_agrees_with_reference(f, m):
    body = close(Or(f, Exists("x", Atom("X", ("x",)))))
    g = Exists2("X", 1, body)
    assert eval_eso(g, m) == holds(g, m)


@settings(max_examples=60, deadline=None)
@given(formulas(extra_atoms=(Atom("X", ("x",)), Atom("W", ("y",)))), structures(max_size=2))
def test_collapse_preserves_truth(f, m):
    g = Exists2("X", 1, Exists2("W", 1, close(f)))
    assert eval_eso(collapse_eso(g), m) == holds(g, m)


@settings(max_examples=200, deadline=None)
@given(formulas(), formulas(), structures())
def test_de_morgan(f, g, m):
    env = {v: 0 for v in VARS}
    if m.domain_size == 0:
        f, g, env = close(f), close(g), {}
    assert eval_fo(Not(And(f, g)), m, env) == eval_fo(Or(Not(f), Not(g)), m, env)
    assert eval_fo(Not(Or(f, g)), m, env) == eval_fo(And(Not(f), Not(g)), m, env)


@settings(max_examples=200, deadline=None)
@given(formulas(), structures(), st.sampled_from(VARS))
def test_quantifier_duality(f, m, v):
    f = close(f) if m.domain_size == 0 else f
    env = {w: 0 for w in VARS} if m.domain_size else {}
    assert eval_fo(Forall(v, f), m, env) == eval_fo(Not(Exists(v, Not(f))), m, env)


@settings(max_examples=200, deadline=None)
@given(formulas())
def test_print_parse_round_trip(f):
    assert parse_formula(format_formula(f)) == f


@settings(max_examples=200, deadline=None)
@given(structures(max_size=4))
def test_encode_decode_round_trip(m):
    assert decode(encode(m), VOCAB) == m


@settings(max_examples=200, deadline=None)
@given(structures(max_size=4), st.data())
def test_encoding_matches_reference_symbol_by_symbol(m, data):
    order = data.draw(st.permutations(range(m.domain_size)))
    rels = [(s.name, s.arity, {()} if s.arity == 0 and m.holds(s.name) else
             (set() if s.arity == 0 else m[s.name])) for s in VOCAB]
    assert encode(m, order) == encode_reference(m.domain_size, rels, order)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.integers(0, 3), st.data())
def test_lex_rank_is_a_bijection(n, k, data):
    t = tuple(data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k)))
    r = lex_rank(t, n)
    assert 0 <= r < n ** k and r == rank(t, n)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.data())
def test_increment_is_successor(n, k, data):
    width = n ** k
    value = data.draw(st.integers(0, 2 ** width - 1))
    rel = int_to_relation(value, n, k)
    assert relation_to_int(rel, n, k) == value
    nxt = relation_increment(rel, n, k)
    assert nxt == increment_reference(rel, n, k)
    assert relation_to_int(nxt, n, k) == min(value + 1, 2 ** width - 1)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 4), st.data())
def test_insert_then_delete_keeps_a_linear_order(n, data):
    perm = data.draw(st.permutations(range(n)))
    marked = data.draw(st.sets(st.integers(0, n)))
    m = Structure(ORD, n, {"<": linear_order(perm)})
    grown = apply_insert(m, Dialect.RLO)
    grown = grown.replace("P", {(e,) for e in marked})
    shrunk = apply_delete(parse_rule("D(x) :- P(x)"), grown)
    assert shrunk.domain_size == n + 1 - len(marked)
    assert validate_order(shrunk).ok
