import pytest

from oracles import holds, increment_reference
from relog.errors import BudgetExceeded, EvaluationError, ParseError, UnsupportedInput
from relog.logic import (
    Atom,
    Budget,
    Exists2,
    LreSentence,
    LreStatus,
    builtin_max_formula,
    builtin_step_formula,
    collapse_eso,
    defined_relation,
    eval_eso,
    eval_fo,
    eval_lre_bounded,
    format_formula,
    free_variables,
    is_eso,
    parse_formula,
    step_relation,
)
from relog.model import Structure, Vocabulary, enumerate_structures, int_to_relation, linear_order

F = parse_formula


def ordered(n, extra=(), **rels):
    v = Vocabulary.of(("<", 2), *extra, order="<")
    return Structure(v, n, {"<": linear_order(range(n)), **rels})


class TestParser:
    @pytest.mark.parametrize(
        "text",
        [
            "true",
            "false",
            "R(x,y)",
            "x=y",
            "x<y",
            "!P(x) & Q(x) | R(x,x) -> S(x)",
            "exists x. forall y. x<y | x=y",
            "exists2 Z:2. forall x. Z(x,x)",
            "!(P(x) | Q(x))",
            "(exists x. P(x)) & Q(y)",
            "P(x) -> Q(x) -> R(x,x)",
            "(P(x) -> Q(x)) -> R(x,x)",
            "X_true",
        ],
    )
    def test_print_parse_round_trip(self, text):
        f = F(text)
        assert F(format_formula(f)) == f

    def test_precedence(self):
        assert F("!a & b | c -> d") == F("(((!a) & b) | c) -> d")
        assert F("exists x. P(x) & Q(x)") == F("exists x. (P(x) & Q(x))")

    def test_unicode_aliases(self):
        assert F("¬P(x) ∧ ⊤ ∨ ⊥") == F("!P(x) & true | false")

    @pytest.mark.parametrize("text", ["P(x", "exists . P(x)", "x <", "exists2 Z. P(x)", "& P(x)"])
    def test_errors(self, text):
        with pytest.raises(ParseError):
            F(text)


class TestFirstOrder:
    def test_examples(self):
        m = ordered(2)
        assert eval_fo(F("exists y. x<y"), m, {"x": 0})
        assert not eval_fo(F("exists y. x<y"), m, {"x": 1})
        assert eval_fo(F("x=x"), m, {"x": 1})
        empty = Structure(Vocabulary(), 0)
        assert not eval_fo(F("exists x. true"), empty)
        assert eval_fo(F("forall x. false"), empty)

    def test_unbound_variable(self):
        with pytest.raises(EvaluationError):
            eval_fo(F("P(x)"), Structure(Vocabulary.of(("P", 1)), 1))

    def test_unknown_symbol(self):
        with pytest.raises(EvaluationError):
            eval_fo(F("exists x. Q(x)"), Structure(Vocabulary.of(("P", 1)), 1))

    def test_rejects_second_order(self):
        with pytest.raises(EvaluationError):
            eval_fo(F("exists2 X:1. true"), Structure(Vocabulary(), 1))

    def test_free_variables(self):
        assert free_variables(F("exists y. R(x,y) & z=z")) == {"x", "z"}

    def test_defined_relation_repeated_head(self):
        m = Structure(Vocabulary.of(("X", 2)), 2)
        assert defined_relation(F("true"), ("x", "x"), m) == {(0, 0), (1, 1)}


class TestEso:
    def test_examples(self):
        assert eval_eso(F("exists2 Z:1. forall x. Z(x)"), Structure(Vocabulary(), 2))
        assert not eval_eso(
            F("exists2 Z:1. (exists x. Z(x)) & exists x. !Z(x)"), Structure(Vocabulary(), 1)
        )
        linear = "exists2 Z:2. (forall x. !Z(x,x)) & (forall x. forall y. x=y | Z(x,y) | Z(y,x)) " \
                 "& forall x. forall y. forall z. Z(x,y) & Z(y,z) -> Z(x,z)"
        assert eval_eso(F(linear), Structure(Vocabulary(), 2))

    def test_counts_strict_orders_by_enumeration(self):
        # exactly two of the 16 binary relations on two points are strict linear orders
        body = F("(forall x. !Z(x,x)) & (forall x. forall y. x=y | Z(x,y) | Z(y,x)) "
                 "& forall x. forall y. forall z. Z(x,y) & Z(y,z) -> Z(x,z)")
        v = Vocabulary.of(("Z", 2))
        count = sum(
            eval_fo(body, Structure(v, 2, {"Z": int_to_relation(i, 2, 2)})) for i in range(16)
        )
        assert count == 2

    def test_budget(self):
        f = F("exists2 Z:2. false")
        with pytest.raises(BudgetExceeded):
            eval_eso(f, Structure(Vocabulary(), 3), budget=100)
        b = Budget(1000)
        assert not eval_eso(f, Structure(Vocabulary(), 3), budget=b)
        assert b.used == 512

    def test_polarity(self):
        assert is_eso(F("(exists2 X:1. X(x)) & exists2 Y:1. Y(x)"))
        assert not is_eso(F("!exists2 X:1. true"))

    def test_agrees_with_reference_on_small_models(self):
        v = Vocabulary.of(("P", 1), ("E", 2))
        fs = [
            F("exists2 X:1. forall x. P(x) -> X(x)"),
            F("exists2 X:1. (forall x. forall y. E(x,y) -> (X(x) -> !X(y))) & exists x. X(x)"),
            F("exists2 X:2. forall x. exists y. X(x,y) & !E(x,y)"),
        ]
        for n in range(3):
            for m in enumerate_structures(v, n):
                for f in fs:
                    assert eval_eso(f, m) == holds(f, m)


COLLAPSE_FIXTURES = [
    "exists2 X:1. exists2 Y:1. exists a. exists b. X(a) & Y(b)",
    "exists2 X:1. exists2 Y:1. forall a. X(a) & !Y(a)",
    "exists2 X:1. exists2 Y:1. forall a. X(a) -> Y(a)",
    "exists2 X:1. exists2 Y:2. forall a. X(a) -> Y(a,a)",
    "exists2 X:1. exists2 Y:1. exists a. !X(a) & !Y(a)",
    "exists2 X:1. exists2 Y:1. (forall a. !X(a)) & exists b. Y(b)",
    "exists2 X:2. exists2 Y:1. forall a. forall b. X(a,b) -> Y(b)",
    "exists2 X:1. exists2 Y:1. exists2 W:1. exists a. X(a) & !Y(a) & W(a)",
    "exists2 X:1. exists2 Y:1. forall a. P(a) -> (X(a) | Y(a))",
    "exists2 X:1. exists2 Y:1. forall a. X(a) & Y(a) -> P(a)",
    "exists2 X:1. exists2 Y:1. (exists a. X(a) & P(a)) & forall a. Y(a) -> !P(a)",
]


class TestCollapse:
    def test_single_quantifier_identity(self):
        f = F("exists2 X:1. exists x. X(x)")
        c = collapse_eso(f)
        assert c.arity == 1 and c.body == F("exists x. Z(x)")

    def test_arity_is_sum(self):
        c = collapse_eso(F("exists2 X:1. exists2 Y:2. exists a. X(a) & Y(a,a)"))
        assert isinstance(c, Exists2) and c.arity == 3

    def test_nullary_rejected(self):
        with pytest.raises(UnsupportedInput):
            collapse_eso(F("exists2 X:0. X"))

    @pytest.mark.parametrize("text", COLLAPSE_FIXTURES)
    def test_preserves_truth(self, text):
        f = F(text)
        c = collapse_eso(f)
        v = Vocabulary.of(("P", 1))
        for n in (1, 2):
            for m in enumerate_structures(v, n):
                assert eval_eso(c, m) == holds(f, m), (text, m)


class TestStepAndMax:
    def test_examples(self):
        m = ordered(2, (("Z", 1),), Z=set())
        assert step_relation(m, "Z", 1) == {(1,)}
        assert eval_fo(builtin_max_formula("Z", 1), m.replace("Z", {(0,), (1,)}))
        assert not eval_fo(builtin_max_formula("Z", 1), m.replace("Z", {(0,)}))

    @pytest.mark.parametrize("n,k", [(1, 1), (2, 1), (1, 2), (3, 1)])
    def test_exhaustive_small(self, n, k):
        base = ordered(n, (("Z", k),))
        for value in range(2 ** (n ** k)):
            z = int_to_relation(value, n, k)
            got = step_relation(base.replace("Z", z), "Z", k)
            assert got == increment_reference(z, n, k)

    def test_uses_the_given_order_not_element_names(self):
        v = Vocabulary.of(("<", 2), ("Z", 1), order="<")
        m = Structure(v, 2, {"<": {(1, 0)}, "Z": set()})
        # element 1 is least, so it is the most significant bit
        assert step_relation(m, "Z", 1) == {(0,)}

    def test_needs_order(self):
        v = Vocabulary.of(("<", 2), ("Z", 1), order="<")
        with pytest.raises(EvaluationError):
            step_relation(Structure(v, 2, {"<": set()}), "Z", 1)

    def test_formula_is_first_order_with_head(self):
        xs, f = builtin_step_formula("Z", 2)
        assert free_variables(f) == set(xs) == {"x1", "x2"}


class TestLre:
    def test_examples(self):
        m = Structure(Vocabulary.of(("P", 1)), 2)
        s = LreSentence("Y", F("exists x. Y(x)"))
        r = eval_lre_bounded(s, m, 1)
        assert r.accepted and r.extension == 1
        assert eval_lre_bounded(LreSentence("Y", F("false")), m, 3).status is LreStatus.NOT_FOUND
        r = eval_lre_bounded(LreSentence("Y", F("forall x. !Y(x)")), m, 0)
        assert r.accepted and r.extension == 0

    def test_budget_is_reported_separately(self):
        s = LreSentence("Y", F("exists2 X:2. false"))
        r = eval_lre_bounded(s, Structure(Vocabulary(), 3), 2, budget=600)
        assert r.status is LreStatus.BUDGET_EXCEEDED

    def test_fresh_points_extend_order(self):
        s = LreSentence("Y", F("exists x. exists y. Y(y) & x<y"))
        r = eval_lre_bounded(s, ordered(1), 1)
        assert r.accepted and r.extension == 1

    @pytest.mark.parametrize(
        "text",
        ["exists2 X:1. exists x. !exists2 W:1. W(x)", "Y(x)", "exists x. Y(x,x)"],
    )
    def test_invalid_sentences(self, text):
        with pytest.raises(UnsupportedInput):
            LreSentence("Y", F(text))


def test_atom_prints_compactly():
    assert str(Atom("R", ("x", "y"))) == "R(x,y)"
