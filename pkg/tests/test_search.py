import itertools

import pytest

from conftest import FIXTURES
from relog.errors import BudgetExceeded, UnsupportedInput, VocabularyConflict
from relog.execution import Executor, Verdict, run
from relog.logic import LreSentence, parse_formula
from relog.model import Structure, Vocabulary, enumerate_structures, relation_to_int
from relog.search import (
    SearchBudget,
    SearchStatus,
    Trace,
    branch,
    build_pair_structure,
    compute_construction,
    replay,
    search_accepting,
    verify_trace,
)
from relog.syntax import compile_lre_to_rl, parse_program

PV = Vocabulary.of(("P", 1))
B10 = SearchBudget(max_steps_per_branch=10)


def prog(body, tapes=("X_true 0",)):
    return parse_program("program NRL\n" + "".join(f"tape {t}\n" for t in tapes) + body)


def load(name):
    return parse_program((FIXTURES / "programs" / name).read_text())


def at(p, m, line=None):
    c = Executor(p).initial(m)
    if line is not None:
        c = type(c)(c.structure, line, c.steps)
    return c


class TestBranch:
    def test_guess_on_one_point(self):
        p = prog("1: guess X\n", ("X_true 0", "X 1"))
        choices = branch(p, at(p, Structure(PV, 1)))
        assert [c.index for c in choices] == [0, 1]
        ex = Executor(p)
        cp = ex.choice_point(at(p, Structure(PV, 1)))
        assert [o.relation for o in cp.options] == [frozenset(), frozenset({(0,)})]

    def test_goto_duplicates_collapse(self):
        p = prog("1: goto? (3, 3, 5)\n3: I\n5: I\n")
        assert [c.label for c in branch(p, at(p, Structure(PV, 0)))] == [3, 5]

    def test_empty_goto_is_a_halt(self):
        p = load("dead_end.rl")
        choices = branch(p, at(p, Structure(PV, 0)))
        assert len(choices) == 1 and choices[0].index is None

    def test_deterministic_line_has_no_choices(self):
        p = load("accept.rl")
        assert branch(p, at(p, Structure(PV, 1))) == []

    @pytest.mark.parametrize("n,k", [(1, 1), (2, 1), (1, 2), (4, 1), (2, 2)])
    def test_guess_options_are_increasing_numerals(self, n, k):
        p = prog("1: guess X\n", ("X_true 0", f"X {k}"))
        cp = Executor(p).choice_point(at(p, Structure(PV, n)))
        numerals = [relation_to_int(o.relation, n, k) for o in cp.options]
        assert numerals == list(range(2 ** (n ** k)))

    def test_guess_overflow(self):
        p = prog("1: guess X\n", ("X_true 0", "X 2"))
        with pytest.raises(BudgetExceeded):
            branch(p, at(p, Structure(PV, 3)), SearchBudget(max_visited_configurations=100))


class TestSearchAccepting:
    def test_guess_x_true(self):
        for n in range(3):
            r = search_accepting(load("guess_accept.rl"), Structure(PV, n), B10)
            assert r.accepted and r.trace.steps == ((1, 1),)

    def test_dead_end(self):
        r = search_accepting(load("dead_end.rl"), Structure(PV, 1), B10)
        assert r.status is SearchStatus.NOT_FOUND and r.stats.exhaustive

    def test_loop_is_not_a_rejection(self):
        r = search_accepting(load("loop.rl"), Structure(PV, 1), B10)
        # the visited set closes the loop, so the space is exhausted without acceptance
        assert not r.accepted and r.stats.visited == 1

    def test_growth_is_truncated(self):
        p = prog("1: I\n2: goto 1\n")
        r = search_accepting(p, Structure(PV, 0), SearchBudget(max_domain_size=3))
        assert not r.accepted and r.stats.truncated_domain and not r.stats.exhaustive

    def test_compiled_program_agrees_with_run(self):
        s = LreSentence("Y", parse_formula("exists2 X:1. exists x. Y(x) & X(x)"))
        p = compile_lre_to_rl(s)
        for m in itertools.chain.from_iterable(enumerate_structures(PV, n) for n in range(3)):
            r = run(p, m, 200)
            found = search_accepting(p, m, SearchBudget(max_steps_per_branch=200))
            assert found.accepted == (r.verdict is Verdict.ACCEPTED)
            assert found.structure == r.structure

    def test_deterministic_fixtures_agree_with_run(self):
        for name, fuel in [("accept.rl", 5), ("reject.rl", 5), ("conditioned.rl", 40)]:
            for m in enumerate_structures(PV, 2):
                r = run(load(name), m, fuel)
                found = search_accepting(load(name), m, SearchBudget(max_steps_per_branch=fuel))
                assert found.accepted == (r.verdict is Verdict.ACCEPTED), (name, m)

    def test_first_witness_is_shortest(self):
        p = prog("1: goto? (2, 4)\n2: I\n3: goto 5\n4: goto 5\n5: X_true :- true\n")
        r = search_accepting(p, Structure(PV, 0), B10)
        # via line 4 takes three steps, via line 2 takes four
        assert r.trace.steps == ((1, 1), (4, None), (5, None))
        assert r.structure.domain_size == 0

    def test_ties_prefer_the_first_target(self):
        p = prog("1: goto? (2, 3)\n2: goto 4\n3: goto 4\n4: X_true :- true\n")
        r = search_accepting(p, Structure(PV, 0), B10)
        assert r.trace.steps == ((1, 0), (2, None), (4, None))


class TestConstruction:
    def test_insert_then_accept(self):
        p = prog("1: I\n2: X_true :- true\n")
        m = Structure(PV, 1, {"P": {(0,)}})
        res = compute_construction(p, m, B10)
        assert res.outputs == {Structure(PV, 2, {"P": {(0,)}})}

    def test_two_branches(self):
        m = Structure(PV, 1)
        res = compute_construction(load("two_branch.rl"), m, B10)
        assert res.outputs == {m, Structure(PV, 2)}

    def test_no_acceptance(self):
        res = compute_construction(load("reject.rl"), Structure(PV, 2), B10)
        assert res.pairs == {}

    def test_every_witness_replays(self):
        p = prog("1: guess Q\n2: P(x) :- P(x) | Q(x)\n3: goto? (4, 5)\n4: I\n5: X_true :- true\n",
                 ("X_true 0", "Q 1"))
        for m in enumerate_structures(PV, 2):
            res = compute_construction(p, m, B10)
            assert res.outputs
            for a, out, trace in res:
                assert a == m and verify_trace(p, m, out, trace)
                assert replay(p, m, trace).structure == out

    def test_guess_outputs_are_upward_closed(self):
        p = prog("1: guess Q\n2: P(x) :- P(x) | Q(x)\n3: X_true :- true\n", ("X_true 0", "Q 1"))
        m = Structure(PV, 2, {"P": {(1,)}})
        outs = compute_construction(p, m, B10).outputs
        assert outs == {Structure(PV, 2, {"P": {(1,)}}), Structure(PV, 2, {"P": {(0,), (1,)}})}

    def test_budget_monotonicity(self):
        p = prog("1: goto? (2, 4)\n2: I\n3: goto 1\n4: X_true :- true\n")
        m = Structure(PV, 0)
        previous = set()
        for steps, dom in [(2, 1), (4, 1), (4, 2), (8, 3), (20, 5)]:
            outs = compute_construction(p, m, SearchBudget(steps, dom)).outputs
            assert previous <= outs
            previous = outs
        # an output of size k needs 3k + 2 steps
        assert {o.domain_size for o in previous} == set(range(6))

    def test_forged_trace_fails(self):
        m = Structure(PV, 1)
        assert not verify_trace(load("two_branch.rl"), m, Structure(PV, 5), Trace(((1, 1), (3, None))))


class TestPairStructure:
    def test_singletons(self):
        a = Structure(PV, 1, {"P": {(0,)}})
        pair = build_pair_structure(a, Structure(PV, 1), side="In")
        assert pair.domain_size == 2
        assert pair["Sim"] == {(0, 0), (1, 1)}
        assert pair["In"] == {(0,)} and pair["P"] == {(0,)}

    def test_empty(self):
        pair = build_pair_structure(Structure(PV, 0), Structure(PV, 0), side="In")
        assert pair.domain_size == 0 and pair["Sim"] == frozenset()

    def test_two_and_one(self):
        v = Vocabulary.of(("E", 2))
        a = Structure(v, 2, {"E": {(0, 1)}})
        b = Structure(v, 1, {"E": {(0, 0)}})
        pair = build_pair_structure(a, b)
        assert pair["Sim"] == {(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)}
        assert pair["P"] == {(0,), (1,)}
        assert pair["E"] == {(0, 1), (2, 2)}

    def test_collision(self):
        with pytest.raises(VocabularyConflict):
            build_pair_structure(Structure(PV, 1), Structure(PV, 1))

    def test_vocabularies_must_match(self):
        with pytest.raises(VocabularyConflict):
            build_pair_structure(Structure(PV, 1), Structure(Vocabulary.of(("E", 2)), 1))

    def test_nullary_rejected(self):
        v = Vocabulary.of(("Q", 0))
        with pytest.raises(UnsupportedInput):
            build_pair_structure(Structure(v, 1), Structure(v, 1))


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        SearchBudget(max_steps_per_branch=0)
