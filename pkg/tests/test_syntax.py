import pytest

from conftest import FIXTURES
from relog.errors import ParseError, UnsupportedInput, ValidationError
from relog.logic import FALSE, TRUE, Atom, LreSentence, parse_formula
from relog.syntax import (
    HALT_LINE,
    Case,
    Choose,
    Delete,
    Dialect,
    FlowControl,
    Goto,
    Guess,
    GuessGoto,
    Insert,
    Par,
    Transform,
    compile_lre_to_rl,
    compile_lre_to_rlo,
    format_program,
    format_rule,
    format_sentence,
    parse_program,
    parse_rule,
    parse_sentence,
    validate,
)

PROGRAMS = sorted((FIXTURES / "programs").glob("*.rl"))
Y_NONEMPTY = LreSentence("Y", parse_formula("exists2 X:1. exists x. Y(x)"))


def errors(text):
    return [d.message for d in validate(parse_program(text, validate_program=False)).errors]


class TestRules:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("X(x) :- !X(x)", Transform("X", ("x",), parse_formula("!X(x)"))),
            ("X(x,x) :- true", Transform("X", ("x", "x"), TRUE)),
            ("X_true :- false", Transform("X_true", (), FALSE)),
            ("X(x) :- P(x) if Q", Transform("X", ("x",), Atom("P", ("x",)), Atom("Q"))),
            ("I", Insert()),
            ("I :- Q", Insert(Atom("Q"))),
            ("D(x) :- P(x)", Delete("x", Atom("P", ("x",)))),
            ("goto 4", Goto(4)),
            ("goto 365 if X_true", Goto(365, Atom("X_true"))),
            ("365 :- X_true", Goto(365, Atom("X_true"))),
            ("guess X", Guess("X")),
            ("goto? (3, 3, 5)", GuessGoto((3, 3, 5))),
            ("goto? ()", GuessGoto(())),
        ],
    )
    def test_simple_rules(self, text, expected):
        assert parse_rule(text) == expected

    def test_case(self):
        r = parse_rule("case P => X(x) :- (A(x) | B(x)) | (exists y. Q(y) | R) => I | else => goto 3")
        assert isinstance(r, Case) and len(r.branches) == 2
        assert r.branches[0][1] == Transform("X", ("x",), parse_formula("A(x) | B(x)"))
        assert r.default == Goto(3)
        assert parse_rule(format_rule(r)) == r

    def test_flow_control_case(self):
        r = parse_rule("case Q => goto? (1) | else => goto? (2, 3)")
        assert isinstance(r, FlowControl)

    def test_singleton_case_degenerates(self):
        r = parse_rule("case else => I")
        assert r == Case((), Insert()) and r.select(lambda g: False) == Insert()

    def test_choose_and_par(self):
        r = parse_rule("par [ choose { I ; X(x) :- true } || case Q => guess X | else => I ]")
        assert isinstance(r, Par) and r.is_transformer
        assert isinstance(r.parts[0], Choose) and len(r.parts[0].options) == 2
        assert parse_rule(format_rule(r)) == r

    @pytest.mark.parametrize(
        "text",
        ["X(x) :-", "goto", "goto? (1,", "case P => I", "par [ I ", "frob", "choose { }", "I :- "],
    )
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_rule(text)


class TestPrograms:
    @pytest.mark.parametrize("path", PROGRAMS, ids=[p.stem for p in PROGRAMS])
    def test_round_trip(self, path):
        p = parse_program(path.read_text(), validate_program=False)
        again = parse_program(format_program(p), validate_program=False)
        assert again == p

    def test_binary_line_numbers(self):
        p = parse_program((FIXTURES / "programs" / "two_branch.rl").read_text())
        text = format_program(p, binary_numbers=True)
        assert text.splitlines()[2:] == ["1: goto? (10,11)", "10: I", "11: X_true :- true"]

    def test_header_and_labels(self):
        p = parse_program((FIXTURES / "programs" / "all_rules.rl").read_text())
        assert p.dialect is Dialect.GRL and p.agents == 2
        assert [ln.label for ln in p.lines] == ["G"] * 6 + ["A", "G", "A"]

    def test_duplicate_line(self):
        with pytest.raises(ParseError):
            parse_program("program RL\ntape X_true 0\n1: I\n1: I\n")

    def test_execution_order_is_numeric(self):
        p = parse_program("program RL\ntape X_true 0\n5: I\n2: I\n")
        assert p.first_line == 2 and p.next_line(2) == 5 and p.next_line(5) is None

    def test_parse_raises_with_diagnostics(self):
        with pytest.raises(ValidationError) as info:
            parse_program((FIXTURES / "programs" / "rlo_guess.rl").read_text())
        # diagnostics cite the source line, not the rule number
        assert "line 4" in str(info.value)


class TestValidate:
    def test_free_variable_mismatch(self):
        msgs = errors((FIXTURES / "programs" / "bad_freevars.rl").read_text())
        assert any("free variables" in m for m in msgs)

    def test_missing_x_true(self):
        assert any("X_true" in m for m in errors((FIXTURES / "programs" / "no_xtrue.rl").read_text()))

    def test_dialect_gating(self):
        assert errors("program RLO\ntape X_true 0\ntape X 1\n1: guess X\n")
        assert errors("program RL\ntape X_true 0\n1: D(x) :- true\n")
        assert errors("program RL\ntape X_true 0\n1: I :- X_true\n")
        assert errors("program RLO\ntape X_true 0\n1: X_true :- exists2 Z:1. true\n")
        assert not errors("program NRL\ntape X_true 0\n1: I :- X_true\n")

    def test_eso_polarity(self):
        assert errors("program RL\ntape X_true 0\n1: X_true :- !exists2 Z:1. true\n")

    def test_delete_needs_one_free_variable(self):
        assert errors("program NRL\ntape X_true 0\n1: D(x) :- x=y\n")

    def test_guards_are_sentences(self):
        assert errors("program RL\ntape X_true 0\n1: goto 1 if P(x)\n")

    def test_grl_width(self):
        text = "program GRL agents 3\ntape X_true 0\n1: A: par [ I || I ]\n"
        assert any("3 agents" in m for m in errors(text))

    def test_missing_target_is_a_warning(self):
        report = validate(compile_lre_to_rlo(Y_NONEMPTY))
        assert report.ok
        assert [d.line for d in report.warnings] == [2]
        assert str(HALT_LINE) in report.warnings[0].message


class TestCompilers:
    def test_rlo_template(self):
        p = compile_lre_to_rlo(Y_NONEMPTY)
        assert p.dialect is Dialect.RLO
        assert [ln.number for ln in p.lines] == list(range(1, 10))
        rules = [ln.rule for ln in p.lines]
        assert rules[1] == Goto(365, Atom("X_true"))
        assert rules[2].target == 6 and rules[4] == Goto(1) and rules[5] == Insert()
        assert rules[7] == Transform("Z", ("x1",), FALSE) and rules[8] == Goto(1)
        assert dict(p.tapes)["Z"] == 1

    def test_rlo_arity_from_collapse(self):
        s = LreSentence("Y", parse_formula("exists2 X:1. exists2 W:2. exists x. X(x) & W(x,x)"))
        assert dict(compile_lre_to_rlo(s).tapes)["Z"] == 3

    def test_rl_template(self):
        p = compile_lre_to_rl(Y_NONEMPTY)
        assert p.dialect is Dialect.RL and len(p.lines) == 6
        assert {name for name, _ in p.tapes} == {"X_true", "X_domain", "Y"}
        assert isinstance(p.lines[3].rule, Insert)
        report = validate(p)
        assert report.ok and len(report.warnings) == 1

    def test_fresh_names_avoid_the_sentence(self):
        s = LreSentence("Y", parse_formula("exists2 Z:1. exists x. Z(x) & X_domain(x)"))
        p = compile_lre_to_rl(s)
        assert "X_domain" not in dict(p.tapes)
        assert validate(compile_lre_to_rlo(s)).ok

    def test_compiled_programs_round_trip(self):
        for p in (compile_lre_to_rlo(Y_NONEMPTY), compile_lre_to_rl(Y_NONEMPTY)):
            assert parse_program(format_program(p)) == p

    def test_fixture_texts_match_compilers(self):
        rlo = parse_program((FIXTURES / "programs" / "lre_rlo.rl").read_text())
        rl = parse_program((FIXTURES / "programs" / "lre_rl.rl").read_text())
        assert rlo == compile_lre_to_rlo(Y_NONEMPTY)
        assert rl == compile_lre_to_rl(Y_NONEMPTY)

    def test_x_true_in_sentence(self):
        with pytest.raises(UnsupportedInput):
            compile_lre_to_rl(LreSentence("Y", parse_formula("exists x. Y(x) & X_true")))


class TestSentenceFiles:
    def test_parse_and_print(self):
        s = parse_sentence((FIXTURES / "sentences" / "two_sets.lre").read_text())
        assert s.witness == "Y" and len(s.prefix) == 2
        assert parse_sentence(format_sentence(s)) == s

    def test_missing_formula(self):
        with pytest.raises(ParseError):
            parse_sentence("witness Y\n")
