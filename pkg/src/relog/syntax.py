"""Rules, programs, the ``.rl`` text format, validation and the L_RE compilers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import ParseError, UnsupportedInput, ValidationError
from .logic import (
    FALSE,
    TRUE,
    Atom,
    Bottom,
    Exists,
    Formula,
    FormulaParser,
    LreSentence,
    Not,
    Or,
    Top,
    atom_arities,
    builtin_max_formula,
    builtin_step_formula,
    collapse_eso,
    eso_prefix,
    format_formula,
    free_variables,
    fresh_name,
    is_eso,
    is_first_order,
    parse_formula,
    relation_names,
    tokenize,
)


class Dialect(enum.Enum):
    RLO = "RLO"
    RL = "RL"
    NRL = "NRL"
    GRL = "GRL"


# ---------------------------------------------------------------------------
# rules

@dataclass(frozen=True)
class Transform:
    """``X(x1..xk) :- body``, optionally guarded by a sentence."""

    head: str
    vars: tuple[str, ...]
    body: Formula
    guard: Formula | None = None


@dataclass(frozen=True)
class Insert:
    guard: Formula | None = None


@dataclass(frozen=True)
class Delete:
    var: str
    body: Formula
    guard: Formula | None = None


@dataclass(frozen=True)
class Goto:
    """Jump to ``target`` when ``guard`` holds; an unconditional jump has guard ``true``."""

    target: int
    guard: Formula = TRUE


@dataclass(frozen=True)
class Guess:
    symbol: str


@dataclass(frozen=True)
class GuessGoto:
    targets: tuple[int, ...]


@dataclass(frozen=True)
class Case:
    """First branch whose guard holds selects its rule, else ``default``."""

    branches: tuple[tuple[Formula, "Rule"], ...]
    default: "Rule"

    def select(self, holds) -> "Rule":
        for guard, rule in self.branches:
            if holds(guard):
                return rule
        return self.default

    def rules(self) -> tuple["Rule", ...]:
        return tuple(r for _, r in self.branches) + (self.default,)


@dataclass(frozen=True)
class FlowControl:
    """A ``case`` whose alternatives are all nondeterministic jumps."""

    branches: tuple[tuple[Formula, GuessGoto], ...]
    default: GuessGoto

    def select(self, holds) -> GuessGoto:
        for guard, rule in self.branches:
            if holds(guard):
                return rule
        return self.default

    def rules(self) -> tuple[GuessGoto, ...]:
        return tuple(r for _, r in self.branches) + (self.default,)


@dataclass(frozen=True)
class Choose:
    """Nondeterministic transformer: one of ``options`` is picked and run."""

    options: tuple[Case, ...]


@dataclass(frozen=True)
class Par:
    """Parallel rule (components are cases) or parallel transformer (components choose)."""

    parts: tuple[Union[Case, Choose], ...]

    @property
    def is_transformer(self) -> bool:
        return any(isinstance(p, Choose) for p in self.parts)


SimpleRule = Union[Transform, Insert, Delete, Goto, Guess, GuessGoto]
Rule = Union[SimpleRule, Case, FlowControl, Choose, Par]
SIMPLE = (Transform, Insert, Delete, Goto, Guess, GuessGoto)
TRANSFORMERS = (Transform, Insert, Delete, Guess)


@dataclass(frozen=True)
class Line:
    number: int
    rule: Rule
    label: str | None = None


@dataclass(frozen=True)
class Program:
    dialect: Dialect
    tapes: tuple[tuple[str, int], ...]
    lines: tuple[Line, ...]
    agents: int | None = None
    _by_number: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _numbers: tuple = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        lines = tuple(sorted(self.lines, key=lambda ln: ln.number))
        object.__setattr__(self, "lines", lines)
        object.__setattr__(self, "tapes", tuple(tuple(t) for t in self.tapes))
        object.__setattr__(self, "_by_number", {ln.number: ln for ln in lines})
        object.__setattr__(self, "_numbers", tuple(ln.number for ln in lines))

    @property
    def sorted(self) -> bool:
        return any(ln.label is not None for ln in self.lines)

    @property
    def first_line(self) -> int | None:
        return self._numbers[0] if self._numbers else None

    def has_line(self, number: int) -> bool:
        return number in self._by_number

    def line(self, number: int) -> Line:
        return self._by_number[number]

    def next_line(self, number: int) -> int | None:
        """Least line number greater than ``number``."""
        import bisect

        i = bisect.bisect_right(self._numbers, number)
        return self._numbers[i] if i < len(self._numbers) else None

    def __str__(self):
        return format_program(self)


# ---------------------------------------------------------------------------
# printing

def _f(f: Formula, no_bar: bool) -> str:
    return format_formula(f, no_bar)


def format_rule(rule: Rule, no_bar: bool = False, top: bool = True) -> str:
    if isinstance(rule, Transform):
        head = rule.head if not rule.vars else f"{rule.head}({','.join(rule.vars)})"
        text = f"{head} :- {_f(rule.body, no_bar)}"
        if rule.guard is not None:
            text += f" if {_f(rule.guard, no_bar)}"
        return text
    if isinstance(rule, Insert):
        return "I" if rule.guard is None else f"I :- {_f(rule.guard, no_bar)}"
    if isinstance(rule, Delete):
        text = f"D({rule.var}) :- {_f(rule.body, no_bar)}"
        if rule.guard is not None:
            text += f" if {_f(rule.guard, no_bar)}"
        return text
    if isinstance(rule, Goto):
        if rule.guard == TRUE:
            return f"goto {rule.target}"
        return f"goto {rule.target} if {_f(rule.guard, no_bar)}"
    if isinstance(rule, Guess):
        return f"guess {rule.symbol}"
    if isinstance(rule, GuessGoto):
        return f"goto? ({','.join(map(str, rule.targets))})"
    if isinstance(rule, (Case, FlowControl)):
        if not top and isinstance(rule, Case) and not rule.branches:
            return format_rule(rule.default, no_bar=False, top=False)
        alts = [f"{_f(g, True)} => {format_rule(r, True, False)}" for g, r in rule.branches]
        alts.append(f"else => {format_rule(rule.default, True, False)}")
        return "case " + " | ".join(alts)
    if isinstance(rule, Choose):
        return "choose { " + " ; ".join(format_rule(c, top=False) for c in rule.options) + " }"
    if isinstance(rule, Par):
        return "par [ " + " || ".join(format_rule(c, top=False) for c in rule.parts) + " ]"
    raise TypeError(f"not a rule: {rule!r}")


def format_program(p: Program, binary_numbers: bool = False) -> str:
    """Canonical text; ``binary_numbers`` writes line numbers and targets in binary."""
    head = f"program {p.dialect.value}"
    if p.agents is not None:
        head += f" agents {p.agents}"
    out = [head]
    for name, arity in p.tapes:
        out.append(f"tape {name} {arity}")
    for ln in p.lines:
        label = f"{ln.label}: " if ln.label else ""
        rule_text = format_rule(ln.rule)
        number = str(ln.number)
        if binary_numbers:
            number = format(ln.number, "b")
            rule_text = format_rule(_binary_targets(ln.rule))
        out.append(f"{number}: {label}{rule_text}")
    return "\n".join(out) + "\n"


class _Bin(int):
    def __str__(self):
        return format(int(self), "b")


def _binary_targets(rule: Rule) -> Rule:
    if isinstance(rule, Goto):
        return Goto(_Bin(rule.target), rule.guard)
    if isinstance(rule, GuessGoto):
        return GuessGoto(tuple(_Bin(t) for t in rule.targets))
    if isinstance(rule, (Case, FlowControl)):
        return type(rule)(
            tuple((g, _binary_targets(r)) for g, r in rule.branches), _binary_targets(rule.default)
        )
    if isinstance(rule, Choose):
        return Choose(tuple(_binary_targets(c) for c in rule.options))
    if isinstance(rule, Par):
        return Par(tuple(_binary_targets(c) for c in rule.parts))
    return rule


# ---------------------------------------------------------------------------
# parsing

class _RuleParser(FormulaParser):
    def rule(self) -> Rule:
        tok = self.peek()
        if tok == "case":
            return self.case(top=True)
        if tok == "par":
            return self.par()
        if tok == "choose":
            return self.choose()
        return self.simple(no_bar=False)

    def simple(self, no_bar: bool) -> SimpleRule:
        tok = self.peek()
        if tok is None:
            raise self.error("empty rule")
        if tok == "I" and self.peek(1) in (None, ":-", ":", "|", "||", ";", "]", "}"):
            self.i += 1
            if self.accept(":"):
                self.expect("-")
                return Insert(self.formula(no_bar))
            return Insert()
        if tok == "D" and self.peek(1) == "(":
            self.i += 2
            var = self.ident()
            self.expect(")")
            self.arrow()
            body = self.formula(no_bar)
            return Delete(var, body, self.guard(no_bar))
        if tok == "goto":
            self.i += 1
            if self.accept("?"):
                self.expect("(")
                targets = []
                if not self.accept(")"):
                    targets.append(self.number())
                    while self.accept(","):
                        targets.append(self.number())
                    self.expect(")")
                return GuessGoto(tuple(targets))
            target = self.number()
            guard = self.guard(no_bar)
            return Goto(target, TRUE if guard is None else guard)
        if tok == "guess":
            self.i += 1
            return Guess(self.ident())
        if tok.isdigit():
            target = self.number()
            if self.peek() == ":":
                self.arrow()
                return Goto(target, self.formula(no_bar))
            return Goto(target)
        head = self.ident()
        vars_: list[str] = []
        if self.accept("("):
            if not self.accept(")"):
                vars_.append(self.ident())
                while self.accept(","):
                    vars_.append(self.ident())
                self.expect(")")
        self.arrow()
        body = self.formula(no_bar)
        return Transform(head, tuple(vars_), body, self.guard(no_bar))

    def arrow(self):
        self.expect(":")
        self.expect("-")

    def guard(self, no_bar: bool) -> Formula | None:
        if self.accept("if"):
            return self.formula(no_bar)
        return None

    def case(self, top: bool) -> Case | FlowControl:
        self.expect("case")
        branches = []
        while True:
            if self.accept("else"):
                self.expect("=>")
                default = self.simple(no_bar=True)
                break
            g = self.formula(no_bar=True)
            self.expect("=>")
            branches.append((g, self.simple(no_bar=True)))
            self.expect("|")
        rules = [r for _, r in branches] + [default]
        if top and all(isinstance(r, GuessGoto) for r in rules):
            return FlowControl(tuple(branches), default)
        return Case(tuple(branches), default)

    def component(self) -> Case:
        if self.peek() == "case":
            return self.case(top=False)
        return Case((), self.simple(no_bar=False))

    def choose(self) -> Choose:
        self.expect("choose")
        self.expect("{")
        opts = [self.component()]
        while self.accept(";"):
            opts.append(self.component())
        self.expect("}")
        return Choose(tuple(opts))

    def par(self) -> Par:
        self.expect("par")
        self.expect("[")
        parts = [self.par_part()]
        while self.accept("||"):
            parts.append(self.par_part())
        self.expect("]")
        return Par(tuple(parts))

    def par_part(self):
        if self.peek() == "choose":
            return self.choose()
        return self.component()


# ':-' is split off before tokenizing; the formula lexer has no '-'.
def _split_arrow(text: str, line: int | None) -> list[str]:
    out = []
    for i, piece in enumerate(text.split(":-")):
        if i:
            out.extend([":", "-"])
        out.extend(tokenize(piece, line))
    return out


def parse_rule(text: str, line: int | None = None) -> Rule:
    p = _RuleParser(_split_arrow(text, line), line)
    r = p.rule()
    if not p.at_end():
        raise p.error(f"unexpected token {p.peek()!r}")
    return r


def parse_program(text: str, validate_program: bool = True) -> Program:
    """Parse ``.rl`` text; with ``validate_program`` errors raise :class:`ValidationError`."""
    p, line_of = _parse_program(text)
    if validate_program:
        report = validate(p, source_lines=line_of)
        if not report.ok:
            raise ValidationError(report.errors)
    return p


def validate_text(text: str) -> tuple[Program, "Report"]:
    """Parse and validate; diagnostics cite source-file lines."""
    p, line_of = _parse_program(text)
    return p, validate(p, source_lines=line_of)


def _parse_program(text: str) -> tuple[Program, dict[int, int]]:
    dialect = None
    agents = None
    tapes: list[tuple[str, int]] = []
    lines: list[Line] = []
    line_of: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        src = raw.split("#", 1)[0].strip()
        if not src:
            continue
        words = src.split()
        if words[0] == "program":
            if dialect is not None:
                raise ParseError("duplicate program header", lineno)
            if len(words) not in (2, 4) or (len(words) == 4 and words[2] != "agents"):
                raise ParseError("header must be 'program DIALECT [agents N]'", lineno)
            try:
                dialect = Dialect(words[1])
            except ValueError:
                raise ParseError(f"unknown dialect {words[1]!r}", lineno) from None
            if len(words) == 4:
                if not words[3].isdigit():
                    raise ParseError("agent count must be a number", lineno)
                agents = int(words[3])
            continue
        if words[0] == "tape":
            if len(words) != 3 or not words[2].isdigit():
                raise ParseError("tape declaration must be 'tape NAME ARITY'", lineno)
            tapes.append((words[1], int(words[2])))
            continue
        head, sep, rest = src.partition(":")
        if not sep or not head.strip().isdigit():
            raise ParseError(f"expected 'N: rule', found {src!r}", lineno)
        number = int(head)
        if number <= 0:
            raise ParseError("line numbers must be positive", lineno)
        if number in line_of:
            raise ParseError(f"duplicate line number {number} (first at line {line_of[number]})", lineno)
        line_of[number] = lineno
        rest = rest.strip()
        label = None
        if rest[:2] in ("A:", "G:") and not rest.startswith(("A:-", "G:-")):
            label, rest = rest[0], rest[2:].strip()
        rule = parse_rule(rest, lineno)
        lines.append(Line(number, rule, label))
    if dialect is None:
        raise ParseError("missing 'program DIALECT' header")
    return Program(dialect, tuple(tapes), tuple(lines), agents), line_of


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{self.severity}: {where}{self.message}"


@dataclass
class Report:
    diagnostics: list[Diagnostic]

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self):
        return self.ok


def iter_rules(rule: Rule) -> Iterator[Rule]:
    """The rule and every rule nested inside it."""
    yield rule
    if isinstance(rule, (Case, FlowControl)):
        for r in rule.rules():
            yield from iter_rules(r)
    elif isinstance(rule, Choose):
        for c in rule.options:
            yield from iter_rules(c)
    elif isinstance(rule, Par):
        for c in rule.parts:
            yield from iter_rules(c)


def rule_formulas(rule: Rule) -> Iterator[tuple[str, Formula]]:
    """(role, formula) pairs of a single, non-nested rule level."""
    if isinstance(rule, Transform):
        yield "body", rule.body
        if rule.guard is not None:
            yield "guard", rule.guard
    elif isinstance(rule, Insert) and rule.guard is not None:
        yield "guard", rule.guard
    elif isinstance(rule, Delete):
        yield "body", rule.body
        if rule.guard is not None:
            yield "guard", rule.guard
    elif isinstance(rule, Goto):
        yield "guard", rule.guard
    elif isinstance(rule, (Case, FlowControl)):
        for g, _ in rule.branches:
            yield "guard", g


def jump_targets(rule: Rule) -> set[int]:
    out = set()
    for r in iter_rules(rule):
        if isinstance(r, Goto):
            out.add(r.target)
        elif isinstance(r, GuessGoto):
            out.update(r.targets)
    return out


_NRL_SIMPLE = (Transform, Insert, Delete, Goto, Guess, GuessGoto)
_PAR_INNER = (Transform, Insert, Delete, Goto)


def _is_constant(f: Formula) -> bool:
    return isinstance(f, (Top, Bottom))


def validate(p: Program, source_lines: dict[int, int] | None = None) -> Report:
    diags: list[Diagnostic] = []
    src = source_lines or {}

    def err(msg, number=None):
        diags.append(Diagnostic("error", msg, src.get(number, number)))

    def warn(msg, number=None):
        diags.append(Diagnostic("warning", msg, src.get(number, number)))

    tape_arity: dict[str, int] = {}
    for name, arity in p.tapes:
        if name in tape_arity:
            err(f"tape predicate {name!r} declared twice")
        if arity < 0:
            err(f"tape predicate {name!r} has negative arity")
        tape_arity[name] = arity
    if tape_arity.get("X_true") != 0:
        err("program must declare 'tape X_true 0'")

    sorted_ = p.sorted
    if p.dialect is Dialect.GRL and sorted_:
        if p.agents is None or p.agents < 1:
            err("sorted GRL needs 'agents N' in the header")
    elif p.agents is not None and p.dialect is not Dialect.GRL:
        err("'agents' is only meaningful for GRL programs")

    for ln in p.lines:
        n = ln.number
        rule = ln.rule
        if ln.number <= 0:
            err("line numbers must be positive", n)
        if ln.label is not None and p.dialect is not Dialect.GRL:
            err("A:/G: labels are only allowed in GRL", n)
        if sorted_ and ln.label is None:
            err("sorted GRL: every line needs an A: or G: label", n)

        _check_dialect(p, ln, err)

        for r in iter_rules(rule):
            for role, f in rule_formulas(r):
                if p.dialect is Dialect.RLO and not is_first_order(f):
                    err(f"RLO allows first-order formulas only ({role})", n)
                elif not is_eso(f):
                    err(f"second-order quantifier in negative position ({role})", n)
                if role == "guard" and free_variables(f):
                    err(f"guard must be a sentence, has free {sorted(free_variables(f))}", n)
                for name, arities in atom_arities(f).items():
                    if name in tape_arity and arities - {tape_arity[name]}:
                        err(f"tape predicate {name} used with arity {sorted(arities)}", n)
            if isinstance(r, Transform):
                fv = free_variables(r.body)
                if fv != set(r.vars) and not _is_constant(r.body):
                    err(
                        f"free variables of the body {sorted(fv)} must be exactly the head "
                        f"variables {sorted(set(r.vars))}",
                        n,
                    )
                if r.head in tape_arity and tape_arity[r.head] != len(r.vars):
                    err(f"head {r.head} has arity {len(r.vars)}, declared {tape_arity[r.head]}", n)
            elif isinstance(r, Delete):
                fv = free_variables(r.body)
                if fv != {r.var} and not _is_constant(r.body):
                    err(f"deletion body must have exactly the free variable {r.var}", n)
        for t in sorted(jump_targets(rule)):
            if t <= 0:
                err(f"jump target {t} is not a positive line number", n)
            elif not p.has_line(t):
                warn(f"jump target {t} is not a line; taking it halts the computation", n)
    return Report(diags)


def _check_dialect(p: Program, ln: Line, err) -> None:
    rule, n, d = ln.rule, ln.number, p.dialect

    def conditioned(r):
        return getattr(r, "guard", None) is not None and not isinstance(r, Goto)

    if d in (Dialect.RLO, Dialect.RL):
        if not isinstance(rule, (Transform, Insert, Goto)):
            err(f"{type(rule).__name__} is not allowed in {d.value}", n)
        elif conditioned(rule):
            err(f"conditional transformers are not allowed in {d.value}", n)
        return

    def simple_ok(r, allowed):
        if not isinstance(r, allowed):
            err(f"{type(r).__name__} is not allowed here", n)

    if d is Dialect.NRL:
        if isinstance(rule, _NRL_SIMPLE):
            return
        if isinstance(rule, (Case, FlowControl)):
            for r in rule.rules():
                simple_ok(r, _NRL_SIMPLE)
            return
        if isinstance(rule, Par) and not rule.is_transformer:
            for c in rule.parts:
                for r in c.rules():
                    simple_ok(r, _PAR_INNER)
            return
        err(f"{type(rule).__name__} is not allowed in NRL", n)
        return

    # GRL
    if ln.label == "A":
        if not isinstance(rule, Par):
            err("A-lines must be parallel transformers", n)
            return
        if p.agents is not None and len(rule.parts) != p.agents:
            err(f"A-line has {len(rule.parts)} components, program has {p.agents} agents", n)
        for part in rule.parts:
            cases = part.options if isinstance(part, Choose) else (part,)
            for c in cases:
                for r in c.rules():
                    simple_ok(r, TRANSFORMERS)
        return
    if ln.label == "G":
        if isinstance(rule, (FlowControl, GuessGoto)):
            return
        simple_ok(rule, TRANSFORMERS)
        return
    if isinstance(rule, (FlowControl,) + _NRL_SIMPLE):
        return
    if isinstance(rule, Case):
        for r in rule.rules():
            simple_ok(r, _NRL_SIMPLE)
        return
    if isinstance(rule, (Choose, Par)):
        cases = []
        if isinstance(rule, Choose):
            cases = list(rule.options)
        else:
            for part in rule.parts:
                cases.extend(part.options if isinstance(part, Choose) else (part,))
        for c in cases:
            for r in c.rules():
                simple_ok(r, _PAR_INNER + (Guess,))
        return
    err(f"{type(rule).__name__} is not allowed in GRL", n)


def check_program(p: Program) -> Program:
    report = validate(p)
    if not report.ok:
        raise ValidationError(report.errors)
    return p


# ---------------------------------------------------------------------------
# L_RE sentence files and compilers

def parse_sentence(text: str) -> LreSentence:
    """Read ``witness NAME`` and ``formula ...`` (the formula runs to end of file)."""
    witness = "Y"
    body = None
    lines = [ln.split("#", 1)[0] for ln in text.splitlines()]
    for i, ln in enumerate(lines):
        words = ln.split(None, 1)
        if not words:
            continue
        if words[0] == "witness":
            witness = words[1].strip()
        elif words[0] == "formula":
            rest = " ".join([words[1] if len(words) > 1 else ""] + lines[i + 1:])
            body = parse_formula(rest)
            break
        else:
            raise ParseError(f"unknown declaration {words[0]!r}", i + 1)
    if body is None:
        raise ParseError("missing 'formula' declaration")
    return LreSentence(witness, body)


def format_sentence(s: LreSentence) -> str:
    return f"witness {s.witness}\nformula {format_formula(s.body)}\n"


HALT_LINE = 365


def _tape_name(base: str, taken: set[str]) -> str:
    name = fresh_name(base, taken)
    taken.add(name)
    return name


def compile_lre_to_rlo(s: LreSentence, order: str = "<") -> Program:
    """The nine-line RLO program that searches ``Z`` and grows the domain.

    Line 1 tests the collapsed matrix, line 2 halts on success by jumping
    to the absent line 365, lines 3-5 count ``Z`` upward, lines 6-9 add a
    point, record it in the witness predicate and reset ``Z``.
    """
    taken = set(relation_names(s.body, free_only=False)) | {order}
    if "X_true" in taken:
        raise UnsupportedInput("sentence may not mention X_true")
    prefix, matrix = eso_prefix(s.body)
    if prefix:
        collapsed = collapse_eso(s.body, name=fresh_name("Z", taken))
        z, k, psi = collapsed.name, collapsed.arity, collapsed.body
    else:
        z, k, psi = fresh_name("Z", taken), 0, matrix
    taken.add(z)
    xs, step = builtin_step_formula(z, k, order)
    y = s.witness
    lines = [
        Line(1, Transform("X_true", (), psi)),
        Line(2, Goto(HALT_LINE, Atom("X_true"))),
        Line(3, Goto(6, builtin_max_formula(z, k))),
        Line(4, Transform(z, xs, step)),
        Line(5, Goto(1)),
        Line(6, Insert()),
        Line(7, Transform(y, ("x",), Or(Atom(y, ("x",)), Not(Exists("y", Atom(order, ("x", "y"))))))),
        Line(8, Transform(z, xs, FALSE)),
        Line(9, Goto(1)),
    ]
    tapes = (("X_true", 0), (y, 1), (z, k))
    return Program(Dialect.RLO, tapes, tuple(lines))


def compile_lre_to_rl(s: LreSentence) -> Program:
    """The six-line RL program: test the ESO body, else add a point and loop."""
    taken = set(relation_names(s.body, free_only=False))
    if "X_true" in taken:
        raise UnsupportedInput("sentence may not mention X_true")
    dom = _tape_name("X_domain", taken | {s.witness})
    y = s.witness
    lines = [
        Line(1, Transform("X_true", (), s.body)),
        Line(2, Goto(HALT_LINE, Atom("X_true"))),
        Line(3, Transform(dom, ("x",), parse_formula("x=x"))),
        Line(4, Insert()),
        Line(5, Transform(y, ("x",), Or(Atom(y, ("x",)), Not(Atom(dom, ("x",)))))),
        Line(6, Goto(1)),
    ]
    tapes = (("X_true", 0), (dom, 1), (y, 1))
    return Program(Dialect.RL, tapes, tuple(lines))
