"""Small-step execution of rule programs.

A configuration is a structure plus the line about to run.  Lines whose
rule needs a nondeterministic choice expose a :class:`ChoicePoint`; a
*resolver* (any callable taking the choice point and returning an option
index) decides.  Deterministic programs never consult the resolver.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import BudgetExceeded, RelogError, ResolverError, StructureError
from .logic import Budget, Formula, defined_relation, evaluate
from .model import Structure, all_tuples, pi_expand, validate_order
from .syntax import (
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
    Program,
    Transform,
    format_rule,
)


class HaltReason(str, enum.Enum):
    END_OF_PROGRAM = "end-of-program"
    MISSING_LINE = "jump-to-missing-line"
    DEADLOCK = "deadlock"
    EMPTY_GUESS = "guess-empty-tuple"


@dataclass(frozen=True)
class Configuration:
    structure: Structure
    line: int | None
    steps: int = 0

    @property
    def halted(self) -> bool:
        return self.line is None


@dataclass(frozen=True)
class Continue:
    config: Configuration


@dataclass(frozen=True)
class Halt:
    structure: Structure
    reason: HaltReason
    detail: str | None = None

    @property
    def accepted(self) -> bool:
        return self.structure.holds("X_true")


StepOutcome = Continue | Halt


@dataclass(frozen=True)
class Assign:
    """A guessed interpretation, resolved before execution."""

    symbol: str
    relation: frozenset


@dataclass(frozen=True)
class ChoicePoint:
    """A nondeterministic decision: ``options`` are in canonical order."""

    kind: str
    line: int
    options: tuple
    labels: tuple = ()

    def __len__(self):
        return len(self.options)


Resolver = Callable[[ChoicePoint], int]


# ---------------------------------------------------------------------------
# single rules

def apply_transform1(rule: Transform, m: Structure, budget: Budget | None = None) -> Structure:
    arity = m.vocabulary[rule.head].arity
    if arity != len(rule.vars):
        raise StructureError(f"{rule.head} has arity {arity}, rule head has {len(rule.vars)} variables")
    return m.replace(rule.head, defined_relation(rule.body, rule.vars, m, budget))


def apply_insert(m: Structure, dialect: Dialect | str = Dialect.RL) -> Structure:
    """Add a fresh point; RLO also makes it the new maximum of the distinguished order."""
    if Dialect(dialect) is Dialect.RLO:
        report = validate_order(m)
        if not report.ok:
            raise StructureError(f"insert needs a valid linear order ({report.violation})")
        return m.add_point(extend_order=True)
    return m.add_point()


def deletion_set(rule: Delete, m: Structure, budget: Budget | None = None) -> set[int]:
    return {t[0] for t in defined_relation(rule.body, (rule.var,), m, budget)}


def apply_delete(rule: Delete, m: Structure, budget: Budget | None = None) -> Structure:
    return m.delete(deletion_set(rule, m, budget))


def guess_options(m: Structure, symbol: str, limit: int | None = None) -> list[frozenset]:
    """Every interpretation of ``symbol`` in canonical numeral order."""
    k = m.vocabulary[symbol].arity
    tuples = all_tuples(m.domain_size, k)
    width = len(tuples)
    if limit is not None and (1 << width) > limit:
        raise BudgetExceeded(f"guessing {symbol} needs 2^{width} choices", "choices")
    return [
        frozenset(t for i, t in enumerate(tuples) if mask >> (width - 1 - i) & 1)
        for mask in range(1 << width)
    ]


def goto_options(rule: GuessGoto) -> list[int]:
    return list(dict.fromkeys(rule.targets))


# ---------------------------------------------------------------------------
# parallel rules

@dataclass(frozen=True)
class ParallelOutcome:
    structure: Structure
    jump: int | None = None
    deadlock: str | None = None


def apply_parallel(
    rules: Sequence,
    m_current: Structure,
    *,
    extend_order: bool = False,
    budget: Budget | None = None,
) -> ParallelOutcome:
    """Run already-selected rules simultaneously against ``m_current``.

    Transforms first, then the union of deletions, then one insertion per
    firing insert rule (in textual order); jumps are collected last.  Every
    guard and body reads ``m_current``.  A deadlock returns ``m_current``.
    """

    def holds(f: Formula | None) -> bool:
        return f is None or evaluate(f, m_current, budget=budget)

    updates: dict[str, frozenset] = {}
    for r in rules:
        if isinstance(r, Transform):
            if not holds(r.guard):
                continue
            rel = defined_relation(r.body, r.vars, m_current, budget)
            name = r.head
        elif isinstance(r, Assign):
            rel, name = r.relation, r.symbol
        else:
            continue
        if name in updates and updates[name] != rel:
            return ParallelOutcome(m_current, None, "transform")
        updates[name] = rel

    targets = [r.target for r in rules if isinstance(r, Goto) and holds(r.guard)]
    distinct = list(dict.fromkeys(targets))
    if len(distinct) >= 2:
        return ParallelOutcome(m_current, None, "jump")

    gone: set[int] = set()
    for r in rules:
        if isinstance(r, Delete) and holds(r.guard):
            gone |= deletion_set(r, m_current, budget)
    inserts = sum(1 for r in rules if isinstance(r, Insert) and holds(r.guard))

    m_new = m_current.replace_many(updates) if updates else m_current
    m_new = m_new.delete(gone)
    for _ in range(inserts):
        m_new = m_new.add_point(extend_order)
    return ParallelOutcome(m_new, distinct[0] if distinct else None, None)


# ---------------------------------------------------------------------------
# the executor

@dataclass
class Executor:
    """Steps one program; ``eso_budget`` is shared by every evaluation it performs."""

    program: Program
    eso_budget: Budget | None = None
    max_options: int | None = None

    @property
    def ordered(self) -> bool:
        return self.program.dialect is Dialect.RLO

    def holds(self, f: Formula | None, m: Structure) -> bool:
        return f is None or evaluate(f, m, budget=self.eso_budget)

    def rule_at(self, line: int):
        return self.program.line(line).rule

    # -- choices -----------------------------------------------------------
    def alternatives(self, part, m: Structure) -> list[tuple[object, object]]:
        """(label, resolved rule) pairs for one component of a parallel transformer."""
        cases = part.options if isinstance(part, Choose) else (part,)
        out = []
        for j, case in enumerate(cases):
            rule = case.select(lambda g: self.holds(g, m))
            if isinstance(rule, Guess):
                for i, rel in enumerate(guess_options(m, rule.symbol, self.max_options)):
                    out.append(((j, i), Assign(rule.symbol, rel)))
            else:
                out.append((j, rule))
        return out

    def joint_options(self, rule: Par, m: Structure) -> list[tuple[tuple, tuple]]:
        """(per-part labels, selected rules) for every combination of part choices."""
        per_part = [self.alternatives(p, m) for p in rule.parts]
        total = 1
        for alts in per_part:
            total *= len(alts)
        if self.max_options is not None and total > self.max_options:
            raise BudgetExceeded(f"{total} joint choices", "choices")
        return [
            (tuple(l for l, _ in combo), tuple(r for _, r in combo))
            for combo in itertools.product(*per_part)
        ]

    def choice_point(self, config: Configuration) -> ChoicePoint | None:
        line = config.line
        m = config.structure
        rule = self.rule_at(line)
        if isinstance(rule, (Case, FlowControl)):
            rule = rule.select(lambda g: self.holds(g, m))
        if isinstance(rule, Guess):
            opts = guess_options(m, rule.symbol, self.max_options)
            return ChoicePoint("guess", line, tuple(Assign(rule.symbol, r) for r in opts),
                               tuple(range(len(opts))))
        if isinstance(rule, GuessGoto):
            targets = goto_options(rule)
            if not targets:
                return None
            return ChoicePoint("goto", line, tuple(targets), tuple(targets))
        if isinstance(rule, Choose):
            alts = self.alternatives(rule, m)
            if len(alts) == 1 and not isinstance(alts[0][1], Assign):
                return None
            return ChoicePoint("choose", line, tuple(r for _, r in alts), tuple(l for l, _ in alts))
        if isinstance(rule, Par):
            joint = self.joint_options(rule, m)
            if len(joint) == 1:
                return None
            return ChoicePoint("joint", line, tuple(r for _, r in joint), tuple(l for l, _ in joint))
        return None

    # -- transitions ---------------------------------------------------------
    def _next(self, config: Configuration, m: Structure) -> StepOutcome:
        nxt = self.program.next_line(config.line)
        if nxt is None:
            return Halt(m, HaltReason.END_OF_PROGRAM)
        return Continue(Configuration(m, nxt, config.steps + 1))

    def _jump(self, config: Configuration, m: Structure, target: int) -> StepOutcome:
        if not self.program.has_line(target):
            return Halt(m, HaltReason.MISSING_LINE)
        return Continue(Configuration(m, target, config.steps + 1))

    def _simple(self, rule, config: Configuration, choice) -> StepOutcome:
        m = config.structure
        if isinstance(rule, Transform):
            if self.holds(rule.guard, m):
                m = apply_transform1(rule, m, self.eso_budget)
            return self._next(config, m)
        if isinstance(rule, Insert):
            if self.holds(rule.guard, m):
                m = apply_insert(m, Dialect.RLO if self.ordered else Dialect.RL)
            return self._next(config, m)
        if isinstance(rule, Delete):
            if self.holds(rule.guard, m):
                m = apply_delete(rule, m, self.eso_budget)
            return self._next(config, m)
        if isinstance(rule, Goto):
            if self.holds(rule.guard, m):
                return self._jump(config, m, rule.target)
            return self._next(config, m)
        if isinstance(rule, Assign):
            return self._next(config, m.replace(rule.symbol, rule.relation))
        if isinstance(rule, GuessGoto):
            if not rule.targets:
                return Halt(m, HaltReason.EMPTY_GUESS)
            return self._jump(config, m, choice)
        raise RelogError(f"cannot execute {rule!r} as a single rule")

    def _parallel(self, rules, config: Configuration) -> StepOutcome:
        out = apply_parallel(rules, config.structure, extend_order=self.ordered, budget=self.eso_budget)
        if out.deadlock is not None:
            return Halt(out.structure, HaltReason.DEADLOCK, out.deadlock)
        if out.jump is not None:
            return self._jump(config, out.structure, out.jump)
        return self._next(config, out.structure)

    def execute(self, config: Configuration, cp: ChoicePoint | None, index: int | None) -> StepOutcome:
        """Run the current line with the option ``index`` of ``cp`` (if any)."""
        if config.line is None:
            raise RelogError("configuration already halted")
        m = config.structure
        rule = self.rule_at(config.line)
        picked = None
        if cp is not None:
            if index is None or not 0 <= index < len(cp.options):
                raise ResolverError(f"choice {index!r} out of range for {len(cp.options)} options")
            picked = cp.options[index]
        if isinstance(rule, (Case, FlowControl)):
            rule = rule.select(lambda g: self.holds(g, m))
        if isinstance(rule, Par):
            if picked is None:
                picked = self.joint_options(rule, m)[0][1]
            return self._parallel(picked, config)
        if isinstance(rule, Choose):
            if picked is None:
                picked = self.alternatives(rule, m)[0][1]
            return self._simple(picked, config, None)
        if isinstance(rule, Guess):
            return self._simple(picked, config, None)
        if isinstance(rule, GuessGoto):
            return self._simple(rule, config, picked)
        return self._simple(rule, config, None)

    def step(self, config: Configuration, resolver: Resolver | None = None) -> tuple[StepOutcome, int | None]:
        cp = self.choice_point(config)
        index = None
        if cp is not None:
            if resolver is None:
                raise ResolverError(
                    f"line {config.line} needs a nondeterministic choice but no resolver was given"
                )
            index = resolver(cp)
        return self.execute(config, cp, index), index

    def initial(self, m: Structure) -> Configuration | Halt:
        start = pi_expand(m, self.program.tapes)
        if self.ordered:
            report = validate_order(start)
            if not report.ok:
                raise StructureError(f"RLO input needs a valid distinguished order ({report.violation})")
        first = self.program.first_line
        if first is None:
            return Halt(start, HaltReason.END_OF_PROGRAM)
        return Configuration(start, first, 0)


def step(p: Program, c: Configuration, resolver: Resolver | None = None) -> StepOutcome:
    return Executor(p).step(c, resolver)[0]


# ---------------------------------------------------------------------------
# runs

class Verdict(str, enum.Enum):
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"
    FUEL = "FUEL"


@dataclass(frozen=True)
class TraceStep:
    step: int
    line: int
    rule: str
    size: int
    changed: tuple[str, ...]
    choice: int | None = None

    def __str__(self):
        text = (
            f"step={self.step} line={self.line} rule={self.rule} |M|={self.size} "
            f"changed={{{','.join(self.changed)}}}"
        )
        if self.choice is not None:
            text += f" choice={self.choice}"
        return text


@dataclass
class RunResult:
    verdict: Verdict
    structure: Structure
    reason: str
    steps: int
    inserts: int = 0
    choices: list[tuple[int, int | None]] = field(default_factory=list)
    trace: list[TraceStep] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.verdict is Verdict.ACCEPTED

    def summary_line(self) -> str:
        return f"result={self.verdict.value} reason={self.reason}"


def run(
    p: Program,
    m: Structure,
    fuel: int = 10_000,
    resolver: Resolver | None = None,
    *,
    eso_budget: Budget | int | None = None,
    trace: bool = False,
    max_options: int | None = None,
) -> RunResult:
    """Execute from the tape expansion of ``m`` for at most ``fuel`` lines.

    The reported structure is the reduct to the input vocabulary (tape
    predicates dropped), also when fuel or the ESO budget runs out.
    """
    if isinstance(eso_budget, int):
        eso_budget = Budget(eso_budget)
    ex = Executor(p, eso_budget, max_options)
    start = ex.initial(m)
    choices: list[tuple[int, int | None]] = []
    steps: list[TraceStep] = []
    if isinstance(start, Halt):
        return _finish(start, 0, 0, choices, steps)
    config = start
    inserts = 0
    while True:
        if config.steps >= fuel:
            return RunResult(Verdict.FUEL, config.structure.reduct(), "fuel", config.steps,
                             inserts, choices, steps)
        before = config.structure
        try:
            outcome, index = ex.step(config, resolver)
        except BudgetExceeded as exc:
            return RunResult(Verdict.FUEL, before.reduct(), f"budget:{exc.dimension}",
                             config.steps, inserts, choices, steps)
        after = outcome.config.structure if isinstance(outcome, Continue) else outcome.structure
        if after.domain_size > before.domain_size:
            inserts += after.domain_size - before.domain_size
        if index is not None:
            choices.append((config.line, index))
        if trace:
            steps.append(
                TraceStep(
                    config.steps + 1,
                    config.line,
                    format_rule(p.line(config.line).rule),
                    after.domain_size,
                    tuple(after.changed_symbols(before)) if after.vocabulary == before.vocabulary else (),
                    index,
                )
            )
        if isinstance(outcome, Halt):
            return _finish(outcome, config.steps + 1, inserts, choices, steps)
        config = outcome.config


def _finish(h: Halt, steps: int, inserts: int, choices, trace) -> RunResult:
    verdict = Verdict.ACCEPTED if h.accepted else Verdict.REJECTED
    reason = h.reason.value if h.detail is None else f"{h.reason.value}:{h.detail}"
    return RunResult(verdict, h.structure.reduct(), reason, steps, inserts, choices, trace)


class TraceResolver:
    """Replays recorded choices; each entry is ``(line, option index)``."""

    def __init__(self, choices: Sequence[tuple[int, int]]):
        self.choices = list(choices)
        self.pos = 0

    def __call__(self, cp: ChoicePoint) -> int:
        if self.pos >= len(self.choices):
            raise ResolverError(f"trace exhausted at line {cp.line}")
        line, index = self.choices[self.pos]
        if line != cp.line:
            raise ResolverError(f"trace expects a choice at line {line}, program is at line {cp.line}")
        self.pos += 1
        return index


def first_choice(cp: ChoicePoint) -> int:
    return 0
