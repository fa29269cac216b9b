"""Bounded breadth-first search over nondeterministic computations."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .errors import BudgetExceeded, UnsupportedInput, VocabularyConflict
from .execution import (
    Configuration,
    Executor,
    Halt,
    TraceResolver,
    Verdict,
    run,
)
from .model import Structure, Symbol, Vocabulary
from .syntax import Case, FlowControl, GuessGoto, Program


@dataclass(frozen=True)
class SearchBudget:
    max_steps_per_branch: int = 1000
    max_domain_size: int = 8
    max_visited_configurations: int = 100_000

    def __post_init__(self):
        for name in ("max_steps_per_branch", "max_domain_size", "max_visited_configurations"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class BranchChoice:
    """One successor option.  ``index`` is what a resolver returns; ``None`` means halt."""

    index: int | None
    label: object


def branch(p: Program, c: Configuration, budget: SearchBudget | None = None) -> list[BranchChoice]:
    """The canonical choice list at ``c`` (empty for deterministic lines)."""
    ex = Executor(p, max_options=budget.max_visited_configurations if budget else None)
    cp = ex.choice_point(c)
    if cp is None:
        rule = p.line(c.line).rule
        if isinstance(rule, (Case, FlowControl)):
            rule = rule.select(lambda g: ex.holds(g, c.structure))
        if isinstance(rule, GuessGoto):
            return [BranchChoice(None, "halt")]
        return []
    labels = cp.labels or tuple(range(len(cp.options)))
    return [BranchChoice(i, lab) for i, lab in enumerate(labels)]


# ---------------------------------------------------------------------------
# traces

@dataclass(frozen=True)
class Trace:
    """Executed lines in order, each with the choice index taken (or ``None``)."""

    steps: tuple[tuple[int, int | None], ...]

    @property
    def choices(self) -> list[tuple[int, int]]:
        return [(line, c) for line, c in self.steps if c is not None]

    def resolver(self) -> TraceResolver:
        return TraceResolver(self.choices)

    def __len__(self):
        return len(self.steps)


def replay(p: Program, m: Structure, trace: Trace):
    """Re-run ``m`` following ``trace``; fuel is exactly the trace length."""
    return run(p, m, max(len(trace), 1), trace.resolver())


# ---------------------------------------------------------------------------
# breadth-first exploration

class SearchStatus(str, enum.Enum):
    ACCEPTED = "accepted"
    NOT_FOUND = "not-found-within-budget"


@dataclass
class SearchStats:
    visited: int = 0
    truncated_steps: int = 0
    truncated_domain: int = 0
    truncated_choices: int = 0
    visit_limit_hit: bool = False

    @property
    def exhaustive(self) -> bool:
        return not (self.truncated_steps or self.truncated_domain or self.truncated_choices
                    or self.visit_limit_hit)


@dataclass
class SearchResult:
    status: SearchStatus
    structure: Structure | None = None
    trace: Trace | None = None
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def accepted(self) -> bool:
        return self.status is SearchStatus.ACCEPTED


def _explore(p: Program, m: Structure, b: SearchBudget, stop_at_first: bool):
    """Yield ``(final τ-structure, trace)`` for every accepting halt, BFS order."""
    ex = Executor(p, max_options=b.max_visited_configurations)
    stats = SearchStats()
    start = ex.initial(m)
    results: list[tuple[Structure, Trace]] = []
    if isinstance(start, Halt):
        if start.accepted:
            results.append((start.structure.reduct(), Trace(())))
        return results, stats
    parents: dict[tuple, tuple | None] = {}
    moves: dict[tuple, tuple[int, int | None]] = {}

    def key(c: Configuration):
        return (c.structure, c.line)

    def path(k, last) -> Trace:
        steps = [last]
        while parents[k] is not None:
            steps.append(moves[k])
            k = parents[k]
        return Trace(tuple(reversed(steps)))

    k0 = key(start)
    parents[k0] = None
    frontier = deque([start])
    stats.visited = 1
    while frontier:
        config = frontier.popleft()
        here = key(config)
        if config.steps >= b.max_steps_per_branch:
            stats.truncated_steps += 1
            continue
        try:
            cp = ex.choice_point(config)
        except BudgetExceeded:
            stats.truncated_choices += 1
            continue
        indices = [None] if cp is None else range(len(cp.options))
        for i in indices:
            outcome = ex.execute(config, cp, i)
            move = (config.line, i)
            if isinstance(outcome, Halt):
                if outcome.structure.domain_size > b.max_domain_size:
                    stats.truncated_domain += 1
                elif outcome.accepted:
                    results.append((outcome.structure.reduct(), path(here, move)))
                    if stop_at_first:
                        return results, stats
                continue
            nxt = outcome.config
            if nxt.structure.domain_size > b.max_domain_size:
                stats.truncated_domain += 1
                continue
            k = key(nxt)
            if k in parents:
                continue
            if stats.visited >= b.max_visited_configurations:
                stats.visit_limit_hit = True
                return results, stats
            parents[k] = here
            moves[k] = move
            stats.visited += 1
            frontier.append(nxt)
    return results, stats


def search_accepting(p: Program, m: Structure, b: SearchBudget) -> SearchResult:
    """The first accepting computation in breadth-first canonical order.

    Not finding one says nothing about rejection beyond the budget.
    """
    results, stats = _explore(p, m, b, stop_at_first=True)
    if results:
        structure, trace = results[0]
        return SearchResult(SearchStatus.ACCEPTED, structure, trace, stats)
    return SearchResult(SearchStatus.NOT_FOUND, None, None, stats)


@dataclass
class ConstructionResult:
    input: Structure
    pairs: dict[Structure, Trace]
    stats: SearchStats

    @property
    def outputs(self) -> set[Structure]:
        return set(self.pairs)

    def __iter__(self):
        for out, trace in self.pairs.items():
            yield self.input, out, trace


def compute_construction(p: Program, m: Structure, b: SearchBudget) -> ConstructionResult:
    """All τ-outputs of accepting computations within ``b``, one witness each."""
    results, stats = _explore(p, m, b, stop_at_first=False)
    pairs: dict[Structure, Trace] = {}
    for out, trace in results:
        pairs.setdefault(out, trace)
    return ConstructionResult(m, pairs, stats)


def verify_trace(p: Program, m: Structure, expected: Structure, trace: Trace) -> bool:
    result = replay(p, m, trace)
    return result.verdict is Verdict.ACCEPTED and result.structure == expected and result.steps == len(trace)


# ---------------------------------------------------------------------------
# paired models

def build_pair_structure(a: Structure, b: Structure, sim: str = "Sim", side: str = "P") -> Structure:
    """Disjoint union of ``a`` and ``b`` (``a`` first) with the two-class
    equivalence ``sim`` and the unary ``side`` marking ``a``'s class."""
    if a.vocabulary.without_tapes() != b.vocabulary.without_tapes():
        raise VocabularyConflict("paired structures need the same vocabulary")
    for name in (sim, side):
        if name in a.vocabulary:
            raise VocabularyConflict(f"{name} already occurs in the vocabulary")
    base = a.vocabulary.without_tapes()
    if any(s.arity == 0 for s in base):
        raise UnsupportedInput("nullary symbols cannot be split between the two sides")
    # the union of two orders is not a linear order, so none is distinguished
    vocab = Vocabulary(base.symbols + (Symbol(sim, 2), Symbol(side, 1)), None)
    na, nb = a.domain_size, b.domain_size
    rels: dict[str, set] = {}
    for s in base:
        rels[s.name] = set(a[s.name]) | {tuple(e + na for e in t) for t in b[s.name]}
    rels[sim] = {(x, y) for x in range(na) for y in range(na)} | {
        (x, y) for x in range(na, na + nb) for y in range(na, na + nb)
    }
    rels[side] = {(x,) for x in range(na)}
    return Structure(vocab, na + nb, rels)

