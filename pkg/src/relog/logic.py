"""First-order and existential second-order formulae over finite structures.

Formulae are frozen dataclasses.  Evaluation compiles a formula once into
nested closures (cached on the formula object) that read a mutable variable
environment; second-order quantifiers are evaluated by enumerating every
candidate relation in canonical numeral order.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .errors import BudgetExceeded, EvaluationError, ParseError, UnsupportedInput
from .model import Structure, Symbol, all_tuples, validate_order


# ---------------------------------------------------------------------------
# abstract syntax

class Formula:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


TRUE = Top()
FALSE = Bottom()


@dataclass(frozen=True)
class Atom(Formula):
    name: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists2(Formula):
    """Existential second-order quantifier over ``arity``-ary relations."""

    name: str
    arity: int
    body: Formula


def conj(*parts: Formula) -> Formula:
    parts = [p for p in parts if p != TRUE]
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(*parts: Formula) -> Formula:
    parts = [p for p in parts if p != FALSE]
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def exists_all(variables: Iterable[str], body: Formula) -> Formula:
    for v in reversed(list(variables)):
        body = Exists(v, body)
    return body


def forall_all(variables: Iterable[str], body: Formula) -> Formula:
    for v in reversed(list(variables)):
        body = Forall(v, body)
    return body


# ---------------------------------------------------------------------------
# syntactic queries

def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, Eq):
        return frozenset((f.left, f.right))
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, (And, Or, Implies)):
        return free_variables(f.left) | free_variables(f.right)
    if isinstance(f, (Exists, Forall)):
        return free_variables(f.body) - {f.var}
    if isinstance(f, Exists2):
        return free_variables(f.body)
    return frozenset()


def variables(f: Formula) -> frozenset[str]:
    """Every first-order variable name occurring in ``f``, bound or free."""
    if isinstance(f, (Exists, Forall)):
        return variables(f.body) | {f.var}
    if isinstance(f, Not):
        return variables(f.body)
    if isinstance(f, (And, Or, Implies)):
        return variables(f.left) | variables(f.right)
    if isinstance(f, Exists2):
        return variables(f.body)
    return free_variables(f)


def relation_names(f: Formula, free_only: bool = True) -> frozenset[str]:
    """Names used in atoms; second-order bound names are excluded when ``free_only``."""
    if isinstance(f, Atom):
        return frozenset((f.name,))
    if isinstance(f, Not):
        return relation_names(f.body, free_only)
    if isinstance(f, (And, Or, Implies)):
        return relation_names(f.left, free_only) | relation_names(f.right, free_only)
    if isinstance(f, (Exists, Forall)):
        return relation_names(f.body, free_only)
    if isinstance(f, Exists2):
        inner = relation_names(f.body, free_only)
        return inner - {f.name} if free_only else inner | {f.name}
    return frozenset()


def atom_arities(f: Formula) -> dict[str, set[int]]:
    out: dict[str, set[int]] = {}

    def walk(g):
        if isinstance(g, Atom):
            out.setdefault(g.name, set()).add(len(g.args))
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or, Implies)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, (Exists, Forall, Exists2)):
            walk(g.body)

    walk(f)
    return out


def is_first_order(f: Formula) -> bool:
    if isinstance(f, Exists2):
        return False
    if isinstance(f, Not):
        return is_first_order(f.body)
    if isinstance(f, (And, Or, Implies)):
        return is_first_order(f.left) and is_first_order(f.right)
    if isinstance(f, (Exists, Forall)):
        return is_first_order(f.body)
    return True


def is_eso(f: Formula) -> bool:
    """True when every second-order quantifier occurs in positive position."""
    return not _negative_so(f, positive=True)


def _negative_so(f: Formula, positive: bool) -> bool:
    if isinstance(f, Exists2):
        return (not positive) or _negative_so(f.body, positive)
    if isinstance(f, Not):
        return _negative_so(f.body, not positive)
    if isinstance(f, Implies):
        return _negative_so(f.left, not positive) or _negative_so(f.right, positive)
    if isinstance(f, (And, Or)):
        return _negative_so(f.left, positive) or _negative_so(f.right, positive)
    if isinstance(f, (Exists, Forall)):
        return _negative_so(f.body, positive)
    return False


def eso_prefix(f: Formula) -> tuple[list[tuple[str, int]], Formula]:
    """Split ``exists2 X1:k1. ... exists2 Xn:kn. psi`` into its prefix and matrix."""
    prefix = []
    while isinstance(f, Exists2):
        prefix.append((f.name, f.arity))
        f = f.body
    return prefix, f


def substitute_atoms(f: Formula, mapping: Mapping[str, Callable[[tuple], Formula]]) -> Formula:
    """Replace atoms ``R(args)`` by ``mapping[R](args)``, respecting second-order binders."""
    if isinstance(f, Atom):
        fn = mapping.get(f.name)
        return fn(f.args) if fn else f
    if isinstance(f, Not):
        return Not(substitute_atoms(f.body, mapping))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(substitute_atoms(f.left, mapping), substitute_atoms(f.right, mapping))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, substitute_atoms(f.body, mapping))
    if isinstance(f, Exists2):
        inner = {k: v for k, v in mapping.items() if k != f.name}
        return Exists2(f.name, f.arity, substitute_atoms(f.body, inner))
    return f


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    if base not in taken:
        return base
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in taken:
            return cand


# ---------------------------------------------------------------------------
# evaluation

class Budget:
    """Counts enumerated second-order candidates; ``None`` means unlimited."""

    __slots__ = ("limit", "used")

    def __init__(self, limit: int | None = None):
        self.limit = limit
        self.used = 0

    def charge(self, amount: int = 1):
        self.used += amount
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(
                f"second-order enumeration exceeded {self.limit} candidates", "eso_candidates"
            )

    @property
    def remaining(self) -> int | None:
        return None if self.limit is None else self.limit - self.used


@dataclass
class Assignment:
    first_order: dict[str, int] = field(default_factory=dict)
    second_order: dict[str, frozenset] = field(default_factory=dict)


class _Ctx:
    __slots__ = ("rel", "n", "budget")

    def __init__(self, rel, n, budget):
        self.rel = rel
        self.n = n
        self.budget = budget


_MISSING = object()
_TUPLE_CACHE: dict[tuple[int, int], list] = {}


def _tuples(n: int, k: int) -> list:
    key = (n, k)
    got = _TUPLE_CACHE.get(key)
    if got is None:
        got = all_tuples(n, k)
        if n ** k <= 4096:
            _TUPLE_CACHE[key] = got
    return got


def _unbound(var):
    return EvaluationError(f"unbound variable {var!r}")


def _lookup(ctx, name):
    try:
        return ctx.rel[name]
    except KeyError:
        raise EvaluationError(f"unknown symbol {name!r}") from None


def _compile(f: Formula):
    cached = f.__dict__.get("_fn")
    if cached is not None:
        return cached
    fn = _build(f)
    object.__setattr__(f, "_fn", fn)
    return fn


def _build(f: Formula):
    if isinstance(f, Top):
        return lambda ctx, env: True
    if isinstance(f, Bottom):
        return lambda ctx, env: False
    if isinstance(f, Atom):
        name, args = f.name, f.args
        if len(args) == 0:
            def atom0(ctx, env):
                return () in _lookup(ctx, name)
            return atom0
        if len(args) == 1:
            (a,) = args

            def atom1(ctx, env):
                rel = _lookup(ctx, name)
                try:
                    return (env[a],) in rel
                except KeyError:
                    raise _unbound(a) from None
            return atom1
        if len(args) == 2:
            a, b = args

            def atom2(ctx, env):
                rel = _lookup(ctx, name)
                try:
                    return (env[a], env[b]) in rel
                except KeyError as exc:
                    raise _unbound(exc.args[0]) from None
            return atom2

        def atomk(ctx, env):
            rel = _lookup(ctx, name)
            try:
                return tuple([env[x] for x in args]) in rel
            except KeyError as exc:
                raise _unbound(exc.args[0]) from None
        return atomk
    if isinstance(f, Eq):
        a, b = f.left, f.right

        def eq(ctx, env):
            try:
                return env[a] == env[b]
            except KeyError as exc:
                raise _unbound(exc.args[0]) from None
        return eq
    if isinstance(f, Not):
        g = _compile(f.body)
        return lambda ctx, env: not g(ctx, env)
    if isinstance(f, And):
        l, r = _compile(f.left), _compile(f.right)
        return lambda ctx, env: l(ctx, env) and r(ctx, env)
    if isinstance(f, Or):
        l, r = _compile(f.left), _compile(f.right)
        return lambda ctx, env: l(ctx, env) or r(ctx, env)
    if isinstance(f, Implies):
        l, r = _compile(f.left), _compile(f.right)
        return lambda ctx, env: (not l(ctx, env)) or r(ctx, env)
    if isinstance(f, (Exists, Forall)):
        var, body = f.var, _compile(f.body)
        want = isinstance(f, Exists)

        def quant(ctx, env):
            saved = env.get(var, _MISSING)
            try:
                for a in range(ctx.n):
                    env[var] = a
                    if body(ctx, env) is want:
                        return want
                return not want
            finally:
                if saved is _MISSING:
                    env.pop(var, None)
                else:
                    env[var] = saved
        return quant
    if isinstance(f, Exists2):
        name, k, body = f.name, f.arity, _compile(f.body)

        def exists2(ctx, env):
            tuples = _tuples(ctx.n, k)
            width = len(tuples)
            budget = ctx.budget
            rel = ctx.rel
            saved = rel.get(name, _MISSING)
            try:
                for mask in range(1 << width):
                    if budget is not None:
                        budget.charge()
                    rel[name] = frozenset(
                        [t for i, t in enumerate(tuples) if mask >> (width - 1 - i) & 1]
                    )
                    if body(ctx, env):
                        return True
                return False
            finally:
                if saved is _MISSING:
                    rel.pop(name, None)
                else:
                    rel[name] = saved
        return exists2
    raise TypeError(f"not a formula: {f!r}")


def _first_order_only(f: Formula) -> bool:
    cached = f.__dict__.get("_fo")
    if cached is None:
        cached = is_first_order(f)
        object.__setattr__(f, "_fo", cached)
    return cached


def _context(m: Structure, a: Assignment | Mapping | None, budget: Budget | None):
    rel = dict(m.relations)
    env: dict[str, int] = {}
    if a is not None:
        if not isinstance(a, Assignment):
            a = Assignment(dict(a))
        for var, e in a.first_order.items():
            if not (isinstance(e, int) and 0 <= e < m.domain_size):
                raise EvaluationError(f"{var} is assigned {e!r}, outside the domain")
            env[var] = e
        for name, r in a.second_order.items():
            rel[name] = frozenset(r)
    return _Ctx(rel, m.domain_size, budget), env


def eval_fo(f: Formula, m: Structure, a: Assignment | Mapping | None = None) -> bool:
    """Tarskian truth of a first-order formula."""
    if not _first_order_only(f):
        raise EvaluationError("second-order quantifier in a first-order formula")
    ctx, env = _context(m, a, None)
    return _compile(f)(ctx, env)


def eval_eso(
    f: Formula,
    m: Structure,
    a: Assignment | Mapping | None = None,
    budget: Budget | int | None = None,
) -> bool:
    """Truth of an ESO formula by exhaustive enumeration of candidate relations."""
    if isinstance(budget, int):
        budget = Budget(budget)
    ctx, env = _context(m, a, budget)
    return _compile(f)(ctx, env)


def evaluate(f: Formula, m: Structure, env: Mapping[str, int] | None = None,
             budget: Budget | None = None) -> bool:
    """Fast path used by the executor: no range checks on ``env``."""
    ctx = _Ctx(dict(m.relations), m.domain_size, budget)
    return _compile(f)(ctx, dict(env) if env else {})


def defined_relation(
    body: Formula,
    head_vars: Sequence[str],
    m: Structure,
    budget: Budget | None = None,
) -> frozenset:
    """``{ (a1..ak) : m |= body[x1->a1, ..] }``; repeated head variables force equal components."""
    distinct = list(dict.fromkeys(head_vars))
    pos = [distinct.index(v) for v in head_vars]
    fn = _compile(body)
    ctx = _Ctx(dict(m.relations), m.domain_size, budget)
    out = []
    env: dict[str, int] = {}
    for values in itertools.product(range(m.domain_size), repeat=len(distinct)):
        for v, e in zip(distinct, values):
            env[v] = e
        if fn(ctx, env):
            out.append(tuple(values[p] for p in pos))
    return frozenset(out)


# ---------------------------------------------------------------------------
# arity-collapsing normal form

def collapse_eso(f: Formula, name: str = "Z") -> Exists2:
    """Rewrite ``exists2 X1..Xn. psi`` into a single quantifier whose arity is the sum.

    Each relation variable becomes a coordinate block of the new relation.
    One disjunct per set of variables assumed empty keeps the rewrite exact
    when some of the original relations are empty.
    """
    prefix, matrix = eso_prefix(f)
    if not prefix:
        raise UnsupportedInput("no second-order quantifier to collapse")
    if not is_first_order(matrix):
        raise UnsupportedInput("matrix must be first-order")
    for x, k in prefix:
        if k == 0:
            raise UnsupportedInput(f"nullary relation variable {x!r} cannot be collapsed")
    if len({x for x, _ in prefix}) != len(prefix):
        raise UnsupportedInput("repeated relation variable in prefix")
    total = sum(k for _, k in prefix)
    bound = {x for x, _ in prefix}
    zname = fresh_name(name, (relation_names(matrix) - bound))
    if len(prefix) == 1:
        x, k = prefix[0]
        return Exists2(zname, k, substitute_atoms(matrix, {x: lambda args: Atom(zname, args)}))

    taken = variables(matrix)
    zvars = []
    for i in range(total):
        v = fresh_name(f"z{i + 1}", taken)
        taken = taken | {v}
        zvars.append(v)
    offsets = []
    off = 0
    for _, k in prefix:
        offsets.append(off)
        off += k

    def block_atom(i):
        k = prefix[i][1]
        start = offsets[i]

        def build(args):
            eqs = [Eq(zvars[start + j], args[j]) for j in range(k)]
            return exists_all(zvars, conj(Atom(zname, tuple(zvars)), *eqs))
        return build

    disjuncts = []
    n = len(prefix)
    for size in range(n + 1):
        for empty in itertools.combinations(range(n), size):
            mapping = {}
            for i, (x, _) in enumerate(prefix):
                mapping[x] = (lambda args: FALSE) if i in empty else block_atom(i)
            disjuncts.append(substitute_atoms(matrix, mapping))
    body = disjuncts[0]
    for d in disjuncts[1:]:
        body = Or(body, d)
    return Exists2(zname, total, body)


# ---------------------------------------------------------------------------
# builtin counter formulae over an ordered structure

def _vars(prefix: str, k: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(k))


def lex_less(xs: Sequence[str], ys: Sequence[str], order: str = "<") -> Formula:
    """Lexicographic strict order on tuples of variables, induced by ``order``."""
    parts = []
    for i in range(len(xs)):
        prefix = [Eq(xs[j], ys[j]) for j in range(i)]
        parts.append(conj(*prefix, Atom(order, (xs[i], ys[i]))))
    return disj(*parts)


def builtin_max_formula(z: str, k: int) -> Formula:
    """True iff ``z`` is the total ``k``-ary relation."""
    ys = _vars("y", k)
    return forall_all(ys, Atom(z, ys))


def builtin_step_formula(z: str, k: int, order: str = "<") -> tuple[tuple[str, ...], Formula]:
    """Head variables ``x1..xk`` and a formula defining the successor of ``z``.

    Reading ``z`` as a numeral (lexicographically least tuple most
    significant), the defined relation is ``z + 1``; the all-ones relation
    maps to itself.
    """
    xs, ys = _vars("x", k), _vars("y", k)
    zx, zy = Atom(z, xs), Atom(z, ys)
    later = lex_less(xs, ys, order)
    keep = And(zx, Or(builtin_max_formula(z, k), exists_all(ys, And(later, Not(zy)))))
    flip = And(Not(zx), forall_all(ys, Implies(later, zy)))
    return xs, Or(keep, flip)


def step_relation(m: Structure, z: str, k: int) -> frozenset:
    """Evaluate the builtin step formula; requires a valid distinguished order."""
    report = validate_order(m)
    if not report.ok:
        raise EvaluationError(f"step formula needs a linear order ({report.violation})")
    xs, f = builtin_step_formula(z, k, m.vocabulary.order)
    return defined_relation(f, xs, m)


# ---------------------------------------------------------------------------
# L_RE sentences

@dataclass(frozen=True)
class LreSentence:
    """``I witness . body``: body is ``exists2 X1..Xn. psi`` with ``psi`` first-order."""

    witness: str
    body: Formula

    def __post_init__(self):
        prefix, matrix = eso_prefix(self.body)
        if not is_first_order(matrix):
            raise UnsupportedInput("the part after the second-order prefix must be first-order")
        if free_variables(self.body):
            raise UnsupportedInput(
                f"sentence has free variables {sorted(free_variables(self.body))}"
            )
        if any(x == self.witness for x, _ in prefix):
            raise UnsupportedInput("witness name is bound by the prefix")
        bad = atom_arities(self.body).get(self.witness, set()) - {1}
        if bad:
            raise UnsupportedInput(f"witness {self.witness} must be used as a unary atom")

    @property
    def prefix(self) -> list[tuple[str, int]]:
        return eso_prefix(self.body)[0]

    @property
    def matrix(self) -> Formula:
        return eso_prefix(self.body)[1]


class LreStatus(Enum):
    ACCEPTED = "accepted"
    NOT_FOUND = "not-found-within-budget"
    BUDGET_EXCEEDED = "eso-budget-exceeded"


@dataclass(frozen=True)
class LreResult:
    status: LreStatus
    extension: int | None = None
    candidates: int = 0

    @property
    def accepted(self) -> bool:
        return self.status is LreStatus.ACCEPTED


def lre_expansion(m: Structure, witness: str, j: int, extend_order: bool) -> Structure:
    """``m`` plus ``j`` fresh points, with the witness predicate naming exactly those."""
    out = m.expand([Symbol(witness, 1, tape=True)])
    for _ in range(j):
        out = out.add_point(extend_order)
    fresh = frozenset((e,) for e in range(m.domain_size, m.domain_size + j))
    return out.replace(witness, fresh)


def eval_lre_bounded(
    s: LreSentence,
    m: Structure,
    max_new_elements: int,
    *,
    extend_order: bool | None = None,
    budget: Budget | int | None = None,
) -> LreResult:
    """Try every expansion by ``0..max_new_elements`` fresh points.

    ``extend_order`` (default: whether ``m`` has a distinguished order)
    places each fresh point last in the order, so the expansion stays an
    ordered structure.
    """
    if extend_order is None:
        extend_order = m.vocabulary.order is not None
    if isinstance(budget, int):
        budget = Budget(budget)
    for j in range(max_new_elements + 1):
        expanded = lre_expansion(m, s.witness, j, extend_order)
        try:
            ok = eval_eso(s.body, expanded, budget=budget)
        except BudgetExceeded:
            return LreResult(LreStatus.BUDGET_EXCEEDED, None, budget.used if budget else 0)
        if ok:
            return LreResult(LreStatus.ACCEPTED, j, budget.used if budget else 0)
    return LreResult(LreStatus.NOT_FOUND, None, budget.used if budget else 0)


# ---------------------------------------------------------------------------
# concrete syntax

_ALIASES = {"⊤": "true", "⊥": "false", "¬": "!", "∧": "&", "∨": "|", "→": "->"}
_TOKEN_RE = re.compile(
    r"\s+|#[^\n]*|(->|=>|\|\||[|&!=<(),.:\[\]{};?]|[⊤⊥¬∧∨→]|\d+|[A-Za-z_][A-Za-z0-9_']*)"
)
KEYWORDS = {"true", "false", "exists", "forall", "exists2"}


def tokenize(text: str, line: int | None = None) -> list[str]:
    toks = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN_RE.match(text, pos)
        if mt is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line)
        tok = mt.group(1)
        if tok is not None:
            toks.append(_ALIASES.get(tok, tok))
        pos = mt.end()
    return toks


def _is_ident(tok: str | None) -> bool:
    return tok is not None and (tok[0].isalpha() or tok[0] == "_")


class FormulaParser:
    """Recursive-descent parser over a token list.

    ``no_bar`` disables ``|`` at the current nesting level so that formulae
    can sit inside ``case`` alternatives; parentheses re-enable it.
    """

    def __init__(self, tokens: list[str], line: int | None = None):
        self.toks = tokens
        self.i = 0
        self.line = line

    # token helpers
    def peek(self, offset: int = 0) -> str | None:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.i += 1
        return tok

    def accept(self, tok: str) -> bool:
        if self.peek() == tok:
            self.i += 1
            return True
        return False

    def expect(self, tok: str) -> str:
        got = self.peek()
        if got != tok:
            raise self.error(f"expected {tok!r}, found {got!r}")
        self.i += 1
        return tok

    def ident(self) -> str:
        tok = self.peek()
        if not _is_ident(tok) or tok in KEYWORDS:
            raise self.error(f"expected a name, found {tok!r}")
        self.i += 1
        return tok

    def number(self) -> int:
        tok = self.peek()
        if tok is None or not tok.isdigit():
            raise self.error(f"expected a number, found {tok!r}")
        self.i += 1
        return int(tok)

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.line)

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    # grammar
    def formula(self, no_bar: bool = False) -> Formula:
        left = self.disjunction(no_bar)
        if self.accept("->"):
            return Implies(left, self.formula(no_bar))
        return left

    def disjunction(self, no_bar: bool) -> Formula:
        left = self.conjunction(no_bar)
        while not no_bar and self.accept("|"):
            left = Or(left, self.conjunction(no_bar))
        return left

    def conjunction(self, no_bar: bool) -> Formula:
        left = self.unary(no_bar)
        while self.accept("&"):
            left = And(left, self.unary(no_bar))
        return left

    def unary(self, no_bar: bool) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.i += 1
            return Not(self.unary(no_bar))
        if tok in ("exists", "forall"):
            self.i += 1
            names = [self.ident()]
            while _is_ident(self.peek()) and self.peek() not in KEYWORDS:
                names.append(self.ident())
            self.expect(".")
            body = self.formula(no_bar)
            q = Exists if tok == "exists" else Forall
            for v in reversed(names):
                body = q(v, body)
            return body
        if tok == "exists2":
            self.i += 1
            name = self.ident()
            self.expect(":")
            arity = self.number()
            self.expect(".")
            return Exists2(name, arity, self.formula(no_bar))
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok == "(":
            self.i += 1
            f = self.formula(False)
            self.expect(")")
            return f
        if tok == "true":
            self.i += 1
            return TRUE
        if tok == "false":
            self.i += 1
            return FALSE
        name = self.ident()
        nxt = self.peek()
        if nxt == "(":
            self.i += 1
            args = []
            if not self.accept(")"):
                args.append(self.ident())
                while self.accept(","):
                    args.append(self.ident())
                self.expect(")")
            return Atom(name, tuple(args))
        if nxt == "=":
            self.i += 1
            return Eq(name, self.ident())
        if nxt == "<":
            self.i += 1
            return Atom("<", (name, self.ident()))
        return Atom(name, ())


def parse_formula(text: str) -> Formula:
    p = FormulaParser(tokenize(text))
    f = p.formula()
    if not p.at_end():
        raise p.error(f"unexpected token {p.peek()!r}")
    return f


_IMPL, _OR, _AND, _UNARY, _ATOM = 1, 2, 3, 4, 5


def format_formula(f: Formula, no_bar: bool = False) -> str:
    return _fmt(f, no_bar)[0]


def _wrap(text: str) -> str:
    return "(" + text + ")"


def _fmt(f: Formula, no_bar: bool) -> tuple[str, int, bool]:
    """Return (text, precedence, open-right)."""
    if isinstance(f, Top):
        return "true", _ATOM, False
    if isinstance(f, Bottom):
        return "false", _ATOM, False
    if isinstance(f, Atom):
        if f.name == "<" and len(f.args) == 2:
            return f"{f.args[0]}<{f.args[1]}", _ATOM, False
        if not f.args:
            return f.name, _ATOM, False
        return f"{f.name}({','.join(f.args)})", _ATOM, False
    if isinstance(f, Eq):
        return f"{f.left}={f.right}", _ATOM, False
    if isinstance(f, Not):
        text, prec, open_ = _fmt(f.body, no_bar)
        if prec < _UNARY:
            text, open_ = _wrap(text), False
        return "!" + text, _UNARY, open_
    if isinstance(f, (Exists, Forall)):
        kw = "exists" if isinstance(f, Exists) else "forall"
        text = _fmt(f.body, no_bar)[0]
        return f"{kw} {f.var}. {text}", _UNARY, True
    if isinstance(f, Exists2):
        text = _fmt(f.body, no_bar)[0]
        return f"exists2 {f.name}:{f.arity}. {text}", _UNARY, True
    if isinstance(f, (And, Or)):
        prec, op = (_AND, " & ") if isinstance(f, And) else (_OR, " | ")
        if prec == _OR and no_bar:
            return _wrap(_fmt(f, False)[0]), _ATOM, False
        lt, lp, lo = _fmt(f.left, no_bar)
        if lp < prec or lo:
            lt = _wrap(lt)
        rt, rp, ro = _fmt(f.right, no_bar)
        if rp <= prec:
            rt, ro = _wrap(rt), False
        return lt + op + rt, prec, ro
    if isinstance(f, Implies):
        lt, lp, lo = _fmt(f.left, no_bar)
        if lp <= _IMPL or lo:
            lt = _wrap(lt)
        rt, rp, ro = _fmt(f.right, no_bar)
        return lt + " -> " + rt, _IMPL, ro
    raise TypeError(f"not a formula: {f!r}")
