"""Finite relational structures and their binary encoding.

Elements of a structure are always ``0 .. domain_size - 1``.  A relation is a
frozenset of tuples; a nullary relation is ``frozenset({()})`` when true and
the empty frozenset when false.

Symbols are iterated in the canonical symbol order: ascending by the UTF-8
bytes of the name, then by arity.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import DecodeError, ModelFormatError, StructureError, VocabularyConflict

Relation = frozenset
TRUE_REL: frozenset = frozenset({()})
FALSE_REL: frozenset = frozenset()


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int
    tape: bool = False

    @property
    def sort_key(self) -> tuple[bytes, int]:
        return (self.name.encode("utf-8"), self.arity)


@dataclass(frozen=True)
class Vocabulary:
    """An ordered set of relation symbols and tape predicates.

    ``order`` optionally names the distinguished binary relation symbol
    that RLO keeps a strict linear order.
    """

    symbols: tuple[Symbol, ...] = ()
    order: str | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        syms = tuple(sorted(self.symbols, key=lambda s: s.sort_key))
        index = {}
        for s in syms:
            if s.arity < 0:
                raise VocabularyConflict(f"negative arity for {s.name}")
            if s.name in index:
                raise VocabularyConflict(f"duplicate symbol {s.name!r}")
            index[s.name] = s
        if self.order is not None:
            o = index.get(self.order)
            if o is None or o.arity != 2 or o.tape:
                raise VocabularyConflict(
                    f"distinguished order {self.order!r} must be a binary relation symbol"
                )
        object.__setattr__(self, "symbols", syms)
        object.__setattr__(self, "_index", index)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __getitem__(self, name: str) -> Symbol:
        try:
            return self._index[name]
        except KeyError:
            raise VocabularyConflict(f"unknown symbol {name!r}") from None

    def get(self, name: str) -> Symbol | None:
        return self._index.get(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols)

    def relation_symbols(self) -> tuple[Symbol, ...]:
        return tuple(s for s in self.symbols if not s.tape)

    def tape_symbols(self) -> tuple[Symbol, ...]:
        return tuple(s for s in self.symbols if s.tape)

    def extend(self, extra: Iterable[Symbol]) -> "Vocabulary":
        extra = tuple(extra)
        for s in extra:
            if s.name in self._index:
                raise VocabularyConflict(f"symbol {s.name!r} already in vocabulary")
        return Vocabulary(self.symbols + extra, self.order)

    def without_tapes(self) -> "Vocabulary":
        return Vocabulary(self.relation_symbols(), self.order)

    @classmethod
    def of(cls, *specs: tuple[str, int], order: str | None = None) -> "Vocabulary":
        """``Vocabulary.of(("P", 1), ("<", 2), order="<")``"""
        return cls(tuple(Symbol(n, a) for n, a in specs), order)


class Structure:
    """An immutable finite structure over a vocabulary."""

    __slots__ = ("vocabulary", "domain_size", "relations", "_hash")

    def __init__(
        self,
        vocabulary: Vocabulary,
        domain_size: int,
        relations: Mapping[str, Iterable[tuple]] | None = None,
        *,
        check: bool = True,
    ):
        relations = relations or {}
        rels = {}
        if check:
            if domain_size < 0:
                raise StructureError("domain size must be non-negative")
            for name in relations:
                if name not in vocabulary:
                    raise StructureError(f"interpretation for unknown symbol {name!r}")
            for sym in vocabulary:
                raw = relations.get(sym.name, ())
                if isinstance(raw, bool):
                    raw = TRUE_REL if raw else FALSE_REL
                rel = frozenset(tuple(t) for t in raw)
                for t in rel:
                    if len(t) != sym.arity:
                        raise StructureError(f"tuple {t} has wrong arity for {sym.name}/{sym.arity}")
                    for e in t:
                        if not (isinstance(e, int) and 0 <= e < domain_size):
                            raise StructureError(f"element {e!r} of {sym.name} out of range")
                rels[sym.name] = rel
        else:
            for sym in vocabulary:
                rels[sym.name] = relations.get(sym.name, FALSE_REL)
        self.vocabulary = vocabulary
        self.domain_size = domain_size
        self.relations: dict[str, frozenset] = rels
        self._hash = None

    # -- value semantics -------------------------------------------------
    def _key(self):
        return (self.domain_size, self.vocabulary, tuple(self.relations.items()))

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (
            self.domain_size == other.domain_size
            and self.vocabulary == other.vocabulary
            and self.relations == other.relations
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        parts = []
        for s in self.vocabulary:
            rel = self.relations[s.name]
            if s.arity == 0:
                parts.append(f"{s.name}={'T' if rel else 'F'}")
            else:
                parts.append(f"{s.name}={sorted(rel)}")
        return f"Structure(n={self.domain_size}, {', '.join(parts)})"

    def __getitem__(self, name: str) -> frozenset:
        try:
            return self.relations[name]
        except KeyError:
            raise StructureError(f"symbol {name!r} not interpreted") from None

    def holds(self, name: str) -> bool:
        """Truth value of a nullary symbol."""
        return () in self[name]

    @property
    def domain(self) -> range:
        return range(self.domain_size)

    # -- derived structures ---------------------------------------------
    def replace(self, name: str, relation: Iterable[tuple]) -> "Structure":
        if name not in self.relations:
            raise StructureError(f"symbol {name!r} not interpreted")
        rels = dict(self.relations)
        rels[name] = frozenset(relation)
        return Structure(self.vocabulary, self.domain_size, rels, check=False)

    def replace_many(self, updates: Mapping[str, frozenset]) -> "Structure":
        rels = dict(self.relations)
        for name, rel in updates.items():
            if name not in rels:
                raise StructureError(f"symbol {name!r} not interpreted")
            rels[name] = frozenset(rel)
        return Structure(self.vocabulary, self.domain_size, rels, check=False)

    def add_point(self, extend_order: bool = False) -> "Structure":
        """Add one fresh element ``domain_size``; it is in no relation.

        With ``extend_order`` the distinguished order gains ``(e, new)`` for
        every old element ``e``, making the new point the maximum.
        """
        new = self.domain_size
        rels = self.relations
        if extend_order:
            order = self.vocabulary.order
            if order is None:
                raise StructureError("no distinguished order to extend")
            rels = dict(rels)
            rels[order] = rels[order] | {(e, new) for e in range(new)}
        return Structure(self.vocabulary, new + 1, rels, check=False)

    def delete(self, elements: Iterable[int]) -> "Structure":
        """Remove ``elements``; survivors are renamed to ``0..`` keeping order."""
        gone = set(elements)
        if not gone:
            return self
        survivors = [e for e in range(self.domain_size) if e not in gone]
        rename = {e: i for i, e in enumerate(survivors)}
        rels = {}
        for name, rel in self.relations.items():
            rels[name] = frozenset(
                tuple(rename[e] for e in t) for t in rel if all(e in rename for e in t)
            )
        return Structure(self.vocabulary, len(survivors), rels, check=False)

    def expand(self, symbols: Iterable[Symbol]) -> "Structure":
        """Add symbols interpreted as empty relations."""
        vocab = self.vocabulary.extend(symbols)
        return Structure(vocab, self.domain_size, self.relations, check=False)

    def reduct(self, names: Iterable[str] | None = None) -> "Structure":
        """Restrict to ``names``; by default drop every tape predicate."""
        if names is None:
            keep = self.vocabulary.without_tapes()
        else:
            wanted = set(names)
            syms = tuple(s for s in self.vocabulary if s.name in wanted)
            order = self.vocabulary.order if self.vocabulary.order in wanted else None
            keep = Vocabulary(syms, order)
        rels = {s.name: self.relations[s.name] for s in keep}
        return Structure(keep, self.domain_size, rels, check=False)

    def changed_symbols(self, other: "Structure") -> list[str]:
        names = []
        for name, rel in self.relations.items():
            if other.relations.get(name) != rel:
                names.append(name)
        return names


def pi_expand(m: Structure, tapes: Sequence[tuple[str, int]]) -> Structure:
    """Expand ``m`` by tape predicates, each interpreted as empty (nullary: false)."""
    for name, _ in tapes:
        if name in m.vocabulary:
            raise VocabularyConflict(f"tape predicate {name!r} collides with the input vocabulary")
    return m.expand(Symbol(name, arity, tape=True) for name, arity in tapes)


# -- tuple orders --------------------------------------------------------

def all_tuples(domain_size: int, arity: int) -> list[tuple[int, ...]]:
    """All arity-tuples over ``range(domain_size)`` in lexicographic order."""
    return list(itertools.product(range(domain_size), repeat=arity))


def lex_rank(t: Sequence[int], domain_size: int) -> int:
    rank = 0
    for e in t:
        if not 0 <= e < domain_size:
            raise StructureError(f"component {e} out of range for domain size {domain_size}")
        rank = rank * domain_size + e
    return rank


def relation_to_int(rel: Iterable[tuple], domain_size: int, arity: int) -> int:
    """Read a relation's bit string as a numeral, rank-0 tuple most significant."""
    width = domain_size ** arity
    value = 0
    for t in rel:
        value |= 1 << (width - 1 - lex_rank(t, domain_size))
    return value


def int_to_relation(value: int, domain_size: int, arity: int) -> frozenset:
    width = domain_size ** arity
    if not 0 <= value < (1 << width):
        raise StructureError(f"numeral {value} does not fit {width} bits")
    tuples = all_tuples(domain_size, arity)
    return frozenset(t for i, t in enumerate(tuples) if value >> (width - 1 - i) & 1)


def relation_increment(rel: Iterable[tuple], domain_size: int, arity: int) -> frozenset:
    """The relation whose numeral is one larger; the all-ones relation is a fixed point."""
    rel = frozenset(rel)
    width = domain_size ** arity
    value = relation_to_int(rel, domain_size, arity)
    if value == (1 << width) - 1:
        return rel
    return int_to_relation(value + 1, domain_size, arity)


# -- encoding --------------------------------------------------------------

def encode(m: Structure, order: Sequence[int] | None = None) -> str:
    """``1^n 0`` followed by one bit block per relation symbol.

    ``order`` lists the elements from least to greatest; tape predicates are
    not encoded.
    """
    n = m.domain_size
    if order is None:
        order = range(n)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise StructureError(f"order {order} is not a permutation of the domain")
    parts = ["1" * n, "0"]
    for sym in m.vocabulary.relation_symbols():
        rel = m.relations[sym.name]
        parts.append(
            "".join("1" if t in rel else "0" for t in itertools.product(order, repeat=sym.arity))
        )
    return "".join(parts)


def encoded_length(domain_size: int, vocabulary: Vocabulary) -> int:
    return domain_size + 1 + sum(domain_size ** s.arity for s in vocabulary.relation_symbols())


def decode(bits: str, vocabulary: Vocabulary) -> Structure:
    bits = bits.strip()
    if any(c not in "01" for c in bits):
        raise DecodeError("encoding may only contain 0 and 1")
    n = bits.find("0")
    if n < 0:
        raise DecodeError("missing 0 terminator after the domain block")
    expected = encoded_length(n, vocabulary)
    if len(bits) != expected:
        raise DecodeError(f"length {len(bits)} does not match expected {expected} for domain size {n}")
    pos = n + 1
    rels = {}
    for sym in vocabulary.relation_symbols():
        width = n ** sym.arity
        block = bits[pos:pos + width]
        pos += width
        tuples = all_tuples(n, sym.arity)
        rels[sym.name] = frozenset(t for t, b in zip(tuples, block) if b == "1")
    return Structure(vocabulary, n, rels)


# -- order checking --------------------------------------------------------

@dataclass(frozen=True)
class OrderReport:
    ok: bool
    violation: str | None = None
    witness: tuple = ()

    def __bool__(self):
        return self.ok


def validate_order(m: Structure, symbol: str | None = None) -> OrderReport:
    """Check that the distinguished order is a strict linear order of the domain."""
    name = symbol or m.vocabulary.order
    if name is None:
        return OrderReport(False, "no distinguished order")
    rel = m[name]
    n = m.domain_size
    for a in range(n):
        if (a, a) in rel:
            return OrderReport(False, "irreflexivity", (a,))
    for a, b in rel:
        for c in range(n):
            if (b, c) in rel and (a, c) not in rel:
                return OrderReport(False, "transitivity", (a, b, c))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in rel and (b, a) not in rel:
                return OrderReport(False, "totality", (a, b))
    return OrderReport(True)


def order_permutation(m: Structure) -> list[int]:
    """Elements listed least-first under the distinguished order."""
    rel = m[m.vocabulary.order]
    return sorted(range(m.domain_size), key=lambda e: sum(1 for d in range(m.domain_size) if (d, e) in rel))


def linear_order(perm: Sequence[int]) -> frozenset:
    """The strict order relation listing ``perm`` least-first."""
    return frozenset((perm[i], perm[j]) for i in range(len(perm)) for j in range(i + 1, len(perm)))


# -- text format -------------------------------------------------------------

_TOKEN = re.compile(r"[{}(),]|[^\s{}(),]+")


def _tokens(text: str) -> list[tuple[str, int]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        out.extend((tok, lineno) for tok in _TOKEN.findall(line))
    return out


def _parse_decls(text: str, need_domain: bool):
    toks = _tokens(text)
    i = 0
    domain = None
    order = None
    symbols: list[Symbol] = []
    rels: dict[str, list[tuple]] = {}

    def expect(value=None):
        nonlocal i
        if i >= len(toks):
            raise ModelFormatError("unexpected end of input")
        tok, line = toks[i]
        if value is not None and tok != value:
            raise ModelFormatError(f"line {line}: expected {value!r}, found {tok!r}")
        i += 1
        return tok, line

    def integer():
        tok, line = expect()
        if not tok.isdigit():
            raise ModelFormatError(f"line {line}: expected a number, found {tok!r}")
        return int(tok)

    while i < len(toks):
        word, line = expect()
        if word == "domain":
            domain = integer()
        elif word == "order":
            order, _ = expect()
        elif word in ("rel", "tape"):
            name, _ = expect()
            arity = integer()
            symbols.append(Symbol(name, arity, tape=(word == "tape")))
            body: list[tuple] = []
            if i < len(toks) and toks[i][0] == "{":
                expect("{")
                while toks[i][0] != "}":
                    tok, tline = toks[i]
                    if tok == "true":
                        i += 1
                        body.append(())
                    elif tok == "false":
                        i += 1
                    elif tok == "(":
                        i += 1
                        t = []
                        while toks[i][0] != ")":
                            t.append(integer())
                            if toks[i][0] == ",":
                                i += 1
                        i += 1
                        body.append(tuple(t))
                    else:
                        raise ModelFormatError(f"line {tline}: unexpected {tok!r} in relation body")
                    if i >= len(toks):
                        raise ModelFormatError("unterminated relation body")
                expect("}")
            rels[name] = body
        else:
            raise ModelFormatError(f"line {line}: unknown declaration {word!r}")
    if need_domain and domain is None:
        raise ModelFormatError("missing 'domain N' line")
    try:
        vocab = Vocabulary(tuple(symbols), order)
    except VocabularyConflict as exc:
        raise ModelFormatError(str(exc)) from None
    return domain, vocab, rels


def parse_model(text: str) -> Structure:
    domain, vocab, rels = _parse_decls(text, need_domain=True)
    try:
        return Structure(vocab, domain, rels)
    except StructureError as exc:
        raise ModelFormatError(str(exc)) from None


def parse_vocabulary(text: str) -> Vocabulary:
    """Read ``rel``/``tape``/``order`` declarations; bodies and ``domain`` are ignored."""
    _, vocab, _ = _parse_decls(text, need_domain=False)
    return vocab


def format_model(m: Structure) -> str:
    lines = [f"domain {m.domain_size}"]
    if m.vocabulary.order is not None:
        lines.append(f"order {m.vocabulary.order}")
    for sym in m.vocabulary:
        kw = "tape" if sym.tape else "rel"
        rel = m.relations[sym.name]
        if sym.arity == 0:
            body = "true" if rel else "false"
        else:
            body = " ".join("(" + ",".join(map(str, t)) + ")" for t in sorted(rel))
        lines.append(f"{kw} {sym.name} {sym.arity} {{ {body} }}".replace("{  }", "{ }"))
    return "\n".join(lines) + "\n"


def format_vocabulary(vocab: Vocabulary) -> str:
    lines = []
    if vocab.order is not None:
        lines.append(f"order {vocab.order}")
    for sym in vocab:
        lines.append(f"{'tape' if sym.tape else 'rel'} {sym.name} {sym.arity}")
    return "\n".join(lines) + "\n"


def enumerate_structures(vocabulary: Vocabulary, domain_size: int) -> Iterator[Structure]:
    """Every structure over ``vocabulary`` with the given domain size."""
    syms = vocabulary.symbols
    spaces = [range(1 << (domain_size ** s.arity)) for s in syms]
    for values in itertools.product(*spaces):
        rels = {s.name: int_to_relation(v, domain_size, s.arity) for s, v in zip(syms, values)}
        yield Structure(vocabulary, domain_size, rels, check=False)
