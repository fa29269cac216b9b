"""Agent games over sorted GRL programs and strongly elementary systems.

An arena node is a configuration whose pending line is labelled ``A``
(the agents pick jointly) or ``G`` (the controller picks), or a terminal.
The agents act as one coalition trying to reach a halt with ``X_true``;
the controller is treated as an adversary.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import BudgetExceeded, ModelFormatError, SimulationError, UnsupportedInput
from .execution import Configuration, Executor, Halt
from .model import Structure, parse_model
from .search import SearchBudget
from .syntax import Dialect, Par, Program


class NodeKind(str, enum.Enum):
    AGENT = "agent"
    CONTROLLER = "controller"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class Edge:
    label: object
    target: int


@dataclass
class ArenaNode:
    id: int
    structure: Structure
    line: int | None
    kind: NodeKind
    goal: bool = False
    reason: str | None = None


@dataclass
class GameArena:
    nodes: list[ArenaNode]
    edges: list[list[Edge]]
    agents: int
    initial: int = 0

    def __len__(self):
        return len(self.nodes)

    @property
    def goal(self) -> set[int]:
        return {n.id for n in self.nodes if n.goal}

    def successors(self, v: int) -> list[int]:
        return [e.target for e in self.edges[v]]


def _check_sorted(p: Program) -> int:
    if p.dialect is not Dialect.GRL:
        raise UnsupportedInput("games need a GRL program")
    unlabelled = [ln.number for ln in p.lines if ln.label not in ("A", "G")]
    if unlabelled:
        raise UnsupportedInput(f"lines {unlabelled} carry no A/G label")
    if p.agents is None:
        raise UnsupportedInput("program does not declare its agent count")
    return p.agents


def build_arena(p: Program, m: Structure, bounds: SearchBudget) -> GameArena:
    """Every node reachable from the start within ``bounds``, in BFS discovery order.

    Configurations past ``max_domain_size`` or first reached at depth
    ``max_steps_per_branch`` become non-goal terminals; more than
    ``max_visited_configurations`` nodes raises :class:`BudgetExceeded`.
    """
    agents = _check_sorted(p)
    ex = Executor(p, max_options=bounds.max_visited_configurations)
    nodes: list[ArenaNode] = []
    edges: list[list[Edge]] = []
    index: dict[tuple, int] = {}
    queue: deque[tuple[int, Configuration]] = deque()

    def add(key, structure, line, kind, goal=False, reason=None, config=None) -> int:
        if key in index:
            return index[key]
        if len(nodes) >= bounds.max_visited_configurations:
            raise BudgetExceeded(
                f"arena exceeds {bounds.max_visited_configurations} nodes", "max_visited_configurations"
            )
        v = len(nodes)
        index[key] = v
        nodes.append(ArenaNode(v, structure, line, kind, goal, reason))
        edges.append([])
        if config is not None:
            queue.append((v, config))
        return v

    def terminal(h: Halt) -> int:
        reason = h.reason.value if h.detail is None else f"{h.reason.value}:{h.detail}"
        if h.structure.domain_size > bounds.max_domain_size:
            return add(("cut", h.structure, "domain"), h.structure, None, NodeKind.TERMINAL,
                       reason="truncated-domain")
        return add(("halt", h.structure, reason), h.structure, None, NodeKind.TERMINAL,
                   h.accepted, reason)

    def live(c: Configuration) -> int:
        if c.structure.domain_size > bounds.max_domain_size:
            return add(("cut", c.structure, "domain"), c.structure, None, NodeKind.TERMINAL,
                       reason="truncated-domain")
        kind = NodeKind.AGENT if p.line(c.line).label == "A" else NodeKind.CONTROLLER
        return add(("live", c.structure, c.line), c.structure, c.line, kind, config=c)

    start = ex.initial(m)
    if isinstance(start, Halt):
        terminal(start)
    else:
        live(start)

    while queue:
        v, config = queue.popleft()
        if config.steps >= bounds.max_steps_per_branch:
            nodes[v].kind = NodeKind.TERMINAL
            nodes[v].reason = "truncated-steps"
            continue
        rule = p.line(config.line).rule
        if nodes[v].kind is NodeKind.AGENT:
            if not isinstance(rule, Par) or len(rule.parts) != agents:
                raise UnsupportedInput(f"A-line {config.line} is not a {agents}-part parallel rule")
            options = ex.joint_options(rule, config.structure)
            moves = [(label, ex._parallel(rules, config)) for label, rules in options]
        else:
            cp = ex.choice_point(config)
            if cp is None:
                moves = [(None, ex.execute(config, None, None))]
            else:
                labels = cp.labels or tuple(range(len(cp.options)))
                moves = [(labels[i], ex.execute(config, cp, i)) for i in range(len(cp.options))]
        for label, outcome in moves:
            target = terminal(outcome) if isinstance(outcome, Halt) else live(outcome.config)
            edges[v].append(Edge(label, target))
        if not edges[v]:
            nodes[v].kind = NodeKind.TERMINAL
            nodes[v].reason = "no-moves"
    return GameArena(nodes, edges, agents, 0)


# ---------------------------------------------------------------------------
# solving

@dataclass
class Solution:
    winning: bool
    attractor: dict[int, int]
    strategy: dict[int, int]
    arena: GameArena

    def joint_choice(self, v: int):
        return self.arena.edges[v][self.strategy[v]].label


def solve_reachability(arena: GameArena) -> Solution:
    """Attractor of the goal set: agents need one good edge, the controller
    must have only good edges.  ``attractor`` maps nodes to their rank and
    ``strategy`` picks, at every agent node inside it, the first edge that
    strictly lowers the rank."""
    n = len(arena.nodes)
    preds: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for e in arena.edges[v]:
            preds[e.target].append(v)
    remaining = [len(es) for es in arena.edges]
    rank = {v: 0 for v in range(n) if arena.nodes[v].goal}
    layer = sorted(rank)
    r = 0
    while layer:
        r += 1
        fresh: set[int] = set()
        for u in layer:
            for v in preds[u]:
                if v in rank or v in fresh:
                    continue
                kind = arena.nodes[v].kind
                if kind is NodeKind.AGENT:
                    fresh.add(v)
                elif kind is NodeKind.CONTROLLER:
                    remaining[v] -= 1
                    if remaining[v] == 0:
                        fresh.add(v)
        for v in fresh:
            rank[v] = r
        layer = sorted(fresh)
    strategy = {}
    for v, rv in rank.items():
        if arena.nodes[v].kind is NodeKind.AGENT:
            strategy[v] = next(
                i for i, e in enumerate(arena.edges[v]) if rank.get(e.target, rv) < rv
            )
    return Solution(arena.initial in rank, rank, strategy, arena)


def minimax(arena: GameArena, depth: int | None = None) -> bool:
    """Brute-force game value by depth-bounded recursion (independent of the attractor)."""
    depth = len(arena.nodes) if depth is None else depth

    @lru_cache(maxsize=None)
    def win(v: int, d: int) -> bool:
        node = arena.nodes[v]
        if node.kind is NodeKind.TERMINAL:
            return node.goal
        if d == 0:
            return False
        results = (win(t, d - 1) for t in arena.successors(v))
        return any(results) if node.kind is NodeKind.AGENT else all(results)

    return win(arena.initial, depth)


def strategy_adequate(arena: GameArena, strategy: Mapping[int, int]) -> bool:
    """Does following ``strategy`` reach the goal against every controller?

    True iff the graph restricted to strategy edges at agent nodes is
    acyclic from the start and every sink there is a goal.
    """
    WHITE, GREY, BLACK = 0, 1, 2
    color = [WHITE] * len(arena.nodes)

    def moves(v):
        node = arena.nodes[v]
        if node.kind is NodeKind.AGENT:
            if v not in strategy:
                return None
            return [arena.edges[v][strategy[v]].target]
        return arena.successors(v)

    start = arena.nodes[arena.initial]
    if start.kind is NodeKind.TERMINAL:
        return start.goal
    first = moves(arena.initial)
    if first is None:
        return False
    color[arena.initial] = GREY
    stack = [(arena.initial, iter(first))]
    while stack:
        v, it = stack[-1]
        t = next(it, None)
        if t is None:
            color[v] = BLACK
            stack.pop()
            continue
        if color[t] == GREY:
            return False
        if color[t] == BLACK:
            continue
        node = arena.nodes[t]
        if node.kind is NodeKind.TERMINAL:
            if not node.goal:
                return False
            color[t] = BLACK
            continue
        nxt = moves(t)
        if nxt is None:
            return False
        color[t] = GREY
        stack.append((t, iter(nxt)))
    return True


def split_strategy(strategy: Mapping[int, int], arena: GameArena) -> list[dict[int, object]]:
    """Per-agent tables: agent ``i`` at node ``v`` plays component ``i`` of the joint label."""
    tables: list[dict[int, object]] = [{} for _ in range(arena.agents)]
    for v, idx in strategy.items():
        label = arena.edges[v][idx].label
        for i, part in enumerate(label):
            tables[i][v] = part
    return tables


def rejoin(tables: Sequence[Mapping[int, object]], arena: GameArena) -> dict[int, int]:
    """Inverse of :func:`split_strategy`: back to edge indices."""
    nodes = set().union(*(t.keys() for t in tables)) if tables else set()
    out = {}
    for v in sorted(nodes):
        label = tuple(t[v] for t in tables)
        out[v] = next(i for i, e in enumerate(arena.edges[v]) if e.label == label)
    return out


# ---------------------------------------------------------------------------
# export

def arena_to_dict(arena: GameArena) -> dict:
    return {
        "agents": arena.agents,
        "initial": arena.initial,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "line": n.line,
                "size": n.structure.domain_size,
                "goal": n.goal,
                "reason": n.reason,
                "edges": [{"label": _label(e.label), "target": e.target} for e in arena.edges[n.id]],
            }
            for n in arena.nodes
        ],
    }


def _label(label):
    if isinstance(label, tuple):
        return [_label(x) for x in label]
    return label


def format_arena(arena: GameArena) -> str:
    out = [f"# agents={arena.agents} initial={arena.initial} nodes={len(arena.nodes)}"]
    for n in arena.nodes:
        head = f"node {n.id} {n.kind.value}"
        if n.line is not None:
            head += f" line={n.line}"
        head += f" |M|={n.structure.domain_size}"
        if n.goal:
            head += " goal"
        if n.reason:
            head += f" reason={n.reason}"
        out.append(head)
        for e in arena.edges[n.id]:
            out.append(f"  -> {e.target} label={json.dumps(_label(e.label))}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# strongly elementary systems

END = "end"


@dataclass
class AgentTables:
    perceive: dict[str, str]
    decide: dict[tuple[str, str], tuple[str, str]]
    initial: str


@dataclass
class ElementarySystem:
    """Finite system: structures by name, transition tables ``F``/``G`` and agents.

    ``F`` maps a history suffix (a tuple of ``(structure, actions)`` pairs,
    at most ``suffix`` long) to the admissible next structures; ``G`` maps
    ``(suffix, frozenset of candidates)`` to one of them or :data:`END`.
    """

    structures: dict[str, Structure | None]
    actions: tuple[str, ...]
    agents: dict[str, AgentTables]
    F: dict[tuple, frozenset]
    G: dict[tuple, str]
    suffix: int = 1

    def name_of(self, s: Structure | str) -> str:
        if isinstance(s, str):
            if s not in self.structures:
                raise SimulationError(f"unknown structure {s!r}")
            return s
        for name, value in self.structures.items():
            if value == s:
                return name
        raise SimulationError("initial structure is not in the system")


@dataclass
class SystemRun:
    """The structure-ended sequence ``M0, a0, M1, ..., Mk`` and why it stopped."""

    sequence: list
    stop: str
    mental: list[dict[str, str]] = field(default_factory=list)

    @property
    def structures(self) -> list[str]:
        return self.sequence[0::2]

    @property
    def joint_actions(self) -> list[tuple[str, ...]]:
        return self.sequence[1::2]


def simulate_system(sys: ElementarySystem, initial: Structure | str, rounds: int) -> SystemRun:
    current = sys.name_of(initial)
    mental = {name: a.initial for name, a in sys.agents.items()}
    sequence: list = [current]
    history: list[tuple[str, tuple[str, ...]]] = []
    states = [dict(mental)]
    for _ in range(rounds):
        joint = []
        for name, tables in sys.agents.items():
            if current not in tables.perceive:
                raise SimulationError(f"agent {name}: no perception for structure {current!r}")
            percept = tables.perceive[current]
            key = (mental[name], percept)
            if key not in tables.decide:
                raise SimulationError(f"agent {name}: no decision for {key}")
            action, mental[name] = tables.decide[key]
            joint.append(action)
        history.append((current, tuple(joint)))
        key = tuple(history[-sys.suffix:])
        if key not in sys.F:
            return SystemRun(sequence, "F-undefined", states)
        candidates = sys.F[key]
        gkey = (key, candidates)
        if gkey in sys.G:
            nxt = sys.G[gkey]
        elif not candidates:
            nxt = END
        else:
            raise SimulationError(f"G undefined on {_format_key(key)} {_format_set(candidates)}")
        if nxt == END:
            return SystemRun(sequence, "G-end", states)
        if nxt not in candidates:
            raise SimulationError(f"G chose {nxt!r} outside {_format_set(candidates)}")
        sequence.extend([tuple(joint), nxt])
        states.append(dict(mental))
        current = nxt
    return SystemRun(sequence, "rounds", states)


def _format_key(key) -> str:
    return " ".join(f"{s} [{','.join(a)}]" for s, a in key)


def _format_set(names: Iterable[str]) -> str:
    return "{" + ",".join(sorted(names)) + "}"


def format_run(run: SystemRun) -> str:
    parts = []
    for i, item in enumerate(run.sequence):
        parts.append(item if i % 2 == 0 else "(" + ",".join(item) + ")")
    return " ".join(parts)


def _sys_tokens(text: str) -> list[str]:
    for ch in "{}[](),":
        text = text.replace(ch, f" {ch} ")
    text = text.replace("->", " -> ")
    return text.split()


def parse_system(text: str, base: Path | str | None = None) -> ElementarySystem:
    """Read the ``.sys`` format (see README); model paths resolve against ``base``."""
    base = Path(base) if base is not None else Path(".")
    structures: dict[str, Structure | None] = {}
    actions: list[str] = []
    agents: dict[str, AgentTables] = {}
    F: dict[tuple, frozenset] = {}
    G: dict[tuple, str] = {}
    suffix = 1
    agent: str | None = None

    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = _sys_tokens(line)
        head, rest = toks[0], toks[1:]

        def fail(msg):
            return ModelFormatError(f"line {number}: {msg}")

        try:
            if head == "structure":
                name = rest[0]
                if len(rest) > 1:
                    path = base / " ".join(rest[1:])
                    structures[name] = parse_model(path.read_text())
                else:
                    structures[name] = None
            elif head == "actions":
                actions.extend(rest)
            elif head == "suffix":
                suffix = int(rest[0])
            elif head == "agent":
                agent = rest[0]
                agents[agent] = AgentTables({}, {}, "")
            elif head in ("perceive", "decide", "initial"):
                if agent is None:
                    raise fail(f"{head} outside an agent block")
                tables = agents[agent]
                if head == "initial":
                    tables.initial = rest[0]
                elif head == "perceive":
                    s, arrow, percept = rest
                    if arrow != "->":
                        raise fail("expected 'perceive S -> P'")
                    tables.perceive[s] = percept
                else:
                    words = [t for t in rest if t != ","]
                    m, percept, arrow, action, m2 = words
                    if arrow != "->":
                        raise fail("expected 'decide M, P -> A, M2'")
                    tables.decide[(m, percept)] = (action, m2)
            elif head in ("F", "G"):
                arrow = rest.index("->")
                key, pos = _parse_key(rest[:arrow], fail, allow_set=head == "G")
                target = rest[arrow + 1:]
                if head == "F":
                    F[key] = _parse_set(target, fail)
                else:
                    if pos is None:
                        raise fail("G needs a candidate set")
                    if len(target) != 1:
                        raise fail("G maps to one structure or 'end'")
                    G[(key, pos)] = target[0]
            else:
                raise fail(f"unknown directive {head!r}")
        except (ValueError, IndexError) as exc:
            raise ModelFormatError(f"line {number}: malformed {head} line") from exc
        except OSError as exc:
            raise ModelFormatError(f"line {number}: {exc}") from exc

    for name, tables in agents.items():
        if not tables.initial:
            raise ModelFormatError(f"agent {name} has no initial mental state")
    system = ElementarySystem(structures, tuple(actions), agents, F, G, suffix)
    _check_system(system)
    return system


def _parse_key(toks: list[str], fail, allow_set: bool):
    key = []
    i = 0
    cand = None
    while i < len(toks):
        if toks[i] == "{":
            if not allow_set:
                raise fail("unexpected candidate set")
            cand = _parse_set(toks[i:], fail)
            break
        name = toks[i]
        if i + 1 >= len(toks) or toks[i + 1] != "[":
            raise fail(f"structure {name} needs an action tuple [a,...]")
        close = toks.index("]", i)
        acts = tuple(t for t in toks[i + 2:close] if t != ",")
        key.append((name, acts))
        i = close + 1
    if not key:
        raise fail("empty history key")
    return tuple(key), cand


def _parse_set(toks: list[str], fail) -> frozenset:
    if not toks or toks[0] != "{" or toks[-1] != "}":
        raise fail("expected {s, ...}")
    return frozenset(t for t in toks[1:-1] if t != ",")


def _check_system(sys: ElementarySystem) -> None:
    names = set(sys.structures)
    known_actions = set(sys.actions)
    for key, cands in sys.F.items():
        for s, acts in key:
            if s not in names:
                raise ModelFormatError(f"F key mentions unknown structure {s!r}")
            if known_actions and not set(acts) <= known_actions:
                raise ModelFormatError(f"F key {_format_key(key)} uses an undeclared action")
            if len(acts) != len(sys.agents):
                raise ModelFormatError(f"F key {_format_key(key)} needs {len(sys.agents)} actions")
        if not cands <= names:
            raise ModelFormatError(f"F value {_format_set(cands)} mentions unknown structures")
    for (key, cands), target in sys.G.items():
        if target != END and target not in cands:
            raise ModelFormatError(f"G on {_format_key(key)} picks {target!r} outside its candidates")
    for name, tables in sys.agents.items():
        for (_, _), (action, _) in tables.decide.items():
            if known_actions and action not in known_actions:
                raise ModelFormatError(f"agent {name} uses undeclared action {action!r}")


def load_system(path: Path | str) -> ElementarySystem:
    path = Path(path)
    return parse_system(path.read_text(), path.parent)
