"""``relog`` command-line front end.

Exit codes: 0 accepted / winning / success, 1 rejected / not winning,
2 a budget ran out, 3 usage, parse or validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Sequence, TextIO

from .errors import BudgetExceeded, RelogError
from .execution import ChoicePoint, TraceResolver, Verdict, run
from .game import (
    arena_to_dict,
    build_arena,
    format_arena,
    format_run,
    load_system,
    simulate_system,
    solve_reachability,
    split_strategy,
)
from .model import Structure, decode, encode, format_model, parse_model, parse_vocabulary
from .search import SearchBudget, Trace, compute_construction, search_accepting
from .syntax import (
    check_program,
    compile_lre_to_rl,
    compile_lre_to_rlo,
    format_program,
    parse_program,
    parse_sentence,
    validate_text,
)

EXIT_OK, EXIT_NO, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 3
DEFAULT_FUEL = 10_000
DOMAIN_SLACK = 8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# trace files

def digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def program_hash(p) -> str:
    return digest(format_program(p))


def input_hash(m: Structure) -> str:
    return digest(format_model(m))


def format_trace(trace: Trace, p, m: Structure) -> str:
    out = ["# relog trace", f"program sha256:{program_hash(p)}", f"input sha256:{input_hash(m)}"]
    for line, choice in trace.steps:
        out.append(f"line={line}" if choice is None else f"line={line} choice={choice}")
    return "\n".join(out) + "\n"


def parse_trace(text: str) -> tuple[dict[str, str], Trace]:
    header: dict[str, str] = {}
    steps = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] in ("program", "input") and len(words) == 2:
            header[words[0]] = words[1].removeprefix("sha256:")
            continue
        fields = dict(w.split("=", 1) for w in words if "=" in w)
        if "line" not in fields or len(fields) != len(words):
            raise RelogError(f"trace line {number}: expected 'line=L [choice=I]'")
        try:
            choice = int(fields["choice"]) if "choice" in fields else None
            steps.append((int(fields["line"]), choice))
        except ValueError:
            raise RelogError(f"trace line {number}: numbers expected") from None
    return header, Trace(tuple(steps))


# ---------------------------------------------------------------------------
# helpers

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def _load_program(path: str):
    return parse_program(_read(path))


def _load_model(path: str) -> Structure:
    return parse_model(_read(path))


def _trace_steps(result) -> Trace:
    return Trace(tuple((t.line, t.choice) for t in result.trace))


class Reporter:
    def __init__(self, fmt: str, out: TextIO):
        self.json = fmt == "json"
        self.out = out
        self.data: dict = {}

    def text(self, line: str = ""):
        if not self.json:
            print(line, file=self.out)

    def set(self, **kw):
        self.data.update(kw)

    def finish(self, code: int) -> int:
        if self.json:
            self.data.setdefault("exit_code", code)
            print(json.dumps(self.data, sort_keys=True), file=self.out)
        return code


def interactive_resolver(stdin: TextIO, out: TextIO):
    def resolve(cp: ChoicePoint) -> int:
        labels = cp.labels or tuple(range(len(cp.options)))
        print(f"line {cp.line}: {cp.kind} choice", file=out)
        for i, label in enumerate(labels):
            print(f"  [{i}] {label}", file=out)
        while True:
            print("choice> ", end="", file=out, flush=True)
            answer = stdin.readline()
            if not answer:
                raise UsageError("input ended during an interactive choice")
            try:
                index = int(answer.strip())
            except ValueError:
                continue
            if 0 <= index < len(labels):
                return index

    return resolve


# ---------------------------------------------------------------------------
# subcommands

def cmd_run(args, rep: Reporter) -> int:
    p = _load_program(args.program)
    m = _load_model(args.model)
    resolver = None
    if args.replay:
        header, trace = parse_trace(_read(args.replay))
        if header.get("program") not in (None, program_hash(p)):
            raise UsageError("trace was recorded for a different program")
        if header.get("input") not in (None, input_hash(m)):
            raise UsageError("trace was recorded for a different input")
        resolver = TraceResolver(trace.choices)
    result = run(p, m, args.fuel, resolver, trace=bool(args.trace or args.save_trace))
    if args.trace:
        for t in result.trace:
            rep.text(str(t))
    rep.text(result.summary_line())
    if result.verdict is not Verdict.FUEL:
        rep.text(format_model(result.structure).rstrip())
    if args.save_trace:
        Path(args.save_trace).write_text(format_trace(_trace_steps(result), p, m))
    rep.set(
        command="run",
        result=result.verdict.value,
        reason=result.reason,
        steps=result.steps,
        structure=format_model(result.structure),
        trace=[str(t) for t in result.trace] if args.trace else None,
    )
    return {Verdict.ACCEPTED: EXIT_OK, Verdict.REJECTED: EXIT_NO, Verdict.FUEL: EXIT_BUDGET}[result.verdict]


def _budget(args, m: Structure) -> SearchBudget:
    max_domain = args.max_domain if args.max_domain is not None else m.domain_size + DOMAIN_SLACK
    return SearchBudget(args.max_steps, max(max_domain, 1), args.max_visited)


def cmd_search(args, rep: Reporter) -> int:
    p = _load_program(args.program)
    m = _load_model(args.model)
    if args.interactive:
        resolver = interactive_resolver(args.stdin, args.stdout)
        result = run(p, m, args.max_steps, resolver, trace=True)
        rep.text(result.summary_line())
        rep.set(command="search", mode="interactive", result=result.verdict.value, reason=result.reason)
        return {Verdict.ACCEPTED: EXIT_OK, Verdict.REJECTED: EXIT_NO, Verdict.FUEL: EXIT_BUDGET}[
            result.verdict
        ]
    res = search_accepting(p, m, _budget(args, m))
    stats = res.stats
    rep.set(command="search", visited=stats.visited, exhaustive=stats.exhaustive)
    if res.accepted:
        rep.text(f"result=ACCEPTED steps={len(res.trace)} visited={stats.visited}")
        rep.text(format_model(res.structure).rstrip())
        if args.save_trace:
            Path(args.save_trace).write_text(format_trace(res.trace, p, m))
        rep.set(result="ACCEPTED", trace=[list(s) for s in res.trace.steps],
                structure=format_model(res.structure))
        return EXIT_OK
    if stats.exhaustive:
        rep.text(f"result=REJECTED visited={stats.visited} (every computation explored)")
        rep.set(result="REJECTED")
        return EXIT_NO
    rep.text(f"result=NOT_FOUND visited={stats.visited} (budget reached; not a rejection)")
    rep.set(result="NOT_FOUND")
    return EXIT_BUDGET


def cmd_construct(args, rep: Reporter) -> int:
    p = _load_program(args.program)
    m = _load_model(args.model)
    res = compute_construction(p, m, _budget(args, m))
    outputs = sorted(res.pairs.items(), key=lambda kv: (kv[0].domain_size, format_model(kv[0])))
    rep.text(f"pairs={len(outputs)} visited={res.stats.visited} exhaustive={str(res.stats.exhaustive).lower()}")
    for i, (out, trace) in enumerate(outputs):
        rep.text(f"--- output {i} (trace of {len(trace)} steps)")
        rep.text(format_model(out).rstrip())
        if args.save_traces:
            folder = Path(args.save_traces)
            folder.mkdir(parents=True, exist_ok=True)
            (folder / f"output-{i}.trace").write_text(format_trace(trace, p, m))
    rep.set(
        command="construct",
        exhaustive=res.stats.exhaustive,
        outputs=[{"structure": format_model(o), "trace": [list(s) for s in t.steps]} for o, t in outputs],
    )
    if outputs:
        return EXIT_OK
    return EXIT_NO if res.stats.exhaustive else EXIT_BUDGET


def cmd_game(args, rep: Reporter) -> int:
    p = check_program(_load_program(args.program))
    m = _load_model(args.model)
    if p.agents != args.agents:
        raise UsageError(f"program declares {p.agents} agents, --agents says {args.agents}")
    arena = build_arena(p, m, _budget(args, m))
    sol = solve_reachability(arena)
    if args.export_arena:
        path = Path(args.export_arena)
        if path.suffix == ".json":
            path.write_text(json.dumps(arena_to_dict(arena), indent=2) + "\n")
        else:
            path.write_text(format_arena(arena))
    truncated = sum(1 for n in arena.nodes if (n.reason or "").startswith("truncated"))
    rep.text(f"nodes={len(arena.nodes)} truncated={truncated} winning={str(sol.winning).lower()}")
    if truncated:
        rep.text("note: truncated nodes count as losses, so 'false' may be an artifact of the bounds")
    tables = split_strategy(sol.strategy, arena)
    if sol.winning:
        for i, table in enumerate(tables, 1):
            moves = " ".join(f"{v}:{table[v]}" for v in sorted(table))
            rep.text(f"f{i}: {moves}")
    rep.set(
        command="game",
        winning=sol.winning,
        nodes=len(arena.nodes),
        truncated=truncated,
        strategy={str(v): list(sol.joint_choice(v)) for v in sorted(sol.strategy)},
    )
    return EXIT_OK if sol.winning else EXIT_NO


def cmd_simulate(args, rep: Reporter) -> int:
    system = load_system(args.system)
    initial = args.initial
    if initial is None:
        initial = next(iter(system.structures), None)
        if initial is None:
            raise UsageError("system declares no structures")
    result = simulate_system(system, initial, args.rounds)
    rep.text(format_run(result))
    rep.text(f"stop={result.stop}")
    rep.set(
        command="simulate",
        structures=result.structures,
        actions=[list(a) for a in result.joint_actions],
        stop=result.stop,
    )
    return EXIT_OK


def cmd_encode(args, rep: Reporter) -> int:
    m = _load_model(args.model)
    order = None
    if args.order:
        try:
            order = [int(x) for x in args.order.replace(",", " ").split()]
        except ValueError:
            raise UsageError("--order takes a comma-separated permutation") from None
        if sorted(order) != list(range(m.domain_size)):
            raise UsageError(f"--order is not a permutation of 0..{m.domain_size - 1}")
    bits = encode(m, order)
    rep.text(bits)
    rep.set(command="encode", bits=bits)
    return EXIT_OK


def cmd_decode(args, rep: Reporter) -> int:
    vocab = parse_vocabulary(_read(args.vocab))
    m = decode(args.bits.strip(), vocab)
    rep.text(format_model(m).rstrip())
    rep.set(command="decode", structure=format_model(m))
    return EXIT_OK


def cmd_compile(args, rep: Reporter) -> int:
    s = parse_sentence(_read(args.sentence))
    p = compile_lre_to_rlo(s, args.order) if args.target == "rlo" else compile_lre_to_rl(s)
    text = format_program(p)
    rep.text(text.rstrip())
    rep.set(command="compile-lre", program=text)
    return EXIT_OK


def cmd_validate(args, rep: Reporter) -> int:
    _, report = validate_text(_read(args.program))
    for d in report.diagnostics:
        rep.text(str(d))
    rep.text("ok" if report.ok else "invalid")
    rep.set(command="validate", ok=report.ok, diagnostics=[str(d) for d in report.diagnostics])
    return EXIT_OK if report.ok else EXIT_USAGE


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relog", description="Run and analyse rule programs over finite structures.")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def bounds(sp, steps_default):
        sp.add_argument("--max-steps", type=int, default=steps_default)
        sp.add_argument("--max-domain", type=int, default=None,
                        help=f"default: input size + {DOMAIN_SLACK}")
        sp.add_argument("--max-visited", type=int, default=100_000)

    sp = sub.add_parser("run", help="execute a program on a model")
    sp.add_argument("program")
    sp.add_argument("model")
    sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("--replay", metavar="FILE")
    sp.add_argument("--save-trace", metavar="FILE")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("search", help="look for an accepting computation")
    sp.add_argument("program")
    sp.add_argument("model")
    bounds(sp, 1000)
    sp.add_argument("--interactive", action="store_true")
    sp.add_argument("--save-trace", metavar="FILE")
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("construct", help="enumerate outputs of accepting computations")
    sp.add_argument("program")
    sp.add_argument("model")
    bounds(sp, 1000)
    sp.add_argument("--save-traces", metavar="DIR")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("game", help="solve a sorted GRL program as a reachability game")
    sp.add_argument("program")
    sp.add_argument("model")
    sp.add_argument("--agents", type=int, required=True)
    bounds(sp, 1000)
    sp.add_argument("--export-arena", metavar="FILE")
    sp.set_defaults(func=cmd_game)

    sp = sub.add_parser("simulate", help="run a strongly elementary system")
    sp.add_argument("system")
    sp.add_argument("--rounds", type=int, required=True)
    sp.add_argument("--initial", default=None, help="structure name (default: first declared)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("encode", help="binary encoding of a model")
    sp.add_argument("model")
    sp.add_argument("--order", default=None, help="element permutation, least first, e.g. 1,0")
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="model from its binary encoding")
    sp.add_argument("bits")
    sp.add_argument("--vocab", required=True)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("compile-lre", help="compile a witness sentence into a program")
    sp.add_argument("sentence")
    sp.add_argument("--target", choices=("rlo", "rl"), required=True)
    sp.add_argument("--order", default="<", help="order symbol for the rlo target")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("validate", help="check a program")
    sp.add_argument("program")
    sp.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None,
         stdin: TextIO | None = None) -> int:
    out = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    fmt = _requested_format(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(fmt, out, f"usage: {exc}")
    args.stdout = out
    args.stdin = stdin or sys.stdin
    rep = Reporter(args.format, out)
    try:
        return rep.finish(args.func(args, rep))
    except UsageError as exc:
        return _fail(args.format, out, str(exc))
    except BudgetExceeded as exc:
        rep.set(error=str(exc), dimension=exc.dimension)
        rep.text(f"budget exhausted ({exc.dimension}): {exc}")
        return rep.finish(EXIT_BUDGET)
    except RelogError as exc:
        return _fail(args.format, out, str(exc))


def _requested_format(argv: list[str]) -> str:
    for i, a in enumerate(argv):
        if a == "--format=json" or (a == "--format" and argv[i + 1:i + 2] == ["json"]):
            return "json"
    return "text"


def _fail(fmt: str, out: TextIO, message: str) -> int:
    if fmt == "json":
        print(json.dumps({"error": message, "exit_code": EXIT_USAGE}), file=out)
    else:
        print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
