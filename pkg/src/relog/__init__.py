"""Rule-based logics over finite relational structures.

The submodules follow the layers of the toolkit: :mod:`relog.model`
(structures and encodings), :mod:`relog.logic` (FO/ESO formulas),
:mod:`relog.syntax` (programs and compilers), :mod:`relog.execution`,
:mod:`relog.search`, :mod:`relog.game` and the :mod:`relog.cli` front end.
"""

from .errors import (
    BudgetExceeded,
    DecodeError,
    EvaluationError,
    ModelFormatError,
    ParseError,
    RelogError,
    ResolverError,
    SimulationError,
    StructureError,
    UnsupportedInput,
    ValidationError,
    VocabularyConflict,
)
from .execution import Configuration, Halt, HaltReason, Verdict, apply_parallel, run, step
from .game import build_arena, load_system, simulate_system, solve_reachability
from .logic import LreSentence, eval_eso, eval_fo, eval_lre_bounded, parse_formula
from .model import Structure, Symbol, Vocabulary, decode, encode, parse_model, pi_expand
from .search import SearchBudget, build_pair_structure, compute_construction, search_accepting
from .syntax import Dialect, Program, compile_lre_to_rl, compile_lre_to_rlo, parse_program, validate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "apply_parallel",
    "BudgetExceeded",
    "build_arena",
    "build_pair_structure",
    "compile_lre_to_rl",
    "compile_lre_to_rlo",
    "compute_construction",
    "Configuration",
    "decode",
    "DecodeError",
    "Dialect",
    "encode",
    "eval_eso",
    "eval_fo",
    "eval_lre_bounded",
    "EvaluationError",
    "Halt",
    "HaltReason",
    "load_system",
    "LreSentence",
    "ModelFormatError",
    "parse_formula",
    "parse_model",
    "parse_program",
    "ParseError",
    "pi_expand",
    "Program",
    "RelogError",
    "ResolverError",
    "run",
    "search_accepting",
    "SearchBudget",
    "simulate_system",
    "SimulationError",
    "solve_reachability",
    "step",
    "Structure",
    "StructureError",
    "Symbol",
    "UnsupportedInput",
    "validate",
    "ValidationError",
    "Verdict",
    "Vocabulary",
    "VocabularyConflict",
]
