"""Exact solution counting for enumerative chess problems.

The package pairs a depth-exact counting engine (series-movers, proof
games, helpmates, exact-length directmates) with an independent
combinatorics oracle (Catalan / zigzag / Fibonacci numbers, Young
tableau counts, linear extensions of posets) so every count can be
cross-checked against closed-form mathematics.
"""

from .board import (FenError, IllegalMoveError, Move, Position, apply,
                    format_fen, legal_moves, parse_fen, perft, status)
from .combinatorics import (catalan, chess_tableaux_count, euler_zigzag,
                            fibonacci, multinomial, skew_syt_count, syt_count)
from .poset import IdealBudgetExceeded, Poset
from .problem import (Problem, ProblemError, load_problem, parse_problem,
                      parse_stipulation, validate_problem)
from .solver import (CountReport, SearchLimits, StipulationMismatch,
                     enumerate_solutions, solve)
from .analysis import (SolutionSet, StructureReport, check_poset_exactness,
                       infer_precedence_poset, solution_set)

__version__ = "0.1.0"

__all__ = [
    "FenError", "IllegalMoveError", "Move", "Position", "apply",
    "format_fen", "legal_moves", "parse_fen", "perft", "status",
    "catalan", "chess_tableaux_count", "euler_zigzag", "fibonacci",
    "multinomial", "skew_syt_count", "syt_count",
    "IdealBudgetExceeded", "Poset",
    "Problem", "ProblemError", "load_problem", "parse_problem",
    "parse_stipulation", "validate_problem",
    "CountReport", "SearchLimits", "StipulationMismatch",
    "enumerate_solutions", "solve",
    "SolutionSet", "StructureReport", "check_poset_exactness",
    "infer_precedence_poset", "solution_set",
    "__version__",
]
