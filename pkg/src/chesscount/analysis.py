"""Structure recovery for solved problems.

Many move-order problems have one underlying set of moves that every
solution plays in some order; the solutions are then exactly the linear
extensions of a precedence poset on that set.  This module rebuilds the
poset from an enumerated solution set and checks whether the extension
count reproduces the solution count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .board import BLACK, WHITE
from .poset import Poset
from .problem import (Helpmate, Problem, ProofGame, SeriesHelpmate,
                      SeriesProofGame)

Label = tuple[str, str, int]  # (side, move text, occurrence index)


def format_label(lab: Label) -> str:
    side, text, occ = lab
    base = f"{side}:{text}"
    return base if occ == 1 else f"{base}({occ})"


@dataclass(frozen=True)
class SolutionSet:
    """An enumerated set of solutions, each a list of per-ply labels."""

    problem_id: str
    sequences: tuple[tuple[Label, ...], ...]

    def __post_init__(self):
        lengths = {len(s) for s in self.sequences}
        if len(lengths) > 1:
            raise ValueError("solution sequences differ in length")


@dataclass
class StructureReport:
    common_multiset: bool
    poset: Optional[Poset] = None
    extension_count: Optional[int] = None
    exact: Optional[bool] = None


def _ply_sides(problem: Problem, plies: int) -> list[str]:
    stip = problem.stipulation
    if isinstance(stip, SeriesHelpmate):
        return ["black"] * (plies - 1) + ["white"]
    if isinstance(stip, SeriesProofGame):
        return ["white"] * plies
    if isinstance(stip, Helpmate):
        first = "white" if stip.first_mover == WHITE else "black"
    elif isinstance(stip, ProofGame):
        first = "white"
    else:
        first = "white"
    other = "black" if first == "white" else "white"
    return [first if i % 2 == 0 else other for i in range(plies)]


def _label_sequence(moves: list[str], sides: list[str]) -> tuple[Label, ...]:
    seen: dict[tuple[str, str], int] = {}
    out = []
    for text, side in zip(moves, sides):
        key = (side, text)
        seen[key] = seen.get(key, 0) + 1
        out.append((side, text, seen[key]))
    return tuple(out)


def solution_set(problem: Problem, solutions: list[list[str]],
                 drop_mating_move: bool = True) -> SolutionSet:
    """Label enumerated lines of play for structure analysis.

    For a series helpmate the trailing White move is the reply to the
    series, not part of it, so by default it is stripped (the order
    structure lives in Black's series alone); stripping can merge lines
    that differ only in the mate, so the sequences are deduplicated.
    """
    if not solutions:
        raise ValueError("empty solution set")
    plies = len(solutions[0])
    sides = _ply_sides(problem, plies)
    strip = drop_mating_move and isinstance(problem.stipulation, SeriesHelpmate)
    seqs: list[tuple[Label, ...]] = []
    seen = set()
    for line in solutions:
        moves = line[:-1] if strip else list(line)
        seq = _label_sequence(moves, sides)
        if seq not in seen:
            seen.add(seq)
            seqs.append(seq)
    return SolutionSet(problem.id, tuple(seqs))


def infer_precedence_poset(s: SolutionSet) -> StructureReport:
    """Intersect the move orders of all solutions into a poset.

    The relation x < y holds when x is played before y in every
    solution; only necessary order constraints are recorded, so the
    extension count of the result is an upper bound on the number of
    solutions.  When the solutions do not share one move multiset per
    side no poset exists and ``common_multiset`` is False.
    """
    if not s.sequences:
        raise ValueError("empty solution set")
    first = s.sequences[0]
    elements = sorted(first)
    if any(sorted(seq) != elements for seq in s.sequences[1:]):
        return StructureReport(common_multiset=False)
    elements = list(first)  # keep first-solution order for readability
    pairs = []
    for x in elements:
        for y in elements:
            if x != y and all(seq.index(x) < seq.index(y)
                              for seq in s.sequences):
                pairs.append((x, y))
    coloring = {lab: lab[0] for lab in elements}
    poset = Poset.from_relation(elements, pairs, coloring)
    return StructureReport(common_multiset=True, poset=poset)


def check_poset_exactness(s: SolutionSet, r: StructureReport,
                          alternating: Optional[str] = None) -> StructureReport:
    """Fill in the extension count and whether it matches the solutions.

    With ``alternating`` set to the side that moves first, only
    extensions whose side word alternates are counted, as move
    alternation requires in helpmates and proof games.
    """
    if r.poset is None:
        raise ValueError("no poset to check")
    if alternating is None:
        r.extension_count = r.poset.count_linear_extensions()
    else:
        r.extension_count = r.poset.count_linear_extensions_colored(alternating)
    r.exact = r.extension_count == len(s.sequences)
    return r


def cover_edges_text(poset: Poset) -> list[str]:
    """Cover edges as ``a < b`` lines, one per edge."""
    return [f"{format_label(a)} < {format_label(b)}" for a, b in poset.covers]


def poset_dot(poset: Poset, name: str = "poset") -> str:
    """Graphviz DOT rendering of the cover relation, bottom-up."""
    lines = [f'digraph "{name}" {{', "  rankdir=BT;"]
    for e in poset.elements:
        shade = ' style=filled fillcolor="grey85"' if e[0] == "black" else ""
        lines.append(f'  "{format_label(e)}"{shade};')
    for a, b in poset.covers:
        lines.append(f'  "{format_label(a)}" -> "{format_label(b)}";')
    lines.append("}")
    return "\n".join(lines)
