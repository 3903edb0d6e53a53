"""Problem model: stipulations, the problem-file grammar, and validation.

A problem file is UTF-8 key/value lines, one problem per file::

    # comment
    id: diagA
    fen: k7/8/pPK5/p7/8/8/8/8 b - -
    stip: ser-h#14
    expect: 429
    tier: fast
    notes: free text

Proof-game types use ``start: array`` (or ``start: white-array`` which is
implied for ser-pg) together with a ``target:`` FEN.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .board import (BLACK, KING, PAWN, WHITE, START_FEN, WHITE_ARRAY_FEN,
                    Position, parse_fen, piece_color, piece_kind)


class ProblemError(ValueError):
    """Raised for unparsable or structurally impossible problem files."""


@dataclass(frozen=True)
class SeriesHelpmate:
    n: int  # black series moves


@dataclass(frozen=True)
class SeriesProofGame:
    n: int  # white series moves


@dataclass(frozen=True)
class ProofGame:
    plies: int


@dataclass(frozen=True)
class Helpmate:
    plies: int
    first_mover: int  # WHITE or BLACK


@dataclass(frozen=True)
class DirectMateExact:
    n: int  # white moves
    mode: str  # "sequences" or "strategies"


Stipulation = Union[SeriesHelpmate, SeriesProofGame, ProofGame,
                    Helpmate, DirectMateExact]

_STIP_RE = re.compile(
    r"^(?:"
    r"ser-h#(?P<serh>\d+)"
    r"|ser-pg (?P<serpg>\d+)"
    r"|pg (?P<pg>\d+)(?P<pghalf>\.5)?"
    r"|h#(?P<hm>\d+)(?P<hmhalf>\.5)?"
    r"|#(?P<dm>\d+) (?P<mode>sequences|strategies)"
    r")$")


def parse_stipulation(text: str) -> Stipulation:
    m = _STIP_RE.match(text.strip())
    if not m:
        raise ProblemError(f"unknown stipulation {text!r}")
    if m.group("serh"):
        n = int(m.group("serh"))
        stip = SeriesHelpmate(n)
    elif m.group("serpg"):
        n = int(m.group("serpg"))
        stip = SeriesProofGame(n)
    elif m.group("pg"):
        n = int(m.group("pg"))
        plies = 2 * n + 1 if m.group("pghalf") else 2 * n
        if plies < 1:
            raise ProblemError("proof game length must be positive")
        return ProofGame(plies)
    elif m.group("hm"):
        n = int(m.group("hm"))
        if m.group("hmhalf"):
            stip = Helpmate(2 * n + 1, WHITE)
        else:
            stip = Helpmate(2 * n, BLACK)
        if stip.plies < 1:
            raise ProblemError("helpmate length must be positive")
        return stip
    else:
        n = int(m.group("dm"))
        stip = DirectMateExact(n, m.group("mode"))
    if getattr(stip, "n", 1) < 1:
        raise ProblemError("stipulation length must be positive")
    return stip


def format_stipulation(stip: Stipulation) -> str:
    if isinstance(stip, SeriesHelpmate):
        return f"ser-h#{stip.n}"
    if isinstance(stip, SeriesProofGame):
        return f"ser-pg {stip.n}"
    if isinstance(stip, ProofGame):
        n, odd = divmod(stip.plies, 2)
        return f"pg {n}.5" if odd else f"pg {n}"
    if isinstance(stip, Helpmate):
        n, odd = divmod(stip.plies, 2)
        return f"h#{n}.5" if odd else f"h#{n}"
    return f"#{stip.n} {stip.mode}"


def needs_target(stip: Stipulation) -> bool:
    return isinstance(stip, (SeriesProofGame, ProofGame))


GAME_ARRAY = parse_fen(START_FEN)
WHITE_ARRAY = parse_fen(WHITE_ARRAY_FEN)


@dataclass
class Problem:
    id: str
    stipulation: Stipulation
    start: Optional[Position] = None
    target: Optional[Position] = None
    expected_count: Optional[int] = None
    tier: str = "fast"
    notes: str = ""
    source: str = field(default="", repr=False)

    def __post_init__(self):
        if needs_target(self.stipulation):
            if self.target is None:
                raise ProblemError(f"{self.id}: stipulation requires a target position")
            if self.start is None:
                self.start = (WHITE_ARRAY
                              if isinstance(self.stipulation, SeriesProofGame)
                              else GAME_ARRAY)
        elif self.start is None:
            raise ProblemError(f"{self.id}: stipulation requires a start position")
        if self.target is not None:
            err = multiset_infeasibility(self.start, self.target)
            if err:
                raise ProblemError(f"{self.id}: {err}")


def piece_counts(pos: Position) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for p in pos.board:
        if p:
            key = (piece_color(p), piece_kind(p))
            counts[key] = counts.get(key, 0) + 1
    return counts


def multiset_infeasibility(start: Position, target: Position) -> Optional[str]:
    """Monotone feasibility: no color gains men, and any non-pawn surplus in
    the target must be covered by that color's pawn deficit (promotion)."""
    sc = piece_counts(start)
    tc = piece_counts(target)
    for color, name in ((WHITE, "white"), (BLACK, "black")):
        s_total = sum(v for (c, _), v in sc.items() if c == color)
        t_total = sum(v for (c, _), v in tc.items() if c == color)
        if t_total > s_total:
            return f"target has more {name} men than start"
        pawn_deficit = sc.get((color, PAWN), 0) - tc.get((color, PAWN), 0)
        if pawn_deficit < 0:
            return f"target has more {name} pawns than start"
        surplus = sum(max(0, tc.get((color, k), 0) - sc.get((color, k), 0))
                      for k in range(2, 7))
        if tc.get((color, KING), 0) > sc.get((color, KING), 0):
            return f"target has more {name} kings than start"
        if surplus > pawn_deficit:
            return (f"{name} piece surplus in target ({surplus}) exceeds "
                    f"pawn deficit ({pawn_deficit})")
    return None


def parse_problem(text: str, problem_id: str = "") -> Problem:
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ProblemError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, _, value = line.partition(":")
        key = key.strip().lower()
        if key in fields:
            raise ProblemError(f"line {lineno}: duplicate field {key!r}")
        fields[key] = value.strip()

    if "stip" not in fields:
        raise ProblemError("missing required field 'stip'")
    stip = parse_stipulation(fields["stip"])

    start = None
    if "fen" in fields and "start" in fields:
        raise ProblemError("give either 'fen' or 'start', not both")
    if "fen" in fields:
        start = parse_fen(fields["fen"])
    elif "start" in fields:
        name = fields["start"]
        if name == "array":
            start = GAME_ARRAY
        elif name == "white-array":
            start = WHITE_ARRAY
        else:
            raise ProblemError(f"bad start {name!r}: expected 'array' or 'white-array'")

    target = parse_fen(fields["target"]) if "target" in fields else None
    expect = int(fields["expect"]) if "expect" in fields else None
    if expect is not None and expect < 0:
        raise ProblemError("expect must be nonnegative")
    tier = fields.get("tier", "fast")
    if tier not in ("fast", "medium", "long"):
        raise ProblemError(f"bad tier {tier!r}")

    return Problem(
        id=fields.get("id", problem_id or "unnamed"),
        stipulation=stip,
        start=start,
        target=target,
        expected_count=expect,
        tier=tier,
        notes=fields.get("notes", ""),
        source=text,
    )


def load_problem(path) -> Problem:
    from pathlib import Path

    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), problem_id=path.stem)


def format_problem(p: Problem) -> str:
    from .board import format_fen

    lines = [f"id: {p.id}", f"stip: {format_stipulation(p.stipulation)}"]
    if p.start is GAME_ARRAY or p.start == GAME_ARRAY:
        lines.append("start: array")
    elif p.start is WHITE_ARRAY or p.start == WHITE_ARRAY:
        lines.append("start: white-array")
    elif p.start is not None:
        lines.append(f"fen: {format_fen(p.start)}")
    if p.target is not None:
        lines.append(f"target: {format_fen(p.target)}")
    if p.expected_count is not None:
        lines.append(f"expect: {p.expected_count}")
    lines.append(f"tier: {p.tier}")
    if p.notes:
        lines.append(f"notes: {p.notes}")
    return "\n".join(lines) + "\n"


def validate_problem(p: Problem) -> list[str]:
    """Structural diagnostics; an empty list means the problem looks sound."""
    diags = []
    stip = p.stipulation
    if isinstance(stip, SeriesHelpmate):
        if p.start.stm != BLACK:
            diags.append("series helpmate start must have Black to move")
    elif isinstance(stip, SeriesProofGame):
        if p.target.stm != WHITE:
            diags.append("series proof game target must have White to move")
        if any(piece_color(v) == BLACK for v in p.target.board if v):
            diags.append("series proof game target must contain only white men")
    elif isinstance(stip, ProofGame):
        expected = WHITE if stip.plies % 2 == 0 else BLACK
        if p.target.stm != expected:
            side = "White" if expected == WHITE else "Black"
            diags.append(f"proof game of {stip.plies} plies must have "
                         f"{side} to move in the target")
    elif isinstance(stip, Helpmate):
        if p.start.stm != stip.first_mover:
            side = "White" if stip.first_mover == WHITE else "Black"
            diags.append(f"helpmate start must have {side} to move")
        if p.start.king_square(WHITE) is None or p.start.king_square(BLACK) is None:
            diags.append("helpmate requires both kings on the board")
    elif isinstance(stip, DirectMateExact):
        if p.start.stm != WHITE:
            diags.append("directmate start must have White to move")
        if p.start.king_square(BLACK) is None:
            diags.append("directmate requires a black king to be mated")
    return diags
