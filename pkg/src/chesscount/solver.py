"""Depth-exact counting search for all five stipulation types.

Every counter memoizes on (position hash, remaining plies) and returns
exact arbitrary-precision counts.  Proof-game counters add admissible
pruning (piece-distance lower bounds, multiset feasibility, and a
stay-on-target move filter); disabling any pruning rule never changes a
count, only the statistics.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .board import (BLACK, BISHOP, CASTLE_BK, CASTLE_BQ, CASTLE_WK, CASTLE_WQ,
                    CHECKMATE, KING, KNIGHT, PAWN, QUEEN, ROOK, WHITE,
                    KNIGHT_TO, Move, Position, apply, attacked, legal_moves,
                    pass_turn, piece_color, piece_kind, square_name, status)
from .problem import (DirectMateExact, Helpmate, Problem, ProofGame,
                      SeriesHelpmate, SeriesProofGame)

ALL_PRUNING_RULES = frozenset({"distance", "multiset", "stay", "mate-distance"})

_DEFAULT_TT_MB = int(os.environ.get("CHESSCOUNT_TT_MB", "256"))

INF = 10 ** 6


class StipulationMismatch(ValueError):
    pass


class NodeBudgetExhausted(RuntimeError):
    pass


@dataclass
class SearchLimits:
    tt_bytes: int = _DEFAULT_TT_MB * 1024 * 1024
    enumerate: bool = False
    enumerate_limit: int = 10_000
    pruning: frozenset = ALL_PRUNING_RULES
    node_budget: Optional[int] = None
    paranoid_tt: bool = False


@dataclass
class CountReport:
    count: int
    nodes_visited: int = 0
    tt_hits: int = 0
    tt_entries: int = 0
    elapsed: float = 0.0
    solutions: Optional[list[list[str]]] = None
    truncated: bool = False
    incomplete: bool = False
    pruned_by: dict = field(default_factory=dict)
    series_count: Optional[int] = None  # distinct series, for series helpmates

    def to_json_dict(self) -> dict:
        out = {
            "count": str(self.count),
            "nodes_visited": self.nodes_visited,
            "tt_hits": self.tt_hits,
            "tt_entries": self.tt_entries,
            "elapsed_seconds": round(self.elapsed, 3),
            "pruned_by": dict(self.pruned_by),
        }
        if self.series_count is not None:
            out["series_count"] = str(self.series_count)
        if self.solutions is not None:
            out["solutions"] = [list(line) for line in self.solutions]
            out["truncated"] = self.truncated
        if self.incomplete:
            out["incomplete"] = True
        return out


class TranspositionTable:
    """Write-once map from (hash, remaining) to an exact count.

    In paranoid mode the full position is part of the key, so a 64-bit
    collision can never corrupt a count.  When full, new entries are
    simply not stored.
    """

    _ENTRY_BYTES = 96  # rough per-entry dict overhead used for capacity

    def __init__(self, capacity_bytes: int, paranoid: bool = False):
        self.capacity = max(0, capacity_bytes) // self._ENTRY_BYTES
        self.paranoid = paranoid
        self.table: dict = {}
        self.hits = 0

    def key(self, pos: Position, remaining: int):
        if self.paranoid:
            return (pos.board, pos.stm, pos.castling, pos.ep, remaining)
        return (pos.key, remaining)

    def get(self, key):
        val = self.table.get(key)
        if val is not None:
            self.hits += 1
        return val

    def put(self, key, value):
        if len(self.table) < self.capacity:
            self.table[key] = value


# ---------------------------------------------------------------------------
# Empty-board piece distances for the proof-game lower bound

def _knight_distances() -> list[list[int]]:
    dist = []
    for s in range(64):
        d = [INF] * 64
        d[s] = 0
        frontier = [s]
        while frontier:
            nxt = []
            for a in frontier:
                for b in KNIGHT_TO[a]:
                    if d[b] == INF:
                        d[b] = d[a] + 1
                        nxt.append(b)
            frontier = nxt
        dist.append(d)
    return dist


_KNIGHT_DIST = _knight_distances()


def piece_distance(kind: int, color: int, frm: int, to: int) -> int:
    """Minimum empty-board moves for a man of `kind`; INF when impossible."""
    if frm == to:
        return 0
    ff, fr = frm & 7, frm >> 3
    tf, tr = to & 7, to >> 3
    if kind == KNIGHT:
        return _KNIGHT_DIST[frm][to]
    if kind == KING:
        return max(abs(ff - tf), abs(fr - tr))
    if kind == ROOK:
        return 1 if ff == tf or fr == tr else 2
    if kind == BISHOP:
        if (ff + fr) % 2 != (tf + tr) % 2:
            return INF
        return 1 if abs(ff - tf) == abs(fr - tr) else 2
    if kind == QUEEN:
        return 1 if (ff == tf or fr == tr or abs(ff - tf) == abs(fr - tr)) else 2
    # pawn
    dr = tr - fr if color == WHITE else fr - tr
    df = abs(ff - tf)
    if dr <= 0 or df > dr:
        return INF
    moves = dr
    home = fr == (1 if color == WHITE else 6)
    if home and dr - df >= 2:
        moves -= 1  # one double push available
    return moves


def pawn_sideways(color: int, frm: int, to: int) -> int:
    """Captures a pawn needs to get from frm to to; INF when impossible."""
    if piece_distance(PAWN, color, frm, to) >= INF:
        return INF
    return abs((frm & 7) - (to & 7))


def _min_assignment(targets: list[int], men: list[int],
                    cost: Callable[[int, int], int]) -> int:
    """Min total cost of injectively assigning each target to a man."""
    best = {0: 0}
    for t in targets:
        nxt: dict[int, int] = {}
        for mask, acc in best.items():
            for i, m in enumerate(men):
                bit = 1 << i
                if mask & bit:
                    continue
                c = cost(t, m)
                if c >= INF:
                    continue
                val = acc + c
                key = mask | bit
                if val < nxt.get(key, INF):
                    nxt[key] = val
        if not nxt:
            return INF
        best = nxt
    return min(best.values())


class ProofGameBounds:
    """Admissible move-count lower bounds toward a fixed target position.

    The bound for one side is the min-cost matching of the target men onto
    the current men of the same type, using empty-board distances (pawns
    restricted to forward geometry).  A castling variant relocates king and
    rook for the cost of one move.  If a side could still promote, only its
    pawn and king groups contribute (type identity is no longer reliable).
    """

    def __init__(self, target: Position):
        self.target = target
        self.target_squares: dict[int, tuple[int, ...]] = {}
        for s in range(64):
            p = target.board[s]
            if p:
                self.target_squares.setdefault(p, ())
                self.target_squares[p] += (s,)
        self.target_totals = [0, 0]
        for p, sqs in self.target_squares.items():
            self.target_totals[piece_color(p)] += len(sqs)
        self._group_cache: dict = {}
        self._sideways_cache: dict = {}

    def _group_cost(self, code: int, men: tuple[int, ...]) -> int:
        key = (code, men)
        cached = self._group_cache.get(key)
        if cached is None:
            targets = self.target_squares.get(code, ())
            kind = piece_kind(code)
            color = piece_color(code)
            cached = _min_assignment(
                list(targets), list(men),
                lambda t, m: piece_distance(kind, color, m, t))
            self._group_cache[key] = cached
        return cached

    def _pawn_sideways_cost(self, code: int, men: tuple[int, ...]) -> int:
        key = (code, men)
        cached = self._sideways_cache.get(key)
        if cached is None:
            targets = self.target_squares.get(code, ())
            color = piece_color(code)
            cached = _min_assignment(
                list(targets), list(men),
                lambda t, m: pawn_sideways(color, m, t))
            self._sideways_cache[key] = cached
        return cached

    def side_bound(self, pos: Position, color: int) -> int:
        board = pos.board
        men: dict[int, tuple[int, ...]] = {}
        lo, hi = (1, 6) if color == WHITE else (7, 12)
        total = 0
        for s in range(64):
            p = board[s]
            if lo <= p <= hi:
                men.setdefault(p, ())
                men[p] += (s,)
                total += 1
        pawn_code = 1 if color == WHITE else 7
        king_code = 6 if color == WHITE else 12
        target_pawns = len(self.target_squares.get(pawn_code, ()))
        cur_pawns = len(men.get(pawn_code, ()))
        promotion_possible = cur_pawns > target_pawns
        codes = ((pawn_code, king_code) if promotion_possible
                 else range(lo, hi + 1))

        def matching_bound(men_map) -> int:
            bound = 0
            for code in codes:
                targets = self.target_squares.get(code, ())
                if not targets:
                    continue
                cur = men_map.get(code, ())
                if len(cur) < len(targets):
                    return INF  # promotion would be needed for this type
                bound += self._group_cost(code, cur)
                if bound >= INF:
                    return INF
            return bound

        bound = matching_bound(men)
        # castling relocates king and rook in one move
        rook_code = 4 if color == WHITE else 10
        for right, ksq, rfrom, kto, rto in self._castle_variants(color):
            if not pos.castling & right:
                continue
            alt = dict(men)
            kcur = alt.get(king_code, ())
            rcur = alt.get(rook_code, ())
            if kcur != (ksq,) or rfrom not in rcur:
                continue
            alt[king_code] = (kto,)
            alt[rook_code] = tuple(rto if s == rfrom else s for s in rcur)
            alt_bound = matching_bound(alt)
            if alt_bound < INF:
                bound = min(bound, alt_bound + 1)
        if bound >= INF:
            return INF
        # total sideways pawn displacement needs that many enemy captures
        if not promotion_possible and pawn_code in self.target_squares:
            cur = men.get(pawn_code, ())
            if len(cur) >= target_pawns:
                enemy_total = sum(1 for p in board
                                  if p and piece_color(p) != color)
                budget = enemy_total - self.target_totals[color ^ 1]
                if self._pawn_sideways_cost(pawn_code, cur) > max(0, budget):
                    return INF
        return bound

    @staticmethod
    def _castle_variants(color: int):
        if color == WHITE:
            return ((CASTLE_WK, 4, 7, 6, 5), (CASTLE_WQ, 4, 0, 2, 3))
        return ((CASTLE_BK, 60, 63, 62, 61), (CASTLE_BQ, 60, 56, 58, 59))

    def multiset_feasible(self, pos: Position) -> bool:
        """Monotone feasibility with promotion coverage."""
        for color in (WHITE, BLACK):
            lo = 1 if color == WHITE else 7
            counts = [0] * 7
            total = 0
            for p in pos.board:
                if p and piece_color(p) == color:
                    counts[piece_kind(p)] += 1
                    total += 1
            if total < self.target_totals[color]:
                return False
            pawn_deficit = counts[PAWN] - len(self.target_squares.get(lo, ()))
            if pawn_deficit < 0:
                return False
            surplus = 0
            for kind in range(2, 7):
                t = len(self.target_squares.get(lo + kind - 1, ()))
                if kind == KING and t > counts[KING]:
                    return False
                surplus += max(0, t - counts[kind])
            if surplus > pawn_deficit:
                return False
        return True

    def pinned_home_squares(self, pos: Position, color: int) -> set[int]:
        """Squares of men whose whole type group already sits exactly on its
        target squares.  With zero slack such a man may not move: any move
        raises its group's matching cost, hence the side bound, by >= 1.
        King and rook groups are excluded while castling rights remain
        (castling could re-route them for a single move)."""
        lo, hi = (1, 6) if color == WHITE else (7, 12)
        groups: dict[int, set[int]] = {}
        for s in range(64):
            p = pos.board[s]
            if lo <= p <= hi:
                groups.setdefault(p, set()).add(s)
        castle_codes: set[int] = set()
        if color == WHITE and pos.castling & (CASTLE_WK | CASTLE_WQ):
            castle_codes = {6, 4}
        elif color == BLACK and pos.castling & (CASTLE_BK | CASTLE_BQ):
            castle_codes = {12, 10}
        home: set[int] = set()
        for code, squares in groups.items():
            if code in castle_codes:
                continue
            if squares == set(self.target_squares.get(code, ())):
                home |= squares
        return home


def match_target(pos: Position, target: Position) -> bool:
    """Target equality: placement, side to move, and ep; castling ignored."""
    return (pos.board == target.board and pos.stm == target.stm
            and pos.ep == target.ep)


# ---------------------------------------------------------------------------
# Series helpmate

def count_series_helpmate(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Count (series, mating move) pairs for a series helpmate.

    Black plays n legal series moves, never giving check before the final
    one; afterwards White must have a mating move.  The distinct-series
    count (series with at least one mate) is reported alongside.
    """
    lim = lim or SearchLimits()
    if not isinstance(p.stipulation, SeriesHelpmate):
        raise StipulationMismatch(f"expected a series helpmate, got {p.stipulation}")
    n = p.stipulation.n
    tt = TranspositionTable(lim.tt_bytes, lim.paranoid_tt)
    stats = _Stats(lim.node_budget)
    white_has_king = p.start.king_square(WHITE) is not None

    layered = _try_series_layered(p, lim)
    if layered is not None:
        return layered

    def rec(pos: Position, r: int) -> tuple[int, int]:
        stats.tick()
        if r == 0:
            # White to move: count mating moves
            mates = 0
            for m in legal_moves(pos):
                if status(apply(pos, m, check_legal=False)) == CHECKMATE:
                    mates += 1
            return mates, (1 if mates else 0)
        key = tt.key(pos, r)
        cached = tt.get(key)
        if cached is not None:
            return cached
        pairs = series = 0
        for m in legal_moves(pos):
            np = apply(pos, m, check_legal=False)
            if r > 1:
                if white_has_king and np.in_check(WHITE):
                    continue  # black may not check before the final move
                cp, cs = rec(pass_turn(np), r - 1)
            else:
                cp, cs = rec(np, 0)
            pairs += cp
            series += cs
        tt.put(key, (pairs, series))
        return pairs, series

    start = time.monotonic()
    report = CountReport(0)
    try:
        pairs, series = rec(p.start, n)
        report.count, report.series_count = pairs, series
    except NodeBudgetExhausted:
        report.incomplete = True
    stats.fill(report, tt)
    if lim.enumerate and not report.incomplete:
        _enumerate_series_helpmate(p, lim, report, white_has_king)
    report.elapsed = time.monotonic() - start
    return report


def _try_series_layered(p, lim) -> Optional[CountReport]:
    """Run the layered engine when the position supports it (no castling
    rights); returns None to fall back to the recursive search."""
    from . import seriesdp

    start = time.monotonic()
    report = CountReport(0)
    try:
        result = seriesdp.count_series_layered(p, lim.pruning, lim.node_budget)
    except seriesdp._BudgetSignal:
        report.incomplete = True
        report.elapsed = time.monotonic() - start
        return report
    if result is None:
        return None
    pairs, series, st = result
    report.count, report.series_count = pairs, series
    report.nodes_visited = st.nodes
    report.tt_entries = st.peak_layer
    if st.pruned:
        report.pruned_by["mate-distance"] = st.pruned
    if lim.enumerate:
        _enumerate_series_helpmate(p, lim, report,
                                   p.start.king_square(WHITE) is not None)
    report.elapsed = time.monotonic() - start
    return report


def _enumerate_series_helpmate(p, lim, report, white_has_king):
    solutions: list[list[str]] = []
    n = p.stipulation.n

    def walk(pos: Position, r: int, line: list[str]) -> bool:
        if r == 0:
            for m in legal_moves(pos):
                if status(apply(pos, m, check_legal=False)) == CHECKMATE:
                    solutions.append(line + [m.lan()])
                    if len(solutions) >= lim.enumerate_limit:
                        return False
            return True
        for m in legal_moves(pos):
            np = apply(pos, m, check_legal=False)
            if r > 1:
                if white_has_king and np.in_check(WHITE):
                    continue
                if not walk(pass_turn(np), r - 1, line + [m.lan()]):
                    return False
            else:
                if not walk(np, 0, line + [m.lan()]):
                    return False
        return True

    finished = walk(p.start, n, [])
    report.solutions = solutions
    report.truncated = not finished


# ---------------------------------------------------------------------------
# Series proof game

def count_series_proof_game(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Count n-move white series from the white-only array to the target."""
    lim = lim or SearchLimits()
    if not isinstance(p.stipulation, SeriesProofGame):
        raise StipulationMismatch(f"expected a series proof game, got {p.stipulation}")
    n = p.stipulation.n
    bounds = ProofGameBounds(p.target)
    tt = TranspositionTable(lim.tt_bytes, lim.paranoid_tt)
    stats = _Stats(lim.node_budget)
    rules = lim.pruning
    black_has_king = p.target.king_square(BLACK) is not None

    def prune(pos: Position, r: int) -> bool:
        if "multiset" in rules and not bounds.multiset_feasible(pos):
            stats.pruned["multiset"] += 1
            return True
        if "distance" in rules and bounds.side_bound(pos, WHITE) > r:
            stats.pruned["distance"] += 1
            return True
        return False

    def moves_for(pos: Position, r: int) -> list[Move]:
        moves = legal_moves(pos)
        if "stay" in rules and bounds.side_bound(pos, WHITE) == r:
            home = bounds.pinned_home_squares(pos, WHITE)
            if home:
                pre = len(moves)
                moves = [m for m in moves if m.frm not in home]
                stats.pruned["stay"] += pre - len(moves)
        return moves

    def rec(pos: Position, r: int) -> int:
        stats.tick()
        if r == 0:
            return 1 if match_target(pos, p.target) else 0
        if prune(pos, r):
            return 0
        key = tt.key(pos, r)
        cached = tt.get(key)
        if cached is not None:
            return cached
        total = 0
        for m in moves_for(pos, r):
            np = apply(pos, m, check_legal=False)
            if black_has_king and np.in_check(BLACK):
                continue  # a series proof game move may never give check
            total += rec(pass_turn(np), r - 1)
        tt.put(key, total)
        return total

    start = time.monotonic()
    report = CountReport(0)
    try:
        report.count = rec(p.start, n)
    except NodeBudgetExhausted:
        report.incomplete = True
    stats.fill(report, tt)
    if lim.enumerate and not report.incomplete:
        solutions: list[list[str]] = []

        def walk(pos: Position, r: int, line: list[str]) -> bool:
            if r == 0:
                if match_target(pos, p.target):
                    solutions.append(line)
                    return len(solutions) < lim.enumerate_limit
                return True
            if prune(pos, r):
                return True
            for m in moves_for(pos, r):
                np = apply(pos, m, check_legal=False)
                if black_has_king and np.in_check(BLACK):
                    continue
                if not walk(pass_turn(np), r - 1, line + [m.lan()]):
                    return False
            return True

        finished = walk(p.start, n, [])
        report.solutions = solutions
        report.truncated = not finished
    report.elapsed = time.monotonic() - start
    return report


# ---------------------------------------------------------------------------
# Proof game (help-game)

def count_proof_game(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Count legal games of exactly `plies` plies reaching the target."""
    lim = lim or SearchLimits()
    if not isinstance(p.stipulation, ProofGame):
        raise StipulationMismatch(f"expected a proof game, got {p.stipulation}")
    plies = p.stipulation.plies
    bounds = ProofGameBounds(p.target)
    tt = TranspositionTable(lim.tt_bytes, lim.paranoid_tt)
    stats = _Stats(lim.node_budget)
    rules = lim.pruning

    def prune(pos: Position, r: int) -> bool:
        if "multiset" in rules and not bounds.multiset_feasible(pos):
            stats.pruned["multiset"] += 1
            return True
        if "distance" in rules:
            mover_plies = (r + 1) // 2
            other_plies = r // 2
            if (bounds.side_bound(pos, pos.stm) > mover_plies
                    or bounds.side_bound(pos, pos.stm ^ 1) > other_plies):
                stats.pruned["distance"] += 1
                return True
        return False

    def moves_for(pos: Position, r: int) -> list[Move]:
        moves = legal_moves(pos)
        if "stay" in rules and bounds.side_bound(pos, pos.stm) == (r + 1) // 2:
            home = bounds.pinned_home_squares(pos, pos.stm)
            if home:
                pre = len(moves)
                moves = [m for m in moves if m.frm not in home]
                stats.pruned["stay"] += pre - len(moves)
        return moves

    def rec(pos: Position, r: int) -> int:
        stats.tick()
        if r == 0:
            return 1 if match_target(pos, p.target) else 0
        if prune(pos, r):
            return 0
        key = tt.key(pos, r)
        cached = tt.get(key)
        if cached is not None:
            return cached
        total = 0
        for m in moves_for(pos, r):
            total += rec(apply(pos, m, check_legal=False), r - 1)
        tt.put(key, total)
        return total

    start = time.monotonic()
    report = CountReport(0)
    try:
        report.count = rec(p.start, plies)
    except NodeBudgetExhausted:
        report.incomplete = True
    stats.fill(report, tt)
    if lim.enumerate and not report.incomplete:
        solutions: list[list[str]] = []

        def walk(pos: Position, r: int, line: list[str]) -> bool:
            if r == 0:
                if match_target(pos, p.target):
                    solutions.append(line)
                    return len(solutions) < lim.enumerate_limit
                return True
            if prune(pos, r):
                return True
            for m in moves_for(pos, r):
                if not walk(apply(pos, m, check_legal=False), r - 1,
                            line + [m.lan()]):
                    return False
            return True

        finished = walk(p.start, plies, [])
        report.solutions = solutions
        report.truncated = not finished
    report.elapsed = time.monotonic() - start
    return report


# ---------------------------------------------------------------------------
# Helpmate

def _try_helpmate_layered(p, lim) -> Optional[CountReport]:
    """Run the layered cooperative engine when the position supports it
    (no castling rights); returns None to fall back to the tree search."""
    from . import seriesdp

    start = time.monotonic()
    report = CountReport(0)
    try:
        result = seriesdp.count_helpmate_layered(p, lim.node_budget)
    except seriesdp._BudgetSignal:
        report.incomplete = True
        report.elapsed = time.monotonic() - start
        return report
    if result is None:
        return None
    total, st = result
    report.count = total
    report.nodes_visited = st.nodes
    report.tt_entries = st.peak_layer
    if lim.enumerate:
        _enumerate_helpmate(p, lim, report)
    report.elapsed = time.monotonic() - start
    return report


def _enumerate_helpmate(p, lim, report):
    """List the mating lines, skipping subtrees whose completion count is
    zero (each subtree is counted with the layered engine first)."""
    from . import seriesdp

    solutions: list[list[str]] = []

    def walk(pos: Position, r: int, line: list[str]) -> bool:
        if r == 0:
            if pos.stm == BLACK and status(pos) == CHECKMATE:
                solutions.append(line)
                return len(solutions) < lim.enumerate_limit
            return True
        for m in legal_moves(pos):
            child = apply(pos, m, check_legal=False)
            if r - 1 >= 2:
                sub = seriesdp.helpmate_core(child, r - 1)
                if sub is not None and sub[0] == 0:
                    continue
            if not walk(child, r - 1, line + [m.lan()]):
                return False
        return True

    finished = walk(p.start, p.stipulation.plies, [])
    report.solutions = solutions
    report.truncated = not finished


def count_helpmate(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Count alternating cooperative sequences ending with Black checkmated."""
    lim = lim or SearchLimits()
    if not isinstance(p.stipulation, Helpmate):
        raise StipulationMismatch(f"expected a helpmate, got {p.stipulation}")
    plies = p.stipulation.plies

    layered = _try_helpmate_layered(p, lim)
    if layered is not None:
        return layered

    tt = TranspositionTable(lim.tt_bytes, lim.paranoid_tt)
    stats = _Stats(lim.node_budget)

    def rec(pos: Position, r: int) -> int:
        stats.tick()
        if r == 0:
            return 1 if (pos.stm == BLACK and status(pos) == CHECKMATE) else 0
        key = tt.key(pos, r)
        cached = tt.get(key)
        if cached is not None:
            return cached
        total = 0
        for m in legal_moves(pos):
            total += rec(apply(pos, m, check_legal=False), r - 1)
        tt.put(key, total)
        return total

    start = time.monotonic()
    report = CountReport(0)
    try:
        report.count = rec(p.start, plies)
    except NodeBudgetExhausted:
        report.incomplete = True
    stats.fill(report, tt)
    if lim.enumerate and not report.incomplete:
        solutions: list[list[str]] = []

        def walk(pos: Position, r: int, line: list[str]) -> bool:
            if r == 0:
                if pos.stm == BLACK and status(pos) == CHECKMATE:
                    solutions.append(line)
                    return len(solutions) < lim.enumerate_limit
                return True
            for m in legal_moves(pos):
                if not walk(apply(pos, m, check_legal=False), r - 1,
                            line + [m.lan()]):
                    return False
            return True

        finished = walk(p.start, plies, [])
        report.solutions = solutions
        report.truncated = not finished
    report.elapsed = time.monotonic() - start
    return report


# ---------------------------------------------------------------------------
# Directmate in exactly n: strategies and sequences

def _exact_mate_tables(p: Problem, lim: SearchLimits, n: int):
    """Shared W/B recursion for exact-n forced mates.

    W(pos, 1) = number of immediately mating white moves.
    W(pos, k) = sum over white moves that do not end the game of
                B(successor, k-1).
    B(pos, k) = 0 if black has no move, else the product over black moves
                of W(successor, k).
    """
    tt_w = TranspositionTable(lim.tt_bytes, lim.paranoid_tt)
    tt_b = TranspositionTable(lim.tt_bytes, lim.paranoid_tt)
    stats = _Stats(lim.node_budget)

    def W(pos: Position, k: int) -> int:
        stats.tick()
        key = tt_w.key(pos, k)
        cached = tt_w.get(key)
        if cached is not None:
            return cached
        total = 0
        if k == 1:
            for m in legal_moves(pos):
                if status(apply(pos, m, check_legal=False)) == CHECKMATE:
                    total += 1
        else:
            for m in legal_moves(pos):
                np = apply(pos, m, check_legal=False)
                st = status(np)
                if st == CHECKMATE or not legal_moves(np):
                    continue  # the game must not end before move n
                total += B(np, k - 1)
        tt_w.put(key, total)
        return total

    def B(pos: Position, k: int) -> int:
        stats.tick()
        key = tt_b.key(pos, k)
        cached = tt_b.get(key)
        if cached is not None:
            return cached
        moves = legal_moves(pos)
        if not moves:
            result = 0
        else:
            result = 1
            for b in moves:
                result *= W(apply(pos, b, check_legal=False), k)
                if result == 0:
                    break
        tt_b.put(key, result)
        return result

    return W, B, stats, tt_w


def count_mate_strategies_exact(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Count white strategies forcing mate on exactly the n-th move."""
    lim = lim or SearchLimits()
    stip = p.stipulation
    if not (isinstance(stip, DirectMateExact) and stip.mode == "strategies"):
        raise StipulationMismatch(f"expected '#n strategies', got {stip}")
    W, _B, stats, tt = _exact_mate_tables(p, lim, stip.n)
    start = time.monotonic()
    report = CountReport(0)
    try:
        report.count = W(p.start, stip.n)
    except NodeBudgetExhausted:
        report.incomplete = True
    stats.fill(report, tt)
    report.elapsed = time.monotonic() - start
    return report


def count_mate_sequences_exact(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Count move sequences consistent with some valid exact-n strategy.

    A white move is usable at depth k iff after it black still has a reply
    and every black reply leaves white an exact mate in k-1 (B > 0).
    """
    lim = lim or SearchLimits()
    stip = p.stipulation
    if not (isinstance(stip, DirectMateExact) and stip.mode == "sequences"):
        raise StipulationMismatch(f"expected '#n sequences', got {stip}")
    W, B, stats, tt = _exact_mate_tables(p, lim, stip.n)
    tt_s = TranspositionTable(lim.tt_bytes, lim.paranoid_tt)

    def S(pos: Position, k: int) -> int:
        stats.tick()
        key = tt_s.key(pos, k)
        cached = tt_s.get(key)
        if cached is not None:
            return cached
        total = 0
        if k == 1:
            for m in legal_moves(pos):
                if status(apply(pos, m, check_legal=False)) == CHECKMATE:
                    total += 1
        else:
            for m in legal_moves(pos):
                np = apply(pos, m, check_legal=False)
                if status(np) == CHECKMATE:
                    continue
                replies = legal_moves(np)
                if not replies or B(np, k - 1) == 0:
                    continue
                for b in replies:
                    total += S(apply(np, b, check_legal=False), k - 1)
        tt_s.put(key, total)
        return total

    start = time.monotonic()
    report = CountReport(0)
    try:
        report.count = S(p.start, stip.n)
    except NodeBudgetExhausted:
        report.incomplete = True
    stats.fill(report, tt_s)
    if lim.enumerate and not report.incomplete:
        solutions: list[list[str]] = []

        def walk(pos: Position, k: int, line: list[str]) -> bool:
            if k == 1:
                for m in legal_moves(pos):
                    if status(apply(pos, m, check_legal=False)) == CHECKMATE:
                        solutions.append(line + [m.lan()])
                        if len(solutions) >= lim.enumerate_limit:
                            return False
                return True
            for m in legal_moves(pos):
                np = apply(pos, m, check_legal=False)
                if status(np) == CHECKMATE:
                    continue
                replies = legal_moves(np)
                if not replies or B(np, k - 1) == 0:
                    continue
                for b in replies:
                    if not walk(apply(np, b, check_legal=False), k - 1,
                                line + [m.lan(), b.lan()]):
                        return False
            return True

        finished = walk(p.start, stip.n, [])
        report.solutions = solutions
        report.truncated = not finished
    report.elapsed = time.monotonic() - start
    return report


# ---------------------------------------------------------------------------

class _Stats:
    def __init__(self, node_budget: Optional[int]):
        self.nodes = 0
        self.budget = node_budget
        self.pruned = {"distance": 0, "multiset": 0, "stay": 0}

    def tick(self):
        self.nodes += 1
        if self.budget is not None and self.nodes > self.budget:
            raise NodeBudgetExhausted(f"node budget of {self.budget} exhausted")

    def fill(self, report: CountReport, tt: TranspositionTable):
        report.nodes_visited = self.nodes
        report.tt_hits = tt.hits
        report.tt_entries = len(tt.table)
        report.pruned_by = {k: v for k, v in self.pruned.items() if v}


_DISPATCH = {
    SeriesHelpmate: count_series_helpmate,
    SeriesProofGame: count_series_proof_game,
    ProofGame: count_proof_game,
    Helpmate: count_helpmate,
}


def solve(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Dispatch a problem to the counter for its stipulation type."""
    stip = p.stipulation
    if isinstance(stip, DirectMateExact):
        if stip.mode == "strategies":
            return count_mate_strategies_exact(p, lim)
        return count_mate_sequences_exact(p, lim)
    return _DISPATCH[type(stip)](p, lim)


def enumerate_solutions(p: Problem, lim: Optional[SearchLimits] = None) -> CountReport:
    """Solve with solution listing enabled (not available for strategies)."""
    lim = lim or SearchLimits()
    if isinstance(p.stipulation, DirectMateExact) and p.stipulation.mode == "strategies":
        raise StipulationMismatch("strategy counting does not enumerate lines")
    from dataclasses import replace

    return solve(p, replace(lim, enumerate=True))
