"""Chess rules kernel: positions, legal move generation, hashing, perft.

Positions are immutable values.  Board cells hold small ints: 0 is empty,
1..6 are white P N B R Q K, 7..12 the black men.  Squares are 0..63 with
a1 = 0, h8 = 63 (rank-major).

Positions without one or both kings are accepted: one-sided problems have
no black men at all.  Every check predicate treats a missing king as
"never in check".
"""

from __future__ import annotations

import random
from typing import Iterator, NamedTuple, Optional

WHITE, BLACK = 0, 1

PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6
WP, WN, WB, WR, WQ, WK = 1, 2, 3, 4, 5, 6
BP, BN, BB, BR, BQ, BK = 7, 8, 9, 10, 11, 12

PIECE_CHARS = ".PNBRQKpnbrqk"
CHAR_TO_PIECE = {c: i for i, c in enumerate(PIECE_CHARS) if c != "."}
KIND_LETTERS = ".PNBRQK"

CASTLE_WK, CASTLE_WQ, CASTLE_BK, CASTLE_BQ = 1, 2, 4, 8

FLAG_NONE, FLAG_DOUBLE, FLAG_EP, FLAG_CASTLE_K, FLAG_CASTLE_Q = 0, 1, 2, 3, 4

NORMAL, CHECK, CHECKMATE, STALEMATE = "normal", "check", "checkmate", "stalemate"

START_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -"
WHITE_ARRAY_FEN = "8/8/8/8/8/8/PPPPPPPP/RNBQKBNR w KQ -"


class FenError(ValueError):
    """Raised for malformed or illegal FEN input."""


class IllegalMoveError(ValueError):
    """Raised when apply() is given a move that is not legal."""


def square(file: int, rank: int) -> int:
    return rank * 8 + file


def square_name(s: int) -> str:
    return "abcdefgh"[s & 7] + str((s >> 3) + 1)


def parse_square(name: str) -> int:
    if len(name) != 2 or name[0] not in "abcdefgh" or name[1] not in "12345678":
        raise ValueError(f"bad square name {name!r}")
    return (int(name[1]) - 1) * 8 + "abcdefgh".index(name[0])


def piece_color(p: int) -> int:
    return WHITE if p <= 6 else BLACK


def piece_kind(p: int) -> int:
    return p if p <= 6 else p - 6


def make_piece(color: int, kind: int) -> int:
    return kind if color == WHITE else kind + 6


# ---------------------------------------------------------------------------
# Precomputed geometry

def _build_tables():
    knight, king, rays = [], [], []
    pawn_att = ([], [])
    for s in range(64):
        f, r = s & 7, s >> 3
        knight.append(tuple(
            square(f + df, r + dr)
            for df, dr in ((1, 2), (2, 1), (2, -1), (1, -2),
                           (-1, -2), (-2, -1), (-2, 1), (-1, 2))
            if 0 <= f + df < 8 and 0 <= r + dr < 8))
        king.append(tuple(
            square(f + df, r + dr)
            for df in (-1, 0, 1) for dr in (-1, 0, 1)
            if (df or dr) and 0 <= f + df < 8 and 0 <= r + dr < 8))
        dirs = []
        for df, dr in ((1, 0), (-1, 0), (0, 1), (0, -1),
                       (1, 1), (-1, 1), (1, -1), (-1, -1)):
            ray = []
            nf, nr = f + df, r + dr
            while 0 <= nf < 8 and 0 <= nr < 8:
                ray.append(square(nf, nr))
                nf += df
                nr += dr
            dirs.append(tuple(ray))
        rays.append(tuple(dirs))
        pawn_att[WHITE].append(tuple(
            square(f + df, r + 1) for df in (-1, 1)
            if 0 <= f + df < 8 and r + 1 < 8))
        pawn_att[BLACK].append(tuple(
            square(f + df, r - 1) for df in (-1, 1)
            if 0 <= f + df < 8 and r - 1 >= 0))
    return (tuple(knight), tuple(king), tuple(rays),
            (tuple(pawn_att[0]), tuple(pawn_att[1])))


KNIGHT_TO, KING_TO, RAYS, PAWN_ATT = _build_tables()

# Direction index (into RAYS[s]) from square a toward square b on a common
# line, or -1.  Used for pin detection.
_DIR_BETWEEN = [[-1] * 64 for _ in range(64)]
for _s in range(64):
    for _d in range(8):
        for _t in RAYS[_s][_d]:
            _DIR_BETWEEN[_s][_t] = _d


# ---------------------------------------------------------------------------
# Zobrist keys (fixed seed so hashes are stable across runs)

_rng = random.Random(0x5EED1E55C0FFEE)
PIECE_KEYS = tuple(tuple(_rng.getrandbits(64) for _ in range(64)) for _ in range(13))
SIDE_KEY = _rng.getrandbits(64)
CASTLE_KEYS = tuple(_rng.getrandbits(64) for _ in range(4))
EP_FILE_KEYS = tuple(_rng.getrandbits(64) for _ in range(8))
del _rng


def zobrist_key(board: bytes, stm: int, castling: int, ep: Optional[int]) -> int:
    key = 0
    for s in range(64):
        p = board[s]
        if p:
            key ^= PIECE_KEYS[p][s]
    if stm == BLACK:
        key ^= SIDE_KEY
    for i in range(4):
        if castling & (1 << i):
            key ^= CASTLE_KEYS[i]
    if ep is not None:
        key ^= EP_FILE_KEYS[ep & 7]
    return key


class Move(NamedTuple):
    frm: int
    to: int
    piece: int
    capture: int = 0  # piece code removed (incl. en passant), 0 if none
    promo: int = 0    # kind promoted to, 0 if none
    flag: int = FLAG_NONE

    def uci(self) -> str:
        s = square_name(self.frm) + square_name(self.to)
        if self.promo:
            s += KIND_LETTERS[self.promo]
        return s

    def lan(self) -> str:
        if self.flag == FLAG_CASTLE_K:
            return "O-O"
        if self.flag == FLAG_CASTLE_Q:
            return "O-O-O"
        kind = piece_kind(self.piece)
        head = "" if kind == PAWN else KIND_LETTERS[kind]
        sep = "x" if self.capture else "-"
        tail = "=" + KIND_LETTERS[self.promo] if self.promo else ""
        return f"{head}{square_name(self.frm)}{sep}{square_name(self.to)}{tail}"


class Position:
    """Immutable full chess state: placement, side to move, castling, ep."""

    __slots__ = ("board", "stm", "castling", "ep", "key")

    def __init__(self, board: bytes, stm: int, castling: int,
                 ep: Optional[int], key: Optional[int] = None):
        self.board = bytes(board)
        self.stm = stm
        self.castling = castling
        self.ep = ep
        self.key = zobrist_key(self.board, stm, castling, ep) if key is None else key

    def __eq__(self, other):
        return (isinstance(other, Position)
                and self.board == other.board and self.stm == other.stm
                and self.castling == other.castling and self.ep == other.ep)

    def __hash__(self):
        return self.key

    def __repr__(self):
        return f"Position({format_fen(self)!r})"

    def king_square(self, color: int) -> Optional[int]:
        k = WK if color == WHITE else BK
        idx = self.board.find(k)
        return idx if idx >= 0 else None

    def in_check(self, color: Optional[int] = None) -> bool:
        """True iff `color`'s king (default: side to move) is attacked."""
        if color is None:
            color = self.stm
        ks = self.king_square(color)
        if ks is None:
            return False
        return attacked(self.board, ks, color ^ 1)


def attacked(board: bytes, s: int, by: int) -> bool:
    """True iff side `by` attacks square `s` on the given board."""
    if by == WHITE:
        pawn, knight, bishop, rook, queen, king = WP, WN, WB, WR, WQ, WK
    else:
        pawn, knight, bishop, rook, queen, king = BP, BN, BB, BR, BQ, BK
    for t in KNIGHT_TO[s]:
        if board[t] == knight:
            return True
    for t in KING_TO[s]:
        if board[t] == king:
            return True
    # a white pawn attacks s from the squares a black pawn on s would attack
    for t in PAWN_ATT[by ^ 1][s]:
        if board[t] == pawn:
            return True
    rays = RAYS[s]
    for d in (0, 1, 2, 3):
        for t in rays[d]:
            v = board[t]
            if v:
                if v == rook or v == queen:
                    return True
                break
    for d in (4, 5, 6, 7):
        for t in rays[d]:
            v = board[t]
            if v:
                if v == bishop or v == queen:
                    return True
                break
    return False


# ---------------------------------------------------------------------------
# FEN

def parse_fen(text: str) -> Position:
    """Parse FEN.  Missing fields default to white to move, no castling, no ep.

    Halfmove/fullmove counters are accepted and ignored.  Castling flags
    inconsistent with king/rook placement are silently dropped.
    """
    parts = text.split()
    if not parts:
        raise FenError("empty FEN")
    placement = parts[0]
    ranks = placement.split("/")
    if len(ranks) != 8:
        raise FenError(f"placement must have 8 ranks, got {len(ranks)}")
    board = bytearray(64)
    for i, row in enumerate(ranks):
        r = 7 - i
        f = 0
        for ch in row:
            if ch.isdigit():
                f += int(ch)
            elif ch in CHAR_TO_PIECE:
                if f >= 8:
                    raise FenError(f"rank {r + 1} overflows 8 files")
                board[square(f, r)] = CHAR_TO_PIECE[ch]
                f += 1
            else:
                raise FenError(f"bad placement character {ch!r}")
        if f != 8:
            raise FenError(f"rank {r + 1} has {f} files, expected 8")

    stm = WHITE
    if len(parts) > 1:
        if parts[1] == "w":
            stm = WHITE
        elif parts[1] == "b":
            stm = BLACK
        else:
            raise FenError(f"bad side-to-move field {parts[1]!r}")

    castling = 0
    if len(parts) > 2 and parts[2] != "-":
        for ch in parts[2]:
            bit = {"K": CASTLE_WK, "Q": CASTLE_WQ,
                   "k": CASTLE_BK, "q": CASTLE_BQ}.get(ch)
            if bit is None:
                raise FenError(f"bad castling field {parts[2]!r}")
            castling |= bit
    # a flag may be set only if king and rook stand on their game-array squares
    if castling & CASTLE_WK and not (board[4] == WK and board[7] == WR):
        castling &= ~CASTLE_WK
    if castling & CASTLE_WQ and not (board[4] == WK and board[0] == WR):
        castling &= ~CASTLE_WQ
    if castling & CASTLE_BK and not (board[60] == BK and board[63] == BR):
        castling &= ~CASTLE_BK
    if castling & CASTLE_BQ and not (board[60] == BK and board[56] == BR):
        castling &= ~CASTLE_BQ

    ep = None
    if len(parts) > 3 and parts[3] != "-":
        try:
            ep = parse_square(parts[3])
        except ValueError as exc:
            raise FenError(f"bad en-passant field {parts[3]!r}") from exc

    if board.count(WK) > 1:
        raise FenError("more than one white king")
    if board.count(BK) > 1:
        raise FenError("more than one black king")
    for s in list(range(0, 8)) + list(range(56, 64)):
        if board[s] in (WP, BP):
            raise FenError(f"pawn on back rank at {square_name(s)}")
    if ep is not None:
        rank = ep >> 3
        if stm == WHITE:
            if rank != 5 or board[ep] or board[ep - 8] != BP or board[ep + 8]:
                raise FenError("en-passant target inconsistent with a black double push")
        else:
            if rank != 2 or board[ep] or board[ep + 8] != WP or board[ep - 8]:
                raise FenError("en-passant target inconsistent with a white double push")

    pos = Position(bytes(board), stm, castling, ep)
    if pos.in_check(stm ^ 1):
        raise FenError("side not to move is in check")
    return pos


def format_fen(pos: Position) -> str:
    rows = []
    for r in range(7, -1, -1):
        row = ""
        run = 0
        for f in range(8):
            p = pos.board[square(f, r)]
            if p:
                if run:
                    row += str(run)
                    run = 0
                row += PIECE_CHARS[p]
            else:
                run += 1
        if run:
            row += str(run)
        rows.append(row)
    castling = "".join(ch for ch, bit in
                       (("K", CASTLE_WK), ("Q", CASTLE_WQ),
                        ("k", CASTLE_BK), ("q", CASTLE_BQ))
                       if pos.castling & bit) or "-"
    ep = square_name(pos.ep) if pos.ep is not None else "-"
    return "/".join(rows) + f" {'w' if pos.stm == WHITE else 'b'} {castling} {ep}"


# ---------------------------------------------------------------------------
# Move generation

def _pseudo_moves(pos: Position) -> list[Move]:
    board = pos.board
    stm = pos.stm
    moves = []
    add = moves.append
    if stm == WHITE:
        own_lo, own_hi = WP, WK
        enemy_king = BK
        fwd, home, promo_rank = 8, 1, 7
    else:
        own_lo, own_hi = BP, BK
        enemy_king = WK
        fwd, home, promo_rank = -8, 6, 0
    for s in range(64):
        p = board[s]
        if p < own_lo or p > own_hi:
            continue
        kind = p if p <= 6 else p - 6
        if kind == PAWN:
            t = s + fwd
            if not board[t]:
                if t >> 3 == promo_rank:
                    for pk in (QUEEN, ROOK, BISHOP, KNIGHT):
                        add(Move(s, t, p, 0, pk))
                else:
                    add(Move(s, t, p))
                    if s >> 3 == home and not board[t + fwd]:
                        add(Move(s, t + fwd, p, 0, 0, FLAG_DOUBLE))
            for t in PAWN_ATT[stm][s]:
                v = board[t]
                if v and piece_color(v) != stm and v != enemy_king:
                    if t >> 3 == promo_rank:
                        for pk in (QUEEN, ROOK, BISHOP, KNIGHT):
                            add(Move(s, t, p, v, pk))
                    else:
                        add(Move(s, t, p, v))
                elif pos.ep is not None and t == pos.ep:
                    victim = BP if stm == WHITE else WP
                    add(Move(s, t, p, victim, 0, FLAG_EP))
        elif kind == KNIGHT:
            for t in KNIGHT_TO[s]:
                v = board[t]
                if not v:
                    add(Move(s, t, p))
                elif piece_color(v) != stm and v != enemy_king:
                    add(Move(s, t, p, v))
        elif kind == KING:
            for t in KING_TO[s]:
                v = board[t]
                if not v:
                    add(Move(s, t, p))
                elif piece_color(v) != stm and v != enemy_king:
                    add(Move(s, t, p, v))
        else:
            if kind == ROOK:
                dirs = (0, 1, 2, 3)
            elif kind == BISHOP:
                dirs = (4, 5, 6, 7)
            else:
                dirs = (0, 1, 2, 3, 4, 5, 6, 7)
            rays = RAYS[s]
            for d in dirs:
                for t in rays[d]:
                    v = board[t]
                    if not v:
                        add(Move(s, t, p))
                    else:
                        if piece_color(v) != stm and v != enemy_king:
                            add(Move(s, t, p, v))
                        break
    # castling
    if stm == WHITE and pos.castling & (CASTLE_WK | CASTLE_WQ):
        if (pos.castling & CASTLE_WK and not board[5] and not board[6]
                and not attacked(board, 4, BLACK)
                and not attacked(board, 5, BLACK)
                and not attacked(board, 6, BLACK)):
            add(Move(4, 6, WK, 0, 0, FLAG_CASTLE_K))
        if (pos.castling & CASTLE_WQ and not board[3] and not board[2]
                and not board[1]
                and not attacked(board, 4, BLACK)
                and not attacked(board, 3, BLACK)
                and not attacked(board, 2, BLACK)):
            add(Move(4, 2, WK, 0, 0, FLAG_CASTLE_Q))
    elif stm == BLACK and pos.castling & (CASTLE_BK | CASTLE_BQ):
        if (pos.castling & CASTLE_BK and not board[61] and not board[62]
                and not attacked(board, 60, WHITE)
                and not attacked(board, 61, WHITE)
                and not attacked(board, 62, WHITE)):
            add(Move(60, 62, BK, 0, 0, FLAG_CASTLE_K))
        if (pos.castling & CASTLE_BQ and not board[59] and not board[58]
                and not board[57]
                and not attacked(board, 60, WHITE)
                and not attacked(board, 59, WHITE)
                and not attacked(board, 58, WHITE)):
            add(Move(60, 58, BK, 0, 0, FLAG_CASTLE_Q))
    return moves


def _move_is_safe(pos: Position, mv: Move, king: int) -> bool:
    """Apply mv on a scratch board and test whether own king survives."""
    board = bytearray(pos.board)
    stm = pos.stm
    board[mv.frm] = 0
    if mv.flag == FLAG_EP:
        board[mv.to + (-8 if stm == WHITE else 8)] = 0
    board[mv.to] = mv.piece if not mv.promo else make_piece(stm, mv.promo)
    ks = mv.to if piece_kind(mv.piece) == KING else king
    return not attacked(board, ks, stm ^ 1)


def _pinned_squares(pos: Position, king: int) -> set[int]:
    board = pos.board
    stm = pos.stm
    pinned = set()
    if stm == WHITE:
        rook, bishop, queen = BR, BB, BQ
    else:
        rook, bishop, queen = WR, WB, WQ
    rays = RAYS[king]
    for d in range(8):
        blocker = None
        for t in rays[d]:
            v = board[t]
            if not v:
                continue
            if piece_color(v) == stm:
                if blocker is not None:
                    break
                blocker = t
            else:
                if blocker is not None:
                    if v == queen or v == (rook if d < 4 else bishop):
                        pinned.add(blocker)
                break
    return pinned


def legal_moves(pos: Position) -> list[Move]:
    """All legal moves for the side to move, in a canonical sorted order.

    If the moving side has no king only geometric legality applies; if the
    opponent has no king, check conditions are vacuous.
    """
    pseudo = _pseudo_moves(pos)
    king = pos.king_square(pos.stm)
    if king is None:
        pseudo.sort()
        return pseudo
    board = pos.board
    enemy = pos.stm ^ 1
    if attacked(board, king, enemy):
        moves = [m for m in pseudo
                 if m.flag not in (FLAG_CASTLE_K, FLAG_CASTLE_Q)
                 and _move_is_safe(pos, m, king)]
    else:
        pinned = _pinned_squares(pos, king)
        moves = []
        for m in pseudo:
            if m.frm == king:
                if m.flag in (FLAG_CASTLE_K, FLAG_CASTLE_Q):
                    moves.append(m)  # path safety already verified
                elif _move_is_safe(pos, m, king):
                    moves.append(m)
            elif m.flag == FLAG_EP or m.frm in pinned:
                if _move_is_safe(pos, m, king):
                    moves.append(m)
            else:
                moves.append(m)
    moves.sort()
    return moves


def has_legal_move(pos: Position) -> bool:
    return bool(legal_moves(pos))


# ---------------------------------------------------------------------------
# Applying moves

_CASTLE_MASK = bytearray(255 for _ in range(64))
_CASTLE_MASK[0] = 255 ^ CASTLE_WQ
_CASTLE_MASK[7] = 255 ^ CASTLE_WK
_CASTLE_MASK[4] = 255 ^ (CASTLE_WK | CASTLE_WQ)
_CASTLE_MASK[56] = 255 ^ CASTLE_BQ
_CASTLE_MASK[63] = 255 ^ CASTLE_BK
_CASTLE_MASK[60] = 255 ^ (CASTLE_BK | CASTLE_BQ)


def apply(pos: Position, mv: Move, check_legal: bool = True) -> Position:
    """Return the successor position; `pos` is unmodified.

    With check_legal (the default) the move must be a member of
    legal_moves(pos).  Solvers pass check_legal=False on moves they
    generated themselves.
    """
    if check_legal and mv not in legal_moves(pos):
        raise IllegalMoveError(f"illegal move {mv.lan()} in {format_fen(pos)}")
    board = bytearray(pos.board)
    stm = pos.stm
    key = pos.key
    key ^= PIECE_KEYS[mv.piece][mv.frm]
    board[mv.frm] = 0
    if mv.capture:
        if mv.flag == FLAG_EP:
            cap_sq = mv.to + (-8 if stm == WHITE else 8)
        else:
            cap_sq = mv.to
        key ^= PIECE_KEYS[mv.capture][cap_sq]
        board[cap_sq] = 0
    placed = make_piece(stm, mv.promo) if mv.promo else mv.piece
    board[mv.to] = placed
    key ^= PIECE_KEYS[placed][mv.to]
    if mv.flag == FLAG_CASTLE_K:
        rook = WR if stm == WHITE else BR
        rf, rt = (7, 5) if stm == WHITE else (63, 61)
        board[rf] = 0
        board[rt] = rook
        key ^= PIECE_KEYS[rook][rf] ^ PIECE_KEYS[rook][rt]
    elif mv.flag == FLAG_CASTLE_Q:
        rook = WR if stm == WHITE else BR
        rf, rt = (0, 3) if stm == WHITE else (56, 59)
        board[rf] = 0
        board[rt] = rook
        key ^= PIECE_KEYS[rook][rf] ^ PIECE_KEYS[rook][rt]

    castling = pos.castling & _CASTLE_MASK[mv.frm] & _CASTLE_MASK[mv.to]
    if castling != pos.castling:
        diff = castling ^ pos.castling
        for i in range(4):
            if diff & (1 << i):
                key ^= CASTLE_KEYS[i]

    if pos.ep is not None:
        key ^= EP_FILE_KEYS[pos.ep & 7]
    ep = None
    if mv.flag == FLAG_DOUBLE:
        ep = (mv.frm + mv.to) // 2
        key ^= EP_FILE_KEYS[ep & 7]

    key ^= SIDE_KEY
    return Position(bytes(board), stm ^ 1, castling, ep, key)


def pass_turn(pos: Position) -> Position:
    """Same placement, other side to move, en-passant right cleared."""
    key = pos.key ^ SIDE_KEY
    if pos.ep is not None:
        key ^= EP_FILE_KEYS[pos.ep & 7]
    return Position(pos.board, pos.stm ^ 1, pos.castling, None, key)


def status(pos: Position) -> str:
    """One of normal / check / checkmate / stalemate for the side to move."""
    if pos.king_square(pos.stm) is None:
        return NORMAL
    checked = pos.in_check()
    if has_legal_move(pos):
        return CHECK if checked else NORMAL
    return CHECKMATE if checked else STALEMATE


def perft(pos: Position, depth: int) -> int:
    """Number of legal game-tree leaves at exactly `depth` plies."""
    if depth <= 0:
        return 1
    if depth == 1:
        return len(legal_moves(pos))
    total = 0
    for m in legal_moves(pos):
        total += perft(apply(pos, m, check_legal=False), depth - 1)
    return total
