"""Independent chess rules implementation used to cross-check the engine.

Deliberately naive: characters on an 8x8 list of lists, full-board scans
for attacks, no incremental state.  Shares only the FEN text format with
the package, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

WHITE_PIECES = "PNBRQK"
BLACK_PIECES = "pnbrqk"

KNIGHT_STEPS = [(1, 2), (2, 1), (2, -1), (1, -2),
                (-1, -2), (-2, -1), (-2, 1), (-1, 2)]
KING_STEPS = [(1, 1), (1, 0), (1, -1), (0, 1),
              (0, -1), (-1, 1), (-1, 0), (-1, -1)]
ROOK_DIRS = [(1, 0), (-1, 0), (0, 1), (0, -1)]
BISHOP_DIRS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]


class RefState:
    def __init__(self, grid, white_to_move, castling, ep):
        self.grid = grid  # grid[rank][file], rank 0 = rank 1
        self.white_to_move = white_to_move
        self.castling = castling  # subset of "KQkq"
        self.ep = ep  # (rank, file) of the capture square or None

    def clone(self):
        return RefState([row[:] for row in self.grid], self.white_to_move,
                        self.castling, self.ep)


def from_fen(fen: str) -> RefState:
    parts = fen.split()
    rows = parts[0].split("/")
    grid = [["."] * 8 for _ in range(8)]
    for i, row in enumerate(rows):
        rank = 7 - i
        file = 0
        for ch in row:
            if ch.isdigit():
                file += int(ch)
            else:
                grid[rank][file] = ch
                file += 1
    white = len(parts) < 2 or parts[1] == "w"
    castling = parts[2] if len(parts) > 2 and parts[2] != "-" else ""
    ep = None
    if len(parts) > 3 and parts[3] != "-":
        ep = (int(parts[3][1]) - 1, ord(parts[3][0]) - ord("a"))
    return RefState(grid, white, castling, ep)


def _own(st: RefState, ch: str) -> bool:
    return ch in (WHITE_PIECES if st.white_to_move else BLACK_PIECES)


def _enemy(st: RefState, ch: str) -> bool:
    return ch in (BLACK_PIECES if st.white_to_move else WHITE_PIECES)


def square_attacked(grid, rank, file, by_white) -> bool:
    pawn, knight, bishop, rook, queen, king = (
        WHITE_PIECES if by_white else BLACK_PIECES)
    dr = -1 if by_white else 1  # pawn attackers sit behind the square
    for df in (-1, 1):
        r, f = rank + dr, file + df
        if 0 <= r < 8 and 0 <= f < 8 and grid[r][f] == pawn:
            return True
    for sr, sf in KNIGHT_STEPS:
        r, f = rank + sr, file + sf
        if 0 <= r < 8 and 0 <= f < 8 and grid[r][f] == knight:
            return True
    for sr, sf in KING_STEPS:
        r, f = rank + sr, file + sf
        if 0 <= r < 8 and 0 <= f < 8 and grid[r][f] == king:
            return True
    for dirs, sliders in ((ROOK_DIRS, (rook, queen)),
                          (BISHOP_DIRS, (bishop, queen))):
        for sr, sf in dirs:
            r, f = rank + sr, file + sf
            while 0 <= r < 8 and 0 <= f < 8:
                ch = grid[r][f]
                if ch != ".":
                    if ch in sliders:
                        return True
                    break
                r, f = r + sr, f + sf
    return False


def _king_pos(st: RefState, white: bool):
    target = "K" if white else "k"
    for r in range(8):
        for f in range(8):
            if st.grid[r][f] == target:
                return (r, f)
    return None


def in_check(st: RefState, white: bool) -> bool:
    kp = _king_pos(st, white)
    if kp is None:
        return False
    return square_attacked(st.grid, kp[0], kp[1], not white)


def _pseudo(st: RefState):
    """Yield (frm, to, promo, is_ep, castle) pseudo-legal moves."""
    forward = 1 if st.white_to_move else -1
    home = 1 if st.white_to_move else 6
    last = 7 if st.white_to_move else 0
    for r in range(8):
        for f in range(8):
            ch = st.grid[r][f]
            if not _own(st, ch):
                continue
            up = ch.upper()
            if up == "P":
                r1 = r + forward
                if 0 <= r1 < 8 and st.grid[r1][f] == ".":
                    promos = "NBRQ" if r1 == last else (None,)
                    for pr in promos:
                        yield ((r, f), (r1, f), pr, False, None)
                    r2 = r + 2 * forward
                    if r == home and st.grid[r2][f] == ".":
                        yield ((r, f), (r2, f), None, False, None)
                for df in (-1, 1):
                    f1 = f + df
                    if not (0 <= f1 < 8) or not (0 <= r1 < 8):
                        continue
                    if _enemy(st, st.grid[r1][f1]):
                        promos = "NBRQ" if r1 == last else (None,)
                        for pr in promos:
                            yield ((r, f), (r1, f1), pr, False, None)
                    elif st.ep == (r1, f1):
                        yield ((r, f), (r1, f1), None, True, None)
            elif up == "N":
                for sr, sf in KNIGHT_STEPS:
                    r1, f1 = r + sr, f + sf
                    if 0 <= r1 < 8 and 0 <= f1 < 8 \
                            and not _own(st, st.grid[r1][f1]):
                        yield ((r, f), (r1, f1), None, False, None)
            elif up == "K":
                for sr, sf in KING_STEPS:
                    r1, f1 = r + sr, f + sf
                    if 0 <= r1 < 8 and 0 <= f1 < 8 \
                            and not _own(st, st.grid[r1][f1]):
                        yield ((r, f), (r1, f1), None, False, None)
            else:
                dirs = ([] + (ROOK_DIRS if up in "RQ" else [])
                        + (BISHOP_DIRS if up in "BQ" else []))
                for sr, sf in dirs:
                    r1, f1 = r + sr, f + sf
                    while 0 <= r1 < 8 and 0 <= f1 < 8:
                        tc = st.grid[r1][f1]
                        if _own(st, tc):
                            break
                        yield ((r, f), (r1, f1), None, False, None)
                        if tc != ".":
                            break
                        r1, f1 = r1 + sr, f1 + sf
    # castling
    rank = 0 if st.white_to_move else 7
    king, rook = ("K", "R") if st.white_to_move else ("k", "r")
    rights = ("KQ" if st.white_to_move else "kq")
    if rights[0] in st.castling and st.grid[rank][4] == king \
            and st.grid[rank][7] == rook \
            and st.grid[rank][5] == st.grid[rank][6] == "." \
            and not any(square_attacked(st.grid, rank, f,
                                        not st.white_to_move)
                        for f in (4, 5, 6)):
        yield ((rank, 4), (rank, 6), None, False, "K")
    if rights[1] in st.castling and st.grid[rank][4] == king \
            and st.grid[rank][0] == rook \
            and st.grid[rank][1] == st.grid[rank][2] == st.grid[rank][3] == "." \
            and not any(square_attacked(st.grid, rank, f,
                                        not st.white_to_move)
                        for f in (2, 3, 4)):
        yield ((rank, 4), (rank, 2), None, False, "Q")


def make_move(st: RefState, move) -> RefState:
    (r0, f0), (r1, f1), promo, is_ep, castle = move
    nxt = st.clone()
    g = nxt.grid
    ch = g[r0][f0]
    g[r0][f0] = "."
    if is_ep:
        g[r0][f1] = "."  # the captured pawn stands beside the mover
    g[r1][f1] = (promo if st.white_to_move else promo.lower()) if promo else ch
    if castle == "K":
        g[r1][7] = "."
        g[r1][5] = "R" if st.white_to_move else "r"
    elif castle == "Q":
        g[r1][0] = "."
        g[r1][3] = "R" if st.white_to_move else "r"
    drop = ""
    if ch.upper() == "K":
        drop = "KQ" if st.white_to_move else "kq"
    for (rr, ff), flags in (((0, 4), "KQ"), ((0, 0), "Q"), ((0, 7), "K"),
                            ((7, 4), "kq"), ((7, 0), "q"), ((7, 7), "k")):
        if (r0, f0) == (rr, ff) or (r1, f1) == (rr, ff):
            drop += flags
    nxt.castling = "".join(c for c in st.castling if c not in drop)
    nxt.ep = None
    if ch.upper() == "P" and abs(r1 - r0) == 2:
        nxt.ep = ((r0 + r1) // 2, f0)
    nxt.white_to_move = not st.white_to_move
    return nxt


def legal_moves_ref(st: RefState):
    out = []
    for move in _pseudo(st):
        nxt = make_move(st, move)
        if not in_check(nxt, st.white_to_move):
            out.append(move)
    return out


def perft_ref(st: RefState, depth: int) -> int:
    if depth == 0:
        return 1
    total = 0
    for move in legal_moves_ref(st):
        total += perft_ref(make_move(st, move), depth - 1)
    return total


def move_uci(move) -> str:
    (r0, f0), (r1, f1), promo, _, _ = move
    s = (chr(ord("a") + f0) + str(r0 + 1)
         + chr(ord("a") + f1) + str(r1 + 1))
    return s + promo.lower() if promo else s
