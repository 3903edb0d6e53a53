"""Move generator and FEN tests, cross-checked against the naive reference."""

import pytest

from chesscount.board import (BLACK, CHECKMATE, STALEMATE, WHITE, START_FEN,
                              FenError, Position, apply, format_fen,
                              legal_moves, parse_fen, perft, square,
                              square_name, status)

import reference


START = parse_fen(START_FEN)


class TestSquares:
    def test_square_names_roundtrip(self):
        assert square_name(0) == "a1"
        assert square_name(63) == "h8"
        assert square(4, 3) == 28  # e4

    def test_square_name_all_distinct(self):
        assert len({square_name(s) for s in range(64)}) == 64


class TestFen:
    def test_start_roundtrip(self):
        assert format_fen(START).startswith(
            "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -")

    def test_rejects_garbage(self):
        with pytest.raises(FenError):
            parse_fen("not a fen")

    def test_rejects_bad_rank_width(self):
        with pytest.raises(FenError):
            parse_fen("9/8/8/8/8/8/8/8 w - -")

    def test_kingless_position_allowed(self):
        pos = parse_fen("8/8/8/8/8/8/8/8 w - -")
        assert pos.king_square(WHITE) is None

    def test_ep_square_parsed(self):
        pos = parse_fen("k7/8/8/8/4Pp2/8/8/K7 b - e3")
        assert pos.ep == square(4, 2)


KNOWN_PERFT = [1, 20, 400, 8902, 197281]


class TestPerft:
    @pytest.mark.parametrize("depth", [1, 2, 3, 4])
    def test_start_position_known_values(self, depth):
        assert perft(START, depth) == KNOWN_PERFT[depth]

    @pytest.mark.parametrize("depth", [1, 2, 3, 4])
    def test_start_position_vs_reference(self, depth):
        ref = reference.from_fen(START_FEN)
        assert perft(START, depth) == reference.perft_ref(ref, depth)

    @pytest.mark.parametrize("fen", [
        # castling, ep, pins, promotions all live here
        "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq -",
        "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - -",
        "n1n5/PPPk4/8/8/8/8/4Kppp/5N1N b - -",
    ])
    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_tricky_positions_vs_reference(self, fen, depth):
        ref = reference.from_fen(fen)
        assert perft(parse_fen(fen), depth) == reference.perft_ref(ref, depth)


class TestMoves:
    def test_move_lists_agree_with_reference(self):
        fen = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq -"
        ours = {m.uci() for m in legal_moves(parse_fen(fen))}
        theirs = {reference.move_uci(m)
                  for m in reference.legal_moves_ref(reference.from_fen(fen))}
        assert ours == theirs

    def test_en_passant_capture(self):
        pos = parse_fen("k7/8/8/8/4Pp2/8/8/K7 b - e3")
        ep = [m for m in legal_moves(pos) if m.uci() == "f4e3"]
        assert len(ep) == 1
        after = apply(pos, ep[0])
        assert after.board[square(4, 3)] == 0  # the pawn on e4 is gone

    def test_promotion_produces_four_moves(self):
        pos = parse_fen("8/P7/8/8/8/8/k7/7K w - -")
        promos = [m for m in legal_moves(pos) if m.frm == square(0, 6)]
        assert sorted(m.uci()[-1] for m in promos) == ["b", "n", "q", "r"]


class TestStatus:
    def test_checkmate(self):
        assert status(parse_fen("R5k1/5ppp/8/8/8/8/8/7K b - -")) == CHECKMATE

    def test_stalemate(self):
        assert status(parse_fen("k7/8/1QK5/8/8/8/8/8 b - -")) == STALEMATE

    def test_position_hash_distinguishes_ep(self):
        a = parse_fen("k7/8/8/8/4Pp2/8/8/K7 b - e3")
        b = parse_fen("k7/8/8/8/4Pp2/8/8/K7 b - -")
        assert Position.__hash__(a) != Position.__hash__(b)
