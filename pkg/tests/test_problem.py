"""Problem files: stipulation grammar, validation, and round-tripping."""

import pytest

from chesscount.board import BLACK, WHITE
from chesscount.problem import (DirectMateExact, Helpmate, ProblemError,
                                ProofGame, SeriesHelpmate, SeriesProofGame,
                                format_problem, format_stipulation,
                                multiset_infeasibility, parse_problem,
                                parse_stipulation, validate_problem)


class TestStipulationGrammar:
    @pytest.mark.parametrize("text,expected", [
        ("ser-h#14", SeriesHelpmate(14)),
        ("ser-pg 10", SeriesProofGame(10)),
        ("pg 10", ProofGame(20)),
        ("pg 6.5", ProofGame(13)),
        ("pg 13.5", ProofGame(27)),
        ("h#3", Helpmate(6, BLACK)),
        ("h#3.5", Helpmate(7, WHITE)),
        ("h#0.5", Helpmate(1, WHITE)),
        ("#7 sequences", DirectMateExact(7, "sequences")),
        ("#4 strategies", DirectMateExact(4, "strategies")),
    ])
    def test_parses(self, text, expected):
        assert parse_stipulation(text) == expected

    @pytest.mark.parametrize("text", [
        "", "ser-h#", "pg", "h#0", "#3", "#3 lines", "mate in 2",
        "ser-pg 0", "ser-h#0",
    ])
    def test_rejects(self, text):
        with pytest.raises(ProblemError):
            parse_stipulation(text)

    def test_format_roundtrip(self):
        for text in ["ser-h#14", "ser-pg 10", "pg 10", "pg 6.5",
                     "h#3", "h#3.5", "#7 sequences", "#4 strategies"]:
            assert format_stipulation(parse_stipulation(text)) == text


class TestParseProblem:
    def test_minimal_series_helpmate(self):
        p = parse_problem("id: t\nfen: k7/8/pPK5/p7/8/8/8/8 b - -\n"
                          "stip: ser-h#14\nexpect: 429\n")
        assert isinstance(p.stipulation, SeriesHelpmate)
        assert p.expected_count == 429
        assert p.start is not None and p.target is None

    def test_proof_game_from_array(self):
        p = parse_problem("id: t\nstart: array\n"
                          "target: rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq -\n"
                          "stip: pg 2\n")
        assert p.stipulation == ProofGame(4)
        assert p.start.board == p.target.board

    def test_missing_stip_rejected(self):
        with pytest.raises(ProblemError):
            parse_problem("id: t\nfen: k7/8/8/8/8/8/8/K7 w - -\n")

    def test_bad_expect_rejected(self):
        with pytest.raises(ProblemError):
            parse_problem("id: t\nfen: k7/8/8/8/8/8/8/K7 b - -\n"
                          "stip: ser-h#2\nexpect: -1\n")

    def test_format_problem_roundtrip(self):
        text = ("id: t\nfen: k7/8/pPK5/p7/8/8/8/8 b - -\n"
                "stip: ser-h#14\nexpect: 429\n")
        p = parse_problem(text)
        again = parse_problem(format_problem(p))
        assert again.stipulation == p.stipulation
        assert again.start.board == p.start.board
        assert again.expected_count == p.expected_count


class TestValidation:
    def test_multiset_infeasibility_detects_growth(self):
        from chesscount.board import parse_fen
        start = parse_fen("k7/8/8/8/8/8/8/K7 w - -")
        target = parse_fen("kq6/8/8/8/8/8/8/K7 w - -")
        assert multiset_infeasibility(start, target) is not None

    def test_promotion_covers_extra_queens(self):
        from chesscount.board import parse_fen
        # two white queens are fine: a pawn may promote
        start = parse_fen("k7/4P3/8/8/8/8/8/KQ6 w - -")
        target = parse_fen("k3Q3/8/8/8/8/8/8/KQ6 w - -")
        assert multiset_infeasibility(start, target) is None

    def test_validate_flags_wrong_parity(self):
        # pg 1 is two plies, so the target must have White to move
        p = parse_problem("id: t\nstart: array\n"
                          "target: rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR b KQkq -\n"
                          "stip: pg 1\n")
        assert validate_problem(p)

    def test_validate_accepts_corpus_problem(self):
        p = parse_problem("id: t\nfen: k7/8/pPK5/p7/8/8/8/8 b - -\n"
                          "stip: ser-h#14\n")
        assert validate_problem(p) == []
