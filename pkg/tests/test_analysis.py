"""Precedence-poset recovery from enumerated solution sets."""

import pytest

from chesscount.analysis import (SolutionSet, check_poset_exactness,
                                 cover_edges_text, format_label,
                                 infer_precedence_poset, poset_dot,
                                 solution_set)
from chesscount.combinatorics import catalan
from chesscount.problem import parse_problem
from chesscount.solver import SearchLimits, enumerate_solutions


def series_problem(n=2):
    return parse_problem(f"id: t\nfen: k7/8/8/8/8/8/PPP5/KQ6 b - -\n"
                         f"stip: ser-h#{n}\n")


def helpmate_problem():
    return parse_problem("id: t\nfen: k7/8/8/8/8/8/PPP5/KQ6 b - -\n"
                         "stip: h#2\n")


class TestSolutionSet:
    def test_mating_move_stripped_and_deduplicated(self):
        p = series_problem(2)
        lines = [["a5", "a4", "Qb7#"], ["a5", "a4", "Qa7#"],
                 ["a4", "a5", "Qb7#"]]
        s = solution_set(p, lines)
        assert len(s.sequences) == 2
        assert all(len(seq) == 2 for seq in s.sequences)
        assert all(side == "black" for seq in s.sequences
                   for side, _, _ in seq)

    def test_repeated_move_gets_occurrence_index(self):
        p = series_problem(3)
        s = solution_set(p, [["Ka7", "Ka8", "Ka7", "Qb7#"]],
                         drop_mating_move=False)
        labels = s.sequences[0]
        assert labels[0] == ("black", "Ka7", 1)
        assert labels[2] == ("black", "Ka7", 2)
        assert labels[3] == ("white", "Qb7#", 1)

    def test_ragged_lengths_rejected(self):
        with pytest.raises(ValueError):
            SolutionSet("t", ((("black", "a5", 1),), ()))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            solution_set(series_problem(), [])


class TestInference:
    def test_free_order_gives_antichain(self):
        p = series_problem(2)
        s = solution_set(p, [["a5", "h5", "Q#"], ["h5", "a5", "Q#"]])
        r = infer_precedence_poset(s)
        assert r.common_multiset
        assert r.poset.covers == ()
        r = check_poset_exactness(s, r)
        assert r.extension_count == 2 and r.exact

    def test_forced_order_gives_chain(self):
        p = series_problem(2)
        s = solution_set(p, [["a5", "a4", "Q#"]])
        r = check_poset_exactness(s, infer_precedence_poset(s))
        assert r.extension_count == 1 and r.exact

    def test_differing_multisets_reported(self):
        p = series_problem(2)
        s = solution_set(p, [["a5", "a4", "Q#"], ["h5", "h4", "Q#"]])
        r = infer_precedence_poset(s)
        assert not r.common_multiset
        assert r.poset is None
        with pytest.raises(ValueError):
            check_poset_exactness(s, r)

    def test_inexact_when_order_constraints_insufficient(self):
        # three of the six orders of three free moves: the inferred
        # poset is the antichain, whose 6 extensions overcount
        p = series_problem(3)
        s = solution_set(p, [["a5", "b5", "c5", "Q#"],
                             ["b5", "c5", "a5", "Q#"],
                             ["c5", "a5", "b5", "Q#"]])
        r = check_poset_exactness(s, infer_precedence_poset(s))
        assert r.extension_count == 6 and not r.exact

    def test_alternation_constraint_for_helpmates(self):
        # two black and two white moves, order free within each side:
        # plain extensions 4!/(2!2!) choices exceed the alternating ones
        p = helpmate_problem()
        lines = [["a5", "Nf3", "h5", "Ng5#"], ["h5", "Nf3", "a5", "Ng5#"],
                 ["a5", "Ng5", "h5", "Nf3#"], ["h5", "Ng5", "a5", "Nf3#"]]
        s = solution_set(p, lines)
        r = check_poset_exactness(s, infer_precedence_poset(s),
                                  alternating="black")
        assert r.extension_count == 4 and r.exact
        plain = r.poset.count_linear_extensions()
        assert plain > 4


class TestRendering:
    def test_cover_edges_text(self):
        p = series_problem(2)
        s = solution_set(p, [["a5", "a4", "Q#"]])
        r = infer_precedence_poset(s)
        assert cover_edges_text(r.poset) == ["black:a5 < black:a4"]

    def test_format_label_occurrences(self):
        assert format_label(("white", "Nf3", 1)) == "white:Nf3"
        assert format_label(("white", "Nf3", 2)) == "white:Nf3(2)"

    def test_dot_output(self):
        p = series_problem(2)
        s = solution_set(p, [["a5", "a4", "Q#"]])
        dot = poset_dot(infer_precedence_poset(s).poset, "t")
        assert dot.startswith('digraph "t"')
        assert '"black:a5" -> "black:a4"' in dot


class TestEndToEnd:
    def test_pawn_series_recovers_grid_poset(self, warm_jit):
        # two pawns each walking seven steps: the series orders are the
        # linear extensions of a 2 x 7 grid, counted by the Catalan number
        p = parse_problem("id: grid\nfen: k7/8/pPK5/p7/8/8/8/8 b - -\n"
                          "stip: ser-h#14\n")
        rep = enumerate_solutions(p, SearchLimits(enumerate_limit=1000))
        assert rep.count == 429
        s = solution_set(p, rep.solutions)
        r = check_poset_exactness(s, infer_precedence_poset(s))
        assert len(r.poset) == 14
        assert r.extension_count == catalan(7) == 429
        assert r.exact
