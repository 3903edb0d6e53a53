"""Linear-extension counting: DP vs brute force and known closed forms."""

import pytest

from chesscount.combinatorics import catalan, euler_zigzag
from chesscount.poset import (IdealBudgetExceeded, Poset, antichain,
                              brute_force_extensions, chain, grid_poset)


class TestConstruction:
    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            Poset("abc", [("a", "b"), ("b", "c"), ("c", "a")])

    def test_unknown_element_rejected(self):
        with pytest.raises(ValueError):
            Poset("ab", [("a", "x")])

    def test_duplicate_elements_rejected(self):
        with pytest.raises(ValueError):
            Poset("aa", ())

    def test_less_is_transitive(self):
        p = Poset("abc", [("a", "b"), ("b", "c")])
        assert p.less("a", "c")
        assert not p.less("c", "a")

    def test_from_relation_reduces_to_covers(self):
        p = Poset.from_relation("abc", [("a", "b"), ("b", "c"), ("a", "c")])
        assert set(p.covers) == {("a", "b"), ("b", "c")}


class TestExtensionCounts:
    def test_chain_has_one_extension(self):
        for k in range(1, 8):
            assert chain(k).count_linear_extensions() == 1

    def test_antichain_has_factorial_extensions(self):
        import math
        for k in range(1, 8):
            assert antichain(k).count_linear_extensions() == math.factorial(k)

    def test_empty_poset(self):
        assert Poset((), ()).count_linear_extensions() == 1

    def test_v_poset(self):
        # one minimum below two incomparable elements: 2 orders
        assert Poset("abc", [("a", "b"), ("a", "c")]) \
            .count_linear_extensions() == 2

    def test_two_by_n_grid_is_catalan(self):
        for n in range(1, 8):
            assert grid_poset(2, n).count_linear_extensions() == catalan(n)

    def test_zigzag_fence_is_euler(self):
        # fence x0 < x1 > x2 < x3 ...: extensions = zigzag permutations
        for n in range(2, 10):
            covers = []
            for i in range(n - 1):
                if i % 2 == 0:
                    covers.append((i, i + 1))
                else:
                    covers.append((i + 1, i))
            assert Poset(tuple(range(n)), covers).count_linear_extensions() \
                == euler_zigzag(n)

    def test_dp_matches_brute_force(self):
        cases = [
            Poset(tuple(range(6)), [(0, 2), (1, 2), (2, 3), (1, 4), (4, 5)]),
            Poset(tuple(range(7)), [(0, 1), (0, 2), (3, 4), (5, 6), (2, 6)]),
            grid_poset(2, 4),
            antichain(6),
        ]
        for p in cases:
            assert p.count_linear_extensions() == brute_force_extensions(p)

    def test_budget_raises(self):
        with pytest.raises(IdealBudgetExceeded):
            antichain(24).count_linear_extensions(budget=1000)


class TestColoredExtensions:
    def test_requires_coloring(self):
        with pytest.raises(ValueError):
            chain(3).count_linear_extensions_colored("white")

    def test_alternating_chain(self):
        colors = {0: "white", 1: "black", 2: "white"}
        p = chain(3).with_coloring(colors)
        assert p.count_linear_extensions_colored("white") == 1
        assert p.count_linear_extensions_colored("black") == 0

    def test_alternating_antichain(self):
        # two whites, two blacks, no order: alternating words W B W B
        # choose which white is first (2) and which black is first (2)
        p = antichain(4).with_coloring(
            {0: "white", 1: "white", 2: "black", 3: "black"})
        assert p.count_linear_extensions_colored("white") == 4

    def test_colored_at_most_plain(self):
        p = grid_poset(2, 3)
        colors = {e: ("white" if (e[0] + e[1]) % 2 == 0 else "black")
                  for e in p.elements}
        colored = p.with_coloring(colors)
        assert colored.count_linear_extensions_colored("white") \
            <= p.count_linear_extensions()
