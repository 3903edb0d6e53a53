"""Finite posets and exact linear-extension counting.

The extension counters run a DP over order ideals (down-sets), discovered
incrementally, so memory is proportional to the number of ideals actually
reachable rather than 2^n.
"""

from __future__ import annotations

from itertools import permutations
from typing import Hashable, Mapping, Optional, Sequence

DEFAULT_IDEAL_BUDGET = 10_000_000


class IdealBudgetExceeded(RuntimeError):
    def __init__(self, budget: int):
        super().__init__(f"order-ideal count exceeded the budget of {budget}")
        self.budget = budget


class Poset:
    """Immutable poset given by labeled elements and a cover relation.

    An optional total two-coloring ("white"/"black") supports counting
    extensions that alternate colors, as move alternation requires.
    """

    def __init__(self, elements: Sequence[Hashable],
                 covers: Sequence[tuple[Hashable, Hashable]],
                 coloring: Optional[Mapping[Hashable, str]] = None):
        self.elements = tuple(elements)
        self.covers = tuple(covers)
        self.coloring = dict(coloring) if coloring is not None else None
        self._index = {e: i for i, e in enumerate(self.elements)}
        if len(self._index) != len(self.elements):
            raise ValueError("duplicate poset elements")
        n = len(self.elements)
        succ = [0] * n  # successors in the cover DAG, as bitmasks
        for a, b in self.covers:
            if a not in self._index or b not in self._index:
                raise ValueError(f"cover ({a!r}, {b!r}) uses an unknown element")
            succ[self._index[a]] |= 1 << self._index[b]
        # transitive closure; also detects cycles
        above = [0] * n
        state = [0] * n  # 0 unvisited, 1 on stack, 2 done

        def close(i: int) -> int:
            if state[i] == 1:
                raise ValueError("cover relation contains a cycle")
            if state[i] == 2:
                return above[i]
            state[i] = 1
            acc = succ[i]
            rest = succ[i]
            while rest:
                j = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                acc |= close(j)
            above[i] = acc
            state[i] = 2
            return acc

        for i in range(n):
            close(i)
        self._above = above
        if self.coloring is not None:
            missing = [e for e in self.elements if e not in self.coloring]
            if missing:
                raise ValueError(f"coloring missing elements: {missing!r}")

    def __len__(self):
        return len(self.elements)

    def __eq__(self, other):
        return (isinstance(other, Poset)
                and self.elements == other.elements
                and set(self.covers) == set(other.covers)
                and self.coloring == other.coloring)

    def __repr__(self):
        return f"Poset({len(self.elements)} elements, {len(self.covers)} covers)"

    def with_coloring(self, coloring: Mapping[Hashable, str]) -> "Poset":
        return Poset(self.elements, self.covers, coloring)

    def less(self, a: Hashable, b: Hashable) -> bool:
        return bool(self._above[self._index[a]] >> self._index[b] & 1)

    def count_linear_extensions(self, budget: int = DEFAULT_IDEAL_BUDGET) -> int:
        """Exact number of linear extensions."""
        return self._extension_dp(required_color=None, budget=budget)

    def count_linear_extensions_colored(self, first: str,
                                        budget: int = DEFAULT_IDEAL_BUDGET) -> int:
        """Extensions whose color word alternates, starting with `first`."""
        if self.coloring is None:
            raise ValueError("poset has no coloring")
        if first not in ("white", "black"):
            raise ValueError(f"bad color {first!r}")
        return self._extension_dp(required_color=first, budget=budget)

    def _extension_dp(self, required_color: Optional[str], budget: int) -> int:
        n = len(self.elements)
        above = self._above
        if required_color is not None:
            colors = [self.coloring[e] for e in self.elements]
            other = "black" if required_color == "white" else "white"
        full = (1 << n) - 1
        memo = {0: 1}

        # e(I) = extensions of the sub-poset induced on ideal I, built by
        # removing a maximal element at a time; the removed element sits at
        # position |I| of the whole extension word.
        def count(mask: int) -> int:
            cached = memo.get(mask)
            if cached is not None:
                return cached
            if len(memo) > budget:
                raise IdealBudgetExceeded(budget)
            size = mask.bit_count()
            if required_color is not None:
                need = required_color if size % 2 == 1 else other
            total = 0
            rest = mask
            while rest:
                low = rest & -rest
                rest &= rest - 1
                i = low.bit_length() - 1
                if above[i] & mask:
                    continue  # not maximal within the ideal
                if required_color is not None and colors[i] != need:
                    continue
                total += count(mask ^ low)
            memo[mask] = total
            return total

        import sys
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, n + 100))
        try:
            return count(full)
        finally:
            sys.setrecursionlimit(old)

    def transitive_reduction(self) -> "Poset":
        """Poset with the same order but only the cover edges kept."""
        n = len(self.elements)
        above = self._above
        covers = []
        for i in range(n):
            rest = above[i]
            while rest:
                low = rest & -rest
                rest &= rest - 1
                j = low.bit_length() - 1
                # i < j is a cover iff no k with i < k < j
                if not any(above[i] >> k & 1 and above[k] >> j & 1
                           for k in range(n)):
                    covers.append((self.elements[i], self.elements[j]))
        return Poset(self.elements, tuple(covers), self.coloring)

    @classmethod
    def from_relation(cls, elements: Sequence[Hashable],
                      pairs: Sequence[tuple[Hashable, Hashable]],
                      coloring: Optional[Mapping[Hashable, str]] = None) -> "Poset":
        """Build from an arbitrary (transitive or not) strict-order relation."""
        return cls(elements, pairs, coloring).transitive_reduction()


def brute_force_extensions(p: Poset) -> int:
    """Count linear extensions by filtering all permutations; <= 10 elements."""
    n = len(p)
    if n > 10:
        raise ValueError("brute force limited to 10 elements")
    above = p._above
    count = 0
    for perm in permutations(range(n)):
        seen = 0
        ok = True
        for i in perm:
            if above[i] & seen:  # a successor of i was placed before i
                ok = False
                break
            seen |= 1 << i
        if ok:
            count += 1
    return count


def chain(k: int) -> Poset:
    return Poset(tuple(range(k)), tuple((i, i + 1) for i in range(k - 1)))


def antichain(k: int) -> Poset:
    return Poset(tuple(range(k)), ())


def grid_poset(rows: int, cols: int) -> Poset:
    """The rows x cols grid: (i, j) < (i, j+1) and (i, j) < (i+1, j)."""
    from .combinatorics import cell_poset

    return cell_poset([(i, j) for i in range(rows) for j in range(cols)])
