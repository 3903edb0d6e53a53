"""Exact combinatorial counts: the independent second witness for solver output.

Everything returns plain Python ints (arbitrary precision); no floats enter
any computation.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Iterator, Sequence


def catalan(n: int) -> int:
    """n-th Catalan number (2n)! / (n! (n+1)!)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return comb(2 * n, n) // (n + 1)


def euler_zigzag(n: int) -> int:
    """Number of up-down permutations of order n, via the Seidel triangle."""
    if n < 0:
        raise ValueError("n must be >= 0")
    row = [1]
    for i in range(1, n + 1):
        prev = row
        row = [0]
        for j in range(1, i + 1):
            row.append(row[j - 1] + prev[i - j])
    return row[-1]


def fibonacci(n: int) -> int:
    """F_n with F_1 = F_2 = 1 (the 1, 1, 2, 3, 5, ... indexing)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a, b = 1, 1
    for _ in range(n - 1):
        a, b = b, a + b
    return a


def multinomial(n: int, parts: Sequence[int]) -> int:
    """n! / prod(parts!); parts must be nonnegative and sum to n."""
    if any(p < 0 for p in parts):
        raise ValueError("parts must be nonnegative")
    if sum(parts) != n:
        raise ValueError(f"parts sum to {sum(parts)}, expected {n}")
    out = factorial(n)
    for p in parts:
        out //= factorial(p)
    return out


# ---------------------------------------------------------------------------
# Partitions and tableaux

def check_partition(parts: Sequence[int]) -> tuple[int, ...]:
    parts = tuple(parts)
    if any(p <= 0 for p in parts):
        raise ValueError("partition parts must be positive")
    if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
        raise ValueError("partition parts must be weakly decreasing")
    return parts


def conjugate(parts: Sequence[int]) -> tuple[int, ...]:
    parts = check_partition(parts)
    if not parts:
        return ()
    return tuple(sum(1 for p in parts if p > j) for j in range(parts[0]))


def syt_count(shape: Sequence[int]) -> int:
    """Number of standard Young tableaux of `shape`, by hook lengths."""
    shape = check_partition(shape)
    n = sum(shape)
    conj = conjugate(shape)
    hooks = 1
    for i, row in enumerate(shape):
        for j in range(row):
            hooks *= row - j + conj[j] - i - 1
    count, rem = divmod(factorial(n), hooks)
    assert rem == 0
    return count


def skew_cells(outer: Sequence[int], inner: Sequence[int]) -> list[tuple[int, int]]:
    """Cells (row, col), 0-indexed, of the skew shape outer/inner."""
    outer = check_partition(outer)
    inner = check_partition(inner) if inner else ()
    if len(inner) > len(outer) or any(inner[i] > outer[i] for i in range(len(inner))):
        raise ValueError("inner shape does not fit inside outer shape")
    cells = []
    for i, row in enumerate(outer):
        start = inner[i] if i < len(inner) else 0
        cells.extend((i, j) for j in range(start, row))
    return cells


def skew_syt_count(outer: Sequence[int], inner: Sequence[int] = ()) -> int:
    """Standard fillings of the skew shape outer/inner.

    Uses the Aitken determinant n! * det(1 / (outer_i - inner_j - i + j)!),
    evaluated in exact rational arithmetic; the result is provably integral
    and any residual denominator is a hard internal error.
    """
    cells = skew_cells(outer, inner)
    n = len(cells)
    if n == 0:
        return 1
    outer = tuple(outer)
    inner = tuple(inner) + (0,) * (len(outer) - len(inner))
    k = len(outer)
    mat = [[Fraction(0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            a = outer[i] - inner[j] - i + j
            if a >= 0:
                mat[i][j] = Fraction(1, factorial(a))
    det = _det_fraction(mat)
    value = det * factorial(n)
    if value.denominator != 1:
        raise AssertionError("skew determinant did not produce an integer")
    if value < 0:
        raise AssertionError("skew determinant produced a negative count")
    return int(value)


def _det_fraction(mat: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in mat]
    k = len(m)
    det = Fraction(1)
    for col in range(k):
        pivot = next((r for r in range(col, k) if m[r][col]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, k):
            if m[r][col]:
                factor = m[r][col] * inv
                for c in range(col, k):
                    m[r][c] -= factor * m[col][c]
    return det


def generate_syt(shape: Sequence[int]) -> Iterator[list[list[int]]]:
    """Yield every standard Young tableau of `shape` (entries 1..n)."""
    shape = check_partition(shape)
    n = sum(shape)
    rows = [[] for _ in shape]

    def place(value: int) -> Iterator[list[list[int]]]:
        if value > n:
            yield [row[:] for row in rows]
            return
        for i, row in enumerate(rows):
            j = len(row)
            if j >= shape[i]:
                continue
            if i > 0 and len(rows[i - 1]) <= j:
                continue
            row.append(value)
            yield from place(value + 1)
            row.pop()

    yield from place(1)


def chess_tableaux_count(shape: Sequence[int]) -> int:
    """SYT of `shape` whose cell (i, j) entry (1-indexed) is odd iff i+j even.

    Computed both by brute-force tableau generation and by the colored
    linear-extension DP over the cell poset; the two must agree.
    """
    from .poset import Poset  # local import to avoid a cycle

    shape = check_partition(shape)
    if sum(shape) > 24:
        raise ValueError("shape too large for the chess-tableaux counters")
    brute = 0
    for tab in generate_syt(shape):
        if all((entry % 2 == 1) == ((i + j) % 2 == 0)
               for i, row in enumerate(tab) for j, entry in enumerate(row)):
            brute += 1
    poset = cell_poset(skew_cells(shape, ()))
    colored = {cell: "white" if (cell[0] + cell[1]) % 2 == 0 else "black"
               for cell in poset.elements}
    dp = poset.with_coloring(colored).count_linear_extensions_colored("white")
    assert brute == dp, (brute, dp)
    return brute


def cell_poset(cells: Sequence[tuple[int, int]]):
    """Poset on skew-shape cells: each cell precedes its right and lower neighbor."""
    from .poset import Poset

    cellset = set(cells)
    covers = []
    for (i, j) in cells:
        if (i, j + 1) in cellset:
            covers.append(((i, j), (i, j + 1)))
        if (i + 1, j) in cellset:
            covers.append(((i, j), (i + 1, j)))
    return Poset(tuple(sorted(cellset)), tuple(covers))


def updown_bruteforce(n: int) -> int:
    """Count up-down permutations of {1..n} by filtering all of them."""
    from itertools import permutations

    if n < 0:
        raise ValueError("n must be >= 0")
    if n > 10:
        raise ValueError("brute force limited to n <= 10")
    if n == 0:
        return 1
    count = 0
    for perm in permutations(range(n)):
        if all((perm[i] < perm[i + 1]) == (i % 2 == 0) for i in range(n - 1)):
            count += 1
    return count
