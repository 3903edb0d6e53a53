"""Shared fixtures: corpus access and one-time JIT warm-up.

The layered series engine compiles its kernels on first use; warming
them here keeps the compile time out of the timed acceptance tests.
"""

import pathlib
import sys

import pytest

TESTS_DIR = pathlib.Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))  # for the `reference` module

CORPUS = TESTS_DIR.parent / "corpus"


@pytest.fixture(scope="session")
def corpus():
    return CORPUS


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Compile the numeric kernels once, on a two-move toy problem."""
    from chesscount.problem import parse_problem
    from chesscount.solver import count_series_helpmate

    toy = parse_problem(
        "id: warmup\nfen: k7/8/8/8/8/8/PPP5/KQ6 b - -\nstip: ser-h#2\n")
    count_series_helpmate(toy)


def load(corpus_dir, name):
    from chesscount.problem import load_problem

    return load_problem(corpus_dir / f"{name}.cep")
