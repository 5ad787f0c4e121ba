import io

import numpy as np
import pytest

from simga.graph import build_graph, load_edge_list


def graph_from_text(text: str):
    return load_edge_list(io.StringIO(text))


@pytest.fixture
def path3():
    """Path 0-1-2."""
    return graph_from_text("0 1\n1 2")


@pytest.fixture
def triangle():
    return graph_from_text("0 1\n1 2\n0 2")


@pytest.fixture
def star2():
    """Center 1 with leaves 0 and 2."""
    return graph_from_text("0 1\n1 2")


@pytest.fixture
def star4():
    """Center 0 with four leaves."""
    return graph_from_text("0 1\n0 2\n0 3\n0 4")


def two_cliques(size: int = 4):
    """Two disconnected cliques of `size` nodes each."""
    edges = []
    for base in (0, size):
        for i in range(size):
            for j in range(i + 1, size):
                edges.append((base + i, base + j))
    return build_graph(2 * size, edges)


def rng_of(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
