"""Random-walk oracles: walk distributions, brute-force tour enumeration, and the walk series.

walk_distribution and enumerate_tours compute the same object two independent
ways (matrix application vs. explicit tour recursion); their agreement is the
backbone of the verification suite. meeting_probability is the inner product
of two walk distributions of equal length, summed over unconstrained landing
nodes (walks that already coincided keep contributing at later lengths).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GuardError, ParameterError
from .graph import Graph, TransitionMatrix, transition
from .simrank import SimMatrix, _dense_guard

__all__ = [
    "WalkDistribution",
    "walk_distribution",
    "enumerate_tours",
    "meeting_probability",
    "simrank_series",
]

ENUM_MAX_NODES = 12
ENUM_MAX_LENGTH = 6


@dataclass
class WalkDistribution:
    """Distribution of a length-l uniform random walk from a source node.

    probs is row `source` of P^l. Mass that reaches an isolated node before
    the last step is absorbed, so the total can fall below 1.
    """

    source: int
    length: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.min(initial=0.0) < -1e-15:
            raise ParameterError("walk distribution has negative mass")
        if self.probs.sum() > 1.0 + 1e-9:
            raise ParameterError("walk distribution mass exceeds 1")


def walk_distribution(p: TransitionMatrix, u: int, length: int) -> WalkDistribution:
    """e_u P^length via repeated sparse application."""
    if length < 0:
        raise ParameterError("length must be >= 0")
    if not (0 <= u < p.n):
        raise ParameterError(f"source node {u} out of range")
    x = np.zeros(p.n)
    x[u] = 1.0
    for _ in range(length):
        x = p.propagate(x)
    return WalkDistribution(source=u, length=length, probs=x)


def enumerate_tours(g: Graph, u: int, length: int) -> dict[int, float]:
    """Explicitly walk every length-l tour from u, multiplying 1/degree along the way.

    Returns endpoint -> total probability. Deliberately naive (this is the
    oracle), so it is guarded to n <= 12 and l <= 6.
    """
    if g.n > ENUM_MAX_NODES or length > ENUM_MAX_LENGTH:
        raise GuardError(
            f"tour enumeration limited to n <= {ENUM_MAX_NODES}, l <= {ENUM_MAX_LENGTH}"
        )
    if length < 0:
        raise ParameterError("length must be >= 0")
    if not (0 <= u < g.n):
        raise ParameterError(f"source node {u} out of range")
    out: dict[int, float] = {}

    def recurse(node: int, steps_left: int, prob: float) -> None:
        if steps_left == 0:
            out[node] = out.get(node, 0.0) + prob
            return
        nbrs = g.neighbor_slice(node)
        if nbrs.size == 0:
            return  # walk dies at an isolated node
        step = prob / nbrs.size
        for nxt in nbrs.tolist():
            recurse(nxt, steps_left - 1, step)

    recurse(u, length, 1.0)
    return out


def meeting_probability(p: TransitionMatrix, u: int, v: int, length: int) -> float:
    """Probability two independent length-l walks from u and v land on a common node."""
    if length < 1:
        raise ParameterError("length must be >= 1")
    hu = walk_distribution(p, u, length).probs
    hv = walk_distribution(p, v, length).probs
    return float(hu @ hv)


def simrank_series(g: Graph, c: float, terms: int) -> SimMatrix:
    """Truncated walk series sum_{l=1}^{terms} c^l <h_u^(l), h_v^(l)>, diagonal pinned to 1.

    The summand at length l is the unconstrained meeting probability of two
    l-step walks. Off-diagonal truncation error is bounded by the geometric
    tail c^(terms+1) / (1-c) since every inner product is at most 1.
    """
    if not (0.0 < c < 1.0):
        raise ParameterError(f"decay factor must lie in (0, 1), got {c}")
    if terms < 1:
        raise ParameterError("terms must be >= 1")
    _dense_guard(g.n, "walk-series similarity")
    p = transition(g).csr
    walks = np.eye(g.n)
    acc = np.zeros((g.n, g.n))
    weight = 1.0
    for _ in range(terms):
        walks = p @ walks  # row u holds h_u^(l)
        weight *= c
        acc += weight * (walks @ walks.T)
    np.fill_diagonal(acc, 1.0)
    return SimMatrix(values=acc, method="walk_series", c=c, iterations=terms)
