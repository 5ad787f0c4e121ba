"""Executable checks of the package's structural guarantees, used by the `verify` subcommand.

Three suites, each on freshly generated graphs:

  walks  -- matrix-power walk distributions equal brute-force tour enumeration,
            and pairwise meeting probabilities equal paired-tour enumeration.
  push   -- (1-c) * raw push sum stays within eps of the truncated power
            series in max norm, and the residual guard holds on exit.
  twins  -- nodes with identical feature rows and neighbor sets get identical
            aggregated embedding rows for arbitrary parameters (dropout off).

Each suite reports its measured worst error next to the bound it must meet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import gen_twin_graph
from .graph import Graph, random_graph, transition
from .model import HyperParams, aggregate, embed, init_params, precompute_similarity
from .simrank import simrank_localpush, simrank_power_series
from .walks import enumerate_tours, meeting_probability, walk_distribution

__all__ = ["SuiteResult", "walk_suite", "push_suite", "twin_suite", "run_all"]


@dataclass
class SuiteResult:
    name: str
    max_error: float
    bound: float
    passed: bool
    detail: str


def _paired_tour_meeting(g: Graph, u: int, v: int, length: int) -> float:
    """Enumerate both walks jointly and sum path-probability products at shared endpoints."""
    hu = enumerate_tours(g, u, length)
    total = 0.0
    for x, pu in hu.items():
        pv = _tour_prob_to(g, v, x, length)
        total += pu * pv
    return total


def _tour_prob_to(g: Graph, src: int, dst: int, length: int) -> float:
    if length == 0:
        return 1.0 if src == dst else 0.0
    nbrs = g.neighbor_slice(src)
    if nbrs.size == 0:
        return 0.0
    return sum(_tour_prob_to(g, int(n), dst, length - 1) for n in nbrs) / nbrs.size


def walk_suite(seed: int = 0, graphs: int = 10) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(graphs):
        n = int(rng.integers(3, 13))
        g = random_graph(n, avg_degree=2.5, seed=int(rng.integers(0, 2**31)))
        p = transition(g)
        for u in range(g.n):
            for length in range(0, 7):
                dist = walk_distribution(p, u, length).probs
                tours = enumerate_tours(g, u, length)
                dense = np.zeros(g.n)
                for node, prob in tours.items():
                    dense[node] = prob
                worst = max(worst, float(np.abs(dist - dense).max()))
        # meeting probability against the paired enumeration on small lengths
        for _ in range(4):
            u, v = rng.integers(0, min(g.n, 8), size=2)
            for length in range(1, 4):
                direct = meeting_probability(p, int(u), int(v), length)
                paired = _paired_tour_meeting(g, int(u), int(v), length)
                worst = max(worst, abs(direct - paired))
    bound = 1e-12
    return SuiteResult(
        name="walks",
        max_error=worst,
        bound=bound,
        passed=worst <= bound,
        detail=f"{graphs} graphs, all sources, lengths 0..6",
    )


def push_suite(
    seed: int = 0, graphs: int = 6, eps: float = 0.05, c: float = 0.6, corrupt: bool = False
) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    guard_ok = True
    decay = c * 1.5 if corrupt else None  # negative-control hook: misapply the decay
    for _ in range(graphs):
        n = int(rng.integers(30, 121))
        g = random_graph(n, avg_degree=6.0, seed=int(rng.integers(0, 2**31)), min_degree=2)
        raw = simrank_localpush(g, c, eps, _decay_override=decay)
        if raw.max_residual() > (1.0 - c) * eps:
            guard_ok = False
        series = simrank_power_series(g, c, 50).values
        gap = float(np.abs((1.0 - c) * raw.estimate_dense() - series).max())
        worst = max(worst, gap)
    passed = guard_ok and worst <= eps
    detail = f"{graphs} graphs, eps={eps}" + ("" if guard_ok else "; residual guard violated")
    return SuiteResult(name="push", max_error=worst, bound=eps, passed=passed, detail=detail)


def twin_suite(seed: int = 0, bundles: int = 3) -> SuiteResult:
    worst = 0.0
    for i in range(bundles):
        bundle, pairs = gen_twin_graph(base_seed=seed + i, twin_pairs=2 + i)
        hp = HyperParams(dropout=0.0, k=bundle.n, eps=0.01, width=16, mlp_h_depth=2)
        rng = np.random.default_rng(seed + 1000 + i)
        params = init_params(rng, bundle.num_features, bundle.n, bundle.num_classes, hp)
        for block in (params.mlp_f, params.mlp_a, params.mlp_h):
            for layer in block:  # arbitrary parameters, not just init-scaled ones
                layer.weight += rng.normal(scale=0.5, size=layer.weight.shape)
                layer.bias += rng.normal(scale=0.5, size=layer.bias.shape)
        sim = precompute_similarity(bundle.graph, hp)
        h = embed(bundle, params, hp, training=False)
        z = aggregate(sim, h, hp.alpha, hp.skip_form)
        for u, v in pairs:
            worst = max(worst, float(np.abs(z[u] - z[v]).max()))
    bound = 1e-9
    return SuiteResult(
        name="twins",
        max_error=worst,
        bound=bound,
        passed=worst <= bound,
        detail=f"{bundles} twin bundles, arbitrary parameters, dropout off",
    )


def run_all(seed: int = 0, corrupt_push: bool = False) -> list[SuiteResult]:
    return [
        walk_suite(seed=seed),
        push_suite(seed=seed, corrupt=corrupt_push),
        twin_suite(seed=seed),
    ]
