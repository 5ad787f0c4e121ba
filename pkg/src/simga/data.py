"""Dataset bundles: text loaders and synthetic generators used by tests and benchmarks.

File formats (all UTF-8 text):
  features  one node per line, whitespace-separated decimal reals, line i = node i
  labels    one integer per line, line i = node i
  splits    three files (train/val/test), one node id per line
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import InputFormatError, ParameterError
from .graph import Graph, build_graph, load_edge_list, node_homophily

__all__ = [
    "DatasetBundle",
    "load_features",
    "load_labels",
    "load_split",
    "load_bundle",
    "gen_twin_graph",
    "gen_structural_heterophily",
]


@dataclass
class DatasetBundle:
    """Graph + node features + integer labels + disjoint train/val/test indices."""

    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.train_idx = np.asarray(self.train_idx, dtype=np.int64)
        self.val_idx = np.asarray(self.val_idx, dtype=np.int64)
        self.test_idx = np.asarray(self.test_idx, dtype=np.int64)
        n = self.graph.n
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise InputFormatError(f"feature matrix must have {n} rows")
        if self.labels.shape != (n,):
            raise InputFormatError(f"labels must have length {n}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise InputFormatError("label outside [0, num_classes)")
        splits = [self.train_idx, self.val_idx, self.test_idx]
        all_idx = np.concatenate(splits) if any(s.size for s in splits) else np.empty(0, np.int64)
        if all_idx.size:
            if all_idx.min() < 0 or all_idx.max() >= n:
                raise InputFormatError("split index out of range")
            if len(np.unique(all_idx)) != len(all_idx):
                raise InputFormatError("train/val/test splits overlap")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


def _lines(source: IO[str] | Iterable[str]) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(source, start=1):
        text = line.strip()
        if text:
            yield lineno, text


def load_features(source: IO[str] | Iterable[str]) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    for lineno, text in _lines(source):
        try:
            row = [float(tok) for tok in text.split()]
        except ValueError:
            raise InputFormatError(f"line {lineno}: non-numeric feature value") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputFormatError(f"line {lineno}: expected {width} values, got {len(row)}")
        rows.append(row)
    if not rows:
        raise InputFormatError("empty feature file")
    return np.asarray(rows, dtype=np.float64)


def load_labels(source: IO[str] | Iterable[str]) -> np.ndarray:
    out: list[int] = []
    for lineno, text in _lines(source):
        try:
            out.append(int(text))
        except ValueError:
            raise InputFormatError(f"line {lineno}: non-integer label") from None
    if not out:
        raise InputFormatError("empty label file")
    return np.asarray(out, dtype=np.int64)


def load_split(source: IO[str] | Iterable[str]) -> np.ndarray:
    out: list[int] = []
    for lineno, text in _lines(source):
        try:
            out.append(int(text))
        except ValueError:
            raise InputFormatError(f"line {lineno}: non-integer node id") from None
    return np.asarray(out, dtype=np.int64)


def load_bundle(
    edges: str | Path,
    features: str | Path,
    labels: str | Path,
    train_split: str | Path,
    val_split: str | Path,
    test_split: str | Path,
) -> DatasetBundle:
    """Load the documented text formats from disk into a DatasetBundle."""
    with open(edges) as fh:
        graph = load_edge_list(fh)
    with open(features) as fh:
        feats = load_features(fh)
    with open(labels) as fh:
        labs = load_labels(fh)
    idx = []
    for path in (train_split, val_split, test_split):
        with open(path) as fh:
            idx.append(load_split(fh))
    num_classes = int(labs.max()) + 1
    return DatasetBundle(graph, feats, labs, num_classes, idx[0], idx[1], idx[2])


def _random_splits(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    a, b = n // 2, n // 2 + n // 4
    return order[:a], order[a:b], order[b:]


def gen_twin_graph(
    base_seed: int,
    twin_pairs: int,
    base_nodes: int = 24,
    feature_dim: int = 8,
    num_classes: int = 3,
) -> tuple[DatasetBundle, list[tuple[int, int]]]:
    """Random bundle where each designated twin pair shares its neighbor set and feature row.

    Twins occupy the ids after the base block: pair i is (base_nodes + 2i,
    base_nodes + 2i + 1). Both members attach to the same sampled base nodes
    and the feature row of the second is a bit-exact copy of the first.
    Returns the bundle together with the twin pair list.
    """
    if twin_pairs < 1:
        raise ParameterError("twin_pairs must be >= 1")
    rng = np.random.default_rng(base_seed)
    n = base_nodes + 2 * twin_pairs
    edges: set[tuple[int, int]] = set()
    target = 2 * base_nodes
    while len(edges) < target:
        u, v = rng.integers(0, base_nodes, size=2)
        if u != v:
            edges.add((min(int(u), int(v)), max(int(u), int(v))))
    pairs: list[tuple[int, int]] = []
    for i in range(twin_pairs):
        u = base_nodes + 2 * i
        v = u + 1
        size = int(rng.integers(2, 6))
        anchors = rng.choice(base_nodes, size=size, replace=False)
        for a in anchors:
            edges.add((int(a), u))
            edges.add((int(a), v))
        pairs.append((u, v))
    graph = build_graph(n, edges)
    features = rng.normal(size=(n, feature_dim))
    labels = rng.integers(0, num_classes, size=n)
    for u, v in pairs:
        features[v] = features[u]
    train, val, test = _random_splits(rng, n)
    bundle = DatasetBundle(graph, features, labels, num_classes, train, val, test)
    return bundle, pairs


def gen_structural_heterophily(
    seed: int,
    n: int,
    classes: int,
    feature_dim: int = 16,
) -> DatasetBundle:
    """Low-homophily bundle whose labels encode structural role, not features.

    Construction: a ring of B blocks, each holding one group of `a` nodes per
    class. Within a block, consecutive class layers are joined completely
    bipartite (class c to class c+1), and the last layer connects to class 0 of
    the next block, closing the ring. Class-0 groups additionally form small
    cliques, which breaks the layer-swap symmetry so the label really is a
    function of graph structure (degree and triangle membership differ by
    role). Same-class nodes of a block share their entire outside neighborhood.
    Most edges cross classes: node homophily is (a-1)/((3a-1)*classes) < 0.3.
    Features are pure Gaussian noise, uninformative about the label. n is
    rounded down to a*classes*B.
    """
    if classes < 2:
        raise ParameterError("need at least two classes")
    if n < 4 * classes:
        raise ParameterError("need n >= 4 * classes")
    rng = np.random.default_rng(seed)
    group = max(2, min(4, n // (3 * classes)))
    blocks = n // (group * classes)
    n_eff = blocks * group * classes

    def member(b: int, c: int, i: int) -> int:
        return b * group * classes + c * group + i

    labels = np.zeros(n_eff, dtype=np.int64)
    edges: list[tuple[int, int]] = []
    for b in range(blocks):
        for c in range(classes):
            for i in range(group):
                labels[member(b, c, i)] = c
        for i in range(group):  # symmetry breaker: class-0 groups are cliques
            for j in range(i + 1, group):
                edges.append((member(b, 0, i), member(b, 0, j)))
        for c in range(classes - 1):
            for i in range(group):
                for j in range(group):
                    edges.append((member(b, c, i), member(b, c + 1, j)))
        nxt = (b + 1) % blocks
        for i in range(group):
            for j in range(group):
                edges.append((member(b, classes - 1, i), member(nxt, 0, j)))
    graph = build_graph(n_eff, edges)
    features = rng.normal(size=(n_eff, feature_dim))
    train, val, test = _random_splits(rng, n_eff)
    bundle = DatasetBundle(graph, features, labels, classes, train, val, test)
    assert node_homophily(graph, labels) < 0.3
    return bundle
