"""All-pairs SimRank: exact fixed point, walk power series, and the local-push approximation.

Three related objects live here and are deliberately kept distinct:

  fixed point   S = c * P S P^T off-diagonal with diag(S) = 1; ground truth.
  power series  sum_{k>=0} c^k P^k ((1-c) I) (P^T)^k; the linear-system object.
  raw push      sum_{k>=0} c^k P^k (P^T)^k accumulated entry-by-entry by the
                worklist push; (1-c) * raw equals the power series in the limit.

The production approximate path rescales the raw push sum by (1-c) and pins
the diagonal to 1. The residual worklist is deterministic: always pop the
largest residual, ties broken by smallest (row, col).

Dense similarity matrices are only allowed up to DENSE_LIMIT nodes; past that
only the push + top-k sparse route is available.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np
import scipy.sparse as sp

from .errors import GuardError, InputFormatError, NumericError, ParameterError
from .graph import Graph, transition

__all__ = [
    "DENSE_LIMIT",
    "SimMatrix",
    "RawPushMatrix",
    "SparseSim",
    "simrank_fixedpoint",
    "simrank_power_series",
    "simrank_localpush",
    "simrank_production",
    "production_from_push",
    "topk_prune",
    "topk_from_push",
    "sparse_aggregate",
    "class_score_histogram",
    "dump_sparse_sim",
    "load_sparse_sim",
]

DENSE_LIMIT = 20_000


def _check_decay(c: float) -> None:
    if not (0.0 < c < 1.0):
        raise ParameterError(f"decay factor must lie in (0, 1), got {c}")


def _dense_guard(n: int, what: str) -> None:
    if n > DENSE_LIMIT:
        raise GuardError(
            f"{what} needs a dense {n}x{n} matrix; the dense path is limited to "
            f"n <= {DENSE_LIMIT}. Use the push + top-k sparse route instead."
        )


@dataclass
class SimMatrix:
    """Dense all-pairs similarity with provenance metadata."""

    values: np.ndarray
    method: str
    c: float
    iterations: int | None = None
    eps: float | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.isfinite(self.values).all():
            raise NumericError(f"similarity matrix ({self.method}) has non-finite entries")
        if self.method == "fixedpoint" and self.values.size:
            v = self.values
            if np.abs(v - v.T).max() > 1e-12:
                raise NumericError("fixed-point similarity not symmetric within 1e-12")
            if v.min() < 0.0 or v.max() > 1.0 + 1e-9:
                raise NumericError("fixed-point similarity outside [0, 1]")
            if np.any(np.diag(v) != 1.0):
                raise NumericError("fixed-point similarity diagonal must be exactly 1")

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class RawPushMatrix:
    """Uncorrected push accumulation plus the terminal residual, both pair-sparse.

    Keys are flattened pairs u * n + v. estimate holds the raw series mass;
    residual holds whatever never crossed the (1-c)*eps worklist threshold.
    """

    n: int
    c: float
    eps: float
    estimate: dict[int, float]
    residual: dict[int, float]
    pops: int

    def max_residual(self) -> float:
        return max(self.residual.values(), default=0.0)

    def estimate_dense(self) -> np.ndarray:
        _dense_guard(self.n, "raw push export")
        out = np.zeros((self.n, self.n))
        for key, val in self.estimate.items():
            out[divmod(key, self.n)] = val
        return out

    def residual_dense(self) -> np.ndarray:
        _dense_guard(self.n, "raw push residual export")
        out = np.zeros((self.n, self.n))
        for key, val in self.residual.items():
            out[divmod(key, self.n)] = val
        return out


@dataclass
class SparseSim:
    """Row-wise top-k similarity: per row at most k (column, score) pairs, columns ascending."""

    n: int
    k: int
    indptr: np.ndarray
    cols: np.ndarray
    scores: np.ndarray
    method: str
    c: float
    _csr_cache: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.indptr.shape != (self.n + 1,) or self.indptr[0] != 0:
            raise InputFormatError("bad indptr")
        if np.any(np.diff(self.indptr) > self.k):
            raise InputFormatError(f"row holds more than k={self.k} entries")
        if self.scores.size and self.scores.min() < 0.0:
            raise InputFormatError("scores must be nonnegative")

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.cols[lo:hi], self.scores[lo:hi]

    def to_csr(self) -> sp.csr_matrix:
        if self._csr_cache is None:
            self._csr_cache = sp.csr_matrix(
                (self.scores, self.cols, self.indptr), shape=(self.n, self.n)
            )
        return self._csr_cache

    def densify(self) -> np.ndarray:
        _dense_guard(self.n, "sparse similarity export")
        return self.to_csr().toarray()


def simrank_fixedpoint(g: Graph, c: float, iterations: int) -> SimMatrix:
    """Iterate S <- c * P S P^T off-diagonal with the diagonal pinned to 1.

    Rows/columns of isolated nodes stay zero off-diagonal (their diagonal is
    still pinned). Converges geometrically at rate c.
    """
    _check_decay(c)
    if iterations < 1:
        raise ParameterError("need at least one iteration")
    _dense_guard(g.n, "fixed-point SimRank")
    p = transition(g).csr
    pt = p.T.tocsr()
    s = np.eye(g.n)
    for _ in range(iterations):
        s = c * ((p @ s) @ pt)
        np.fill_diagonal(s, 1.0)
    s = np.minimum(s, s.T)  # shave asymmetric rounding (<= 1 ulp) from the BLAS products
    return SimMatrix(values=s, method="fixedpoint", c=c, iterations=iterations)


def simrank_power_series(g: Graph, c: float, terms: int) -> SimMatrix:
    """Truncated series sum_{k=0}^{terms} c^k P^k ((1-c) I) (P^T)^k, no diagonal pin."""
    _check_decay(c)
    if terms < 0:
        raise ParameterError("terms must be >= 0")
    _dense_guard(g.n, "power-series SimRank")
    p = transition(g).csr
    pt = p.T.tocsr()
    term = (1.0 - c) * np.eye(g.n)
    acc = term.copy()
    for _ in range(terms):
        term = c * ((p @ term) @ pt)
        acc += term
    return SimMatrix(values=acc, method="power_series", c=c, iterations=terms)


def simrank_localpush(
    g: Graph,
    c: float,
    eps: float,
    tie_break: str = "lex",
    _decay_override: float | None = None,
) -> RawPushMatrix:
    """Worklist push: repeatedly commit the largest residual and spread it to neighbor pairs.

    Starts from R = I and loops while any residual exceeds (1-c)*eps, popping a
    maximal entry (u, v), adding it to the estimate, pushing
    c * R(u,v) / (deg(u') * deg(v')) to every pair (u', v') with u' adjacent to
    u and v' adjacent to v, then zeroing R(u, v). tie_break picks the order
    among equal residuals ("lex" or "revlex" on the pair); the accumulated mass
    is order-invariant up to rounding. _decay_override is a test hook that
    deliberately misapplies the decay for negative controls.
    """
    _check_decay(c)
    if eps <= 0.0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    if tie_break not in ("lex", "revlex"):
        raise ParameterError("tie_break must be 'lex' or 'revlex'")
    decay = c if _decay_override is None else _decay_override
    n = g.n
    threshold = (1.0 - c) * eps
    inv_deg = np.zeros(n)
    nz = g.degrees > 0
    inv_deg[nz] = 1.0 / g.degrees[nz]
    inv_deg_list = inv_deg.tolist()
    nbr_lists = [g.neighbor_slice(u).tolist() for u in range(n)]

    est: dict[int, float] = {}
    res: dict[int, float] = {}
    heap: list[tuple[float, int, int]] = []
    last = n * n - 1
    reverse = tie_break == "revlex"
    for u in range(n):
        key = u * n + u
        res[key] = 1.0
        if 1.0 > threshold:
            heap.append((-1.0, last - key if reverse else key, key))
    heapq.heapify(heap)

    res_get = res.get
    push = heapq.heappush
    pop = heapq.heappop
    pops = 0
    while heap:
        neg_val, _, key = pop(heap)
        val = res_get(key)
        if val is None or val != -neg_val:
            continue  # stale entry; a fresher one is (or was) in the heap
        pops += 1
        u, v = divmod(key, n)
        est[key] = est.get(key, 0.0) + val
        res[key] = 0.0
        scaled = decay * val
        for a in nbr_lists[u]:
            wa = scaled * inv_deg_list[a]
            base = a * n
            for b in nbr_lists[v]:
                k2 = base + b
                nv = res_get(k2, 0.0) + wa * inv_deg_list[b]
                res[k2] = nv
                if nv > threshold:
                    push(heap, (-nv, last - k2 if reverse else k2, k2))
    res = {k: v for k, v in res.items() if v != 0.0}
    return RawPushMatrix(n=n, c=c, eps=eps, estimate=est, residual=res, pops=pops)


def production_iterations(c: float, eps: float) -> int:
    """Fixed-point iteration count hitting absolute accuracy eps: ceil(log_c eps)."""
    return max(1, math.ceil(math.log(eps) / math.log(c)))


def simrank_production(g: Graph, c: float, eps: float, mode: str) -> SimMatrix:
    """The similarity matrix the model consumes.

    exact  -> fixed point run for ceil(log_c eps) iterations.
    approx -> (1-c) * raw push sum with the diagonal then pinned to 1.
    """
    _check_decay(c)
    if eps <= 0.0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    if mode == "exact":
        s = simrank_fixedpoint(g, c, production_iterations(c, eps))
        s.eps = eps
        return s
    if mode == "approx":
        return production_from_push(simrank_localpush(g, c, eps))
    raise ParameterError(f"mode must be 'exact' or 'approx', got {mode!r}")


def production_from_push(raw: RawPushMatrix) -> SimMatrix:
    """Dense production matrix from an existing push run: (1-c)-rescale, pin diagonal."""
    _dense_guard(raw.n, "dense approximate SimRank")
    out = np.zeros((raw.n, raw.n))
    scale = 1.0 - raw.c
    for key, val in raw.estimate.items():
        out[divmod(key, raw.n)] = scale * val
    np.fill_diagonal(out, 1.0)
    return SimMatrix(values=out, method="localpush", c=raw.c, eps=raw.eps)


def _rows_from_candidates(
    n: int, k: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Select per-row the k largest candidates (ties -> smaller column), columns ascending."""
    keep_cols: list[np.ndarray] = []
    keep_vals: list[np.ndarray] = []
    counts = np.zeros(n, dtype=np.int64)
    order = np.lexsort((cols, -vals, rows))
    rows_s, cols_s, vals_s = rows[order], cols[order], vals[order]
    bounds = np.searchsorted(rows_s, np.arange(n + 1))
    for u in range(n):
        lo, hi = bounds[u], min(bounds[u + 1], bounds[u] + k)
        c_sel = cols_s[lo:hi]
        v_sel = vals_s[lo:hi]
        asc = np.argsort(c_sel, kind="stable")
        keep_cols.append(c_sel[asc])
        keep_vals.append(v_sel[asc])
        counts[u] = hi - lo
    indptr = np.concatenate([[0], np.cumsum(counts)])
    cols_out = np.concatenate(keep_cols) if keep_cols else np.empty(0, np.int64)
    vals_out = np.concatenate(keep_vals) if keep_vals else np.empty(0)
    return indptr, cols_out, vals_out


def topk_prune(s: SimMatrix, k: int) -> SparseSim:
    """Keep the k largest nonzero entries of each row (ties -> smaller column id)."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    rows, cols = np.nonzero(s.values)
    vals = s.values[rows, cols]
    indptr, cols_out, vals_out = _rows_from_candidates(s.n, k, rows, cols, vals)
    return SparseSim(
        n=s.n, k=k, indptr=indptr, cols=cols_out, scores=vals_out, method=s.method, c=s.c
    )


def topk_from_push(raw: RawPushMatrix, k: int) -> SparseSim:
    """Sparse route: (1-c)-rescale the push sum, pin the diagonal, prune per row.

    Never materializes a dense matrix, so it works past DENSE_LIMIT.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    n = raw.n
    keys = np.fromiter(raw.estimate.keys(), dtype=np.int64, count=len(raw.estimate))
    vals = np.fromiter(raw.estimate.values(), dtype=np.float64, count=len(raw.estimate))
    rows, cols = np.divmod(keys, n)
    off = rows != cols
    rows = np.concatenate([rows[off], np.arange(n)])
    cols = np.concatenate([cols[off], np.arange(n)])
    vals = np.concatenate([(1.0 - raw.c) * vals[off], np.ones(n)])
    indptr, cols_out, vals_out = _rows_from_candidates(n, k, rows, cols, vals)
    return SparseSim(
        n=n, k=k, indptr=indptr, cols=cols_out, scores=vals_out, method="localpush", c=raw.c
    )


def sparse_aggregate(s: SparseSim, h: np.ndarray) -> np.ndarray:
    """Row u of the result is sum over (v, score) in row u of score * h[v]."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != s.n:
        raise ParameterError(f"row count mismatch: similarity has {s.n} rows, h has {h.shape}")
    return s.to_csr() @ h


@dataclass
class ScoreHistogram:
    """Log10-binned off-diagonal scores, split by endpoint label agreement."""

    bin_edges: np.ndarray
    intra_counts: np.ndarray
    inter_counts: np.ndarray
    floor: float
    pairs_retained: int


def class_score_histogram(
    s: SimMatrix, labels: np.ndarray, floor: float = 1e-12, bins: int = 40
) -> ScoreHistogram:
    """Distribution of log scores over unordered node pairs, intra- vs inter-class.

    Entries at or below `floor` are discarded as trivial before binning.
    """
    labels = np.asarray(labels)
    if labels.shape != (s.n,):
        raise ParameterError(f"labels must have length {s.n}")
    iu, ju = np.triu_indices(s.n, k=1)
    vals = s.values[iu, ju]
    keep = vals > floor
    iu, ju, vals = iu[keep], ju[keep], vals[keep]
    logs = np.log10(vals)
    same = labels[iu] == labels[ju]
    if logs.size:
        lo, hi = logs.min(), logs.max()
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = -1.0, 0.0
    edges = np.linspace(lo, hi, bins + 1)
    intra, _ = np.histogram(logs[same], bins=edges)
    inter, _ = np.histogram(logs[~same], bins=edges)
    return ScoreHistogram(
        bin_edges=edges,
        intra_counts=intra,
        inter_counts=inter,
        floor=floor,
        pairs_retained=int(logs.size),
    )


def dump_sparse_sim(s: SparseSim, sink: IO[str]) -> None:
    """Text dump: header "n k c method", then "u v score" rows sorted by (u, v)."""
    sink.write(f"{s.n} {s.k} {s.c:.17g} {s.method}\n")
    for u in range(s.n):
        cols, scores = s.row(u)
        for v, score in zip(cols.tolist(), scores.tolist()):
            sink.write(f"{u} {v} {score:.17g}\n")


def load_sparse_sim(source: IO[str]) -> SparseSim:
    header = source.readline().split()
    if len(header) != 4:
        raise InputFormatError("similarity dump: bad header, expected 'n k c method'")
    try:
        n, k, c = int(header[0]), int(header[1]), float(header[2])
    except ValueError:
        raise InputFormatError("similarity dump: non-numeric header field") from None
    method = header[3]
    rows: list[int] = []
    cols: list[int] = []
    scores: list[float] = []
    for lineno, line in enumerate(source, start=2):
        text = line.strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 3:
            raise InputFormatError(f"similarity dump line {lineno}: expected 'u v score'")
        try:
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            scores.append(float(parts[2]))
        except ValueError:
            raise InputFormatError(f"similarity dump line {lineno}: bad value") from None
    row_arr = np.asarray(rows, dtype=np.int64)
    counts = np.bincount(row_arr, minlength=n) if row_arr.size else np.zeros(n, np.int64)
    if row_arr.size and np.any(np.diff(row_arr) < 0):
        raise InputFormatError("similarity dump: rows out of order")
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return SparseSim(
        n=n,
        k=k,
        indptr=indptr,
        cols=np.asarray(cols, dtype=np.int64),
        scores=np.asarray(scores, dtype=np.float64),
        method=method,
        c=c,
    )
