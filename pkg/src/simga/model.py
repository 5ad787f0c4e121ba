"""The similarity-aggregation classifier: two input branches, one head, one global mix.

Pipeline: a feature branch embeds the node-feature matrix and an adjacency
branch embeds raw binary adjacency rows (sparse row x dense weight); the two
are blended with the feature factor delta and passed through the head MLP to
get H. The precomputed sparse similarity then mixes rows globally,
Z = (1 - alpha) * S @ H + alpha * H, and a softmax over Z gives class
probabilities. S is computed once before training (the expensive part is
outside the training loop) and reused every epoch.

`skip_form="alpha_on_agg"` switches the mix to Z = alpha * S @ H + (1 - alpha) * H
(the coefficient roles swapped), kept selectable for comparison runs.
"""

from __future__ import annotations

import copy
import json
import math
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .data import DatasetBundle
from .errors import DivergenceError, InputFormatError, NumericError, ParameterError
from .graph import Graph
from .nn import (
    AdamState,
    LinearLayer,
    adam_init,
    adam_step,
    ensure_finite,
    init_linear,
    mlp_backward,
    mlp_forward,
    relu_pre_activations,
    softmax_cross_entropy,
    softmax_rows,
)
from .simrank import (
    SparseSim,
    simrank_localpush,
    simrank_production,
    sparse_aggregate,
    topk_from_push,
    topk_prune,
)

__all__ = [
    "HyperParams",
    "SimgaParams",
    "TrainReport",
    "init_params",
    "precompute_similarity",
    "embed",
    "aggregate",
    "forward",
    "fit",
    "evaluate",
    "grouping_report",
    "GroupingReport",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class HyperParams:
    """Run configuration; mirrors the flat key=value config-file keys one to one."""

    delta: float = 0.5
    alpha: float = 0.5
    c: float = 0.6
    k: int = 1024
    eps: float = 0.1
    width: int = 64
    mlp_h_depth: int = 1
    lr: float = 0.01
    dropout: float = 0.5
    weight_decay: float = 5e-4
    max_epochs: int = 500
    patience: float = 100
    seed: int = 0
    sim_mode: str = "exact"
    skip_form: str = "main"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not (0.0 <= self.delta <= 1.0):
            raise ParameterError("delta must lie in [0, 1]")
        if not (0.0 <= self.alpha <= 1.0):
            raise ParameterError("alpha must lie in [0, 1]")
        if not (0.0 < self.c < 1.0):
            raise ParameterError("decay factor c must lie in (0, 1)")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if self.eps <= 0.0:
            raise ParameterError("eps must be > 0")
        if self.width < 1:
            raise ParameterError("width must be >= 1")
        if self.mlp_h_depth not in (1, 2):
            raise ParameterError("mlp_h_depth must be 1 or 2")
        if self.lr <= 0.0:
            raise ParameterError("learning rate must be > 0")
        if not (0.0 <= self.dropout < 1.0):
            raise ParameterError("dropout must lie in [0, 1)")
        if self.weight_decay < 0.0:
            raise ParameterError("weight decay must be >= 0")
        if self.max_epochs < 0:
            raise ParameterError("max_epochs must be >= 0")
        if not self.patience > 0:
            raise ParameterError("patience must be > 0")
        if self.sim_mode not in ("exact", "approx"):
            raise ParameterError("sim_mode must be 'exact' or 'approx'")
        if self.skip_form not in ("main", "alpha_on_agg"):
            raise ParameterError("skip_form must be 'main' or 'alpha_on_agg'")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = val if not (isinstance(val, float) and math.isinf(val)) else "inf"
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "HyperParams":
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, val in raw.items():
            if key not in types:
                raise InputFormatError(f"unknown hyperparameter {key!r}")
            kwargs[key] = _coerce(key, val)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "HyperParams":
        """Flat key=value text file; '#' comments allowed; overrides win over file values."""
        raw: dict = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                if "=" not in text:
                    raise InputFormatError(f"config line {lineno}: expected key=value")
                key, _, val = text.partition("=")
                raw[key.strip()] = val.strip()
        if overrides:
            raw.update(overrides)
        return cls.from_dict(raw)


_INT_KEYS = {"k", "width", "mlp_h_depth", "max_epochs", "seed"}
_FLOAT_KEYS = {"delta", "alpha", "c", "eps", "lr", "dropout", "weight_decay", "patience"}


def _coerce(key: str, val):
    if isinstance(val, (int, float)):
        return val
    text = str(val)
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)  # accepts "inf" for patience
    except ValueError:
        raise InputFormatError(f"bad value for {key}: {text!r}") from None
    return text


@dataclass
class SimgaParams:
    """The three learnable blocks: feature branch, adjacency branch, head."""

    mlp_f: list[LinearLayer]
    mlp_a: list[LinearLayer]
    mlp_h: list[LinearLayer]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for block_name, block in (("mlp_f", self.mlp_f), ("mlp_a", self.mlp_a), ("mlp_h", self.mlp_h)):
            for i, layer in enumerate(block):
                out.append((f"{block_name}.{i}.weight", layer.weight))
                out.append((f"{block_name}.{i}.bias", layer.bias))
        return out

    def arrays(self) -> list[np.ndarray]:
        return [a for _, a in self.named_arrays()]

    def clone(self) -> "SimgaParams":
        return copy.deepcopy(self)


def init_params(
    rng: np.random.Generator, num_features: int, n: int, num_classes: int, hp: HyperParams
) -> SimgaParams:
    mlp_f = [init_linear(rng, num_features, hp.width)]
    mlp_a = [init_linear(rng, n, hp.width)]
    if hp.mlp_h_depth == 1:
        mlp_h = [init_linear(rng, hp.width, num_classes)]
    else:
        mlp_h = [init_linear(rng, hp.width, hp.width), init_linear(rng, hp.width, num_classes)]
    return SimgaParams(mlp_f=mlp_f, mlp_a=mlp_a, mlp_h=mlp_h)


def precompute_similarity(g: Graph, hp: HyperParams) -> SparseSim:
    """One-time global similarity: exact fixed point or push, then top-k pruning."""
    if hp.sim_mode == "exact":
        return topk_prune(simrank_production(g, hp.c, hp.eps, "exact"), hp.k)
    raw = simrank_localpush(g, hp.c, hp.eps)
    return topk_from_push(raw, hp.k)


def _embed_with_cache(
    bundle: DatasetBundle,
    params: SimgaParams,
    hp: HyperParams,
    training: bool,
    rng: np.random.Generator | None,
):
    adj = bundle.graph.adjacency_csr()
    hf, cache_f = mlp_forward(params.mlp_f, bundle.features, hp.dropout, training, rng)
    la = params.mlp_a[0]
    ha = adj @ la.weight + la.bias
    combined = hp.delta * hf + (1.0 - hp.delta) * ha
    hh, cache_h = mlp_forward(params.mlp_h, combined, hp.dropout, training, rng)
    ensure_finite(hh, "embedding")
    return hh, {"cache_f": cache_f, "cache_h": cache_h, "adj": adj}


def embed(
    bundle: DatasetBundle,
    params: SimgaParams,
    hp: HyperParams,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Pre-aggregation node embedding H = head(delta * feat_branch + (1-delta) * adj_branch)."""
    hh, _ = _embed_with_cache(bundle, params, hp, training, rng)
    return hh


def _mix_coeffs(alpha: float, form: str) -> tuple[float, float]:
    if form == "main":
        return 1.0 - alpha, alpha  # alpha weights the skip term
    if form == "alpha_on_agg":
        return alpha, 1.0 - alpha  # alpha weights the aggregated term
    raise ParameterError("skip_form must be 'main' or 'alpha_on_agg'")


def aggregate(s: SparseSim, h: np.ndarray, alpha: float, form: str = "main") -> np.ndarray:
    """Global mix of similarity-aggregated rows with the raw rows (skip connection)."""
    if not (0.0 <= alpha <= 1.0):
        raise ParameterError("alpha must lie in [0, 1]")
    c_agg, c_skip = _mix_coeffs(alpha, form)
    if c_agg == 0.0:
        return c_skip * h
    return c_agg * sparse_aggregate(s, h) + c_skip * h


def _logits_with_cache(bundle, s, params, hp, training, rng):
    hh, cache = _embed_with_cache(bundle, params, hp, training, rng)
    z = aggregate(s, hh, hp.alpha, hp.skip_form)
    return z, cache


def forward(
    bundle: DatasetBundle,
    s: SparseSim,
    params: SimgaParams,
    hp: HyperParams,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Row-stochastic class probabilities softmax(aggregate(s, embed(...)))."""
    z, _ = _logits_with_cache(bundle, s, params, hp, training, rng)
    return softmax_rows(z)


def _backward(bundle, s, params, hp, cache, grad_z) -> list[np.ndarray]:
    """Gradient of the loss wrt every parameter array, ordered like named_arrays()."""
    c_agg, c_skip = _mix_coeffs(hp.alpha, hp.skip_form)
    if c_agg == 0.0:
        grad_h = c_skip * grad_z
    else:
        grad_h = c_agg * (s.to_csr().T @ grad_z) + c_skip * grad_z
    grad_combined, grads_h = mlp_backward(params.mlp_h, cache["cache_h"], grad_h)
    grad_hf = hp.delta * grad_combined
    grad_ha = (1.0 - hp.delta) * grad_combined
    _, grads_f = mlp_backward(params.mlp_f, cache["cache_f"], grad_hf)
    gw_a = (cache["adj"].T @ grad_ha)
    gb_a = grad_ha.sum(axis=0)
    flat: list[np.ndarray] = []
    for gw, gb in grads_f:
        flat.extend((gw, gb))
    flat.extend((np.asarray(gw_a), gb_a))
    for gw, gb in grads_h:
        flat.extend((gw, gb))
    return flat


def loss_and_grads(
    bundle: DatasetBundle,
    s: SparseSim,
    params: SimgaParams,
    hp: HyperParams,
    index_mask: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, list[np.ndarray], np.ndarray]:
    """Masked cross-entropy plus parameter gradients; also returns hidden pre-activations."""
    z, cache = _logits_with_cache(bundle, s, params, hp, training, rng)
    loss, grad_z = softmax_cross_entropy(z, bundle.labels, index_mask)
    grads = _backward(bundle, s, params, hp, cache, grad_z)
    pre = np.concatenate(
        [relu_pre_activations(cache["cache_f"]), relu_pre_activations(cache["cache_h"])]
    )
    return loss, grads, pre


@dataclass
class TrainReport:
    curve: list[dict]  # per-epoch {"epoch", "loss", "val_acc"}
    best_epoch: int
    test_accuracy: float
    precompute_seconds: float
    train_seconds: float

    def to_json_dict(self) -> dict:
        return {
            "test_accuracy": self.test_accuracy,
            "best_epoch": self.best_epoch,
            "precompute_seconds": self.precompute_seconds,
            "train_seconds": self.train_seconds,
            "curve": self.curve,
        }


def _accuracy(logits: np.ndarray, labels: np.ndarray, split: np.ndarray) -> float:
    pred = np.argmax(logits[split], axis=1)  # argmax takes the smallest index on ties
    return float(np.mean(pred == labels[split]))


def evaluate(
    bundle: DatasetBundle,
    s: SparseSim,
    params: SimgaParams,
    hp: HyperParams,
    split: np.ndarray,
) -> float:
    """Argmax accuracy over the split, dropout off; ties go to the smallest class."""
    split = np.asarray(split, dtype=np.int64)
    if split.size == 0:
        raise ParameterError("empty evaluation split")
    z, _ = _logits_with_cache(bundle, s, params, hp, training=False, rng=None)
    return _accuracy(z, bundle.labels, split)


def fit(
    bundle: DatasetBundle,
    hp: HyperParams,
    sim: SparseSim | None = None,
) -> tuple[SimgaParams, TrainReport]:
    """Full-batch training with early stopping on validation accuracy.

    The similarity matrix is precomputed (and timed separately) unless one is
    passed in. Stops after `patience` epochs without a new validation best,
    restores the best parameters, and reports test accuracy there.
    """
    for name, split in (("train", bundle.train_idx), ("val", bundle.val_idx), ("test", bundle.test_idx)):
        if split.size == 0:
            raise ParameterError(f"{name} split is empty")
    precompute_seconds = 0.0
    if sim is None:
        t0 = time.perf_counter()
        sim = precompute_similarity(bundle.graph, hp)
        precompute_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    rng = np.random.default_rng(hp.seed)
    params = init_params(rng, bundle.num_features, bundle.n, bundle.num_classes, hp)
    arrays = params.arrays()
    state: AdamState = adam_init(arrays)

    best = params.clone()
    best_val = -1.0
    best_epoch = 0
    since_best = 0
    curve: list[dict] = []
    for epoch in range(1, hp.max_epochs + 1):
        try:
            z, cache = _logits_with_cache(bundle, sim, params, hp, training=True, rng=rng)
            loss, grad_z = softmax_cross_entropy(z, bundle.labels, bundle.train_idx)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}")
            grads = _backward(bundle, sim, params, hp, cache, grad_z)
            adam_step(arrays, grads, state, hp.lr, hp.weight_decay)
            z_eval, _ = _logits_with_cache(bundle, sim, params, hp, training=False, rng=None)
        except DivergenceError:
            raise
        except NumericError as exc:
            raise DivergenceError(f"training diverged at epoch {epoch}: {exc}") from exc
        val_acc = _accuracy(z_eval, bundle.labels, bundle.val_idx)
        curve.append({"epoch": epoch, "loss": loss, "val_acc": val_acc})
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best = params.clone()
            since_best = 0
        else:
            since_best += 1
            if since_best >= hp.patience:
                break
    test_acc = evaluate(bundle, sim, best, hp, bundle.test_idx)
    train_seconds = time.perf_counter() - t0
    report = TrainReport(
        curve=curve,
        best_epoch=best_epoch,
        test_accuracy=test_acc,
        precompute_seconds=precompute_seconds,
        train_seconds=train_seconds,
    )
    return best, report


@dataclass
class GroupingReport:
    mean_intra_distance: float
    mean_inter_distance: float
    twin_max_deviation: float | None
    pairs_sampled: int


def grouping_report(
    z: np.ndarray,
    labels: np.ndarray,
    pair_sample: int,
    rng: np.random.Generator | None = None,
    twin_pairs: list[tuple[int, int]] | None = None,
) -> GroupingReport:
    """Row-distance statistics of an embedding, stratified by label agreement.

    Samples `pair_sample` unordered node pairs and averages Euclidean row
    distances within/between classes; for designated twin pairs reports the
    max absolute entry-wise deviation. Strata that receive no samples come
    back as nan.
    """
    if pair_sample < 1:
        raise ParameterError("pair_sample must be >= 1")
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels)
    n = z.shape[0]
    if n < 2:
        raise ParameterError("need at least two rows")
    rng = rng or np.random.default_rng(0)
    us = rng.integers(0, n, size=pair_sample)
    vs = rng.integers(0, n, size=pair_sample)
    keep = us != vs
    us, vs = us[keep], vs[keep]
    dists = np.linalg.norm(z[us] - z[vs], axis=1)
    same = labels[us] == labels[vs]
    mean_intra = float(dists[same].mean()) if same.any() else float("nan")
    mean_inter = float(dists[~same].mean()) if (~same).any() else float("nan")
    twin_dev = None
    if twin_pairs:
        twin_dev = max(float(np.abs(z[u] - z[v]).max()) for u, v in twin_pairs)
    return GroupingReport(
        mean_intra_distance=mean_intra,
        mean_inter_distance=mean_inter,
        twin_max_deviation=twin_dev,
        pairs_sampled=int(us.size),
    )


def save_checkpoint(path: str | Path, params: SimgaParams, hp: HyperParams) -> None:
    """Named-tensor container (npz) with a format-version tag and the run config."""
    payload = {name: arr for name, arr in params.named_arrays()}
    payload["__format_version__"] = np.int64(CHECKPOINT_FORMAT_VERSION)
    payload["__hyperparams__"] = np.str_(json.dumps(hp.to_dict()))
    np.savez(path, **payload)


def load_checkpoint(path: str | Path) -> tuple[SimgaParams, HyperParams]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["__format_version__"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise InputFormatError(f"unsupported checkpoint format version {version}")
        hp = HyperParams.from_dict(json.loads(str(data["__hyperparams__"])))
        blocks: dict[str, dict[int, dict[str, np.ndarray]]] = {"mlp_f": {}, "mlp_a": {}, "mlp_h": {}}
        for key in data.files:
            if key.startswith("__"):
                continue
            block, idx, kind = key.split(".")
            blocks[block].setdefault(int(idx), {})[kind] = data[key]
    def build(block: dict[int, dict[str, np.ndarray]]) -> list[LinearLayer]:
        return [
            LinearLayer(weight=block[i]["weight"], bias=block[i]["bias"])
            for i in sorted(block)
        ]
    params = SimgaParams(
        mlp_f=build(blocks["mlp_f"]), mlp_a=build(blocks["mlp_a"]), mlp_h=build(blocks["mlp_h"])
    )
    return params, hp
