"""A compact DGCNN link classifier in numpy.

Four graph convolutions feed a sort-pooling readout, two 1-D convolutions with
a max-pool between them, a dense layer with dropout and a sigmoid output. The
backward pass is written out layer by layer; everything runs in float64.
"""
from __future__ import annotations

import copy
import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metrics import DegenerateLabelsError, roc_auc
from .subgraph import LabeledSubgraph

GCN_SIZES = (32, 32, 32, 1)
CONV1_CHANNELS = 16
CONV2_CHANNELS = 32
CONV2_KERNEL = 5
DENSE_UNITS = 128
MIN_SORTPOOL_K = 10
P_CLAMP = 1e-7
CHECKPOINT_FORMAT = "circuitlink-dgcnn-v1"

LR_PROFILES = {
    "synthetic": 1e-4,
    "spicenetlist": 1e-6,
    "image2net": 6e-8,
}


@dataclass
class ModelParams:
    arrays: dict[str, np.ndarray]
    sortpool_k: int
    in_dim: int

    @property
    def concat_dim(self) -> int:
        return sum(GCN_SIZES)

    def copy(self) -> ModelParams:
        return ModelParams({k: v.copy() for k, v in self.arrays.items()}, self.sortpool_k, self.in_dim)

    def num_parameters(self) -> int:
        return sum(v.size for v in self.arrays.values())

    def all_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.arrays.values())


def param_shapes(in_dim: int, sortpool_k: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    prev = in_dim
    for i, width in enumerate(GCN_SIZES):
        shapes[f"gcn{i}.w"] = (prev, width)
        shapes[f"gcn{i}.b"] = (width,)
        prev = width
    concat = sum(GCN_SIZES)
    pooled = sortpool_k // 2 - CONV2_KERNEL + 1
    shapes["conv1.w"] = (concat, CONV1_CHANNELS)
    shapes["conv1.b"] = (CONV1_CHANNELS,)
    shapes["conv2.w"] = (CONV2_KERNEL, CONV1_CHANNELS, CONV2_CHANNELS)
    shapes["conv2.b"] = (CONV2_CHANNELS,)
    shapes["dense.w"] = (pooled * CONV2_CHANNELS, DENSE_UNITS)
    shapes["dense.b"] = (DENSE_UNITS,)
    shapes["out.w"] = (DENSE_UNITS, 1)
    shapes["out.b"] = (1,)
    return shapes


def _fans(name: str, shape: tuple[int, ...]) -> tuple[int, int]:
    if name == "conv2.w":
        kernel, cin, cout = shape
        return kernel * cin, kernel * cout
    return shape[0], shape[1]


def init_params(in_dim: int, sortpool_k: int, seed: int = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases."""
    if sortpool_k < MIN_SORTPOOL_K:
        raise ValueError(f"sort-pool size must be >= {MIN_SORTPOOL_K}")
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in param_shapes(in_dim, sortpool_k).items():
        if name.endswith(".b"):
            arrays[name] = np.zeros(shape)
        else:
            fan_in, fan_out = _fans(name, shape)
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(arrays, sortpool_k, in_dim)


def zero_params(in_dim: int, sortpool_k: int) -> ModelParams:
    shapes = param_shapes(in_dim, sortpool_k)
    return ModelParams({k: np.zeros(s) for k, s in shapes.items()}, sortpool_k, in_dim)


def sortpool_size(subgraph_sizes: Sequence[int], percentile: float = 0.6) -> int:
    """Node count at the given percentile of the training subgraphs, at least 10."""
    sizes = sorted(subgraph_sizes)
    if not sizes:
        return MIN_SORTPOOL_K
    idx = max(0, math.ceil(percentile * len(sizes)) - 1)
    return max(MIN_SORTPOOL_K, int(sizes[idx]))


def propagation_matrix(adjacency: np.ndarray) -> np.ndarray:
    """Row-normalised (A + I)."""
    a_hat = adjacency + np.eye(adjacency.shape[0])
    return a_hat / a_hat.sum(axis=1, keepdims=True)


def sort_order(concat: np.ndarray) -> np.ndarray:
    """Rows by last channel descending; ties broken lexicographically over all channels."""
    last = concat.shape[1] - 1
    keys = [-concat[:, j] for j in reversed(range(last))] + [-concat[:, last]]
    return np.lexsort(keys)


def dropout_mask(rng: np.random.Generator, rate: float) -> np.ndarray:
    keep = 1.0 - rate
    return (rng.random(DENSE_UNITS) < keep) / keep


def _inputs(sub) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(sub, LabeledSubgraph):
        return sub.adjacency, sub.features
    return sub


def _forward(m: ModelParams, adjacency: np.ndarray, features: np.ndarray, mask: np.ndarray | None):
    n = features.shape[0]
    if n == 0:
        raise ValueError("empty subgraph")
    if features.shape[1] != m.in_dim:
        raise ValueError(f"feature width {features.shape[1]} != model input width {m.in_dim}")
    w = m.arrays
    prop = propagation_matrix(adjacency)
    zs = [features]
    for i in range(len(GCN_SIZES)):
        zs.append(np.tanh(prop @ zs[-1] @ w[f"gcn{i}.w"] + w[f"gcn{i}.b"]))
    concat = np.concatenate(zs[1:], axis=1)

    k = m.sortpool_k
    order = sort_order(concat)[:k]
    kept = len(order)
    pooled = np.zeros((k, concat.shape[1]))
    pooled[:kept] = concat[order]

    # conv1: kernel = stride = one node row, i.e. a per-row dense map
    o1 = pooled @ w["conv1.w"] + w["conv1.b"]
    r1 = np.maximum(o1, 0.0)
    half = k // 2
    pairs = r1[: 2 * half].reshape(half, 2, CONV1_CHANNELS)
    pick = pairs.argmax(axis=1)
    mp = np.take_along_axis(pairs, pick[:, None, :], axis=1)[:, 0, :]

    length = half - CONV2_KERNEL + 1
    cols = np.stack([mp[j : j + length] for j in range(CONV2_KERNEL)], axis=1).reshape(length, -1)
    w2 = w["conv2.w"].reshape(-1, CONV2_CHANNELS)
    o2 = cols @ w2 + w["conv2.b"]
    r2 = np.maximum(o2, 0.0)
    flat = r2.reshape(-1)

    hd = flat @ w["dense.w"] + w["dense.b"]
    rd = np.maximum(hd, 0.0)
    do = rd if mask is None else rd * mask
    logit = float(do @ w["out.w"][:, 0] + w["out.b"][0])
    prob = 1.0 / (1.0 + math.exp(-logit)) if logit >= 0 else math.exp(logit) / (1.0 + math.exp(logit))
    cache = dict(
        prop=prop, zs=zs, order=order, kept=kept, pooled=pooled, o1=o1, pick=pick, half=half,
        cols=cols, w2=w2, o2=o2, flat=flat, hd=hd, rd=rd, do=do, mask=mask, prob=prob, n=n,
    )
    return prob, cache


def forward(m: ModelParams, sub, mask: np.ndarray | None = None) -> float:
    """Link probability for one subgraph; ``mask`` enables dropout with that keep mask."""
    adjacency, features = _inputs(sub)
    return _forward(m, adjacency, features, mask)[0]


def loss_bce(p: float, y: int) -> float:
    p = min(max(p, P_CLAMP), 1.0 - P_CLAMP)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def _backward(m: ModelParams, c: dict, y: int) -> dict[str, np.ndarray]:
    w = m.arrays
    g: dict[str, np.ndarray] = {}
    p = c["prob"]
    # clamping in the loss has zero slope outside the open interval
    dlogit = (p - y) if P_CLAMP < p < 1.0 - P_CLAMP else 0.0

    g["out.w"] = (c["do"] * dlogit)[:, None]
    g["out.b"] = np.array([dlogit])
    d_do = w["out.w"][:, 0] * dlogit
    d_rd = d_do if c["mask"] is None else d_do * c["mask"]
    d_hd = d_rd * (c["hd"] > 0)
    g["dense.w"] = np.outer(c["flat"], d_hd)
    g["dense.b"] = d_hd
    d_r2 = (w["dense.w"] @ d_hd).reshape(c["o2"].shape)
    d_o2 = d_r2 * (c["o2"] > 0)
    g["conv2.w"] = (c["cols"].T @ d_o2).reshape(w["conv2.w"].shape)
    g["conv2.b"] = d_o2.sum(axis=0)
    d_cols = (d_o2 @ c["w2"].T).reshape(len(d_o2), CONV2_KERNEL, CONV1_CHANNELS)
    half = c["half"]
    d_mp = np.zeros((half, CONV1_CHANNELS))
    length = len(d_o2)
    for j in range(CONV2_KERNEL):
        d_mp[j : j + length] += d_cols[:, j, :]
    d_pairs = np.zeros((half, 2, CONV1_CHANNELS))
    np.put_along_axis(d_pairs, c["pick"][:, None, :], d_mp[:, None, :], axis=1)
    d_r1 = np.zeros_like(c["o1"])
    d_r1[: 2 * half] = d_pairs.reshape(2 * half, CONV1_CHANNELS)
    d_o1 = d_r1 * (c["o1"] > 0)
    g["conv1.w"] = c["pooled"].T @ d_o1
    g["conv1.b"] = d_o1.sum(axis=0)
    d_pooled = d_o1 @ w["conv1.w"].T

    d_concat = sortpool_backward(d_pooled, c["order"], c["n"])
    zs, prop = c["zs"], c["prop"]
    splits = np.cumsum(GCN_SIZES)[:-1]
    d_zs = np.split(d_concat, splits, axis=1)
    carry = np.zeros_like(zs[-1])
    for i in reversed(range(len(GCN_SIZES))):
        d_z = d_zs[i] + carry
        d_h = d_z * (1.0 - zs[i + 1] ** 2)
        agg = prop @ zs[i]
        g[f"gcn{i}.w"] = agg.T @ d_h
        g[f"gcn{i}.b"] = d_h.sum(axis=0)
        if i:
            carry = prop.T @ (d_h @ w[f"gcn{i}.w"].T)
    return g


def sortpool_backward(d_pooled: np.ndarray, order: np.ndarray, n: int) -> np.ndarray:
    """Route pooled-row gradients back to node rows; truncated nodes get exactly 0."""
    d_concat = np.zeros((n, d_pooled.shape[1]))
    d_concat[order] = d_pooled[: len(order)]
    return d_concat


def backward(m: ModelParams, sub, y: int, mask: np.ndarray | None = None) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact gradients of ``loss_bce(forward(m, sub), y)``."""
    adjacency, features = _inputs(sub)
    p, cache = _forward(m, adjacency, features, mask)
    return loss_bce(p, y), _backward(m, cache, y)


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: ModelParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, grad in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(grad)
                self.v[name] = np.zeros_like(grad)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            params.arrays[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = LR_PROFILES["synthetic"]
    max_epochs: int = 50
    batch_size: int = 1
    activate_above: float = 0.5
    min_delta: float = 1e-4
    patience: int = 3
    sortpool_percentile: float = 0.6
    dropout: float = 0.5
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0 < self.sortpool_percentile <= 1:
            raise ValueError("sortpool_percentile must lie in (0, 1]")
        if self.batch_size != 1:
            raise ValueError("only batch_size=1 is supported")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")

    @classmethod
    def profile(cls, name: str, **overrides) -> TrainConfig:
        if name not in LR_PROFILES:
            raise ValueError(f"unknown profile {name!r}; choose from {sorted(LR_PROFILES)}")
        return cls(learning_rate=LR_PROFILES[name], **overrides)


@dataclass
class EarlyStopping:
    """Stops once accuracy has exceeded ``activate_above`` with an improvement and
    then failed to improve by ``min_delta`` for ``patience`` consecutive epochs."""

    activate_above: float = 0.5
    min_delta: float = 1e-4
    patience: int = 3
    best: float = -math.inf
    active: bool = False
    stale: int = 0

    def step(self, acc: float) -> bool:
        improved = acc >= self.best + self.min_delta
        if improved:
            self.best = acc
        if not self.active:
            if improved and acc > self.activate_above:
                self.active = True
                self.stale = 0
            return False
        self.stale = 0 if improved else self.stale + 1
        return self.stale >= self.patience


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float
    val_auc: float
    wall_time: float = field(compare=False)


class TrainingDivergedError(RuntimeError):
    pass


def predict(m: ModelParams, subs: Sequence[LabeledSubgraph]) -> np.ndarray:
    return np.array([forward(m, s) for s in subs])


def _val_metrics(m: ModelParams, val: Sequence[LabeledSubgraph]) -> tuple[float, float]:
    if not val:
        return float("nan"), float("nan")
    probs = predict(m, val)
    labels = np.array([s.label for s in val])
    acc = float(np.mean((probs >= 0.5) == (labels == 1)))
    try:
        auc = roc_auc(probs, labels)
    except DegenerateLabelsError:
        auc = float("nan")
    return acc, auc


def train(
    train_set: Sequence[LabeledSubgraph],
    val_set: Sequence[LabeledSubgraph],
    cfg: TrainConfig = TrainConfig(),
    sortpool_k: int | None = None,
    log=None,
) -> tuple[ModelParams, list[EpochRecord]]:
    """SGD with batch size 1 and Adam; returns the best-validation-accuracy checkpoint."""
    if not train_set:
        raise ValueError("training split is empty")
    in_dim = train_set[0].features.shape[1]
    if sortpool_k is None:
        sortpool_k = sortpool_size([s.num_nodes for s in train_set], cfg.sortpool_percentile)
    rng = np.random.default_rng(cfg.seed)
    params = init_params(in_dim, sortpool_k, seed=int(rng.integers(2**63)))
    history: list[EpochRecord] = []
    if cfg.max_epochs == 0:
        return params, history

    opt = Adam(cfg.learning_rate, *cfg.adam_betas, cfg.adam_eps)
    stopper = EarlyStopping(cfg.activate_above, cfg.min_delta, cfg.patience)
    best_acc = -math.inf
    best = params.copy()
    for epoch in range(1, cfg.max_epochs + 1):
        start = time.perf_counter()
        total = 0.0
        for idx in rng.permutation(len(train_set)):
            sub = train_set[idx]
            mask = dropout_mask(rng, cfg.dropout) if cfg.dropout > 0 else None
            loss, grads = backward(params, sub, sub.label, mask)
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}, sample {idx}")
            opt.step(params, grads)
            total += loss
        if not params.all_finite():
            raise TrainingDivergedError(f"non-finite parameters after epoch {epoch}")
        acc, auc = _val_metrics(params, val_set)
        rec = EpochRecord(epoch, total / len(train_set), acc, auc, time.perf_counter() - start)
        history.append(rec)
        if log is not None:
            log(rec)
        if acc > best_acc:
            best_acc = acc
            best = params.copy()
        if stopper.step(acc):
            break
    if not val_set:
        best = params
    return best, history


def to_checkpoint(m: ModelParams, meta: dict | None = None) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "sortpool_k": m.sortpool_k,
        "in_dim": m.in_dim,
        "shapes": {k: list(v.shape) for k, v in m.arrays.items()},
        "arrays": {k: v.reshape(-1).tolist() for k, v in m.arrays.items()},
        "meta": copy.deepcopy(meta or {}),
    }


def from_checkpoint(doc: dict) -> tuple[ModelParams, dict]:
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} checkpoint")
    k, in_dim = int(doc["sortpool_k"]), int(doc["in_dim"])
    expected = param_shapes(in_dim, k)
    shapes = {name: tuple(s) for name, s in doc["shapes"].items()}
    if shapes != expected:
        raise ValueError("checkpoint shapes do not match the architecture")
    arrays = {}
    for name, shape in expected.items():
        flat = np.asarray(doc["arrays"][name], dtype=np.float64)
        if flat.size != math.prod(shape):
            raise ValueError(f"array {name} has {flat.size} values, expected {math.prod(shape)}")
        arrays[name] = flat.reshape(shape)
    return ModelParams(arrays, k, in_dim), doc.get("meta", {})


def save_checkpoint(path, m: ModelParams, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_checkpoint(m, meta), fh)


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    with open(path, encoding="utf-8") as fh:
        return from_checkpoint(json.load(fh))
