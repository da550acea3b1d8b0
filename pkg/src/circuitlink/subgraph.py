"""Enclosing-subgraph extraction with double-radius node labels."""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import StackedGraph


@dataclass(frozen=True)
class ExtractConfig:
    h: int = 2
    max_label_classes: int = 32
    negative_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("h must be >= 1")
        if self.max_label_classes < 2:
            raise ValueError("max_label_classes must be >= 2")
        if not self.negative_ratio > 0:
            raise ValueError("negative_ratio must be > 0")


@dataclass
class LabeledSubgraph:
    nodes: np.ndarray  # original node ids; targets at positions 0 and 1
    adjacency: np.ndarray  # dense local 0/1 matrix, target edge removed
    drnl: np.ndarray
    features: np.ndarray
    label: int
    target: tuple[int, int] = (0, 1)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.sum() // 2)

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes.tolist(),
            "edges": [[int(i), int(j)] for i, j in zip(*np.nonzero(np.triu(self.adjacency)))],
            "target": list(self.target),
            "drnl": self.drnl.tolist(),
            "label": int(self.label),
        }


def _bfs(neighbors, src: int, blocked: int = -1) -> dict[int, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in neighbors(u):
            v = int(v)
            if v == blocked or v in dist:
                continue
            dist[v] = dist[u] + 1
            queue.append(v)
    return dist


def drnl_labels(adjacency: np.ndarray, x: int = 0, y: int = 1) -> np.ndarray:
    """Double-radius labels for every node of a local subgraph.

    The distance to ``x`` is measured with ``y`` removed and vice versa; a node
    unreachable from either target is labelled 0, the targets 1.
    """
    n = adjacency.shape[0]
    lists = [np.flatnonzero(adjacency[i]) for i in range(n)]
    dx = _bfs(lists.__getitem__, x, blocked=y)
    dy = _bfs(lists.__getitem__, y, blocked=x)
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        if i in dx and i in dy:
            a, b = dx[i], dy[i]
            d = a + b
            half, odd = divmod(d, 2)
            labels[i] = 1 + min(a, b) + half * (half + odd - 1)
    labels[x] = 1
    labels[y] = 1
    return labels


def drnl_label(sub: LabeledSubgraph) -> np.ndarray:
    return drnl_labels(sub.adjacency, *sub.target)


def node_features(drnl: np.ndarray, type_codes: np.ndarray, max_label_classes: int, k: int) -> np.ndarray:
    n = len(drnl)
    feats = np.zeros((n, max_label_classes + k))
    rows = np.arange(n)
    feats[rows, np.minimum(drnl, max_label_classes - 1)] = 1.0
    feats[rows, max_label_classes + type_codes] = 1.0
    return feats


def extract_enclosing_subgraph(
    g: StackedGraph, x: int, y: int, cfg: ExtractConfig, label: int | None = None
) -> LabeledSubgraph:
    x, y = int(x), int(y)
    if x == y:
        raise ValueError("target nodes must differ")
    if g.block[x] != g.block[y]:
        raise ValueError(f"cross-circuit pair ({x}, {y})")
    nbr = g.neighbors
    linked = bool(np.any(nbr(x) == y))

    def hop_set(src: int, other: int) -> set[int]:
        seen = {src}
        frontier = [src]
        for _ in range(cfg.h):
            nxt = []
            for u in frontier:
                for v in nbr(u):
                    v = int(v)
                    if u == src and v == other:
                        continue  # target edge removed
                    if u == other and v == src:
                        continue
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return seen

    rest = (hop_set(x, y) | hop_set(y, x)) - {x, y}
    nodes = np.array([x, y, *sorted(rest)], dtype=np.int64)
    local = g.adjacency[nodes][:, nodes].toarray().astype(np.float64)
    local[0, 1] = local[1, 0] = 0.0
    drnl = drnl_labels(local)
    feats = node_features(drnl, g.type_codes[nodes], cfg.max_label_classes, g.type_features.shape[1])
    return LabeledSubgraph(nodes, local, drnl, feats, int(linked if label is None else label))


def sample_training_pairs(g: StackedGraph, cfg: ExtractConfig) -> list[tuple[int, int, int]]:
    """All edges as positives plus seeded within-circuit non-edges as negatives."""
    if g.num_nodes == 0:
        raise ValueError("empty graph")
    positives = g.edges()
    candidates: list[tuple[int, int]] = []
    cliques = 0
    for _, off, n in g.member_offsets:
        if n < 2:
            continue
        block = g.adjacency[off : off + n, off : off + n].toarray()
        iu, ju = np.triu_indices(n, k=1)
        free = ~block[iu, ju]
        if not free.any():
            cliques += 1
            continue
        candidates.extend(zip((iu[free] + off).tolist(), (ju[free] + off).tolist()))
    if cliques:
        warnings.warn(f"{cliques} member block(s) are cliques and contribute no negatives", stacklevel=2)
    want = math.ceil(cfg.negative_ratio * len(positives))
    rng = np.random.default_rng(cfg.seed)
    take = min(want, len(candidates))
    picked = rng.choice(len(candidates), size=take, replace=False) if take else np.array([], dtype=np.int64)
    negatives = sorted(candidates[i] for i in picked.tolist())
    return [(i, j, 1) for i, j in positives] + [(i, j, 0) for i, j in negatives]
