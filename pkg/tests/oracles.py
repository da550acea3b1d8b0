"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np

from circuitlink import dgcnn
from circuitlink.dgcnn import _forward
from circuitlink.graph import ClassVocabulary, PortGraph, PortNode, stack_graphs
from circuitlink.subgraph import ExtractConfig, extract_enclosing_subgraph


def random_connected_graph(rng: np.random.Generator, n: int, p: float = 0.3) -> nx.Graph:
    """Random tree plus extra G(n, p) edges, so always connected."""
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for v in range(1, n):
        g.add_edge(v, int(rng.integers(v)))
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < p:
            g.add_edge(u, v)
    return g


def drnl_by_enumeration(adj: np.ndarray, x: int = 0, y: int = 1) -> np.ndarray:
    """Labels from explicit BFS maps and a lookup table of distance pairs.

    Unordered pairs {a, b} (a, b >= 1) are numbered from 2 in order of
    (a + b, min(a, b)); that numbering is what the closed form encodes.
    """
    g = nx.from_numpy_array(adj)
    gx = g.copy()
    gx.remove_node(y)
    gy = g.copy()
    gy.remove_node(x)
    dx = nx.single_source_shortest_path_length(gx, x)
    dy = nx.single_source_shortest_path_length(gy, y)
    table = {}
    code = 2
    for total in range(2, 2 * len(adj) + 2):
        for small in range(1, total // 2 + 1):
            table[(small, total - small)] = code
            code += 1
    out = np.zeros(len(adj), dtype=np.int64)
    for i in range(len(adj)):
        if i in (x, y):
            out[i] = 1
        elif i in dx and i in dy:
            a, b = dx[i], dy[i]
            out[i] = table[(min(a, b), max(a, b))]
    return out


def neighbor_sets(adj: np.ndarray) -> list[set[int]]:
    return [set(np.flatnonzero(row).tolist()) for row in adj]


def set_heuristic(method: str, adj: np.ndarray, x: int, y: int) -> float:
    gam = neighbor_sets(adj)
    common = gam[x] & gam[y]
    union = gam[x] | gam[y]
    if method == "cn":
        return float(len(common))
    if method == "jaccard":
        return len(common) / len(union) if union else 0.0
    if method == "pa":
        return float(len(gam[x]) * len(gam[y]))
    if method == "aa":
        return sum(1.0 / math.log(len(gam[z])) for z in common if len(gam[z]) > 1)
    if method == "ra":
        return sum(1.0 / len(gam[z]) for z in common)
    raise ValueError(method)


def katz_series(adj: np.ndarray, beta: float, terms: int = 30) -> np.ndarray:
    total = np.zeros_like(adj)
    power = np.eye(len(adj))
    for l in range(1, terms + 1):
        power = power @ adj
        total += beta**l * power
    return total


def simrank_reference(adj: np.ndarray, c: float, iters: int = 100) -> np.ndarray:
    gam = [sorted(s) for s in neighbor_sets(adj)]
    n = len(adj)
    s = np.eye(n)
    for _ in range(iters):
        new = np.eye(n)
        for a in range(n):
            for b in range(n):
                if a == b or not gam[a] or not gam[b]:
                    continue
                acc = sum(s[u, v] for u in gam[a] for v in gam[b])
                new[a, b] = c * acc / (len(gam[a]) * len(gam[b]))
        s = new
    return s


def pagerank_walk(adj: np.ndarray, root: int, alpha: float, iters: int = 2000) -> np.ndarray:
    """Rooted random walk with restart, by power iteration on the explicit chain."""
    n = len(adj)
    q = np.zeros(n)
    q[root] = 1.0
    for _ in range(iters):
        nxt = np.zeros(n)
        for i in range(n):
            nb = np.flatnonzero(adj[i])
            if len(nb):
                nxt[nb] += alpha * q[i] / len(nb)
            else:
                nxt[root] += alpha * q[i]
        nxt[root] += (1 - alpha) * q.sum()
        q = nxt
    return q


def pairwise_auc(scores, labels) -> float:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def _probe(m, adj, feats, mask, y):
    """Loss and the forward's discrete decisions at the current parameters."""
    p, c = _forward(m, adj, feats, mask)
    return dgcnn.loss_bce(p, y), (
        c["order"].tobytes(),
        (c["o1"] > 0).tobytes(),
        c["pick"].tobytes(),
        (c["o2"] > 0).tobytes(),
        (c["hd"] > 0).tobytes(),
    )


def finite_difference_grads(m, sub, y, mask, step: float = 1e-4):
    """Central differences of the loss for every parameter entry.

    Where a step crosses a kink (a ReLU, max-pool or sort-order switch, detected
    by comparing the forward's discrete decisions at theta +/- step with those
    at theta), the one-sided difference on the unchanged side is used instead.
    Returns (grads, number of kink-adjusted entries, number with kinks both sides).
    """
    adj, feats = sub.adjacency, sub.features
    f0, base = _probe(m, adj, feats, mask, y)
    grads = {}
    adjusted = both = 0
    for name, arr in m.arrays.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            fp, pp = _probe(m, adj, feats, mask, y)
            arr[idx] = orig - step
            fm, pm = _probe(m, adj, feats, mask, y)
            arr[idx] = orig
            if pp == base and pm == base:
                g[idx] = (fp - fm) / (2 * step)
            elif pp == base:
                g[idx] = (fp - f0) / step
                adjusted += 1
            elif pm == base:
                g[idx] = (f0 - fm) / step
                adjusted += 1
            else:
                g[idx] = (fp - fm) / (2 * step)
                both += 1
        grads[name] = g
    return grads, adjusted, both


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(a - b) / den) if den > 0 else 0.0


def port_graph_from_nx(g: nx.Graph, rng: np.random.Generator | None = None, k: int = 3) -> PortGraph:
    """Wrap a plain integer-labelled graph as a PortGraph with random vertex types."""
    vocab = ClassVocabulary(("Res", "Cap", "Ind", "NMOS", "PMOS")[:k])
    n = g.number_of_nodes()
    types = rng.integers(k, size=n) if rng is not None else np.zeros(n, dtype=int)
    nodes = tuple(PortNode(i, f"X{i}", "Pos", int(types[i])) for i in range(n))
    edges = frozenset((min(u, v), max(u, v)) for u, v in g.edges if u != v)
    return PortGraph(nodes, edges, vocab)


def toy_subgraphs(count: int, seed: int, max_label_classes: int = 8):
    """Separable pairs: label 1 targets share a neighbour, label 0 targets share none."""
    rng = np.random.default_rng(seed)
    cfg = ExtractConfig(max_label_classes=max_label_classes)
    out = []
    for i in range(count):
        label = i % 2
        g = random_connected_graph(rng, 8, 0.15)
        if label:
            g.add_edges_from([(0, 2), (1, 2)])
        else:
            for v in set(g[0]) & set(g[1]):
                g.remove_edge(0, v)
            if g.has_edge(0, 1):
                g.remove_edge(0, 1)
        s = stack_graphs([port_graph_from_nx(g, rng)])
        out.append(extract_enclosing_subgraph(s, 0, 1, cfg, label=label))
    return out
