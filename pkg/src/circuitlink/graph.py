"""Port-level circuit graphs and block-diagonal stacking.

Every port of every component becomes one vertex whose integer type is the
vocabulary index of its component's class. Edges join (a) the ports of one
component and (b) all ports that share a net.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Literal, Sequence

import networkx as nx
import numpy as np
import scipy.sparse as ssp

from .netlist.types import CLASS_PORTS, LABELS, Netlist


@dataclass(frozen=True)
class ClassVocabulary:
    labels: tuple[str, ...] = LABELS

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("vocabulary needs at least one label")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in vocabulary: {labels}")
        unknown = [lab for lab in labels if lab not in CLASS_PORTS]
        if unknown:
            raise ValueError(f"unknown component classes: {unknown}")

    @property
    def k(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"component class {label!r} not in vocabulary {self.labels}") from None

    @classmethod
    def from_netlists(cls, netlists: Iterable[Netlist]) -> ClassVocabulary:
        """Labels present in the netlists, kept in class-table order."""
        present = {c.ctype for n in netlists for c in n.components}
        return cls(tuple(lab for lab in LABELS if lab in present))


@dataclass(frozen=True)
class PortNode:
    node_id: int
    component_id: str
    port_name: str
    type_code: int


@dataclass(frozen=True)
class PortGraph:
    nodes: tuple[PortNode, ...]
    edges: frozenset[tuple[int, int]]
    vocab: ClassVocabulary = field(default_factory=ClassVocabulary)
    name: str = ""

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def type_codes(self) -> np.ndarray:
        return np.array([n.type_code for n in self.nodes], dtype=np.int64)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency as float64."""
        a = np.zeros((self.num_nodes, self.num_nodes))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def neighbors(self) -> list[set[int]]:
        nbrs: list[set[int]] = [set() for _ in self.nodes]
        for i, j in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        return nbrs

    def without_edge(self, u: int, v: int) -> PortGraph:
        e = (min(u, v), max(u, v))
        if e not in self.edges:
            return self
        return PortGraph(self.nodes, self.edges - {e}, self.vocab, self.name)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for n in self.nodes:
            g.add_node(n.node_id, type_code=n.type_code)
        g.add_edges_from(self.edges)
        return g


def _edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def build_port_graph(
    netlist: Netlist,
    vocab: ClassVocabulary | None = None,
    intra: Literal["clique", "star"] = "clique",
) -> PortGraph:
    """Port graph of a netlist.

    ``intra`` selects how a component's own ports are joined: a clique, or a
    star centred on the first port of the class's port list.
    """
    vocab = vocab or ClassVocabulary()
    nodes: list[PortNode] = []
    edges: set[tuple[int, int]] = set()
    by_net: dict[str, list[int]] = {}
    for comp in netlist.components:
        code = vocab.index(comp.ctype)
        ids = []
        for port in CLASS_PORTS[comp.ctype]:
            nid = len(nodes)
            nodes.append(PortNode(nid, comp.id, port, code))
            ids.append(nid)
            by_net.setdefault(comp.port_bindings[port], []).append(nid)
        if intra == "clique":
            edges.update(_edge(i, j) for i, j in combinations(ids, 2))
        elif intra == "star":
            edges.update(_edge(ids[0], j) for j in ids[1:])
        else:
            raise ValueError(f"unknown intra-component topology {intra!r}")
    for members in by_net.values():
        edges.update(_edge(i, j) for i, j in combinations(members, 2))
    return PortGraph(tuple(nodes), frozenset(edges), vocab, netlist.title)


@dataclass(frozen=True)
class StackedGraph:
    member_offsets: tuple[tuple[int, int, int], ...]
    adjacency: ssp.csr_matrix
    type_features: np.ndarray
    type_codes: np.ndarray
    block: np.ndarray  # member index of every node

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, node: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[node] : a.indptr[node + 1]]

    def edges(self) -> list[tuple[int, int]]:
        coo = ssp.triu(self.adjacency, k=1).tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist()))

    def is_block_diagonal(self) -> bool:
        coo = self.adjacency.tocoo()
        return bool(np.all(self.block[coo.row] == self.block[coo.col]))


def stack_graphs(graphs: Sequence[PortGraph]) -> StackedGraph:
    if not graphs:
        raise ValueError("cannot stack an empty list of graphs")
    vocab = graphs[0].vocab
    if any(g.vocab != vocab for g in graphs):
        raise ValueError("all stacked graphs must share one vocabulary")
    offsets = []
    rows: list[int] = []
    cols: list[int] = []
    codes: list[int] = []
    off = 0
    for idx, g in enumerate(graphs):
        offsets.append((idx, off, g.num_nodes))
        for i, j in g.edges:
            rows += [i + off, j + off]
            cols += [j + off, i + off]
        codes.extend(n.type_code for n in g.nodes)
        off += g.num_nodes
    n = off
    adj = ssp.csr_matrix(
        (np.ones(len(rows), dtype=bool), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(n, n),
    )
    adj.sort_indices()
    type_codes = np.array(codes, dtype=np.int64)
    feats = np.zeros((n, vocab.k))
    feats[np.arange(n), type_codes] = 1.0
    block = np.repeat(np.arange(len(graphs)), [g.num_nodes for g in graphs])
    for arr in (feats, type_codes, block):
        arr.setflags(write=False)
    return StackedGraph(tuple(offsets), adj, feats, type_codes, block)


def graph_stats(graphs: Sequence[PortGraph]) -> dict:
    if not graphs:
        raise ValueError("graph_stats needs at least one graph")
    classes = {n.type_code for g in graphs for n in g.nodes}
    return {
        "count": len(graphs),
        "class_count": len(classes),
        "avg_nodes": float(np.mean([g.num_nodes for g in graphs])),
        "avg_edges": float(np.mean([g.num_edges for g in graphs])),
    }


def graph_fingerprint(graph: PortGraph) -> str:
    """Isomorphism-invariant hash over structure and vertex types."""
    g = graph.to_networkx()
    for n in g.nodes:
        g.nodes[n]["t"] = str(g.nodes[n]["type_code"])
    return nx.weisfeiler_lehman_graph_hash(g, node_attr="t", iterations=4)


def dump_jsonl(graph: PortGraph) -> str:
    """One JSON record per line: node records, then edge records in sorted order."""
    lines = []
    for n in graph.nodes:
        rec = {
            "kind": "node",
            "id": n.node_id,
            "component": n.component_id,
            "port": n.port_name,
            "type": n.type_code,
            "label": graph.vocab.labels[n.type_code],
        }
        lines.append(json.dumps(rec))
    for i, j in graph.sorted_edges():
        lines.append(json.dumps({"kind": "edge", "u": i, "v": j}))
    return "\n".join(lines) + "\n"
