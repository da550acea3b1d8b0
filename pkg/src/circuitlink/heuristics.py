"""Classical neighbourhood and path-based link scores on undirected graphs.

All scorers work on a dense 0/1 adjacency matrix; ``score_matrix`` returns the
full symmetric score matrix and ``heuristic_score`` reads a single entry.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import PortGraph

METHODS = ("cn", "jaccard", "pa", "aa", "ra", "katz", "pagerank", "simrank")


@dataclass(frozen=True)
class HeuristicParams:
    katz_beta: float = 0.005
    pagerank_alpha: float = 0.85
    simrank_c: float = 0.8
    simrank_iters: int = 20
    tolerance: float = 1e-9

    def __post_init__(self):
        if not self.katz_beta > 0:
            raise ValueError("katz_beta must be positive")
        if not 0 < self.pagerank_alpha < 1:
            raise ValueError("pagerank_alpha must lie in (0, 1)")
        if not 0 < self.simrank_c < 1:
            raise ValueError("simrank_c must lie in (0, 1)")
        if self.simrank_iters < 1:
            raise ValueError("simrank_iters must be >= 1")


class KatzDivergenceError(ValueError):
    pass


def _dense(g) -> np.ndarray:
    if isinstance(g, PortGraph):
        return g.adjacency()
    return np.asarray(g, dtype=np.float64)


def spectral_radius(adj: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest adjacency eigenvalue by power iteration on A + I.

    The shift keeps the iteration from oscillating on bipartite graphs.
    """
    n = adj.shape[0]
    if n == 0 or not adj.any():
        return 0.0
    shifted = adj + np.eye(n)
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        w = shifted @ v
        new = float(v @ w)
        v = w / np.linalg.norm(w)
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            lam = new
            break
        lam = new
    return lam - 1.0


def _degrees(adj: np.ndarray) -> np.ndarray:
    return adj.sum(axis=1)


def _inverse_or_zero(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    np.divide(1.0, values, out=out, where=values != 0)
    return out


def katz_matrix(adj: np.ndarray, beta: float, tol: float = 1e-9) -> np.ndarray:
    rho = spectral_radius(adj, tol)
    if beta * rho >= 1.0:
        raise KatzDivergenceError(f"katz series diverges: beta={beta} * spectral radius {rho:.6g} >= 1")
    n = adj.shape[0]
    eye = np.eye(n)
    return np.linalg.solve(eye - beta * adj, eye) - eye


def rooted_pagerank_matrix(adj: np.ndarray, alpha: float) -> np.ndarray:
    """Row r holds the stationary distribution of the walk restarting at r.

    A walker on a node without neighbours jumps back to the root.
    """
    n = adj.shape[0]
    deg = _degrees(adj)
    trans = adj * _inverse_or_zero(deg)[:, None]
    dangling = deg == 0
    out = np.empty((n, n))
    for r in range(n):
        p = trans.copy()
        p[dangling, r] = 1.0
        e = np.zeros(n)
        e[r] = 1.0
        out[r] = np.linalg.solve(np.eye(n) - alpha * p.T, (1.0 - alpha) * e)
    return out


def simrank_matrix(adj: np.ndarray, c: float, iters: int) -> np.ndarray:
    n = adj.shape[0]
    walk = adj * _inverse_or_zero(_degrees(adj))[:, None]
    s = np.eye(n)
    for _ in range(iters):
        s = c * walk @ s @ walk.T
        np.fill_diagonal(s, 1.0)
    return s


def score_matrix(method: str, g, p: HeuristicParams | None = None) -> np.ndarray:
    p = p or HeuristicParams()
    adj = _dense(g)
    deg = _degrees(adj)
    if method == "cn":
        return adj @ adj
    if method == "jaccard":
        common = adj @ adj
        union = deg[:, None] + deg[None, :] - common
        out = np.zeros_like(common)
        np.divide(common, union, out=out, where=union > 0)
        return out
    if method == "pa":
        return np.outer(deg, deg)
    if method == "aa":
        weight = np.zeros_like(deg)
        np.divide(1.0, np.log(np.maximum(deg, 1.0)), out=weight, where=deg > 1)
        return (adj * weight) @ adj
    if method == "ra":
        return (adj * _inverse_or_zero(deg)) @ adj
    if method == "katz":
        return katz_matrix(adj, p.katz_beta, p.tolerance)
    if method == "pagerank":
        q = rooted_pagerank_matrix(adj, p.pagerank_alpha)
        return q + q.T
    if method == "simrank":
        return simrank_matrix(adj, p.simrank_c, p.simrank_iters)
    raise ValueError(f"unknown heuristic {method!r}; choose from {METHODS}")


def heuristic_score(method: str, g, x: int, y: int, p: HeuristicParams | None = None) -> float:
    if x == y:
        raise ValueError("x and y must differ")
    return float(score_matrix(method, g, p)[x, y])


def rank_candidates(
    method: str,
    g,
    query_node: int,
    candidates: Sequence[int],
    p: HeuristicParams | None = None,
) -> list[tuple[int, float]]:
    """Candidates scored against ``query_node``; best first, ties by ascending id."""
    scores = score_matrix(method, g, p)[query_node]
    scored = [(int(c), float(scores[c])) for c in candidates]
    return sorted(scored, key=lambda t: (-t[1], t[0]))
