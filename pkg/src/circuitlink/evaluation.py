"""Graph-level splits, the vertex-query evaluation protocol and a scaling study."""
from __future__ import annotations

import hashlib
import json
import math
import resource
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .graph import PortGraph
from .heuristics import HeuristicParams, score_matrix
from .metrics import DegenerateLabelsError, roc_auc


@dataclass(frozen=True)
class SplitPlan:
    mode: Literal["conventional", "kfold5"] = "conventional"
    ratios: tuple[float, float, float] = (0.70, 0.20, 0.10)  # train, test, val
    fold_index: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("conventional", "kfold5"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
        if self.mode == "kfold5" and not 0 <= self.fold_index < 5:
            raise ValueError("fold_index must lie in [0, 5)")


def _floor(x: float) -> int:
    return int(math.floor(x + 1e-9))


def split_indices(n: int, plan: SplitPlan) -> dict[str, list[int]]:
    if n < 10:
        raise ValueError(f"need at least 10 graphs to split, got {n}")
    perm = np.random.default_rng(plan.seed).permutation(n).tolist()
    r_train, r_test, r_val = plan.ratios
    if plan.mode == "conventional":
        n_train, n_test = _floor(r_train * n), _floor(r_test * n)
        train, test, val = perm[:n_train], perm[n_train : n_train + n_test], perm[n_train + n_test :]
    else:
        folds = [f.tolist() for f in np.array_split(np.array(perm), 5)]
        test = folds[plan.fold_index]
        rest = [i for k, f in enumerate(folds) if k != plan.fold_index for i in f]
        n_val = _floor(r_val * n)
        val, train = rest[:n_val], rest[n_val:]
    return {"train": train, "val": val, "test": test}


def make_splits(graphs: Sequence, plan: SplitPlan) -> dict[str, list]:
    idx = split_indices(len(graphs), plan)
    return {name: [graphs[i] for i in ids] for name, ids in idx.items()}


class HeuristicScorer:
    """Scores each candidate pair on the graph with that pair's edge removed."""

    probabilistic = False

    def __init__(self, method: str, params: HeuristicParams | None = None):
        self.method = method
        self.params = params or HeuristicParams()
        self.name = method

    def score(self, graph: PortGraph, u: int, candidates: Sequence[int]) -> np.ndarray:
        adj = graph.adjacency()
        out = np.empty(len(candidates))
        for i, v in enumerate(candidates):
            linked = adj[u, v]
            adj[u, v] = adj[v, u] = 0.0
            out[i] = score_matrix(self.method, adj, self.params)[u, v]
            adj[u, v] = adj[v, u] = linked
        return out

    def config(self) -> dict:
        return {"method": self.method, "params": asdict(self.params)}


@dataclass
class EvalReport:
    method: str
    accuracy_mean: float
    accuracy_std: float
    auc_mean: float
    auc_std: float
    repetitions: int
    per_rep: list[dict]
    avg_inference_time_s: float = field(compare=False)
    threshold_rule: str = ""
    fingerprint: str = ""

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("avg_inference_time_s")
        return d


def fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _query(scorer, graph: PortGraph, seed: tuple[int, ...]):
    """One vertex query: returns (scores, labels, seconds) or None for an edgeless graph."""
    rng = np.random.default_rng(list(seed))
    nbrs = graph.neighbors()
    n = graph.num_nodes
    u = None
    for _ in range(n):
        cand = int(rng.integers(n))
        if nbrs[cand]:
            u = cand
            break
    if u is None:
        return None
    pos = sorted(nbrs[u])
    non = sorted(set(range(n)) - nbrs[u] - {u})
    take = min(len(pos), len(non))
    neg = sorted(rng.choice(non, size=take, replace=False).tolist()) if take else []
    start = time.perf_counter()
    scores = np.asarray(scorer.score(graph, u, pos + neg), dtype=np.float64)
    elapsed = time.perf_counter() - start
    return scores, np.array([1] * len(pos) + [0] * len(neg)), elapsed


def evaluate(
    scorer,
    test_graphs: Sequence[PortGraph],
    reps: int = 10,
    seed: int = 0,
    threads: int = 1,
) -> EvalReport:
    """Pick one vertex per test graph, score its neighbours against as many
    non-neighbours, and aggregate accuracy / ROC-AUC over repetitions.

    Probabilistic scorers are thresholded at 0.5; unbounded heuristic scores
    at the median of the repetition's balanced score set (strictly above
    counts as a predicted link).
    """
    tasks = [(r, gi) for r in range(reps) for gi in range(len(test_graphs))]

    def run(task):
        r, gi = task
        return _query(scorer, test_graphs[gi], (seed, r, gi))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    per_rep = []
    times = []
    for r in range(reps):
        chunk = [res for (rr, _), res in zip(tasks, results) if rr == r and res is not None]
        if not chunk:
            raise ValueError("no test graph has an edge to query")
        scores = np.concatenate([c[0] for c in chunk])
        labels = np.concatenate([c[1] for c in chunk])
        times.extend(c[2] for c in chunk)
        if scorer.probabilistic:
            pred = scores >= 0.5
        else:
            pred = scores > np.median(scores)
        acc = float(np.mean(pred == (labels == 1)))
        try:
            auc = roc_auc(scores, labels)
        except DegenerateLabelsError:
            auc = float("nan")
        per_rep.append({"rep": r, "accuracy": acc, "auc": auc, "pairs": int(len(labels))})

    accs = np.array([p["accuracy"] for p in per_rep])
    aucs = np.array([p["auc"] for p in per_rep])
    rule = "probability >= 0.5" if scorer.probabilistic else "score > median of balanced set"
    cfg = {"scorer": scorer.config(), "reps": reps, "seed": seed, "graphs": len(test_graphs)}
    return EvalReport(
        method=scorer.name,
        accuracy_mean=float(accs.mean()),
        accuracy_std=float(accs.std()),
        auc_mean=float(np.nanmean(aucs)) if np.isfinite(aucs).any() else float("nan"),
        auc_std=float(np.nanstd(aucs)) if np.isfinite(aucs).any() else float("nan"),
        repetitions=reps,
        per_rep=per_rep,
        avg_inference_time_s=float(np.mean(times)),
        threshold_rule=rule,
        fingerprint=fingerprint(cfg),
    )


def format_table(reports: Sequence[EvalReport], timing: bool = True) -> str:
    head = f"{'method':<10} {'accuracy':>18} {'ROC-AUC':>18}"
    if timing:
        head += f" {'avg inf time (s)':>17}"
    lines = [head, "-" * len(head)]
    for rep in reports:
        row = (
            f"{rep.method:<10} {100 * rep.accuracy_mean:>8.2f}% ± {100 * rep.accuracy_std:5.2f}%"
            f" {rep.auc_mean:>9.4f} ± {rep.auc_std:6.4f}"
        )
        if timing:
            row += f" {rep.avg_inference_time_s:>17.6f}"
        lines.append(row)
    return "\n".join(lines)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)


def peak_rss_bytes() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def scaling_benchmark(
    run: Callable[[Sequence[PortGraph]], object],
    ladder: Sequence[Sequence[PortGraph]],
    measure: Callable[[Sequence[PortGraph]], float] | None = None,
) -> dict:
    """Time ``run`` on each dataset of the ladder and fit log(time) against log(edges).

    ``measure`` replaces wall-clock timing with an injected cost function.
    """
    edges = [sum(g.num_edges for g in graphs) for graphs in ladder]
    if len(ladder) < 4:
        raise ValueError("scaling ladder needs at least 4 points")
    if min(edges) <= 0 or max(edges) < 8 * min(edges):
        raise ValueError("scaling ladder must span at least 8x in total edges")
    points = []
    for graphs, e in zip(ladder, edges):
        if measure is None:
            start = time.perf_counter()
            run(graphs)
            t = time.perf_counter() - start
        else:
            t = float(measure(graphs))
        points.append({"total_edges": int(e), "time_s": t, "ram_bytes": peak_rss_bytes(), "vram": "n/a"})
    return {"points": points, "fitted_slope": loglog_slope(edges, [p["time_s"] for p in points])}
