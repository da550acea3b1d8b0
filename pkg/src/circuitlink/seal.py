"""End-to-end link prediction: netlists -> port graphs -> labelled subgraphs -> DGCNN."""
from __future__ import annotations

import json
import os
import time
import warnings
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dgcnn
from .evaluation import EvalReport, HeuristicScorer, SplitPlan, evaluate, make_splits
from .graph import ClassVocabulary, PortGraph, build_port_graph, stack_graphs
from .netlist import Netlist, from_json, parse_spice
from .subgraph import ExtractConfig, LabeledSubgraph, extract_enclosing_subgraph, sample_training_pairs

MANIFEST_FORMAT = "circuitlink-manifest-v1"
SPICE_SUFFIXES = (".cir", ".sp", ".spice", ".net", ".ckt")


def read_netlist(path) -> Netlist:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return from_json(text)
    return parse_spice(text)


def write_manifest(path, netlist_paths: Sequence[str], vocab: ClassVocabulary) -> None:
    doc = {"format": MANIFEST_FORMAT, "vocabulary": list(vocab.labels), "netlists": list(netlist_paths)}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_manifest(path) -> tuple[list[Netlist], ClassVocabulary]:
    """Netlists listed by a manifest (paths relative to it) and its vocabulary."""
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a {MANIFEST_FORMAT} manifest")
    base = path.parent
    netlists = [read_netlist(base / p) for p in doc["netlists"]]
    vocab = ClassVocabulary(tuple(doc["vocabulary"])) if doc.get("vocabulary") else ClassVocabulary.from_netlists(netlists)
    return netlists, vocab


def build_graphs(netlists: Sequence[Netlist], vocab: ClassVocabulary) -> list[PortGraph]:
    return [build_port_graph(n, vocab) for n in netlists]


def labeled_subgraphs(graphs: Sequence[PortGraph], cfg: ExtractConfig) -> list[LabeledSubgraph]:
    """Training samples: every edge plus sampled non-edges, each as an enclosing subgraph."""
    stacked = stack_graphs(graphs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pairs = sample_training_pairs(stacked, cfg)
    return [extract_enclosing_subgraph(stacked, x, y, cfg, label=lab) for x, y, lab in pairs]


@dataclass
class SealModel:
    params: dgcnn.ModelParams
    extract: ExtractConfig
    vocab: ClassVocabulary

    def meta(self) -> dict:
        return {"extract": asdict(self.extract), "vocabulary": list(self.vocab.labels)}

    def save(self, path) -> None:
        dgcnn.save_checkpoint(path, self.params, self.meta())

    @classmethod
    def load(cls, path) -> SealModel:
        params, meta = dgcnn.load_checkpoint(path)
        return cls(params, ExtractConfig(**meta["extract"]), ClassVocabulary(tuple(meta["vocabulary"])))


class SealScorer:
    probabilistic = True
    name = "seal"

    def __init__(self, model: SealModel):
        self.model = model

    def score(self, graph: PortGraph, u: int, candidates: Sequence[int]) -> np.ndarray:
        stacked = stack_graphs([graph])
        cfg = self.model.extract
        return np.array(
            [dgcnn.forward(self.model.params, extract_enclosing_subgraph(stacked, u, v, cfg)) for v in candidates]
        )

    def config(self) -> dict:
        digest = dgcnn.to_checkpoint(self.model.params)["arrays"]
        checksum = float(sum(float(np.sum(np.abs(v))) for v in digest.values()))
        return {"method": "seal", "extract": asdict(self.model.extract), "checksum": repr(checksum)}


def fit_seal(
    train_graphs: Sequence[PortGraph],
    val_graphs: Sequence[PortGraph],
    extract: ExtractConfig = ExtractConfig(),
    train_cfg: dgcnn.TrainConfig = dgcnn.TrainConfig(),
    log=None,
) -> tuple[SealModel, list[dgcnn.EpochRecord]]:
    vocab = train_graphs[0].vocab
    train_subs = labeled_subgraphs(train_graphs, extract)
    val_subs = labeled_subgraphs(val_graphs, replace(extract, seed=extract.seed + 1)) if val_graphs else []
    params, history = dgcnn.train(train_subs, val_subs, train_cfg, log=log)
    return SealModel(params, extract, vocab), history


def seal_inference(model: SealModel, graphs: Sequence[PortGraph]) -> int:
    """Score every edge of every graph; returns the work done (subgraph nodes + edges)."""
    work = 0
    stacked = stack_graphs(graphs)
    for x, y in stacked.edges():
        sub = extract_enclosing_subgraph(stacked, x, y, model.extract)
        dgcnn.forward(model.params, sub)
        work += sub.num_nodes + sub.num_edges
    return work


@dataclass
class FoldResult:
    fold: int
    seal: EvalReport
    baselines: dict[str, EvalReport]
    epochs: int
    train_seconds: float


def cross_validate(
    graphs: Sequence[PortGraph],
    seed: int = 0,
    extract: ExtractConfig | None = None,
    train_cfg: dgcnn.TrainConfig | None = None,
    baselines: Sequence[str] = ("pa",),
    reps: int = 10,
    folds: Sequence[int] = range(5),
    log=None,
) -> list[FoldResult]:
    """5-fold protocol: train SEAL per fold and evaluate it and the baselines on the same test fold."""
    extract = extract or ExtractConfig(seed=seed)
    train_cfg = train_cfg or dgcnn.TrainConfig(seed=seed)
    out = []
    for fold in folds:
        split = make_splits(list(graphs), SplitPlan("kfold5", fold_index=fold, seed=seed))
        start = time.perf_counter()
        model, history = fit_seal(split["train"], split["val"], extract, train_cfg, log=log)
        elapsed = time.perf_counter() - start
        seal_rep = evaluate(SealScorer(model), split["test"], reps=reps, seed=seed)
        base = {m: evaluate(HeuristicScorer(m), split["test"], reps=reps, seed=seed) for m in baselines}
        out.append(FoldResult(fold, seal_rep, base, len(history), elapsed))
    return out


def relpath(path, start) -> str:
    return os.path.relpath(path, start).replace(os.sep, "/")
