from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.stats import rankdata


class DegenerateLabelsError(ValueError):
    code = "degenerate-labels"


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg), ties counted as one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("degenerate-labels: both classes are required")
    ranks = rankdata(s)  # average ranks implement the tie correction
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(predicted: Sequence[int], labels: Sequence[int]) -> float:
    p = np.asarray(predicted).astype(bool)
    y = np.asarray(labels).astype(bool)
    return float(np.mean(p == y)) if len(y) else float("nan")
