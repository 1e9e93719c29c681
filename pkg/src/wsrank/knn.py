"""Leave-one-out k-nearest-neighbour classification from a distance matrix."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .distances import MetricChoice, pairwise_matrix
from .learning import LabeledDataset, MetricParams
from .stable_rank import interleaving_fast


def knn_predictions(D: np.ndarray, labels: Sequence[str], ids: Sequence[str], k: int) -> list[str]:
    """Predict each sample from its ``k`` nearest other samples.

    Distance ties are broken by sample id and vote ties go to ``"A"``.
    """
    n = len(labels)
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    preds = []
    for i in range(n):
        others = sorted((j for j in range(n) if j != i), key=lambda j: (D[i, j], ids[j]))
        votes_a = sum(1 for j in others[:k] if labels[j] == "A")
        preds.append("A" if 2 * votes_a >= k else "B")
    return preds


def knn_loocv_from_matrix(D: np.ndarray, labels: Sequence[str], ids: Sequence[str], k: int = 1) -> float:
    preds = knn_predictions(D, labels, ids, k)
    return sum(p != lab for p, lab in zip(preds, labels)) / len(labels)


def metric_matrix(data: LabeledDataset, metric: MetricChoice | MetricParams, jobs: int = 1) -> np.ndarray:
    """Interleaving distances between stable ranks for every pair of samples."""
    m = metric.metric() if isinstance(metric, MetricParams) else metric
    return pairwise_matrix(list(data.barcodes), lambda X, Y: interleaving_fast(X, Y, m), jobs=jobs)


def knn_loocv(data: LabeledDataset, metric: MetricChoice | MetricParams, k: int = 1, jobs: int = 1) -> float:
    """Leave-one-out error rate of k-NN under the interleaving distance."""
    return knn_loocv_from_matrix(metric_matrix(data, metric, jobs), data.labels, data.ids, k)
