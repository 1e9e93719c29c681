import numpy as np
import pytest

from wsrank.barcode import Barcode
from wsrank.distances import MetricChoice
from wsrank.knn import knn_loocv, knn_loocv_from_matrix, knn_predictions, metric_matrix
from wsrank.learning import BarcodeBatch, LabeledDataset, MetricParams


def block_matrix(labels, intra=0.0, inter=1.0):
    lab = np.array(labels)
    D = np.where(lab[:, None] == lab[None, :], intra, inter).astype(float)
    np.fill_diagonal(D, 0)
    return D


def test_separated_classes():
    labels = list("AAABBB")
    ids = [f"s{i}" for i in range(6)]
    for k in (1, 2, 3):
        assert knn_loocv_from_matrix(block_matrix(labels), labels, ids, k) == 0.0


def test_all_equal_distances_follow_id_order():
    # every neighbour ties, so the lowest id other than oneself decides
    labels = ["B", "A", "A", "B"]
    ids = ["a", "b", "c", "d"]
    D = block_matrix(labels, intra=1.0, inter=1.0)
    assert knn_predictions(D, labels, ids, 1) == ["A", "B", "B", "B"]
    assert knn_loocv_from_matrix(D, labels, ids, 1) == 0.75


def test_vote_tie_goes_to_a():
    labels = ["A", "B", "A", "B"]
    D = np.array([[0, 1, 9, 9], [1, 0, 9, 9], [9, 9, 0, 1], [9, 9, 1, 0]], dtype=float)
    D[0, 2] = D[2, 0] = 2
    preds = knn_predictions(D, labels, list("wxyz"), 2)
    # sample 1 sees A at distance 1 and A or B at 9; sample 3 sees A (1) and B (9): tie 1-1 goes to A
    assert preds[3] == "A"


def test_k_range():
    D = block_matrix(list("AB"))
    with pytest.raises(ValueError):
        knn_predictions(D, list("AB"), list("xy"), 2)
    with pytest.raises(ValueError):
        knn_predictions(D, list("AB"), list("xy"), 0)


def test_metric_matrix_agrees_with_batch():
    rng = np.random.default_rng(0)
    bcs = tuple(Barcode((float(a), float(a + rng.uniform(0.1, 4))) for a in rng.uniform(0, 5, 4)) for _ in range(6))
    data = LabeledDataset(tuple("abcdef"), bcs, tuple("AAABBB"))
    th = MetricParams((2.0,), (1.5,), (), 2.0)
    np.testing.assert_allclose(metric_matrix(data, th), BarcodeBatch(bcs).distance_matrix(th), rtol=1e-12)
    assert knn_loocv(data, MetricChoice(1, 1), k=1) == knn_loocv(data, MetricChoice(1, 1), k=1, jobs=3)
