"""k-nearest-neighbour voting on Euclidean distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import N_CLASSES

_CHUNK = 256


def _distances(queries: np.ndarray, train: np.ndarray) -> np.ndarray:
    d = np.zeros((queries.shape[0], train.shape[0]))
    for f in range(train.shape[1]):
        d += (queries[:, f, None] - train[None, :, f]) ** 2
    return d


def neighbor_order(queries: np.ndarray, train: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest training rows per query.

    Neighbours are ordered by (squared distance, training index), so the
    ``k`` nearest are always a prefix of the ``k + 1`` nearest.
    """
    queries = np.atleast_2d(queries)
    n_train = train.shape[0]
    if not 1 <= k <= n_train:
        raise ValueError(f"k={k} must lie in [1, {n_train}]")
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    for start in range(0, queries.shape[0], _CHUNK):
        d = _distances(queries[start : start + _CHUNK], train)
        if k == n_train:
            part = np.tile(np.arange(n_train), (d.shape[0], 1))
        else:
            part = np.argpartition(d, k - 1, axis=1)[:, :k]
        dk = np.take_along_axis(d, part, axis=1)
        kth = dk.max(axis=1)
        tied = np.count_nonzero(d <= kth[:, None], axis=1) > k
        for row in range(d.shape[0]):
            if tied[row]:
                out[start + row] = np.argsort(d[row], kind="stable")[:k]
            else:
                order = np.lexsort((part[row], dk[row]))
                out[start + row] = part[row][order]
    return out


def vote(neighbor_labels: np.ndarray) -> np.ndarray:
    """Majority label per row; ties go to the lowest label."""
    counts = np.zeros((neighbor_labels.shape[0], N_CLASSES), dtype=np.int64)
    for c in range(N_CLASSES):
        counts[:, c] = np.count_nonzero(neighbor_labels == c, axis=1)
    return np.argmax(counts, axis=1)


@dataclass(frozen=True, eq=False)
class KnnModel:
    k: int
    X: np.ndarray
    y: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return vote(self.y[neighbor_order(np.atleast_2d(X), self.X, self.k)])
