"""CART classification tree with Gini impurity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_CLASSES = 3
# impurity differences below this are treated as ties
_TIE_EPS = 1e-12


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def majority(counts: np.ndarray) -> int:
    # argmax returns the first maximum, i.e. the lowest label on ties
    return int(np.argmax(counts))


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    impurity: float  # weighted child impurity


def best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray | list[int]) -> Split | None:
    """Lowest weighted-Gini split over ``features`` (searched in ascending index order).

    Candidate thresholds are midpoints between consecutive distinct values;
    samples with ``x <= threshold`` go left. Ties keep the lowest feature and
    then the smallest threshold.
    """
    n = y.size
    onehot = np.eye(N_CLASSES)[y]
    total = onehot.sum(axis=0)
    best: Split | None = None
    for f in sorted(int(f) for f in features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = np.nonzero(xs[:-1] < xs[1:])[0]
        if valid.size == 0:
            continue
        left = np.cumsum(onehot[order], axis=0)[valid]
        right = total - left
        n_left = (valid + 1).astype(float)
        n_right = n - n_left
        g_left = 1.0 - np.sum(left * left, axis=1) / (n_left * n_left)
        g_right = 1.0 - np.sum(right * right, axis=1) / (n_right * n_right)
        weighted = (n_left * g_left + n_right * g_right) / n
        i = int(np.argmin(weighted))
        if best is None or weighted[i] < best.impurity - _TIE_EPS:
            lo, hi = xs[valid[i]], xs[valid[i] + 1]
            threshold = 0.5 * (lo + hi)
            if not lo <= threshold < hi:
                # midpoint rounded onto the upper value
                threshold = lo
            best = Split(f, float(threshold), float(weighted[i]))
    return best


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # leaf class
    counts: np.ndarray  # per-node class counts

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] >= 0
        return self.value[node]


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    min_samples_split: int = 2,
    max_depth: int | None = None,
    features_per_split: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeModel:
    """Grow a CART tree depth-first.

    With ``features_per_split`` set, each node searches a random feature
    subset first and falls back to the remaining features only when the
    subset admits no split.
    """
    n_features = X.shape[1]
    if features_per_split is not None and features_per_split < n_features and rng is None:
        raise ValueError("feature subsampling needs a random generator")

    feature, threshold, left, right, value, counts = [], [], [], [], [], []

    def new_node(c: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(majority(c))
        counts.append(c)
        return len(feature) - 1

    root_idx = np.arange(y.size)
    stack = [(new_node(np.bincount(y, minlength=N_CLASSES)), root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        c = counts[node]
        if (
            idx.size < min_samples_split
            or np.count_nonzero(c) <= 1
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        Xn, yn = X[idx], y[idx]
        if features_per_split is None or features_per_split >= n_features:
            split = best_split(Xn, yn, range(n_features))
        else:
            chosen = rng.choice(n_features, size=features_per_split, replace=False)
            split = best_split(Xn, yn, chosen)
            if split is None:
                rest = np.setdiff1d(np.arange(n_features), chosen)
                split = best_split(Xn, yn, rest)
        if split is None:
            continue
        mask = Xn[:, split.feature] <= split.threshold
        li, ri = idx[mask], idx[~mask]
        feature[node] = split.feature
        threshold[node] = split.threshold
        left[node] = new_node(np.bincount(y[li], minlength=N_CLASSES))
        right[node] = new_node(np.bincount(y[ri], minlength=N_CLASSES))
        # push right first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return TreeModel(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64).reshape(-1, N_CLASSES),
    )
