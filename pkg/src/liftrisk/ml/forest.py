"""Bagged CART forest with per-split feature subsampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import N_CLASSES, TreeModel, grow_tree


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[TreeModel, ...]

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        votes = np.zeros((X.shape[0], N_CLASSES), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            np.add.at(votes, (rows, tree.predict(X)), 1)
        return votes

    def predict(self, X: np.ndarray) -> np.ndarray:
        # ties go to the lowest label
        return np.argmax(self.votes(X), axis=1)


def grow_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int,
    features_per_split: int,
    bootstrap: bool,
    seed: int,
    min_samples_split: int = 2,
    max_depth: int | None = None,
) -> ForestModel:
    """Tree ``t`` draws its bootstrap sample and feature subsets from the stream ``(seed, t)``."""
    n = y.size
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(
            grow_tree(
                X[idx],
                y[idx],
                min_samples_split=min_samples_split,
                max_depth=max_depth,
                features_per_split=features_per_split,
                rng=rng,
            )
        )
    return ForestModel(tuple(trees))
