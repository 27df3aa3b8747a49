"""Algorithm specifications, training and prediction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import EmptyDatasetError, ParameterError, ValidationError
from ..features import Dataset, FeatureVector
from ..niosh import RiskLabel
from .forest import ForestModel, grow_forest
from .knn import KnnModel
from .svm import SvmModel, fit_ovr
from .tree import TreeModel, grow_tree

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class DecisionTree:
    min_samples_split: int = 2
    max_depth: int | None = None
    name = "DecisionTree"

    def __post_init__(self):
        if self.min_samples_split < 1:
            raise ParameterError("min_samples_split must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ParameterError("max_depth must be >= 1")


@dataclass(frozen=True)
class RandomForest:
    n_trees: int = 100
    features_per_split: int = 3
    bootstrap: bool = True
    min_samples_split: int = 2
    max_depth: int | None = None
    name = "RandomForest"

    def __post_init__(self):
        if self.n_trees < 1 or self.features_per_split < 1 or self.min_samples_split < 1:
            raise ParameterError("forest counts must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ParameterError("max_depth must be >= 1")


@dataclass(frozen=True)
class Knn:
    k: int = 1
    name = "KNN"

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("k must be >= 1")


@dataclass(frozen=True)
class Svm:
    """``gamma=None`` picks ``1 / (n_features * variance of the standardized training matrix)``."""

    c: float = 1.0
    gamma: float | None = None
    tolerance: float = 1e-3
    max_passes: int = 100  # iteration budget is max_passes * n_train
    name = "SVM"

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError("c must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ParameterError("gamma must be positive")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")
        if self.max_passes < 1:
            raise ParameterError("max_passes must be >= 1")


AlgorithmSpec = Union[DecisionTree, RandomForest, Knn, Svm]

ALGORITHM_KEYS = {"dt": DecisionTree, "rf": RandomForest, "knn": Knn, "svm": Svm}


def parse_algorithm(text: str) -> AlgorithmSpec:
    """``dt``, ``rf``, ``svm``, ``knn`` or ``knn:5`` style names."""
    key, _, arg = text.strip().lower().partition(":")
    aliases = {"decisiontree": "dt", "tree": "dt", "randomforest": "rf", "forest": "rf"}
    key = aliases.get(key, key)
    if key not in ALGORITHM_KEYS:
        raise ValidationError(f"unknown algorithm {text!r} (expected one of dt, svm, knn[:k], rf)")
    if key == "knn" and arg:
        try:
            return Knn(k=int(arg))
        except ValueError:
            raise ValidationError(f"bad k in {text!r}") from None
    if arg:
        raise ValidationError(f"algorithm {key!r} takes no argument")
    return ALGORITHM_KEYS[key]()


def algorithm_key(spec: AlgorithmSpec) -> str:
    if isinstance(spec, Knn):
        return "knn" if spec.k == 1 else f"knn{spec.k}"
    for key, cls in ALGORITHM_KEYS.items():
        if isinstance(spec, cls):
            return key
    raise ValidationError(f"not an algorithm spec: {spec!r}")


@dataclass(frozen=True, eq=False)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        constant = np.ptp(X, axis=0) == 0
        # centre constant dimensions on their exact value; mean() can be an ulp off
        mean = np.where(constant, X[0], X.mean(axis=0))
        std = X.std(axis=0)
        # constant dimensions are centred but not rescaled
        return cls(mean=mean, scale=np.where(constant | (std < STD_FLOOR), 1.0, std))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(X) - self.mean) / self.scale


@dataclass(frozen=True, eq=False)
class Model:
    algorithm: AlgorithmSpec
    fitted: TreeModel | ForestModel | KnnModel | SvmModel
    scaler: Scaler | None = None

    def predict_array(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 7:
            raise ValidationError(f"expected 7 features, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("features must be finite")
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return np.asarray(self.fitted.predict(X), dtype=np.int64)


def default_gamma(X_scaled: np.ndarray) -> float:
    var = float(X_scaled.var())
    return 1.0 / (X_scaled.shape[1] * var) if var > 0 else 1.0


def train(spec: AlgorithmSpec, data: Dataset, seed: int = 7) -> Model:
    if len(data) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    X, y = data.X, data.y
    if isinstance(spec, DecisionTree):
        tree = grow_tree(X, y, min_samples_split=spec.min_samples_split, max_depth=spec.max_depth)
        return Model(spec, tree)
    if isinstance(spec, RandomForest):
        forest = grow_forest(
            X,
            y,
            n_trees=spec.n_trees,
            features_per_split=min(spec.features_per_split, X.shape[1]),
            bootstrap=spec.bootstrap,
            seed=seed,
            min_samples_split=spec.min_samples_split,
            max_depth=spec.max_depth,
        )
        return Model(spec, forest)
    if isinstance(spec, Knn):
        if spec.k > len(data):
            raise ParameterError(f"k={spec.k} exceeds the training size {len(data)}")
        scaler = Scaler.fit(X)
        return Model(spec, KnnModel(spec.k, scaler.transform(X), y.copy()), scaler)
    if isinstance(spec, Svm):
        scaler = Scaler.fit(X)
        Xs = scaler.transform(X)
        gamma = spec.gamma if spec.gamma is not None else default_gamma(Xs)
        svm = fit_ovr(Xs, y, spec.c, gamma, spec.tolerance, spec.max_passes * len(data))
        return Model(spec, svm, scaler)
    raise ValidationError(f"not an algorithm spec: {spec!r}")


def predict(m: Model, x: FeatureVector | np.ndarray) -> RiskLabel:
    row = x.as_array() if isinstance(x, FeatureVector) else np.asarray(x, dtype=float)
    if row.shape != (7,):
        raise ValidationError(f"expected a 7-dimensional feature vector, got shape {row.shape}")
    return RiskLabel(int(m.predict_array(row[None, :])[0]))


def predict_many(m: Model, X: np.ndarray | Dataset) -> np.ndarray:
    return m.predict_array(X.X if isinstance(X, Dataset) else X)
