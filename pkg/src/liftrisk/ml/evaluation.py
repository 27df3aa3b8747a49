"""Accuracy, confusion matrices and the repeated stratified holdout protocol."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import EmptyDatasetError, ParameterError, StratificationError, ValidationError
from ..features import Dataset
from ..niosh import RiskLabel
from .knn import neighbor_order, vote
from .models import AlgorithmSpec, Model, Scaler, algorithm_key, predict_many, train
from .tree import N_CLASSES


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    """Rows are true classes, columns predicted, both in NR, IR, HR order."""
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
    return cm


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    accuracy: float
    confusion: np.ndarray
    n_test: int

    @classmethod
    def from_confusion(cls, confusion: np.ndarray) -> "EvaluationReport":
        total = int(confusion.sum())
        if total == 0:
            raise EmptyDatasetError("confusion matrix is empty")
        return cls(accuracy=float(np.trace(confusion)) / total, confusion=confusion, n_test=total)

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "confusion": self.confusion.tolist(), "n_test": self.n_test}


def evaluate(m: Model, test: Dataset) -> EvaluationReport:
    if len(test) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty test set")
    return EvaluationReport.from_confusion(confusion_matrix(test.y, predict_many(m, test)))


@dataclass(frozen=True, eq=False)
class HoldoutReport:
    algorithm: str
    per_rep_accuracies: tuple[float, ...]
    confusion: np.ndarray  # pooled over repetitions
    scheme: str = "holdout"
    window_seconds: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_rep_accuracies))

    @property
    def spread(self) -> float:
        return float(max(self.per_rep_accuracies) - min(self.per_rep_accuracies))

    @property
    def n_test(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "scheme": self.scheme,
            "window_seconds": self.window_seconds,
            "per_rep_accuracies": list(self.per_rep_accuracies),
            "mean_accuracy": self.mean,
            "spread": self.spread,
            "confusion": self.confusion.tolist(),
            "confusion_labels": [label.short for label in RiskLabel],
            "n_test_pooled": self.n_test,
            **self.extra,
        }


# -- splitting ----------------------------------------------------------------


def _split_counts(n: int, test_fraction: float) -> int:
    return min(n - 1, max(1, int(round(test_fraction * n))))


def _stratified_units(y: np.ndarray, groups: np.ndarray | None) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per class: the sampling units and the example indices behind each unit."""
    units_per_class, members = [], []
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        if groups is None:
            units_per_class.append(idx)
            members.append(None)
        else:
            names = sorted(set(groups[idx].tolist()))
            units_per_class.append(np.arange(len(names)))
            members.append([idx[groups[idx] == name] for name in names])
    return units_per_class, members


def stratified_holdout(
    y: np.ndarray,
    test_fraction: float,
    rng: np.random.Generator,
    groups: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Split indices so every class lands in both partitions.

    With ``groups`` (e.g. session ids), whole groups are assigned to one side.
    """
    if not 0 < test_fraction < 1:
        raise ValidationError("test_fraction must lie in (0, 1)")
    units_per_class, members = _stratified_units(y, groups)
    train_idx, test_idx = [], []
    for cls_units, cls_members in zip(units_per_class, members):
        if cls_units.size < 2:
            what = "sessions" if groups is not None else "examples"
            raise StratificationError(f"a class has fewer than 2 {what}; cannot stratify")
        perm = rng.permutation(cls_units.size)
        n_test = _split_counts(cls_units.size, test_fraction)
        chosen = (perm[:n_test], perm[n_test:])
        if cls_members is None:
            test_idx.append(cls_units[chosen[0]])
            train_idx.append(cls_units[chosen[1]])
        else:
            test_idx.extend(cls_members[i] for i in chosen[0])
            train_idx.extend(cls_members[i] for i in chosen[1])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def stratified_kfold(y: np.ndarray, folds: int, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    if folds < 2:
        raise ParameterError("k-fold needs at least 2 folds")
    fold_of = np.empty(y.size, dtype=np.int64)
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        if idx.size < folds:
            raise StratificationError(f"class {RiskLabel(int(cls)).title} has fewer examples than folds")
        fold_of[idx[rng.permutation(idx.size)]] = np.arange(idx.size) % folds
    return [(np.nonzero(fold_of != f)[0], np.nonzero(fold_of == f)[0]) for f in range(folds)]


def split_plan(
    data: Dataset,
    reps: int,
    test_fraction: float,
    seed: int,
    scheme: str = "holdout",
    group_by_session: bool = False,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Train/test index pairs; repetition ``r`` draws from the stream ``(seed, r)``."""
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    if seed < 0:
        raise ValidationError("seed must be non-negative")
    if scheme == "holdout":
        groups = data.session_ids if group_by_session else None
        return [
            stratified_holdout(data.y, test_fraction, np.random.default_rng([seed, r]), groups) for r in range(reps)
        ]
    if scheme == "kfold":
        if group_by_session:
            raise ValidationError("session grouping is only available for the holdout scheme")
        return stratified_kfold(data.y, reps, np.random.default_rng([seed, 0]))
    raise ValidationError(f"unknown validation scheme {scheme!r} (expected 'holdout' or 'kfold')")


# -- protocols ----------------------------------------------------------------


def _run_rep(args: tuple[AlgorithmSpec, Dataset, np.ndarray, np.ndarray, int]) -> np.ndarray:
    spec, data, train_idx, test_idx, model_seed = args
    model = train(spec, data.subset(train_idx), seed=model_seed)
    return evaluate(model, data.subset(test_idx)).confusion


def repeated_holdout(
    spec: AlgorithmSpec,
    data: Dataset,
    reps: int = 10,
    test_fraction: float = 0.25,
    seed: int = 7,
    scheme: str = "holdout",
    group_by_session: bool = False,
    n_jobs: int = 1,
) -> HoldoutReport:
    """Train and test on ``reps`` seeded stratified splits.

    Models for repetition ``r`` are trained with seed ``seed + r``. Results do
    not depend on ``n_jobs``.
    """
    plan = split_plan(data, reps, test_fraction, seed, scheme, group_by_session)
    jobs = [(spec, data, tr, te, seed + r) for r, (tr, te) in enumerate(plan)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            confusions = list(pool.map(_run_rep, jobs))
    else:
        confusions = [_run_rep(job) for job in jobs]
    accuracies = tuple(float(np.trace(cm)) / float(cm.sum()) for cm in confusions)
    return HoldoutReport(
        algorithm=algorithm_key(spec),
        per_rep_accuracies=accuracies,
        confusion=np.sum(confusions, axis=0),
        scheme=scheme,
        window_seconds=data.window_seconds,
    )


def k_sweep(
    data: Dataset,
    k_max: int = 27,
    reps: int = 10,
    test_fraction: float = 0.25,
    seed: int = 7,
    scheme: str = "holdout",
    group_by_session: bool = False,
) -> list[tuple[int, float]]:
    """Mean holdout accuracy of KNN for k = 1..k_max on shared splits.

    Each split's neighbour ordering is computed once and reused for every k;
    the result equals calling :func:`repeated_holdout` with ``Knn(k)``.
    """
    if k_max < 1:
        raise ParameterError("k_max must be >= 1")
    plan = split_plan(data, reps, test_fraction, seed, scheme, group_by_session)
    smallest = min(tr.size for tr, _ in plan)
    if k_max > smallest:
        raise ParameterError(f"k_max={k_max} exceeds the smallest training partition ({smallest})")
    acc = np.zeros((len(plan), k_max))
    for r, (tr, te) in enumerate(plan):
        scaler = Scaler.fit(data.X[tr])
        order = neighbor_order(scaler.transform(data.X[te]), scaler.transform(data.X[tr]), k_max)
        labels = data.y[tr][order]
        for k in range(1, k_max + 1):
            acc[r, k - 1] = np.mean(vote(labels[:, :k]) == data.y[te])
    return [(k, float(acc[:, k - 1].mean())) for k in range(1, k_max + 1)]


def holdout_table(reports: Sequence[HoldoutReport]) -> dict[str, float]:
    return {r.algorithm: r.mean for r in reports}
