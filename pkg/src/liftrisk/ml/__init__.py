"""From-scratch classifiers and the evaluation protocol."""

from .evaluation import (
    EvaluationReport,
    HoldoutReport,
    confusion_matrix,
    evaluate,
    k_sweep,
    repeated_holdout,
    split_plan,
    stratified_holdout,
    stratified_kfold,
)
from .models import (
    AlgorithmSpec,
    DecisionTree,
    Knn,
    Model,
    RandomForest,
    Scaler,
    Svm,
    algorithm_key,
    parse_algorithm,
    predict,
    predict_many,
    train,
)

__all__ = [
    "AlgorithmSpec",
    "DecisionTree",
    "EvaluationReport",
    "HoldoutReport",
    "Knn",
    "Model",
    "RandomForest",
    "Scaler",
    "Svm",
    "algorithm_key",
    "confusion_matrix",
    "evaluate",
    "k_sweep",
    "parse_algorithm",
    "predict",
    "predict_many",
    "repeated_holdout",
    "split_plan",
    "stratified_holdout",
    "stratified_kfold",
    "train",
]
