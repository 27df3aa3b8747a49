"""NIOSH lifting risk classification from surface EMG."""

from .niosh import (
    Coupling,
    Duration,
    LiftingTask,
    RiskLabel,
    RiskThresholds,
    UnitSystem,
    classify_risk,
    compute_multipliers,
    lifting_index,
    recommended_weight_limit,
    round_half_up,
)

__version__ = "0.1.0"

__all__ = [
    "Coupling",
    "Duration",
    "LiftingTask",
    "RiskLabel",
    "RiskThresholds",
    "UnitSystem",
    "classify_risk",
    "compute_multipliers",
    "lifting_index",
    "recommended_weight_limit",
    "round_half_up",
]
