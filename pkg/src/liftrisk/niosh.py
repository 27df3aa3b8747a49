"""Revised NIOSH lifting equation: multipliers, RWL, lifting index, risk class.

All lengths follow the selected :class:`UnitSystem` (inches/lb or cm/kg).
Frequency and coupling multipliers are table lookups read from the CSV files
shipped in ``liftrisk/data``.
"""

from __future__ import annotations

import csv
import enum
import math
from decimal import ROUND_HALF_UP, Decimal
from dataclasses import dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import DataError, InvalidTaskError, UndefinedLiftingIndexError, ValidationError

FM_TABLE_FILE = "fm_table.v1.csv"
CM_TABLE_FILE = "cm_table.v1.csv"


class UnitSystem(enum.Enum):
    METRIC = "metric"
    US = "us"

    @property
    def load_constant(self) -> float:
        return 23.0 if self is UnitSystem.METRIC else 51.0

    # geometry constants: (H reference, V anchor, VM slope, D numerator,
    # max H, max V, max D); V anchor doubles as the FM/CM table split point
    @property
    def _geometry(self) -> tuple[float, float, float, float, float, float, float]:
        if self is UnitSystem.METRIC:
            return 25.0, 75.0, 0.003, 4.5, 63.0, 175.0, 175.0
        return 10.0, 30.0, 0.0075, 1.8, 25.0, 70.0, 70.0

    @classmethod
    def parse(cls, text: str) -> "UnitSystem":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValidationError(f"unknown unit system {text!r} (expected 'us' or 'metric')") from None


class Coupling(enum.Enum):
    GOOD = "Good"
    FAIR = "Fair"
    POOR = "Poor"

    @classmethod
    def parse(cls, text: str) -> "Coupling":
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        raise InvalidTaskError(f"unknown coupling {text!r}")


class Duration(enum.Enum):
    UP_TO_1H = "UpTo1h"
    UP_TO_2H = "UpTo2h"
    UP_TO_8H = "UpTo8h"

    @classmethod
    def parse(cls, text: str) -> "Duration":
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        raise InvalidTaskError(f"unknown duration class {text!r}")


class Location(enum.Enum):
    ORIGIN = "origin"
    DESTINATION = "destination"


class RiskLabel(enum.IntEnum):
    """Risk class; integer values give the order Nominal < Increased < High."""

    NOMINAL = 0
    INCREASED = 1
    HIGH = 2

    @property
    def short(self) -> str:
        return ("NR", "IR", "HR")[self.value]

    @property
    def title(self) -> str:
        return ("Nominal", "Increased", "High")[self.value]

    @classmethod
    def parse(cls, text: str) -> "RiskLabel":
        key = text.strip().lower()
        for member in cls:
            if key in (member.title.lower(), member.short.lower(), member.name.lower()):
                return member
        raise DataError(f"unknown risk label {text!r}")


@dataclass(frozen=True)
class LiftingTask:
    weight: float
    h: float
    v: float
    d: float
    a: float = 0.0
    coupling: Coupling = Coupling.GOOD
    frequency: float = 1.0
    duration: Duration = Duration.UP_TO_1H

    def __post_init__(self):
        for name in ("weight", "h", "v", "d", "a", "frequency"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidTaskError(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise InvalidTaskError(f"{name} must be non-negative, got {value!r}")
        if self.h <= 0:
            raise InvalidTaskError("h must be positive")
        if self.frequency <= 0:
            raise InvalidTaskError("frequency must be positive")
        if not isinstance(self.coupling, Coupling):
            raise InvalidTaskError(f"coupling must be a Coupling, got {self.coupling!r}")
        if not isinstance(self.duration, Duration):
            raise InvalidTaskError(f"duration must be a Duration, got {self.duration!r}")


@dataclass(frozen=True)
class MultiplierSet:
    hm: float
    vm: float
    dm: float
    am: float
    fm: float
    cm: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{f.name}={value!r} outside [0, 1]")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.hm, self.vm, self.dm, self.am, self.fm, self.cm)

    def product(self) -> float:
        return math.prod(self.as_tuple())


@dataclass(frozen=True)
class RwlResult:
    rwl: float
    multipliers: MultiplierSet
    location: Location = Location.ORIGIN


@dataclass(frozen=True)
class RiskThresholds:
    """LI cut points: Nominal if LI <= t_nominal, High if LI >= t_high.

    ``decimals`` is the precision the LI is compared at. NIOSH tables report
    LI to one decimal, and the session labels of the lifting experiments
    (e.g. 15 lb at LI 1.21 tabulated as 1.2, Nominal) only hold at that
    precision. ``None`` compares the raw value.
    """

    t_nominal: float = 1.2
    t_high: float = 2.8
    decimals: int | None = 1

    def __post_init__(self):
        if not (0 < self.t_nominal < self.t_high):
            raise ValidationError(
                f"thresholds must satisfy 0 < t_nominal < t_high, got {self.t_nominal}, {self.t_high}"
            )
        if self.decimals is not None and self.decimals < 0:
            raise ValidationError("decimals must be >= 0")

    @classmethod
    def niosh_guidance(cls) -> "RiskThresholds":
        """The 1.0 / 3.0 cut points of the NIOSH guidance text."""
        return cls(1.0, 3.0)

    @classmethod
    def parse(cls, text: str) -> "RiskThresholds":
        try:
            lo, hi = (float(part) for part in text.split(","))
        except ValueError:
            raise ValidationError(f"thresholds must look like 't_nom,t_high', got {text!r}") from None
        return cls(lo, hi)


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@lru_cache(maxsize=None)
def _read_table(name: str) -> tuple[tuple[str, ...], tuple[tuple[str, ...], ...]]:
    text = resources.files("liftrisk").joinpath("data").joinpath(name).read_text(encoding="utf-8")
    rows = list(csv.reader(text.splitlines()))
    return tuple(rows[0]), tuple(tuple(r) for r in rows[1:] if r)


@lru_cache(maxsize=None)
def _fm_table() -> tuple[tuple[float, ...], dict[str, tuple[float, ...]]]:
    header, rows = _read_table(FM_TABLE_FILE)
    freqs = tuple(float(r[0]) for r in rows)
    columns = {col: tuple(float(r[i]) for r in rows) for i, col in enumerate(header) if i > 0}
    return freqs, columns


def lookup_frequency_multiplier(
    frequency: float,
    duration: Duration,
    v: float,
    unit: UnitSystem = UnitSystem.US,
) -> float:
    """FM from the frequency table, using the nearest tabulated rate at or above ``frequency``.

    Rates below the first row use that row; rates above the last row give 0.
    """
    if not frequency > 0:
        raise InvalidTaskError(f"frequency must be positive, got {frequency!r}")
    freqs, columns = _fm_table()
    anchor = unit._geometry[1]
    column = columns[f"{duration.value}_{'v_lt_30' if v < anchor else 'v_ge_30'}"]
    for row_freq, value in zip(freqs, column):
        if frequency <= row_freq:
            return value
    return 0.0


def lookup_coupling_multiplier(coupling: Coupling, v: float, unit: UnitSystem = UnitSystem.US) -> float:
    _, rows = _read_table(CM_TABLE_FILE)
    anchor = unit._geometry[1]
    for row in rows:
        if row[0] == coupling.value:
            return float(row[1] if v < anchor else row[2])
    raise DataError(f"coupling {coupling.value!r} missing from {CM_TABLE_FILE}")


def compute_multipliers(task: LiftingTask, unit: UnitSystem = UnitSystem.US) -> MultiplierSet:
    h_ref, v_anchor, v_slope, d_num, h_max, v_max, d_max = unit._geometry

    hm = 0.0 if task.h > h_max else _clamp01(h_ref / task.h)
    vm = 0.0 if task.v > v_max else _clamp01(1.0 - v_slope * abs(task.v - v_anchor))
    if task.d > d_max:
        dm = 0.0
    elif task.d <= h_ref:
        # 0.82 + c/D >= 1 whenever D <= the H reference distance
        dm = 1.0
    else:
        dm = _clamp01(0.82 + d_num / task.d)
    am = 0.0 if task.a > 135.0 else _clamp01(1.0 - 0.0032 * task.a)
    fm = lookup_frequency_multiplier(task.frequency, task.duration, task.v, unit)
    cm = lookup_coupling_multiplier(task.coupling, task.v, unit)
    return MultiplierSet(hm=hm, vm=vm, dm=dm, am=am, fm=fm, cm=cm)


def recommended_weight_limit(m: MultiplierSet, unit: UnitSystem = UnitSystem.US) -> float:
    return unit.load_constant * m.product()


def rwl_for_task(
    task: LiftingTask,
    unit: UnitSystem = UnitSystem.US,
    location: Location = Location.ORIGIN,
) -> RwlResult:
    m = compute_multipliers(task, unit)
    return RwlResult(rwl=recommended_weight_limit(m, unit), multipliers=m, location=location)


def lifting_index(weight: float, rwl: float) -> float:
    if rwl == 0:
        raise UndefinedLiftingIndexError("RWL is zero; the task is outside the equation's valid range")
    if rwl < 0 or weight < 0:
        raise ValidationError("weight and rwl must be non-negative")
    return weight / rwl


def round_half_up(x: float, decimals: int) -> float:
    """Decimal half-up rounding of the shortest repr, so 0.985 -> 0.99 as in printed tables."""
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def classify_risk(li: float, thresholds: RiskThresholds = RiskThresholds()) -> RiskLabel:
    if not li >= 0:
        raise ValidationError(f"lifting index must be >= 0, got {li!r}")
    if thresholds.decimals is not None:
        li = round_half_up(li, thresholds.decimals)
    if li <= thresholds.t_nominal:
        return RiskLabel.NOMINAL
    if li >= thresholds.t_high:
        return RiskLabel.HIGH
    return RiskLabel.INCREASED


@dataclass(frozen=True)
class TaskAssessment:
    rwl: RwlResult
    li: float
    risk: RiskLabel


def assess(
    task: LiftingTask,
    unit: UnitSystem = UnitSystem.US,
    thresholds: RiskThresholds = RiskThresholds(),
) -> TaskAssessment:
    """Origin RWL, LI and risk class for one task."""
    result = rwl_for_task(task, unit)
    li = lifting_index(task.weight, result.rwl)
    return TaskAssessment(rwl=result, li=li, risk=classify_risk(li, thresholds))


# -- manifest CSV -------------------------------------------------------------

MANIFEST_COLUMNS = (
    "session_id",
    "load_lb",
    "h_in",
    "v_in",
    "d_in",
    "a_deg",
    "coupling",
    "freq_per_min",
    "duration_class",
)


def task_from_row(row: dict[str, str]) -> LiftingTask:
    missing = [c for c in MANIFEST_COLUMNS[1:] if c not in row]
    if missing:
        raise DataError(f"manifest row missing columns: {', '.join(missing)}")
    try:
        return LiftingTask(
            weight=float(row["load_lb"]),
            h=float(row["h_in"]),
            v=float(row["v_in"]),
            d=float(row["d_in"]),
            a=float(row["a_deg"]),
            coupling=Coupling.parse(row["coupling"]),
            frequency=float(row["freq_per_min"]),
            duration=Duration.parse(row["duration_class"]),
        )
    except ValueError as exc:
        if isinstance(exc, InvalidTaskError):
            raise
        raise DataError(f"bad manifest row {row.get('session_id', '?')!r}: {exc}") from None


def task_to_row(session_id: str, task: LiftingTask) -> dict[str, str]:
    return {
        "session_id": session_id,
        "load_lb": repr(task.weight),
        "h_in": repr(task.h),
        "v_in": repr(task.v),
        "d_in": repr(task.d),
        "a_deg": repr(task.a),
        "coupling": task.coupling.value,
        "freq_per_min": repr(task.frequency),
        "duration_class": task.duration.value,
    }


def read_manifest(path: str | Path) -> list[tuple[str, LiftingTask]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "session_id" not in reader.fieldnames:
                raise DataError(f"{path}: manifest needs a header with columns {', '.join(MANIFEST_COLUMNS)}")
            return [(row["session_id"], task_from_row(row)) for row in reader]
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc


def write_manifest(path: str | Path, sessions: list[tuple[str, LiftingTask]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for session_id, task in sessions:
            writer.writerow(task_to_row(session_id, task))
