"""Seven-feature window descriptors and labelled datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, EmptyDatasetError, ValidationError
from .niosh import RiskLabel, RiskThresholds, UnitSystem, assess
from .signal import EmgRecording, Window, magnitude_spectra, rectify, window_matrix

FEATURE_NAMES = ("weight", "h", "fft_max", "fft_min", "fft_mean", "fft_median", "fft_std")
DATASET_COLUMNS = FEATURE_NAMES + ("label", "session_id", "window_index")


@dataclass(frozen=True)
class FeatureVector:
    weight: float
    h: float
    fft_max: float
    fft_min: float
    fft_mean: float
    fft_median: float
    fft_std: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: RiskLabel
    session_id: str
    window_index: int = 0


def spectral_statistics(rows: np.ndarray) -> np.ndarray:
    """max/min/mean/median/population-std of each row's non-DC magnitude spectrum."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    mags = magnitude_spectra(rows)[:, 1:]
    if mags.shape[1] == 0:
        raise ValidationError("window is too short to have a non-DC spectral bin")
    return np.column_stack(
        [
            mags.max(axis=1),
            mags.min(axis=1),
            mags.mean(axis=1),
            np.median(mags, axis=1),
            mags.std(axis=1),
        ]
    )


def extract_window_features(w: Window | np.ndarray, sample_rate: float, weight: float, h: float) -> FeatureVector:
    values = w.values if isinstance(w, Window) else np.asarray(w, dtype=float)
    if values.size == 0:
        raise ValidationError("cannot extract features from an empty window")
    stats = spectral_statistics(values)[0]
    return FeatureVector(weight, h, *(float(s) for s in stats))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled windows stored column-wise.

    ``X`` is ``(n, 7)`` in :data:`FEATURE_NAMES` order; ``y`` holds integer
    :class:`RiskLabel` values.
    """

    X: np.ndarray
    y: np.ndarray
    session_ids: np.ndarray
    window_index: np.ndarray
    window_seconds: float | None = None
    provenance: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != len(FEATURE_NAMES):
            raise ValidationError(f"feature matrix must be (n, {len(FEATURE_NAMES)}), got {X.shape}")
        if X.shape[0] == 0:
            raise EmptyDatasetError("dataset has no examples")
        if y.shape != (X.shape[0],):
            raise ValidationError("label vector length does not match the feature matrix")
        if not np.all(np.isfinite(X)):
            raise ValidationError("features must be finite")
        if np.any((y < 0) | (y > 2)):
            raise ValidationError("labels must be Nominal, Increased or High")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "session_ids", np.asarray(self.session_ids, dtype=object))
        object.__setattr__(self, "window_index", np.asarray(self.window_index, dtype=np.int64))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def examples(self) -> list[LabeledExample]:
        return list(self)

    def __iter__(self) -> Iterator[LabeledExample]:
        for row, label, sid, wi in zip(self.X, self.y, self.session_ids, self.window_index):
            yield LabeledExample(FeatureVector(*(float(v) for v in row)), RiskLabel(int(label)), str(sid), int(wi))

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            X=self.X[idx],
            y=self.y[idx],
            session_ids=self.session_ids[idx],
            window_index=self.window_index[idx],
            window_seconds=self.window_seconds,
            provenance=self.provenance,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=3)

    @classmethod
    def from_examples(
        cls, examples: Sequence[LabeledExample], window_seconds: float | None = None, provenance: str = ""
    ) -> "Dataset":
        if not examples:
            raise EmptyDatasetError("dataset has no examples")
        return cls(
            X=np.array([e.features.as_array() for e in examples]),
            y=np.array([int(e.label) for e in examples]),
            session_ids=np.array([e.session_id for e in examples], dtype=object),
            window_index=np.array([e.window_index for e in examples]),
            window_seconds=window_seconds,
            provenance=provenance,
        )


def recording_features(r: EmgRecording, window_seconds: float) -> np.ndarray:
    """Feature rows for every full window of a recording (rectified first)."""
    task = r.meta.task
    if task is None:
        raise DataError(f"recording {r.meta.session_id!r} has no lifting task")
    rows = window_matrix(rectify(r), window_seconds)
    if rows.shape[0] == 0:
        return np.empty((0, len(FEATURE_NAMES)))
    stats = spectral_statistics(rows)
    const = np.tile([task.weight, task.h], (rows.shape[0], 1))
    return np.hstack([const, stats])


def build_dataset(
    recordings: Sequence[EmgRecording],
    window_seconds: float,
    thresholds: RiskThresholds = RiskThresholds(),
    unit: UnitSystem = UnitSystem.US,
    provenance: str = "",
) -> Dataset:
    """Window, featurise and label every recording, in input order."""
    blocks, labels, sids, widx = [], [], [], []
    for r in recordings:
        if r.meta.task is None:
            raise DataError(f"recording {r.meta.session_id!r} has no lifting task")
        label = assess(r.meta.task, unit, thresholds).risk
        feats = recording_features(r, window_seconds)
        n = feats.shape[0]
        if n == 0:
            continue
        blocks.append(feats)
        labels.append(np.full(n, int(label)))
        sids.extend([r.meta.session_id] * n)
        widx.append(np.arange(n))
    if not blocks:
        raise EmptyDatasetError(f"no recording yields a full {window_seconds} s window")
    return Dataset(
        X=np.vstack(blocks),
        y=np.concatenate(labels),
        session_ids=np.array(sids, dtype=object),
        window_index=np.concatenate(widx),
        window_seconds=window_seconds,
        provenance=provenance,
    )


def write_dataset(path: str | Path, data: Dataset) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_COLUMNS)
        for row, label, sid, wi in zip(data.X, data.y, data.session_ids, data.window_index):
            writer.writerow([repr(float(v)) for v in row] + [RiskLabel(int(label)).title, sid, int(wi)])


def read_dataset(path: str | Path, window_seconds: float | None = None) -> Dataset:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in DATASET_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise DataError(f"{path}: dataset CSV missing columns {', '.join(missing)}")
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    if not rows:
        raise EmptyDatasetError(f"{path}: no examples")
    try:
        X = np.array([[float(r[c]) for c in FEATURE_NAMES] for r in rows])
        window_index = np.array([int(r["window_index"]) for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: malformed value ({exc})") from None
    return Dataset(
        X=X,
        y=np.array([int(RiskLabel.parse(r["label"])) for r in rows]),
        session_ids=np.array([r["session_id"] for r in rows], dtype=object),
        window_index=window_index,
        window_seconds=window_seconds,
        provenance=str(path),
    )
