"""sEMG recordings: CSV ingestion, rectification, windowing and spectra."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, EmptyRecordingError, SamplingError, ValidationError
from .fft import next_pow2, rfft_padded
from .niosh import LiftingTask

RECORDING_COLUMNS = ("time_s", "emg_uV")
SAMPLING_TOLERANCE = 0.01


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RecordingMeta:
    session_id: str
    site: str = "TH"
    task: LiftingTask | None = None


@dataclass(frozen=True, eq=False)
class EmgRecording:
    sample_rate: float
    samples: np.ndarray
    meta: RecordingMeta = field(default_factory=lambda: RecordingMeta(session_id=""))

    def __post_init__(self):
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate!r}")
        samples = _frozen(self.samples)
        if samples.ndim != 1:
            raise ValidationError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True, eq=False)
class Window:
    start_index: int
    values: np.ndarray

    @property
    def length(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class Spectrum:
    bin_width: float
    magnitudes: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.magnitudes.size) * self.bin_width


def load_recording(
    path: str | Path,
    manifest_row: LiftingTask | None = None,
    session_id: str | None = None,
    site: str = "TH",
) -> EmgRecording:
    """Read a ``time_s,emg_uV`` CSV; the sample rate comes from the median time step."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise EmptyRecordingError(f"{path}: empty file")
            header = [h.strip() for h in header]
            try:
                ti, ei = header.index("time_s"), header.index("emg_uV")
            except ValueError:
                raise DataError(f"{path}: expected columns {RECORDING_COLUMNS}, got {header}") from None
            rows = [r for r in reader if r]
    except OSError as exc:
        raise DataError(f"cannot read recording {path}: {exc}") from exc

    if not rows:
        raise EmptyRecordingError(f"{path}: no samples")
    try:
        t = np.array([float(r[ti]) for r in rows])
        x = np.array([float(r[ei]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed row ({exc})") from None

    if t.size < 2:
        raise SamplingError(f"{path}: need at least two samples to infer the sample rate")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise SamplingError(f"{path}: time_s is not strictly increasing")
    step = float(np.median(steps))
    if np.max(np.abs(steps - step)) > SAMPLING_TOLERANCE * step:
        raise SamplingError(f"{path}: non-uniform sampling (steps deviate more than 1% from median {step:g} s)")

    meta = RecordingMeta(session_id=session_id if session_id is not None else path.stem, site=site, task=manifest_row)
    return EmgRecording(sample_rate=1.0 / step, samples=x, meta=meta)


def write_recording(path: str | Path, recording: EmgRecording) -> None:
    t = np.arange(recording.samples.size) / recording.sample_rate
    # %.17g round-trips float64 exactly
    np.savetxt(path, np.column_stack([t, recording.samples]), fmt=("%.9g", "%.17g"), delimiter=",",
               header="time_s,emg_uV", comments="", encoding="utf-8")


def rectify(r: EmgRecording) -> EmgRecording:
    return replace(r, samples=np.abs(r.samples))


def window_samples(window_seconds: float, sample_rate: float) -> int:
    if not window_seconds > 0:
        raise ValidationError(f"window_seconds must be positive, got {window_seconds!r}")
    n = int(round(window_seconds * sample_rate))
    if n < 1:
        raise ValidationError(f"{window_seconds} s at {sample_rate} Hz is shorter than one sample")
    return n


def window_matrix(r: EmgRecording, window_seconds: float) -> np.ndarray:
    """Non-overlapping windows as rows of a 2-D array; the trailing partial window is dropped."""
    w = window_samples(window_seconds, r.sample_rate)
    count = r.samples.size // w
    return r.samples[: count * w].reshape(count, w)


def segment(r: EmgRecording, window_seconds: float) -> list[Window]:
    rows = window_matrix(r, window_seconds)
    w = rows.shape[1]
    return [Window(start_index=i * w, values=rows[i]) for i in range(rows.shape[0])]


def magnitude_spectra(values: np.ndarray) -> np.ndarray:
    """Single-sided amplitude spectra of each row, zero-padded to a power of two.

    Bin 0 and the Nyquist bin are |X|/N; interior bins are 2|X|/N, so a
    bin-aligned sinusoid of amplitude ``a`` reads ``a``.
    """
    values = np.asarray(values, dtype=float)
    n = next_pow2(values.shape[-1])
    mags = np.abs(rfft_padded(values, n)) / n
    if n > 1:
        mags[..., 1:-1] *= 2.0
    return mags


def fft_magnitude(w: Window | np.ndarray, sample_rate: float) -> Spectrum:
    values = w.values if isinstance(w, Window) else np.asarray(w, dtype=float)
    if values.size == 0:
        raise ValidationError("cannot transform an empty window")
    n = next_pow2(values.size)
    return Spectrum(bin_width=sample_rate / n, magnitudes=magnitude_spectra(values))


def _as_rows(windows: Sequence[Window] | np.ndarray) -> list[np.ndarray] | np.ndarray:
    if isinstance(windows, np.ndarray):
        return windows
    return [w.values for w in windows]


def average_peak(windows: Sequence[Window] | np.ndarray, domain: str = "time", sample_rate: float = 1.0) -> float:
    """Mean of per-window maxima.

    ``domain="time"`` takes the maximum absolute sample; ``domain="frequency"``
    takes the largest non-DC spectral magnitude.
    """
    rows = _as_rows(windows)
    if len(rows) == 0:
        raise ValidationError("average_peak needs at least one window")
    if domain == "time":
        peaks = [np.max(np.abs(v)) for v in rows]
    elif domain == "frequency":
        peaks = []
        for v in rows:
            mags = fft_magnitude(np.asarray(v), sample_rate).magnitudes[1:]
            if mags.size == 0:
                raise ValidationError("window too short for a non-DC spectral bin")
            peaks.append(mags.max())
    else:
        raise ValidationError(f"domain must be 'time' or 'frequency', got {domain!r}")
    return float(np.mean(peaks))


def session_average_peak(r: EmgRecording, window_seconds: float = 1.0, domain: str = "time") -> float:
    """Rectify, window and average the per-window peaks of one recording."""
    rows = window_matrix(rectify(r), window_seconds)
    if rows.shape[0] == 0:
        raise ValidationError(f"recording {r.meta.session_id!r} is shorter than one {window_seconds} s window")
    if domain == "frequency":
        mags = magnitude_spectra(rows)[:, 1:]
        if mags.shape[1] == 0:
            raise ValidationError("window too short for a non-DC spectral bin")
        return float(mags.max(axis=1).mean())
    return average_peak(rows, domain=domain)
