"""Seeded synthetic sEMG lifting sessions.

Each session is white Gaussian noise modulated by a raised-cosine burst per
lift cycle (with per-cycle gain jitter), band-limited by zeroing FFT bins
outside the sEMG band, then scaled so the mean of the rectified 1 s window
peaks equals ``amp_intercept + amp_slope * load``. The default amplitude model
gives 150 uV at 10 lb and 250 uV at 35 lb.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, ValidationError
from .niosh import Coupling, Duration, LiftingTask
from .signal import EmgRecording, RecordingMeta

# Origin geometry of the lifting experiments; only load and H vary by session.
ORIGIN_V = 14.0
ORIGIN_D = 18.0
ORIGIN_A = 0.0
LIFTS_PER_MINUTE = 10.0


@dataclass(frozen=True)
class GeneratorParams:
    sample_rate: float = 1000.0
    band: tuple[float, float] = (20.0, 450.0)
    cycle_seconds: float = 6.0
    burst_seconds: float = 2.0
    amp_intercept: float = 110.0
    amp_slope: float = 4.0
    jitter: float = 0.1
    seed: int = 7
    calibration_window: float = 1.0

    def __post_init__(self):
        lo, hi = self.band
        if not 0 <= lo < hi:
            raise ValidationError(f"band must satisfy 0 <= low < high, got {self.band}")
        if not self.sample_rate > 2 * hi:
            raise ValidationError(f"sample_rate {self.sample_rate} must exceed twice the band edge {hi}")
        if not 0 < self.burst_seconds < self.cycle_seconds:
            raise ValidationError("need 0 < burst_seconds < cycle_seconds")
        if not 0 <= self.jitter < 1:
            raise ValidationError("jitter must lie in [0, 1)")
        if not self.calibration_window > 0:
            raise ValidationError("calibration_window must be positive")

    def peak(self, load: float) -> float:
        """Target mean rectified window peak (uV) for a load."""
        return self.amp_intercept + self.amp_slope * load


@dataclass(frozen=True)
class ProtocolRow:
    session_count: int
    load: float
    h: float

    def __post_init__(self):
        if self.session_count < 1:
            raise ValidationError("session_count must be >= 1")
        if not self.load > 0:
            raise ValidationError("loads must be positive")


@dataclass(frozen=True)
class SessionProtocol:
    rows: tuple[ProtocolRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise ValidationError("protocol has no rows")

    @property
    def n_sessions(self) -> int:
        return sum(r.session_count for r in self.rows)

    def tasks(self) -> list[LiftingTask]:
        return [origin_task(row.load, row.h) for row in self.rows for _ in range(row.session_count)]


def origin_task(load: float, h: float) -> LiftingTask:
    return LiftingTask(
        weight=load,
        h=h,
        v=ORIGIN_V,
        d=ORIGIN_D,
        a=ORIGIN_A,
        coupling=Coupling.GOOD,
        frequency=LIFTS_PER_MINUTE,
        duration=Duration.UP_TO_1H,
    )


# 9 sessions at 10 lb (one of ten discarded), then five sets at H=15, and a
# reduced 5-session set at H=17.
DEFAULT_PROTOCOL = SessionProtocol(
    rows=(
        ProtocolRow(9, 10.0, 15.0),
        ProtocolRow(10, 15.0, 15.0),
        ProtocolRow(10, 20.0, 15.0),
        ProtocolRow(10, 30.0, 15.0),
        ProtocolRow(10, 35.0, 15.0),
        ProtocolRow(5, 35.0, 17.0),
    )
)

DEFAULT_DURATION = 60.0


def burst_envelope(n: int, params: GeneratorParams, cycle_gains: np.ndarray | None = None) -> np.ndarray:
    """Raised-cosine burst at the start of every lift cycle, zero between bursts."""
    t = np.arange(n) / params.sample_rate
    phase = np.mod(t, params.cycle_seconds)
    env = np.where(
        phase < params.burst_seconds,
        0.5 * (1.0 - np.cos(2.0 * np.pi * phase / params.burst_seconds)),
        0.0,
    )
    if cycle_gains is not None:
        env = env * cycle_gains[(t // params.cycle_seconds).astype(np.int64)]
    return env


def band_mask(x: np.ndarray, sample_rate: float, band: tuple[float, float]) -> np.ndarray:
    spec = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, 1.0 / sample_rate)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0.0
    return np.fft.irfft(spec, x.size)


def _mean_window_peak(x: np.ndarray, w: int) -> float:
    count = x.size // w
    if count == 0:
        return float(np.max(np.abs(x)))
    return float(np.abs(x[: count * w]).reshape(count, w).max(axis=1).mean())


def generate_session(
    task: LiftingTask,
    duration_seconds: float,
    params: GeneratorParams = GeneratorParams(),
    session_id: str = "S01",
) -> EmgRecording:
    if not (duration_seconds > 0 and math.isfinite(duration_seconds)):
        raise ValidationError(f"duration_seconds must be positive, got {duration_seconds!r}")
    n = int(round(duration_seconds * params.sample_rate))
    if n < 2:
        raise ValidationError("session shorter than two samples")

    rng = np.random.default_rng(params.seed)
    noise = rng.standard_normal(n)
    n_cycles = int(math.ceil(duration_seconds / params.cycle_seconds)) + 1
    gains = 1.0 + params.jitter * rng.uniform(-1.0, 1.0, n_cycles)

    x = band_mask(noise * burst_envelope(n, params, gains), params.sample_rate, params.band)
    w = max(1, int(round(params.calibration_window * params.sample_rate)))
    level = _mean_window_peak(x, w)
    if level > 0:
        x *= params.peak(task.weight) / level
    return EmgRecording(
        sample_rate=params.sample_rate,
        samples=x,
        meta=RecordingMeta(session_id=session_id, site="TH", task=task),
    )


def session_id_for(ordinal: int) -> str:
    return f"S{ordinal + 1:02d}"


def _generate_indexed(args: tuple[int, LiftingTask, float, GeneratorParams]) -> EmgRecording:
    ordinal, task, duration, params = args
    return generate_session(task, duration, replace(params, seed=params.seed + ordinal), session_id_for(ordinal))


def generate_corpus(
    protocol: SessionProtocol = DEFAULT_PROTOCOL,
    duration_per_session: float = DEFAULT_DURATION,
    params: GeneratorParams = GeneratorParams(),
    n_jobs: int = 1,
) -> list[EmgRecording]:
    """One recording per protocol session; session ``i`` is seeded with ``params.seed + i``."""
    jobs = [(i, task, duration_per_session, params) for i, task in enumerate(protocol.tasks())]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_generate_indexed, jobs))
    return [_generate_indexed(job) for job in jobs]


# -- protocol CSV -------------------------------------------------------------

PROTOCOL_COLUMNS = ("session_count", "load_lb", "h_in")


def read_protocol(path: str | Path) -> SessionProtocol:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in PROTOCOL_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise DataError(f"{path}: protocol CSV missing columns {', '.join(missing)}")
            rows = tuple(
                ProtocolRow(int(r["session_count"]), float(r["load_lb"]), float(r["h_in"])) for r in reader
            )
    except OSError as exc:
        raise DataError(f"cannot read protocol {path}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise DataError(f"{path}: malformed protocol row ({exc})") from None
    return SessionProtocol(rows)


def write_protocol(path: str | Path, protocol: SessionProtocol) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROTOCOL_COLUMNS)
        for row in protocol.rows:
            writer.writerow([row.session_count, repr(row.load), repr(row.h)])


def corpus_sessions(corpus: Sequence[EmgRecording]) -> list[tuple[str, LiftingTask]]:
    out = []
    for r in corpus:
        if r.meta.task is None:
            raise DataError(f"recording {r.meta.session_id!r} has no lifting task")
        out.append((r.meta.session_id, r.meta.task))
    return out
