"""End-to-end runs: corpus -> datasets -> repeated holdout -> reports on disk."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, ValidationError
from .features import Dataset, build_dataset, write_dataset
from .ml import AlgorithmSpec, DecisionTree, HoldoutReport, Knn, RandomForest, Svm, algorithm_key, repeated_holdout
from .niosh import RiskLabel, RiskThresholds, UnitSystem, assess, read_manifest
from .signal import EmgRecording, load_recording, session_average_peak
from .synth import DEFAULT_DURATION, DEFAULT_PROTOCOL, GeneratorParams, SessionProtocol, generate_corpus

DEFAULT_SEED = 7
DEFAULT_WINDOWS = (1.0, 0.5, 0.25)
ALGORITHM_TITLES = {"dt": "Decision Tree", "svm": "SVM", "knn": "KNN", "rf": "Random Forest"}


def default_algorithms() -> tuple[AlgorithmSpec, ...]:
    return (DecisionTree(), Svm(), Knn(1), RandomForest())


@dataclass(frozen=True)
class PipelineConfig:
    out: Path | None = None
    unit: UnitSystem = UnitSystem.US
    thresholds: RiskThresholds = RiskThresholds()
    windows: tuple[float, ...] = DEFAULT_WINDOWS
    algorithms: tuple[AlgorithmSpec, ...] = field(default_factory=default_algorithms)
    reps: int = 10
    test_fraction: float = 0.25
    seed: int = DEFAULT_SEED
    protocol: SessionProtocol = DEFAULT_PROTOCOL
    manifest_dir: Path | None = None
    duration: float = DEFAULT_DURATION
    scheme: str = "holdout"
    group_by_session: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if not self.windows:
            raise ValidationError("windows: at least one window size is required")
        if any(not w > 0 for w in self.windows):
            raise ValidationError(f"windows: sizes must be positive, got {list(self.windows)}")
        if not self.algorithms:
            raise ValidationError("algorithms: at least one algorithm is required")
        if self.reps < 1:
            raise ValidationError("reps: must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ValidationError("test_fraction: must lie in (0, 1)")
        if self.seed < 0:
            raise ValidationError("seed: must be non-negative")
        if not self.duration > 0:
            raise ValidationError("duration: must be positive")
        if self.scheme not in ("holdout", "kfold"):
            raise ValidationError(f"scheme: expected 'holdout' or 'kfold', got {self.scheme!r}")
        if self.n_jobs < 1:
            raise ValidationError("jobs: must be >= 1")

    def describe(self) -> dict:
        """Run parameters echoed into reports (output location excluded)."""
        return {
            "units": self.unit.value,
            "thresholds": [self.thresholds.t_nominal, self.thresholds.t_high],
            "windows": list(self.windows),
            "algorithms": [algorithm_key(a) for a in self.algorithms],
            "reps": self.reps,
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "source": "manifest" if self.manifest_dir is not None else "synthetic",
            "duration_s": self.duration if self.manifest_dir is None else None,
            "scheme": self.scheme,
            "group_by_session": self.group_by_session,
        }


def load_corpus(config: PipelineConfig) -> list[EmgRecording]:
    if config.manifest_dir is not None:
        return load_manifest_dir(config.manifest_dir)
    params = GeneratorParams(seed=config.seed)
    return generate_corpus(config.protocol, config.duration, params)


def load_manifest_dir(directory: str | Path) -> list[EmgRecording]:
    """``manifest.csv`` plus one ``<session_id>.csv`` recording per row."""
    directory = Path(directory)
    manifest = directory / "manifest.csv"
    if not manifest.is_file():
        raise DataError(f"{directory}: no manifest.csv")
    return [load_recording(directory / f"{sid}.csv", task, session_id=sid) for sid, task in read_manifest(manifest)]


# -- LI vs amplitude ----------------------------------------------------------


@dataclass(frozen=True)
class LiAmplitudeRow:
    session_id: str
    li: float
    avg_peak_uv: float
    risk: RiskLabel


def emit_li_amplitude_report(
    corpus: Sequence[EmgRecording],
    thresholds: RiskThresholds = RiskThresholds(),
    unit: UnitSystem = UnitSystem.US,
    window_seconds: float = 1.0,
) -> list[LiAmplitudeRow]:
    """Per-session LI against the frequency-domain average peak, sorted by (LI, session)."""
    if not corpus:
        raise ValidationError("empty corpus")
    rows = []
    for r in corpus:
        if r.meta.task is None:
            raise DataError(f"session {r.meta.session_id!r} has no task metadata")
        a = assess(r.meta.task, unit, thresholds)
        peak = session_average_peak(r, window_seconds, domain="frequency")
        rows.append(LiAmplitudeRow(r.meta.session_id, a.li, peak, a.risk))
    return sorted(rows, key=lambda row: (row.li, row.session_id))


def li_rows_to_csv(rows: Sequence[LiAmplitudeRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["session_id", "li", "avg_peak_uv", "risk"])
    for row in rows:
        writer.writerow([row.session_id, f"{row.li:.6f}", f"{row.avg_peak_uv:.6f}", row.risk.title])
    return buf.getvalue()


def class_means(rows: Sequence[LiAmplitudeRow]) -> dict[RiskLabel, float]:
    out = {}
    for label in RiskLabel:
        vals = [r.avg_peak_uv for r in rows if r.risk is label]
        if vals:
            out[label] = float(np.mean(vals))
    return out


# -- text tables --------------------------------------------------------------


def _window_title(w: float) -> str:
    return f"{w:g}-sec"


def confusion_table(report: HoldoutReport) -> str:
    labels = [label.short for label in RiskLabel]
    lines = [f"{'':>6}" + "".join(f"{name:>8}" for name in labels)]
    for label, row in zip(labels, report.confusion):
        lines.append(f"{label:>6}" + "".join(f"{int(v):>8d}" for v in row))
    return "\n".join(lines)


def cell_text(report: HoldoutReport) -> str:
    title = ALGORITHM_TITLES.get(report.algorithm, report.algorithm)
    window = _window_title(report.window_seconds) if report.window_seconds else "?"
    accs = " ".join(f"{100 * a:.2f}" for a in report.per_rep_accuracies)
    return (
        f"{title}, {window} segmentation\n"
        f"mean accuracy {100 * report.mean:.2f}%  spread {100 * report.spread:.2f}%\n"
        f"per-rep: {accs}\n\n"
        f"pooled confusion (rows true, columns predicted)\n{confusion_table(report)}\n"
    )


def accuracy_table(reports: dict[tuple[float, str], HoldoutReport], sizes: dict[float, int]) -> str:
    windows = sorted({w for w, _ in reports}, reverse=True)
    algos = list(dict.fromkeys(a for _, a in reports))
    header = ["Time Segmentation"] + [ALGORITHM_TITLES.get(a, a) for a in algos]
    rows = [header]
    for w in windows:
        row = [f"{_window_title(w)} (n = {sizes[w]})"]
        row += [f"{100 * reports[(w, a)].mean:.2f}" if (w, a) in reports else "-" for a in algos]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip() for r in rows) + "\n"


# -- running ------------------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_json(report: HoldoutReport, config: PipelineConfig, n_examples: int) -> str:
    payload = {**report.to_dict(), "n_examples": n_examples, "config": config.describe()}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@dataclass
class PipelineResult:
    reports: dict[tuple[float, str], HoldoutReport]
    dataset_sizes: dict[float, int]
    li_rows: list[LiAmplitudeRow]
    files: list[Path]

    def summary(self) -> dict:
        return {
            "accuracy": {
                f"{w:g}": {a: r.mean for (ww, a), r in self.reports.items() if ww == w} for w in self.dataset_sizes
            },
            "dataset_sizes": {f"{w:g}": n for w, n in self.dataset_sizes.items()},
        }


def _run_cell(args: tuple[AlgorithmSpec, Dataset, PipelineConfig]) -> HoldoutReport:
    spec, data, config = args
    return repeated_holdout(
        spec,
        data,
        reps=config.reps,
        test_fraction=config.test_fraction,
        seed=config.seed,
        scheme=config.scheme,
        group_by_session=config.group_by_session,
    )


def window_dir_name(w: float) -> str:
    return f"window_{w:g}s"


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Evaluate every (window size, algorithm) cell and, if ``config.out`` is set, write
    datasets, per-cell JSON/text reports, the LI-amplitude CSV and a summary."""
    corpus = load_corpus(config)
    provenance = str(config.manifest_dir) if config.manifest_dir is not None else f"synthetic seed={config.seed}"
    datasets = {w: build_dataset(corpus, w, config.thresholds, config.unit, provenance) for w in config.windows}
    cells = [(w, spec) for w in config.windows for spec in config.algorithms]
    jobs = [(spec, datasets[w], config) for w, spec in cells]
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            outcomes = list(pool.map(_run_cell, jobs))
    else:
        outcomes = [_run_cell(job) for job in jobs]
    reports = {(w, algorithm_key(spec)): rep for (w, spec), rep in zip(cells, outcomes)}
    sizes = {w: len(d) for w, d in datasets.items()}
    li_rows = emit_li_amplitude_report(corpus, config.thresholds, config.unit)
    result = PipelineResult(reports=reports, dataset_sizes=sizes, li_rows=li_rows, files=[])

    if config.out is not None:
        out = Path(config.out)
        for w, data in datasets.items():
            path = out / window_dir_name(w) / "dataset.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            write_dataset(path, data)
            result.files.append(path)
        for (w, key), rep in reports.items():
            base = out / window_dir_name(w)
            atomic_write(base / f"{key}.json", report_json(rep, config, sizes[w]))
            atomic_write(base / f"{key}.txt", cell_text(rep))
            result.files += [base / f"{key}.json", base / f"{key}.txt"]
        atomic_write(out / "li_amplitude.csv", li_rows_to_csv(li_rows))
        summary = {**result.summary(), "config": config.describe()}
        atomic_write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
        atomic_write(out / "summary.txt", accuracy_table(reports, sizes))
        result.files += [out / "li_amplitude.csv", out / "summary.json", out / "summary.txt"]
    return result
