"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The lines are collected in ``RESULTS`` and printed in the terminal summary
(see ``conftest.pytest_terminal_summary``), so they show up without ``-s``.
"""

import time

import numpy as np
import pytest

from liftrisk.features import build_dataset
from liftrisk.ml import DecisionTree, Knn, RandomForest, Scaler, k_sweep, predict_many, repeated_holdout, train
from liftrisk.ml.svm import dual_objective, rbf_kernel, smo_binary
from liftrisk.niosh import (
    Coupling,
    Duration,
    LiftingTask,
    RiskLabel,
    UnitSystem,
    assess,
    compute_multipliers,
    recommended_weight_limit,
    round_half_up,
)
from liftrisk.pipeline import PipelineConfig, class_means, emit_li_amplitude_report, run_pipeline
from liftrisk.signal import fft_magnitude
from liftrisk.fft import next_pow2, rfft_padded
from liftrisk.synth import DEFAULT_DURATION, DEFAULT_PROTOCOL, GeneratorParams, generate_corpus

RESULTS = {}


def record(number, checks):
    """``checks`` maps a short description to (ok, detail); returns the failures."""
    failures = [f"{name}: {detail}" for name, (ok, detail) in checks.items() if not ok]
    status = "PASS" if not failures else "FAIL"
    summary = "; ".join(failures) if failures else "; ".join(f"{name} ({detail})" for name, (_, detail) in checks.items())
    RESULTS[number] = f"criterion {number}: {status}  {summary}"
    return failures


def lab_task(weight, h, v=14.0):
    return LiftingTask(weight, h, v, 18.0, 0.0, Coupling.GOOD, 10.0, Duration.UP_TO_1H)


# -- shared heavy fixtures ----------------------------------------------------


@pytest.fixture(scope="module")
def corpus():
    return generate_corpus(DEFAULT_PROTOCOL, DEFAULT_DURATION, GeneratorParams(seed=7))


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    """Two runs of the default pipeline: serial, then with four worker processes."""
    root = tmp_path_factory.mktemp("acceptance")
    t0 = time.perf_counter()
    serial = run_pipeline(PipelineConfig(out=root / "serial", n_jobs=1))
    t1 = time.perf_counter()
    parallel = run_pipeline(PipelineConfig(out=root / "parallel", n_jobs=4))
    t2 = time.perf_counter()
    return root, serial, parallel, (t1 - t0, t2 - t1)


# -- criteria -----------------------------------------------------------------


def test_criterion_1_niosh_exactness():
    t0 = time.perf_counter()
    r2 = lambda m: tuple(round_half_up(x, 2) for x in m.as_tuple())  # noqa: E731
    origin = r2(compute_multipliers(lab_task(10, 15)))
    destination = r2(compute_multipliers(lab_task(10, 24, v=32)))
    rwl_h15 = round_half_up(recommended_weight_limit(compute_multipliers(lab_task(10, 15)), UnitSystem.US), 2)
    rwl_h17 = round_half_up(recommended_weight_limit(compute_multipliers(lab_task(35, 17)), UnitSystem.US), 2)

    rows = [(10, 15, 0.8, "Nominal"), (15, 15, 1.2, "Nominal"), (20, 15, 1.6, "Increased"),
            (30, 15, 2.4, "Increased"), (35, 15, 2.8, "High"), (35, 17, 3.2, "High")]
    li_got, risk_got = [], []
    for weight, h, _, _ in rows:
        a = assess(lab_task(weight, h))
        li_got.append(round_half_up(a.li, 1))
        risk_got.append(a.risk.title)
    elapsed = time.perf_counter() - t0

    tol = 0.01 + 1e-9
    checks = {
        "origin multipliers": (origin == (0.67, 0.88, 0.92, 1.0, 0.45, 1.0), str(origin)),
        "destination multipliers": (destination == (0.42, 0.99, 0.92, 1.0, 0.45, 1.0), str(destination)),
        "RWL 12.40": (abs(rwl_h15 - 12.40) <= tol, f"{rwl_h15:.2f}"),
        "RWL 11.00": (abs(rwl_h17 - 11.00) <= tol, f"{rwl_h17:.2f}"),
        "LI values": (li_got == [r[2] for r in rows], str(li_got)),
        "risk labels": (risk_got == [r[3] for r in rows], str(risk_got)),
        "runtime": (elapsed < 1.0, f"{elapsed * 1000:.1f} ms"),
    }
    failures = record(1, checks)
    assert not failures, failures


def _dft_oracle_batch(windows, n):
    """Direct O(n^2) DFT of zero-padded windows, one row block of the DFT matrix at a time."""
    X = np.zeros((len(windows), n))
    for i, w in enumerate(windows):
        X[i, : w.size] = w
    out = np.empty((len(windows), n // 2 + 1), dtype=complex)
    cols = np.arange(n)
    for start in range(0, n // 2 + 1, 256):
        k = np.arange(start, min(start + 256, n // 2 + 1))
        # reduce k*n modulo N first so the angle is exact
        W = np.exp(-2j * np.pi * (np.outer(k, cols) % n) / n)
        out[:, k] = X @ W.T
    return X, out


def test_criterion_2_fft_oracle_equivalence():
    rng = np.random.default_rng(2024)
    lengths = rng.integers(64, 4097, size=200)
    windows = [rng.normal(0, 50, size=n) for n in lengths]
    t0 = time.perf_counter()
    worst_bin, worst_parseval = 0.0, 0.0
    by_n = {}
    for i, w in enumerate(windows):
        by_n.setdefault(next_pow2(w.size), []).append(i)
    for n, idx in by_n.items():
        padded, X = _dft_oracle_batch([windows[i] for i in idx], n)
        oracle = np.abs(X) / n
        oracle[:, 1:-1] *= 2
        for row, i in enumerate(idx):
            got = fft_magnitude(windows[i], 1000.0).magnitudes
            rel = np.abs(got - oracle[row]) / np.abs(oracle[row])
            worst_bin = max(worst_bin, float(rel.max()))
            # Parseval on the unnormalised two-sided spectrum of our transform
            half = rfft_padded(windows[i], n)
            two_sided = np.sum(np.abs(half) ** 2) + np.sum(np.abs(half[1 : n - n // 2]) ** 2)
            energy = float(np.sum(padded[row] ** 2))
            worst_parseval = max(worst_parseval, abs(two_sided / n - energy) / energy)
    elapsed = time.perf_counter() - t0
    checks = {
        "per-bin relative error": (worst_bin <= 1e-9, f"max {worst_bin:.2e}"),
        "Parseval": (worst_parseval <= 1e-9, f"max {worst_parseval:.2e}"),
        "runtime": (elapsed < 10.0, f"{elapsed:.2f} s"),
    }
    failures = record(2, checks)
    assert not failures, failures


def test_criterion_3_decision_tree_desk_run():
    t0 = time.perf_counter()
    corpus = generate_corpus(DEFAULT_PROTOCOL, DEFAULT_DURATION, GeneratorParams(seed=7))
    data = build_dataset(corpus, 0.5)
    report = repeated_holdout(DecisionTree(), data, reps=10, test_fraction=0.25, seed=7)
    elapsed = time.perf_counter() - t0
    checks = {
        "mean accuracy >= 0.95": (report.mean >= 0.95, f"{report.mean:.4f}"),
        "spread <= 0.05": (report.spread <= 0.05, f"{report.spread:.4f}"),
        "runtime": (elapsed < 60.0, f"{elapsed:.1f} s"),
    }
    failures = record(3, checks)
    assert not failures, failures


def test_criterion_4_classifier_suite(pipeline_runs):
    _, serial, _, _ = pipeline_runs
    checks = {}
    for w in sorted({w for w, _ in serial.reports}, reverse=True):
        cells = {key: rep for (ww, key), rep in serial.reports.items() if ww == w}
        accs = ", ".join(f"{key} {rep.mean:.4f}" for key, rep in cells.items())
        checks[f"{w:g} s accuracy >= 0.90"] = (all(rep.mean >= 0.90 for rep in cells.values()), accs)
        nr_hr = sum(int(rep.confusion[0, 2] + rep.confusion[2, 0]) for rep in cells.values())
        pooled = sum(int(rep.confusion.sum()) for rep in cells.values())
        worst = max((rep.confusion[0, 2] + rep.confusion[2, 0]) / rep.confusion.sum() for rep in cells.values())
        checks[f"{w:g} s NR<->HR <= 1%"] = (worst <= 0.01, f"{nr_hr}/{pooled}")
    assert len(serial.reports) == 12
    failures = record(4, checks)
    assert not failures, failures


def test_criterion_5_k_sweep(corpus):
    data = build_dataset(corpus, 0.5)
    sweep = dict(k_sweep(data, k_max=27, reps=10, test_fraction=0.25, seed=7))
    checks = {"acc(k=1) >= acc(k=5)": (sweep[1] >= sweep[5], f"k=1 {sweep[1]:.4f}, k=5 {sweep[5]:.4f}")}
    failures = record(5, checks)
    assert not failures, failures


def test_criterion_6_oracle_equivalences():
    from liftrisk.features import Dataset

    rng = np.random.default_rng(6)
    centers = np.array([[0, 0, 0, 0, 0, 0, 0], [4, 4, 0, 0, 0, 0, 0], [8, 0, 4, 0, 0, 0, 0]], dtype=float)

    def cloud(n_per, spread):
        X = np.vstack([c + spread * rng.normal(size=(n_per, 7)) for c in centers])
        y = np.repeat([0, 1, 2], n_per)
        return Dataset(X, y, np.array(["toy"] * len(y), dtype=object), np.arange(len(y)))

    data = cloud(60, 2.0)
    probe = rng.uniform(-6, 14, size=(200, 7))
    tree = train(DecisionTree(), data)
    forest = train(RandomForest(n_trees=1, features_per_split=7, bootstrap=False), data, seed=99)
    same = int(np.sum(predict_many(tree, probe) == predict_many(forest, probe)))

    knn_acc = float(np.mean(predict_many(train(Knn(1), data), data) == data.y))

    toy = cloud(20, 1.5)
    Xs = Scaler.fit(toy.X).transform(toy.X)
    c, gamma = 1.0, 1.0 / 7
    K = rbf_kernel(Xs, Xs, gamma)
    monotone, boxed, gaps = True, True, []
    for cls in (0, 1, 2):
        yb = np.where(toy.y == cls, 1.0, -1.0)
        res = smo_binary(Xs, yb, c, gamma, tol=1e-3, record_objective=True)
        monotone &= bool(np.all(np.diff(res.objective) >= -1e-12))
        monotone &= abs(res.objective[-1] - dual_objective(res.alpha, yb, K)) < 1e-9
        boxed &= bool(np.all((res.alpha >= 0) & (res.alpha <= c)))
        gaps.append(res.kkt_gap)
    checks = {
        "forest == tree on 200 probes": (same == 200, f"{same}/200 agree"),
        "1-NN training accuracy": (knn_acc == 1.0, f"{knn_acc:.4f}"),
        "SMO objective non-decreasing": (monotone, f"{len(toy)} points, 3 one-vs-rest problems"),
        "SMO alpha in [0, C]": (boxed, f"KKT gaps {', '.join(f'{g:.1e}' for g in gaps)}"),
    }
    failures = record(6, checks)
    assert not failures, failures


def test_criterion_7_determinism(pipeline_runs):
    root, _, _, (t_serial, t_parallel) = pipeline_runs
    a = {p.relative_to(root / "serial").as_posix(): p.read_bytes() for p in sorted((root / "serial").rglob("*.json"))}
    b = {p.relative_to(root / "parallel").as_posix(): p.read_bytes() for p in sorted((root / "parallel").rglob("*.json"))}
    differing = sorted(k for k in a if a.get(k) != b.get(k))
    checks = {
        "byte-identical JSON (1 vs 4 workers)": (a == b and len(a) == 13, f"{len(a)} files, {len(differing)} differ"),
        "runs": (True, f"{t_serial:.0f} s serial, {t_parallel:.0f} s parallel"),
    }
    failures = record(7, checks)
    assert not failures, failures


def test_criterion_8_li_amplitude_trend(corpus):
    rows = emit_li_amplitude_report(corpus)
    means = class_means(rows)
    nom, inc, high = (means[label] for label in RiskLabel)
    checks = {
        "Nominal < Increased < High": (nom < inc < high, f"{nom:.2f} < {inc:.2f} < {high:.2f} uV"),
        "Nominal in [15, 25]": (15 <= nom <= 25, f"{nom:.2f} uV"),
        "High in [28, 40]": (28 <= high <= 40, f"{high:.2f} uV"),
        "54 sessions": (len(rows) == 54, str(len(rows))),
    }
    failures = record(8, checks)
    assert not failures, failures
