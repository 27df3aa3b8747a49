"""Command-line interface.

Exit status: 0 success, 1 validation error, 2 data error, 3 internal error.

Every subcommand accepts ``--config FILE``: a flat text file of ``key = value``
lines (``#`` starts a comment). Keys are the long option names without the
leading dashes, e.g.::

    seed = 7
    window = 1.0, 0.5, 0.25
    algo = dt, svm, knn, rf
    thresholds = 1.2, 2.8
    units = us

Options given on the command line override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import pickle
import sys
from pathlib import Path
from typing import Sequence

from .errors import ConvergenceError, DataError, LiftRiskError, ValidationError
from .features import build_dataset, read_dataset, write_dataset
from .ml import evaluate, k_sweep, parse_algorithm, repeated_holdout, train
from .niosh import (
    Coupling,
    Duration,
    LiftingTask,
    RiskThresholds,
    UnitSystem,
    assess,
    read_manifest,
    round_half_up,
    write_manifest,
)
from .pipeline import (
    DEFAULT_SEED,
    DEFAULT_WINDOWS,
    PipelineConfig,
    accuracy_table,
    cell_text,
    emit_li_amplitude_report,
    li_rows_to_csv,
    load_corpus,
    run_pipeline,
)
from .signal import write_recording
from .synth import DEFAULT_DURATION, DEFAULT_PROTOCOL, read_protocol

EXIT_OK, EXIT_VALIDATION, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

CONFIG_KEYS = {
    "seed",
    "window",
    "algo",
    "thresholds",
    "units",
    "protocol",
    "manifest",
    "out",
    "reps",
    "test-fraction",
    "duration",
    "scheme",
    "group-by-session",
    "jobs",
    "k-max",
    "data",
    "model",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def read_config(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        if key not in CONFIG_KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _option(args: argparse.Namespace, config: dict[str, str], key: str, default=None):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    return config.get(key, default)


def _floats(text: str | Sequence[float], name: str) -> tuple[float, ...]:
    if not isinstance(text, str):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(part) for part in text.replace(" ", "").split(",") if part)
    except ValueError:
        raise ValidationError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _int(value, name: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: expected an integer, got {value!r}") from None


def _float(value, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: expected a number, got {value!r}") from None


def _bool(value, name: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"{name}: expected true/false, got {value!r}")


def build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    algos = _option(args, cfg, "algo")
    if algos is None:
        specs = None
    else:
        names = algos if not isinstance(algos, str) else algos.split(",")
        specs = tuple(parse_algorithm(n) for n in names if n.strip())
    windows = _option(args, cfg, "window")
    protocol = _option(args, cfg, "protocol")
    manifest = _option(args, cfg, "manifest")
    out = _option(args, cfg, "out")
    thresholds = _option(args, cfg, "thresholds")
    kwargs = dict(
        unit=UnitSystem.parse(_option(args, cfg, "units", "us")),
        thresholds=RiskThresholds.parse(thresholds) if thresholds else RiskThresholds(),
        windows=_floats(windows, "window") if windows is not None else DEFAULT_WINDOWS,
        reps=_int(_option(args, cfg, "reps", 10), "reps"),
        test_fraction=_float(_option(args, cfg, "test-fraction", 0.25), "test-fraction"),
        seed=_int(_option(args, cfg, "seed", DEFAULT_SEED), "seed"),
        protocol=read_protocol(protocol) if protocol else DEFAULT_PROTOCOL,
        manifest_dir=Path(manifest) if manifest else None,
        duration=_float(_option(args, cfg, "duration", DEFAULT_DURATION), "duration"),
        scheme=str(_option(args, cfg, "scheme", "holdout")),
        group_by_session=_bool(_option(args, cfg, "group-by-session", False), "group-by-session"),
        n_jobs=_int(_option(args, cfg, "jobs", 1), "jobs"),
        out=Path(out) if out else None,
    )
    if specs is not None:
        kwargs["algorithms"] = specs
    return PipelineConfig(**kwargs)


# -- subcommands --------------------------------------------------------------


def cmd_niosh(args, out) -> int:
    config = build_config(args)
    if args.task_manifest:
        sessions = dict(read_manifest(args.task_manifest))
        if args.session not in sessions:
            raise DataError(f"session {args.session!r} not in {args.task_manifest}")
        task = sessions[args.session]
    else:
        missing = [f for f in ("load", "h", "v", "d") if getattr(args, f) is None]
        if missing:
            raise ValidationError(f"missing task fields: {', '.join('--' + m for m in missing)}")
        task = LiftingTask(
            weight=args.load,
            h=args.h,
            v=args.v,
            d=args.d,
            a=args.a,
            coupling=Coupling.parse(args.coupling),
            frequency=args.freq,
            duration=Duration.parse(args.duration_class),
        )
    a = assess(task, config.unit, config.thresholds)
    m = a.rwl.multipliers
    payload = {
        "multipliers": {"hm": m.hm, "vm": m.vm, "dm": m.dm, "am": m.am, "fm": m.fm, "cm": m.cm},
        "rwl": a.rwl.rwl,
        "li": a.li,
        "risk": a.risk.title,
    }
    if args.json:
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        r2 = {k: round_half_up(v, 2) for k, v in payload["multipliers"].items()}
        out.write("HM {hm:.2f}  VM {vm:.2f}  DM {dm:.2f}  AM {am:.2f}  FM {fm:.2f}  CM {cm:.2f}\n".format(**r2))
        out.write(
            f"RWL {round_half_up(a.rwl.rwl, 2):.2f}  LI {round_half_up(a.li, 2):.2f}  risk {a.risk.title}\n"
        )
    return EXIT_OK


def cmd_synth(args, out) -> int:
    config = build_config(args)
    if config.out is None:
        raise ValidationError("out: synth needs an output directory")
    corpus = load_corpus(config)
    config.out.mkdir(parents=True, exist_ok=True)
    for r in corpus:
        write_recording(config.out / f"{r.meta.session_id}.csv", r)
    write_manifest(config.out / "manifest.csv", [(r.meta.session_id, r.meta.task) for r in corpus])
    out.write(f"wrote {len(corpus)} sessions to {config.out}\n")
    return EXIT_OK


def _dataset_for(args, config: PipelineConfig, window: float):
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    data_path = _option(args, cfg, "data")
    if data_path:
        return read_dataset(data_path, window_seconds=window)
    return build_dataset(load_corpus(config), window, config.thresholds, config.unit)


def cmd_extract(args, out) -> int:
    config = build_config(args)
    if len(config.windows) != 1:
        raise ValidationError("window: extract takes exactly one window size")
    if config.out is None:
        raise ValidationError("out: extract needs an output CSV path")
    data = build_dataset(load_corpus(config), config.windows[0], config.thresholds, config.unit)
    config.out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(config.out, data)
    out.write(f"wrote {len(data)} examples to {config.out}\n")
    return EXIT_OK


def _single_algorithm(config: PipelineConfig):
    if len(config.algorithms) != 1:
        raise ValidationError("algo: give exactly one algorithm")
    return config.algorithms[0]


def cmd_train(args, out) -> int:
    config = build_config(args)
    spec = _single_algorithm(config)
    if config.out is None:
        raise ValidationError("out: train needs a model output path")
    data = _dataset_for(args, config, config.windows[0])
    model = train(spec, data, seed=config.seed)
    config.out.parent.mkdir(parents=True, exist_ok=True)
    with config.out.open("wb") as fh:
        pickle.dump(model, fh)
    out.write(f"trained {spec.name} on {len(data)} examples -> {config.out}\n")
    return EXIT_OK


def cmd_eval(args, out) -> int:
    config = build_config(args)
    data = _dataset_for(args, config, config.windows[0])
    if args.model:
        try:
            with open(args.model, "rb") as fh:
                model = pickle.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read model {args.model}: {exc}") from exc
        payload = evaluate(model, data).to_dict()
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        spec = _single_algorithm(config)
        report = repeated_holdout(
            spec,
            data,
            reps=config.reps,
            test_fraction=config.test_fraction,
            seed=config.seed,
            scheme=config.scheme,
            group_by_session=config.group_by_session,
            n_jobs=config.n_jobs,
        )
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
        if not args.json:
            text = cell_text(report)
    if config.out is not None:
        config.out.parent.mkdir(parents=True, exist_ok=True)
        config.out.write_text(text, encoding="utf-8")
    out.write(text)
    return EXIT_OK


def cmd_sweep_k(args, out) -> int:
    config = build_config(args)
    data = _dataset_for(args, config, config.windows[0])
    k_max = _int(args.k_max if args.k_max is not None else 27, "k-max")
    results = k_sweep(
        data,
        k_max=k_max,
        reps=config.reps,
        test_fraction=config.test_fraction,
        seed=config.seed,
        scheme=config.scheme,
        group_by_session=config.group_by_session,
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "mean_accuracy"])
    for k, acc in results:
        writer.writerow([k, f"{acc:.6f}"])
    if config.out is not None:
        config.out.parent.mkdir(parents=True, exist_ok=True)
        config.out.write_text(buf.getvalue(), encoding="utf-8")
    out.write(buf.getvalue())
    return EXIT_OK


def cmd_run(args, out) -> int:
    config = build_config(args)
    if config.out is None:
        raise ValidationError("out: run needs an output directory")
    result = run_pipeline(config)
    out.write(accuracy_table(result.reports, result.dataset_sizes))
    out.write(f"reports written to {config.out}\n")
    return EXIT_OK


def cmd_report_li(args, out) -> int:
    config = build_config(args)
    rows = emit_li_amplitude_report(load_corpus(config), config.thresholds, config.unit)
    text = li_rows_to_csv(rows)
    if config.out is not None:
        config.out.parent.mkdir(parents=True, exist_ok=True)
        config.out.write_text(text, encoding="utf-8")
    out.write(text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, corpus: bool = True) -> None:
    p.add_argument("--config", help="flat key = value file; command-line options win")
    p.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument("--thresholds", help="LI cut points 't_nom,t_high' (default 1.2,2.8)")
    p.add_argument("--units", choices=["us", "metric"], help="unit system (default us)")
    p.add_argument("--out", help="output path")
    if corpus:
        p.add_argument("--protocol", help="protocol CSV (session_count,load_lb,h_in); default: 54-session protocol")
        p.add_argument("--manifest", help="directory holding manifest.csv and <session_id>.csv recordings")
        p.add_argument("--duration", type=float, help=f"synthetic seconds per session (default {DEFAULT_DURATION:g})")


def _validation(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reps", type=int, help="repetitions / folds (default 10)")
    p.add_argument("--test-fraction", type=float, help="held-out fraction (default 0.25)")
    p.add_argument("--scheme", choices=["holdout", "kfold"], help="repeated stratified holdout or stratified k-fold")
    p.add_argument("--group-by-session", action="store_const", const=True, help="keep each session on one side")
    p.add_argument("--jobs", type=int, help="worker processes (results do not depend on this)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="liftrisk", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("niosh", help="RWL / LI / risk for one lifting task")
    _common(p, corpus=False)
    p.add_argument("--load", type=float, help="load (lb or kg)")
    p.add_argument("--h", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--coupling", default="Good")
    p.add_argument("--freq", type=float, default=1.0, help="lifts per minute")
    p.add_argument("--duration-class", default="UpTo1h", help="UpTo1h, UpTo2h or UpTo8h")
    p.add_argument("--task-manifest", help="read the task from a manifest CSV instead")
    p.add_argument("--session", help="session_id row of --task-manifest")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_niosh)

    p = sub.add_parser("synth", help="write a synthetic corpus (manifest.csv + recordings)")
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="build a feature dataset CSV")
    _common(p)
    p.add_argument("--window", help="window size in seconds")
    p.set_defaults(func=cmd_extract)

    for name, func, helptext in (
        ("train", cmd_train, "fit one model and pickle it"),
        ("eval", cmd_eval, "evaluate a pickled model, or run repeated holdout for --algo"),
        ("sweep-k", cmd_sweep_k, "KNN accuracy for k = 1..k-max on paired splits"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        _validation(p)
        p.add_argument("--data", help="dataset CSV (default: extract from the corpus)")
        p.add_argument("--window", help="window size in seconds when extracting (default 0.5)")
        p.add_argument("--algo", help="dt, svm, knn[:k] or rf")
        if name == "eval":
            p.add_argument("--model", help="pickled model from 'train'")
            p.add_argument("--json", action="store_true")
        if name == "sweep-k":
            p.add_argument("--k-max", type=int, help="largest k (default 27)")
        p.set_defaults(func=func)

    p = sub.add_parser("run", help="full pipeline: every window size x algorithm")
    _common(p)
    _validation(p)
    p.add_argument("--window", help="comma-separated window sizes (default 1.0,0.5,0.25)")
    p.add_argument("--algo", help="comma-separated algorithms (default dt,svm,knn,rf)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report-li", help="per-session LI vs frequency-domain average peak CSV")
    _common(p)
    p.set_defaults(func=cmd_report_li)
    return parser


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = make_parser().parse_args(argv)
        if args.command in ("train", "eval", "sweep-k") and args.window is None:
            cfg = read_config(args.config) if args.config else {}
            if "window" not in cfg:
                args.window = "0.5"
        return args.func(args, out)
    except ValidationError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except DataError as exc:
        err.write(f"data error: {exc}\n")
        return EXIT_DATA
    except (ConvergenceError, LiftRiskError) as exc:
        err.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        err.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
