"""``tedkit`` command line: generate data, train, evaluate, predict, repeat, reproduce the table.

Option values resolve as: command-line flag, then the ``--config`` YAML file
(a command section such as ``train:`` first, then top-level keys), then
``TEDKIT_*`` environment settings, then built-in defaults. Logs go to stderr;
reports go to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from pydantic import ValidationError

from tedkit import __version__
from tedkit.codec import codec_to_json, explanations_for, fit_codec
from tedkit.config import load_protocol, read_yaml, settings
from tedkit.datasets import loan, tictactoe
from tedkit.datasets.base import Dataset
from tedkit.datasets.io import (
    read_codec,
    read_dataset,
    read_json,
    sidecar_path,
    write_codec,
    write_dataset,
    write_json,
)
from tedkit.errors import ConfigError, ExperimentError, TedkitError
from tedkit.learners import LEARNER_NAMES, make_learner
from tedkit.learners.base import Learner
from tedkit.models import ExperimentReport, Mode, ProtocolConfig, RunConfig, SplitSpec
from tedkit.pipeline.experiment import evaluate, run_repeated
from tedkit.pipeline.report import (
    aggregate_to_text,
    experiment_to_text,
    table1_to_text,
    to_document,
    to_json,
)
from tedkit.pipeline.split import split, split_indices
from tedkit.pipeline.table1 import reproduce_table1
from tedkit.pipeline.ted import (
    DatasetInfo,
    TedModel,
    fit_baseline,
    fit_ted,
    load_model_document,
    model_document,
)
from tedkit.utils.logging import configure_logging

logger = structlog.get_logger(__name__)

DEFAULT_LEARNER = {"tictactoe": "mlp", "loan": "forest"}
SPLITS = ("train", "test", "all", "both")
SEEDS_HELP = (
    "comma-separated seeds or inclusive ranges, e.g. 7,8,9 or 7-16; "
    "default: the protocol's n_seeds seeds starting at --seed"
)


# ---------------------------------------------------------------------------
# Option resolution
# ---------------------------------------------------------------------------


def _file_options(path: Path | None, command: str) -> dict[str, Any]:
    if path is None:
        return {}
    raw = read_yaml(path)
    section = raw.get(command) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {command!r} of {path} must be a mapping")
    top = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    return {**top, **section}


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge flags, config file and settings into a :class:`RunConfig`.

    Raises:
        ConfigError: If the config file is unreadable or a value is invalid.
    """
    from_file = {
        k.replace("-", "_"): v for k, v in _file_options(args.config, args.command).items()
    }
    flags = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "handler", "config", "log_level") and v is not None
    }
    merged = {**from_file, **flags}
    try:
        seed = int(merged.pop("seed", settings.seed))
        out = merged.pop("out", None)
        return RunConfig(
            command=args.command,
            seed=seed,
            out=Path(out) if out is not None else None,
            options=merged,
        )
    except (TypeError, ValueError, ValidationError) as exc:
        raise ConfigError(f"invalid option value: {exc}") from exc


def _readable(value: object, what: str) -> Path:
    path = Path(str(value))
    if not path.is_file():
        raise ConfigError(f"{what} {path} does not exist or is not a file")
    return path


def _writable(path: Path | None, what: str) -> Path:
    if path is None:
        raise ConfigError(f"--out is required: where to write the {what}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create directory for {path}: {exc}") from exc
    if path.is_dir():
        raise ConfigError(f"{what} path {path} is a directory")
    return path


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    _writable(out, "report")
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from exc
    logger.info("cli.report_written", path=str(out))


def _dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _report_target(run: RunConfig) -> None:
    if run.out is not None:
        _writable(run.out, "report")


def _protocol(run: RunConfig) -> ProtocolConfig:
    path = run.option("protocol")
    return load_protocol(Path(str(path)) if path is not None else None)


def _format(run: RunConfig) -> str:
    fmt = run.option("format", "text")
    if fmt not in ("json", "text"):
        raise ConfigError(f"unknown format {fmt!r}; choose json or text")
    return str(fmt)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(run: RunConfig) -> int:
    """Write a generated dataset CSV and, for TED data, its codec sidecar."""
    target = run.option("target")
    out = _writable(run.out, "dataset")
    with_explanations = bool(run.option("with_explanations", False))
    protocol = _protocol(run)

    if target == "tictactoe":
        dataset = tictactoe.build_dataset(with_explanations=True)
    elif target == "loan":
        n = int(run.option("n", protocol.loan.n))
        disagreement = run.option("raw_disagreement")
        if disagreement is None:
            dataset = loan.generate_synthetic(n, run.seed)
        else:
            raw = loan.generate_raw(n, run.seed, float(disagreement))
            logger.info("loan.raw_fidelity", fidelity=round(loan.rule_fidelity(raw), 4))
            dataset, flips = loan.relabel_for_consistency(raw)
            print(f"relabeled {flips} of {n} instances for rule consistency")
    else:
        raise ConfigError(f"unknown target {target!r}; choose tictactoe or loan")

    if not with_explanations:
        dataset = dataset.without_explanations()
    write_dataset(dataset, out)
    print(f"wrote {len(dataset)} instances to {out}")
    counts = (
        tictactoe.label_board_counts(dataset)
        if dataset.kind == "tictactoe"
        else dataset.class_counts()
    )
    for name, count in counts.items():
        print(f"  {name}: {count}")
    if dataset.has_explanations:
        codec = fit_codec(
            dataset, labels=dataset.label_names, explanations=dataset.explanation_names
        )
        write_codec(codec, sidecar_path(out))
        print(f"{codec.n_composites} composite classes; codec written to {sidecar_path(out)}")
    return 0


def _parse_seeds(value: object) -> list[int]:
    """Seed list from ``"7,8,9"``, ``"7-16"`` (inclusive), a mix of both, or a YAML list."""
    parts = value if isinstance(value, list) else str(value).replace(" ", "").split(",")
    seeds: list[int] = []
    try:
        for part in parts:
            if isinstance(part, str) and "-" in part.lstrip("-"):
                low, high = (int(v) for v in part.split("-", 1))
                if high < low:
                    raise ConfigError(f"empty seed range {part!r}")
                seeds.extend(range(low, high + 1))
            elif part != "":
                seeds.append(int(part))
    except ValueError as exc:
        raise ConfigError(f"seeds must be integers or ranges like 7-16: {exc}") from exc
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds must be non-negative")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"duplicate seeds in {value!r}")
    if len(seeds) < 2:
        raise ConfigError(f"--seeds needs at least 2 seeds, got {len(seeds)}")
    return seeds


def _seeds(run: RunConfig, count: int) -> list[int]:
    value = run.option("seeds")
    if value is None:
        return list(range(run.seed, run.seed + count))
    return _parse_seeds(value)


def _training_setup(
    run: RunConfig, dataset: Dataset, protocol: ProtocolConfig, forest_jobs: int
) -> tuple[Dataset, Mode, str, Learner, bool, float]:
    """Shared by ``train`` and ``repeat``.

    Returns:
        ``(dataset to fit, mode, learner name, learner, derive_y_from_e, train fraction)``.
    """
    mode = run.option("mode", "ted")
    if mode not in ("baseline", "ted"):
        raise ConfigError(f"unknown mode {mode!r}")
    learner_name = str(run.option("learner", DEFAULT_LEARNER.get(dataset.kind, "forest")))
    derive = run.option("derive_y_from_e")
    if derive is None:
        derive = mode == "ted" and dataset.kind == "loan" and protocol.loan.derive_y_from_e

    if mode == "baseline" and dataset.has_explanations:
        if not run.option("drop_explanations", False):
            raise ExperimentError(
                "dataset has explanations; pass --drop-explanations to train a baseline model"
            )
        dataset = dataset.without_explanations()
    if mode == "ted" and not dataset.has_explanations:
        raise ExperimentError("TED mode needs a dataset with an explanation column")

    try:
        fraction = SplitSpec(
            train_fraction=float(run.option("train_fraction", protocol.train_fraction))
        ).train_fraction
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid train fraction: {exc}") from exc
    learner = make_learner(
        learner_name,
        mlp=protocol.tictactoe.mlp,
        forest=protocol.loan.forest.model_copy(update={"n_jobs": forest_jobs}),
    )
    return dataset, mode, learner_name, learner, bool(derive), fraction


def cmd_train(run: RunConfig) -> int:
    """Fit a baseline or TED model on the train split of a dataset."""
    dataset_path = _readable(run.option("dataset"), "dataset")
    out = _writable(run.out, "model")
    source = read_dataset(dataset_path)
    dataset, mode, learner_name, learner, derive, fraction = _training_setup(
        run, source, _protocol(run), settings.n_jobs
    )
    spec = SplitSpec(train_fraction=fraction, seed=run.seed)
    train, _ = split(dataset, spec)
    if mode == "ted":
        model = fit_ted(train, learner, run.seed, derive)
    else:
        model = fit_baseline(train, learner, run.seed)
    write_json(model_document(model, learner_name, DatasetInfo.of(source, spec)), out)
    logger.info("cli.model_written", path=str(out), mode=mode, learner=learner_name)
    print(f"trained {mode} {learner_name} model on {len(train)} instances; wrote {out}")
    if isinstance(model, TedModel):
        print(f"  {model.codec.n_composites} composite classes")
    return 0


def cmd_repeat(run: RunConfig) -> int:
    """Train and score one model per seed on a dataset; print per-seed and mean (std) rows."""
    _report_target(run)
    source = read_dataset(_readable(run.option("dataset"), "dataset"))
    fmt = _format(run)
    protocol = _protocol(run)
    # Parallelism lives at the seed level.
    dataset, mode, _, learner, derive, fraction = _training_setup(run, source, protocol, 1)
    report = run_repeated(
        dataset,
        learner,
        mode,
        _seeds(run, protocol.loan.n_seeds),
        train_fraction=fraction,
        derive_y_from_e=derive,
        n_jobs=int(run.option("n_jobs", settings.n_jobs)),
    )
    timings = bool(run.option("include_timings", False))
    text = to_json(report, timings) if fmt == "json" else aggregate_to_text(report, timings)
    _emit(text, run.out)
    return 0


def _eval_parts(
    dataset: Dataset, info: DatasetInfo, requested: str | None
) -> dict[str, Dataset]:
    same = dataset.digest() == info.digest and info.split is not None
    choice = requested or ("both" if same else "all")
    if choice not in SPLITS:
        raise ConfigError(f"unknown split {choice!r}; choose from {', '.join(SPLITS)}")
    if choice == "all":
        return {"all": dataset}
    if not same:
        raise ExperimentError(
            f"--split {choice} needs the dataset the model was trained on (digest differs)"
        )
    train_idx, test_idx = split_indices(len(dataset), info.split)
    parts = {"train": dataset.subset(train_idx), "test": dataset.subset(test_idx)}
    return parts if choice == "both" else {choice: parts[choice]}


def cmd_eval(run: RunConfig) -> int:
    """Score a model on a dataset, by split when it is the training dataset."""
    _report_target(run)
    doc = read_json(_readable(run.option("model"), "model"))
    dataset = read_dataset(_readable(run.option("dataset"), "dataset"))
    fmt = _format(run)
    model, learner, info = load_model_document(doc)
    n_train = len(split_indices(info.n, info.split)[0]) if info.split else info.n
    seed = info.split.seed if info.split else run.seed
    reports: dict[str, ExperimentReport] = {
        name: evaluate(model, part, learner, seed, n_train)
        for name, part in _eval_parts(dataset, info, run.option("split")).items()
    }
    timings = bool(run.option("include_timings", False))
    if fmt == "json":
        splits = {name: to_document(report, timings) for name, report in reports.items()}
        text = _dumps({"splits": splits})
    else:
        text = "\n".join(
            f"[{name}]\n{experiment_to_text(report, timings)}" for name, report in reports.items()
        )
    _emit(text, run.out)
    return 0


def _parse_row(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace(",", " ").split()], dtype=np.float64)
    except ValueError as exc:
        raise ConfigError(f"feature row must be numbers separated by commas: {exc}") from exc


def cmd_predict(run: RunConfig) -> int:
    """Print the decision and explanation a TED model gives for one feature row."""
    _report_target(run)
    model, _, info = load_model_document(read_json(_readable(run.option("model"), "model")))
    if not isinstance(model, TedModel):
        raise ExperimentError("model has no explanations")
    board = run.option("board")
    if board is not None:
        if info.kind != "tictactoe":
            raise ConfigError("--board only applies to tic-tac-toe models")
        parsed = tictactoe.Board.from_string(str(board))
        parsed.require_legal_nonterminal()
        row = tictactoe.featurize(parsed).astype(np.float64)
    elif run.option("row") is not None:
        row = _parse_row(str(run.option("row")))
        if info.kind == "tictactoe":
            tictactoe.board_from_features(row).require_legal_nonterminal()
    else:
        raise ConfigError("give a feature row or --board")

    predictions = model.predict(row.reshape(1, -1))
    label = model.codec.labels[int(predictions.labels[0])]
    explanation = model.codec.explanations[int(predictions.explanations[0])]
    score = float(predictions.scores[0])
    if _format(run) == "json":
        text = _dumps(
            {
                "label": label,
                "explanation": explanation,
                "composite": int(predictions.composites[0]),
                "score": score,
            }
        )
    elif info.kind == "tictactoe":
        text = f"{tictactoe.describe_move(label, explanation)} (score {score:.3f})\n"
    else:
        text = f"{label} — {explanation} (score {score:.3f})\n"
    _emit(text, run.out)
    return 0


def cmd_reproduce_table1(run: RunConfig) -> int:
    """Run the full protocol; exit status 0 only if every tolerance check passes."""
    _report_target(run)
    protocol = _protocol(run)
    fmt = _format(run)
    timings = bool(run.option("include_timings", False))
    n_jobs = int(run.option("n_jobs", settings.n_jobs))
    seeds = _seeds(run, protocol.loan.n_seeds)
    report = reproduce_table1(protocol, run.seed, n_jobs=n_jobs, seeds=seeds)
    text = to_json(report, timings) if fmt == "json" else table1_to_text(report, timings)
    _emit(text, run.out)
    return 0 if report.passed else 1


def cmd_vocab(run: RunConfig) -> int:
    """List, per label, the explanations a codec can emit."""
    _report_target(run)
    codec = read_codec(_readable(run.option("codec"), "codec"))
    if _format(run) == "json":
        doc = {
            "functional": codec.e_to_y is not None,
            "composites": codec.n_composites,
            "labels": {
                name: [e.name for e in explanations_for(codec, y)]
                for y, name in enumerate(codec.labels)
            },
            "codec": codec_to_json(codec),
        }
        _emit(_dumps(doc), run.out)
        return 0
    lines = [f"{codec.n_composites} composite classes"]
    lines += [f"  {c}: {codec.composite_name(c)}" for c in range(codec.n_composites)]
    for y, name in enumerate(codec.labels):
        reasons = [e.name for e in explanations_for(codec, y)]
        lines.append(f"{name}: {', '.join(reasons) if reasons else '(never seen)'}")
    functional = "yes" if codec.e_to_y is not None else "no"
    lines.append(f"explanations determine labels: {functional}")
    _emit("\n".join(lines) + "\n", run.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="default: TEDKIT_SEED or 7")
    common.add_argument("--out", type=Path, default=None, help="output path")
    common.add_argument("--config", type=Path, default=None, help="YAML options file")
    common.add_argument("--protocol", type=Path, default=None, help="protocol YAML")
    return common


def _reporting() -> argparse.ArgumentParser:
    reporting = argparse.ArgumentParser(add_help=False)
    reporting.add_argument("--format", choices=("json", "text"), default=None)
    reporting.add_argument("--include-timings", action="store_true", default=None)
    return reporting


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tedkit",
        description="Train classifiers that predict a decision together with its explanation.",
    )
    parser.add_argument("--version", action="version", version=f"tedkit {__version__}")
    parser.add_argument("--log-level", default=None, help="default: TEDKIT_LOG_LEVEL or INFO")
    sub = parser.add_subparsers(dest="command", required=True)
    common, reporting = _common(), _reporting()

    gen = sub.add_parser("gen", parents=[common], help="generate a dataset")
    gen.add_argument("target", choices=("tictactoe", "loan"))
    gen.add_argument("--n", type=int, default=None, help="loan: number of applications")
    gen.add_argument("--with-explanations", action="store_true", default=None)
    gen.add_argument(
        "--raw-disagreement",
        type=float,
        default=None,
        help="loan: start from labels that disagree with the rules on this fraction, "
        "then relabel for consistency",
    )
    gen.set_defaults(handler=cmd_gen)

    train = sub.add_parser("train", parents=[common], help="train a model")
    train.add_argument("dataset")
    train.add_argument("--learner", choices=LEARNER_NAMES, default=None)
    train.add_argument("--mode", choices=("baseline", "ted"), default=None)
    train.add_argument(
        "--derive-y-from-e", action=argparse.BooleanOptionalAction, default=None
    )
    train.add_argument("--drop-explanations", action="store_true", default=None)
    train.add_argument("--train-fraction", type=float, default=None)
    train.set_defaults(handler=cmd_train)

    repeat = sub.add_parser(
        "repeat", parents=[common, reporting], help="train and score once per seed"
    )
    repeat.add_argument("dataset")
    repeat.add_argument("--learner", choices=LEARNER_NAMES, default=None)
    repeat.add_argument("--mode", choices=("baseline", "ted"), default=None)
    repeat.add_argument(
        "--derive-y-from-e", action=argparse.BooleanOptionalAction, default=None
    )
    repeat.add_argument("--drop-explanations", action="store_true", default=None)
    repeat.add_argument("--train-fraction", type=float, default=None)
    repeat.add_argument("--seeds", default=None, help=SEEDS_HELP)
    repeat.add_argument("--n-jobs", type=int, default=None, help="default: TEDKIT_N_JOBS")
    repeat.set_defaults(handler=cmd_repeat)

    ev = sub.add_parser("eval", parents=[common, reporting], help="evaluate a model")
    ev.add_argument("model")
    ev.add_argument("dataset")
    ev.add_argument("--split", choices=SPLITS, default=None)
    ev.set_defaults(handler=cmd_eval)

    predict = sub.add_parser("predict", parents=[common, reporting], help="predict one row")
    predict.add_argument("model")
    predict.add_argument("row", nargs="?", default=None, help="comma-separated features")
    predict.add_argument("--board", default=None, help='tic-tac-toe board, e.g. "X.O......"')
    predict.set_defaults(handler=cmd_predict)

    table = sub.add_parser(
        "reproduce-table1", parents=[common, reporting], help="run the full accuracy protocol"
    )
    table.add_argument("--n-jobs", type=int, default=None, help="default: TEDKIT_N_JOBS")
    table.add_argument("--seeds", default=None, help=SEEDS_HELP)
    table.set_defaults(handler=cmd_reproduce_table1)

    vocab = sub.add_parser("vocab", parents=[common, reporting], help="show a codec")
    vocab.add_argument("codec")
    vocab.set_defaults(handler=cmd_vocab)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure_logging(settings.environment, args.log_level or settings.log_level, sys.stderr)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    handler: Callable[[RunConfig], int] = args.handler
    log = logger.bind(command=args.command)
    try:
        run = resolve(args)
        log.info("cli.start", seed=run.seed)
        status = handler(run)
    except TedkitError as exc:
        log.error("cli.failed", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log.info("cli.complete", status=status)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
