"""Command-line interface: train, predict, stats.

Exit codes: 0 success, 1 internal failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .binio import ModelFormatError
from .corpus import DatasetError, load_dataset
from .pipeline import (
    ConfigError,
    StageError,
    dataset_statistics,
    load_config,
    load_trained_model,
    predict_statement,
    render_statistics,
    train_pipeline,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moodpipe",
        description="Text classification pipeline: tokenize, encode, boost.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model from a config file")
    train.add_argument("--config", required=True, help="path to a JSON config file")

    predict = sub.add_parser("predict", help="classify statements with a trained model")
    predict.add_argument("--model", required=True, help="directory written by train")
    source = predict.add_mutually_exclusive_group(required=True)
    source.add_argument("--text", help="one statement to classify")
    source.add_argument("--input", help="file with one statement per line")

    stats = sub.add_parser("stats", help="dataset distribution and text metrics")
    stats.add_argument("--data", required=True, help="dataset file (JSONL or CSV)")
    stats.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _cmd_train(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"moodpipe train: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not Path(config.dataset).exists():
        print(
            f"moodpipe train: load-dataset: dataset file not found: {config.dataset}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    try:
        result = train_pipeline(config)
    except StageError as exc:
        print(f"moodpipe train: {exc.stage}: {exc}", file=sys.stderr)
        usage_stages = {"load-dataset", "encode-labels", "split"}
        return EXIT_USAGE if exc.stage in usage_stages else EXIT_INTERNAL
    print(f"model written to {result.output_dir}")
    print(
        f"test accuracy {result.accuracy:.4f} "
        f"(best iteration {result.best_iteration} of {result.completed_rounds} rounds)"
    )
    return EXIT_OK


def _cmd_predict(args: argparse.Namespace) -> int:
    try:
        model = load_trained_model(args.model)
    except (FileNotFoundError, ModelFormatError, ValueError) as exc:
        print(f"moodpipe predict: cannot load model: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, FileNotFoundError) else EXIT_INTERNAL

    if args.text is not None:
        statements = [args.text]
    else:
        path = Path(args.input)
        if not path.exists():
            print(f"moodpipe predict: input file not found: {path}", file=sys.stderr)
            return EXIT_USAGE
        statements = path.read_text(encoding="utf-8").splitlines()

    cleaned = [s for s in statements if s.strip()]
    if not cleaned:
        print("moodpipe predict: empty input text", file=sys.stderr)
        return EXIT_USAGE
    try:
        for statement in cleaned:
            label, probabilities = predict_statement(model, statement)
            rendered = " ".join(f"{p:.4f}" for p in probabilities)
            print(f"{label}\t{rendered}")
    except Exception as exc:
        print(f"moodpipe predict: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    path = Path(args.data)
    if not path.exists():
        print(f"moodpipe stats: dataset file not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    try:
        table = load_dataset(path)
        stats = dataset_statistics(table)
    except DatasetError as exc:
        print(f"moodpipe stats: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "json":
        print(json.dumps(stats, indent=2, sort_keys=True))
    else:
        print(render_statistics(stats), end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {"train": _cmd_train, "predict": _cmd_predict, "stats": _cmd_stats}
    return handlers[args.command](args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
