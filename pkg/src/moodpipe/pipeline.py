"""End-to-end orchestration: configuration, training, prediction, statistics.

A training run parses the dataset, encodes labels, splits off the test set,
builds the subword vocabulary from the training split only, seeds the
encoder, embeds every statement, carves a validation set out of the training
split for early stopping, boosts the tree ensemble, evaluates on the test
split, and writes all artifacts (vocab.txt, encoder.bin, model.bin,
report.txt, report.json, confusion.csv, config.snapshot.json).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    DatasetTable,
    encode_labels,
    load_dataset,
    stratified_split,
    stratified_split_indices,
)
from .encoder import (
    EncoderConfig,
    EncoderWeights,
    encoder_forward,
    init_weights,
    load_weights,
    save_weights,
)
from .evaluation import (
    ClassificationReport,
    classification_report,
    confusion_matrix,
    confusion_to_csv,
    render_report,
    report_to_dict,
)
from .gbdt import BoostConfig, BoostedEnsemble, load_model, predict_proba, save_model, train_ensemble
from .text_features import METRIC_NAMES, class_distribution, extract_text_metrics, pearson_correlation
from .tokenizer import SubwordVocabulary, build_vocab, load_vocab, normalize, save_vocab, tokenize


class ConfigError(ValueError):
    """Unparseable pipeline configuration or unknown keys."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class TokenizerSettings:
    max_len: int = 128
    vocab_max_size: int = 4096
    min_freq: int = 1


@dataclass(frozen=True)
class EncoderSettings:
    num_layers: int = 2
    d_model: int = 64
    num_heads: int = 4
    d_ff: int = 256
    layernorm_epsilon: float = 1e-12


@dataclass(frozen=True)
class PipelineConfig:
    dataset: str
    output_dir: str
    test_fraction: float = 0.2
    valid_fraction: float = 0.1
    seed: int = 0
    tokenizer: TokenizerSettings = field(default_factory=TokenizerSettings)
    encoder: EncoderSettings = field(default_factory=EncoderSettings)
    boost: BoostConfig = field(default_factory=BoostConfig)

    def __post_init__(self) -> None:
        for name in ("test_fraction", "valid_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must be in (0, 1), got {value}")


_TOKENIZER_KEYS = {"max_len", "vocab_max_size", "min_freq"}
_ENCODER_KEYS = {"num_layers", "d_model", "num_heads", "d_ff", "layernorm_epsilon"}
_BOOST_KEYS = {
    "num_rounds", "learning_rate", "early_stopping_rounds",
    "max_depth", "lambda", "gamma", "min_child_hessian",
}
_TOP_KEYS = {
    "dataset", "output_dir", "test_fraction", "valid_fraction",
    "seed", "tokenizer", "encoder", "boost",
}


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


def config_from_dict(raw: dict) -> PipelineConfig:
    """Build a PipelineConfig from parsed JSON; unknown keys are errors."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")
    for required in ("dataset", "output_dir"):
        if required not in raw:
            raise ConfigError(f"config is missing required key '{required}'")
    tok_raw = raw.get("tokenizer", {})
    _check_keys(tok_raw, _TOKENIZER_KEYS, "tokenizer")
    enc_raw = raw.get("encoder", {})
    _check_keys(enc_raw, _ENCODER_KEYS, "encoder")
    boost_raw = dict(raw.get("boost", {}))
    _check_keys(boost_raw, _BOOST_KEYS, "boost")
    if "lambda" in boost_raw:
        boost_raw["reg_lambda"] = boost_raw.pop("lambda")
    try:
        return PipelineConfig(
            dataset=raw["dataset"],
            output_dir=raw["output_dir"],
            test_fraction=raw.get("test_fraction", 0.2),
            valid_fraction=raw.get("valid_fraction", 0.1),
            seed=raw.get("seed", 0),
            tokenizer=TokenizerSettings(**tok_raw),
            encoder=EncoderSettings(**enc_raw),
            boost=BoostConfig(**boost_raw),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> PipelineConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(raw)


def config_to_dict(config: PipelineConfig) -> dict:
    """Fully-resolved snapshot with every default materialized."""
    return {
        "dataset": config.dataset,
        "output_dir": config.output_dir,
        "test_fraction": config.test_fraction,
        "valid_fraction": config.valid_fraction,
        "seed": config.seed,
        "tokenizer": {
            "max_len": config.tokenizer.max_len,
            "vocab_max_size": config.tokenizer.vocab_max_size,
            "min_freq": config.tokenizer.min_freq,
        },
        "encoder": {
            "num_layers": config.encoder.num_layers,
            "d_model": config.encoder.d_model,
            "num_heads": config.encoder.num_heads,
            "d_ff": config.encoder.d_ff,
            "layernorm_epsilon": config.encoder.layernorm_epsilon,
        },
        "boost": {
            "num_rounds": config.boost.num_rounds,
            "learning_rate": config.boost.learning_rate,
            "early_stopping_rounds": config.boost.early_stopping_rounds,
            "max_depth": config.boost.max_depth,
            "lambda": config.boost.reg_lambda,
            "gamma": config.boost.gamma,
            "min_child_hessian": config.boost.min_child_hessian,
        },
    }


def embed_statements(
    texts: Sequence[str],
    vocab: SubwordVocabulary,
    weights: EncoderWeights,
    max_len: int,
) -> np.ndarray:
    """Tokenize and encode each statement into one embedding row, in order."""
    rows = [
        encoder_forward(tokenize(text, vocab, max_len), weights) for text in texts
    ]
    return np.stack(rows) if rows else np.zeros((0, weights.config.d_model))


@dataclass
class TrainedModel:
    vocab: SubwordVocabulary
    weights: EncoderWeights
    ensemble: BoostedEnsemble

    @property
    def label_names(self) -> tuple[str, ...]:
        return self.ensemble.label_names


@dataclass
class TrainResult:
    output_dir: Path
    report: ClassificationReport
    accuracy: float
    best_iteration: int
    completed_rounds: int


def _stage(name: str, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, str(exc)) from exc


def train_pipeline(config: PipelineConfig) -> TrainResult:
    """Run the full training pipeline and write all artifacts."""
    dataset_path = Path(config.dataset)
    if not dataset_path.exists():
        raise StageError("load-dataset", f"dataset file not found: {dataset_path}")
    table = _stage("load-dataset", load_dataset, dataset_path)
    labels, table = _stage("encode-labels", encode_labels, table)
    train_table, test_table = _stage(
        "split", stratified_split, table, config.test_fraction, config.seed
    )

    vocab = _stage(
        "build-vocab",
        lambda: build_vocab(
            (normalize(t) for t in train_table.texts()),
            config.tokenizer.vocab_max_size,
            config.tokenizer.min_freq,
        ),
    )

    encoder_config = EncoderConfig(
        vocab_size=len(vocab),
        max_len=config.tokenizer.max_len,
        num_layers=config.encoder.num_layers,
        d_model=config.encoder.d_model,
        num_heads=config.encoder.num_heads,
        d_ff=config.encoder.d_ff,
        layernorm_epsilon=config.encoder.layernorm_epsilon,
    )
    weights = _stage("init-encoder", init_weights, encoder_config, config.seed)

    train_x = _stage(
        "embed", embed_statements, train_table.texts(), vocab, weights,
        config.tokenizer.max_len,
    )
    test_x = _stage(
        "embed", embed_statements, test_table.texts(), vocab, weights,
        config.tokenizer.max_len,
    )
    train_y = np.asarray(train_table.labels_encoded)
    test_y = np.asarray(test_table.labels_encoded)

    core_idx, valid_idx = _stage(
        "carve-valid",
        stratified_split_indices,
        [r.label for r in train_table.records],
        config.valid_fraction,
        config.seed,
    )
    ensemble = _stage(
        "train-ensemble",
        train_ensemble,
        train_x[core_idx], train_y[core_idx],
        train_x[valid_idx], train_y[valid_idx],
        config.boost, len(labels), labels.names,
    )

    predictions = _stage(
        "evaluate",
        lambda: [int(np.argmax(predict_proba(ensemble, x))) for x in test_x],
    )
    cm = confusion_matrix(test_y.tolist(), predictions, len(labels))
    report = classification_report(cm, labels.names)

    out_dir = Path(config.output_dir)
    _stage("write-artifacts", out_dir.mkdir, parents=True, exist_ok=True)

    def write_artifacts() -> None:
        save_vocab(vocab, out_dir / "vocab.txt")
        (out_dir / "encoder.bin").write_bytes(save_weights(weights))
        (out_dir / "model.bin").write_bytes(save_model(ensemble))
        (out_dir / "report.txt").write_text(render_report(report), encoding="utf-8")
        (out_dir / "report.json").write_text(
            json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (out_dir / "confusion.csv").write_text(
            confusion_to_csv(cm, labels.names), encoding="utf-8"
        )
        (out_dir / "config.snapshot.json").write_text(
            json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    _stage("write-artifacts", write_artifacts)
    return TrainResult(
        output_dir=out_dir,
        report=report,
        accuracy=float(report.accuracy),
        best_iteration=ensemble.best_iteration,
        completed_rounds=len(ensemble.rounds),
    )


def load_trained_model(model_dir: str | Path) -> TrainedModel:
    """Load the three model files and check they agree on dimensions."""
    model_dir = Path(model_dir)
    vocab = load_vocab(model_dir / "vocab.txt")
    weights = load_weights((model_dir / "encoder.bin").read_bytes())
    ensemble = load_model((model_dir / "model.bin").read_bytes())
    if weights.config.vocab_size != len(vocab):
        raise ValueError(
            f"vocabulary size {len(vocab)} does not match encoder "
            f"({weights.config.vocab_size})"
        )
    if ensemble.num_features != weights.config.d_model:
        raise ValueError(
            f"ensemble expects {ensemble.num_features} features but the "
            f"encoder produces {weights.config.d_model}"
        )
    if len(ensemble.label_names) != ensemble.num_classes:
        raise ValueError("model file carries no usable label names")
    return TrainedModel(vocab, weights, ensemble)


def predict_statement(model: TrainedModel, text: str) -> tuple[str, np.ndarray]:
    """Predict the condition name and class probabilities for one statement."""
    tokens = tokenize(text, model.vocab, model.weights.config.max_len)
    embedding = encoder_forward(tokens, model.weights)
    probabilities = predict_proba(model.ensemble, embedding)
    return model.label_names[int(np.argmax(probabilities))], probabilities


def dataset_statistics(table: DatasetTable) -> dict:
    """Class distribution, per-metric summary, and metric correlations."""
    distribution = class_distribution(table)
    metrics = [extract_text_metrics(r.text) for r in table.records]
    columns = list(zip(*(m.as_tuple() for m in metrics)))
    summary = {}
    for name, column in zip(METRIC_NAMES, columns):
        summary[name] = {
            "mean": float(np.mean(column)),
            "min": float(np.min(column)),
            "max": float(np.max(column)),
        }
    if len(table) >= 2:
        corr = pearson_correlation(columns)
        correlation = {
            "columns": list(METRIC_NAMES),
            "values": [list(row) for row in corr.values],
            "degenerate": list(corr.degenerate),
        }
    else:
        correlation = {
            "columns": list(METRIC_NAMES),
            "values": None,
            "degenerate": [True] * len(METRIC_NAMES),
        }
    return {
        "total": distribution.total,
        "distribution": [
            {"name": e.name, "count": e.count, "percentage": e.percentage}
            for e in distribution.entries
        ],
        "metrics": summary,
        "correlation": correlation,
    }


def render_statistics(stats: dict) -> str:
    """Human-readable rendering of dataset_statistics output."""
    lines = [f"Class distribution ({stats['total']} statements):"]
    name_width = max(len(e["name"]) for e in stats["distribution"])
    for entry in stats["distribution"]:
        lines.append(
            f"  {entry['name']:<{name_width}}  {entry['count']:>6}  "
            f"{entry['percentage']:>5.1f}%"
        )
    lines.append("")
    lines.append("Text metrics (mean / min / max):")
    for name in METRIC_NAMES:
        m = stats["metrics"][name]
        lines.append(
            f"  {name:<18} {m['mean']:>10.3f}  {m['min']:>10.3f}  {m['max']:>10.3f}"
        )
    lines.append("")
    lines.append("Correlation matrix (statement_length, num_words, avg_word_length, vocabulary_size):")
    corr = stats["correlation"]
    if corr["values"] is None:
        lines.append("  (needs at least 2 records)")
    else:
        for name, row in zip(corr["columns"], corr["values"]):
            cells = "  ".join(f"{v:+.4f}" for v in row)
            lines.append(f"  {name:<18} {cells}")
        if any(corr["degenerate"]):
            flagged = [
                name for name, d in zip(corr["columns"], corr["degenerate"]) if d
            ]
            lines.append(f"  zero-variance columns: {', '.join(flagged)}")
    return "\n".join(lines) + "\n"
