"""Per-statement text metrics, class distribution, and metric correlations.

The four metrics are statement_length (characters), num_words (whitespace
tokens), avg_word_length (mean characters per word), and vocabulary_size
(distinct lowercased words).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, localcontext
from typing import Sequence

import numpy as np

from .corpus import DatasetError, DatasetTable

METRIC_NAMES = ("statement_length", "num_words", "avg_word_length", "vocabulary_size")


@dataclass(frozen=True)
class TextMetrics:
    statement_length: int
    num_words: int
    avg_word_length: float
    vocabulary_size: int

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (
            float(self.statement_length),
            float(self.num_words),
            self.avg_word_length,
            float(self.vocabulary_size),
        )


@dataclass(frozen=True)
class ClassShare:
    name: str
    count: int
    percentage: float  # 100*count/total, rounded half-up to one decimal


@dataclass(frozen=True)
class ClassDistribution:
    entries: tuple[ClassShare, ...]
    total: int


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pairwise Pearson coefficients; degenerate marks zero-variance columns."""

    values: tuple[tuple[float, ...], ...]
    degenerate: tuple[bool, ...]


def extract_text_metrics(text: str) -> TextMetrics:
    """Compute the four metrics; words are maximal non-whitespace runs."""
    words = text.split()
    num_words = len(words)
    if num_words == 0:
        return TextMetrics(len(text), 0, 0.0, 0)
    avg_word_length = sum(len(w) for w in words) / num_words
    vocabulary_size = len({w.lower() for w in words})
    return TextMetrics(len(text), num_words, avg_word_length, vocabulary_size)


def _percentage(count: int, total: int) -> float:
    # Exact rational before rounding; half-up at one decimal mirrors the
    # distribution figure's formatting.
    with localcontext() as ctx:
        ctx.prec = 50
        share = Decimal(100 * count) / Decimal(total)
        return float(share.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def class_distribution(table: DatasetTable) -> ClassDistribution:
    """Count records per condition, ordered by descending count then name."""
    if not table.records:
        raise DatasetError("cannot summarize an empty dataset")
    counts: dict[str, int] = {}
    for record in table.records:
        counts[record.label] = counts.get(record.label, 0) + 1
    total = len(table.records)
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    entries = tuple(
        ClassShare(name, count, _percentage(count, total)) for name, count in ordered
    )
    return ClassDistribution(entries, total)


def pearson_correlation(columns: Sequence[Sequence[float]]) -> CorrelationMatrix:
    """Pairwise Pearson product-moment coefficients of equal-length columns.

    Zero-variance columns correlate 0.0 with every other column (1.0 with
    themselves) and set their degenerate flag instead of producing NaN.
    """
    arrays = [np.asarray(col, dtype=np.float64) for col in columns]
    if not arrays:
        raise ValueError("need at least one column")
    length = arrays[0].shape[0]
    if any(a.ndim != 1 or a.shape[0] != length for a in arrays):
        raise ValueError("columns must be one-dimensional and equal-length")
    if length < 2:
        raise ValueError(f"need at least 2 rows, got {length}")

    centered = [a - a.mean() for a in arrays]
    sq_sums = [float(c @ c) for c in centered]
    degenerate = tuple(s == 0.0 for s in sq_sums)

    k = len(arrays)
    values = [[0.0] * k for _ in range(k)]
    for i in range(k):
        values[i][i] = 1.0
        for j in range(i + 1, k):
            if degenerate[i] or degenerate[j]:
                r = 0.0
            else:
                r = float(centered[i] @ centered[j]) / np.sqrt(sq_sums[i] * sq_sums[j])
                r = min(1.0, max(-1.0, r))
            values[i][j] = values[j][i] = r
    return CorrelationMatrix(tuple(tuple(row) for row in values), degenerate)
