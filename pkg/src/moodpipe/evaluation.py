"""Confusion matrix and classification report with macro/weighted averages.

The rendered report is a fixed-width table with one row per class followed
by accuracy, macro avg, and weighted avg rows; values print at two decimals
with half-up rounding.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence


class ReportError(ValueError):
    """Inconsistent prediction lists or an empty matrix."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """cell (i, j) counts instances of true class i predicted as class j."""

    counts: tuple[tuple[int, ...], ...]

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(self.num_classes))

    def row_sum(self, i: int) -> int:
        return sum(self.counts[i])

    def col_sum(self, j: int) -> int:
        return sum(row[j] for row in self.counts)


@dataclass(frozen=True)
class ClassReportRow:
    index: int
    name: str
    precision: float
    recall: float
    f1: float
    support: int
    zero_division: bool = False


@dataclass(frozen=True)
class ClassificationReport:
    rows: tuple[ClassReportRow, ...]
    accuracy: float | None
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    total_support: int

    @classmethod
    def from_rows(
        cls, rows: Sequence[ClassReportRow], accuracy: float | None = None
    ) -> "ClassificationReport":
        """Aggregate per-class rows into macro and support-weighted averages."""
        rows = tuple(rows)
        if not rows:
            raise ReportError("report needs at least one class row")
        k = len(rows)
        total = sum(r.support for r in rows)
        if total == 0:
            raise ReportError("total support is zero")
        macro = [sum(getattr(r, m) for r in rows) / k for m in ("precision", "recall", "f1")]
        weighted = [
            sum(getattr(r, m) * r.support for r in rows) / total
            for m in ("precision", "recall", "f1")
        ]
        return cls(rows, accuracy, *macro, *weighted, total)


def confusion_matrix(
    y_true: Sequence[int], y_pred: Sequence[int], num_classes: int
) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a K x K grid."""
    if len(y_true) != len(y_pred):
        raise ReportError(
            f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted"
        )
    grid = [[0] * num_classes for _ in range(num_classes)]
    for t, p in zip(y_true, y_pred):
        if not (0 <= t < num_classes and 0 <= p < num_classes):
            raise ReportError(f"class id out of range [0, {num_classes}): ({t}, {p})")
        grid[t][p] += 1
    return ConfusionMatrix(tuple(tuple(row) for row in grid))


def classification_report(
    cm: ConfusionMatrix, names: Sequence[str] | None = None
) -> ClassificationReport:
    """Per-class precision/recall/F1/support plus overall aggregates.

    A zero denominator (class never predicted, or zero support) yields 0.0
    and sets the row's zero_division flag.
    """
    total = cm.total()
    if total == 0:
        raise ReportError("confusion matrix is empty")
    rows = []
    for j in range(cm.num_classes):
        hit = cm.counts[j][j]
        predicted = cm.col_sum(j)
        support = cm.row_sum(j)
        flagged = predicted == 0 or support == 0
        precision = hit / predicted if predicted else 0.0
        recall = hit / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        name = names[j] if names is not None else ""
        rows.append(ClassReportRow(j, name, precision, recall, f1, support, flagged))
    accuracy = cm.trace() / total
    return ClassificationReport.from_rows(rows, accuracy)


def _fmt2(value: float) -> str:
    # repr() recovers the shortest decimal; half-up from there mirrors how
    # the printed figures are read.
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_report(report: ClassificationReport) -> str:
    """Fixed-width text table in the classification-report layout."""
    labels = [f"{r.index} {r.name}".strip() for r in report.rows]
    width = max(12, *(len(lbl) for lbl in labels))
    out = io.StringIO()

    def line(label: str, p: str, r: str, f1: str, support: str) -> None:
        out.write(f"{label:>{width}}  {p:>9}  {r:>6}  {f1:>8}  {support:>7}\n")

    line("", "precision", "recall", "f1-score", "support")
    out.write("\n")
    for row, label in zip(report.rows, labels):
        line(label, _fmt2(row.precision), _fmt2(row.recall), _fmt2(row.f1), str(row.support))
    out.write("\n")
    if report.accuracy is not None:
        line("accuracy", "", "", _fmt2(report.accuracy), str(report.total_support))
    line(
        "macro avg",
        _fmt2(report.macro_precision), _fmt2(report.macro_recall),
        _fmt2(report.macro_f1), str(report.total_support),
    )
    line(
        "weighted avg",
        _fmt2(report.weighted_precision), _fmt2(report.weighted_recall),
        _fmt2(report.weighted_f1), str(report.total_support),
    )
    return out.getvalue()


def report_to_dict(report: ClassificationReport) -> dict:
    """Machine-readable report with full-precision values."""
    return {
        "classes": [
            {
                "index": r.index,
                "name": r.name,
                "precision": r.precision,
                "recall": r.recall,
                "f1-score": r.f1,
                "support": r.support,
                "zero_division": r.zero_division,
            }
            for r in report.rows
        ],
        "accuracy": report.accuracy,
        "macro avg": {
            "precision": report.macro_precision,
            "recall": report.macro_recall,
            "f1-score": report.macro_f1,
            "support": report.total_support,
        },
        "weighted avg": {
            "precision": report.weighted_precision,
            "recall": report.weighted_recall,
            "f1-score": report.weighted_f1,
            "support": report.total_support,
        },
    }


def confusion_to_csv(cm: ConfusionMatrix, names: Sequence[str]) -> str:
    """CSV grid with class names on the header row and column."""
    if len(names) != cm.num_classes:
        raise ReportError("need one name per class")

    def quote(name: str) -> str:
        if any(ch in name for ch in ',"\n'):
            return '"' + name.replace('"', '""') + '"'
        return name

    lines = ["," + ",".join(quote(n) for n in names)]
    for name, row in zip(names, cm.counts):
        lines.append(quote(name) + "," + ",".join(str(c) for c in row))
    return "\n".join(lines) + "\n"
