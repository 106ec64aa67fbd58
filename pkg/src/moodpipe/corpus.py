"""Dataset ingestion: labeled statements, label encoding, stratified splits.

Input is line-delimited JSON with fields "statement" and "status", or a CSV
file with header ``statement,status`` (selected by file extension).
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence


class DatasetError(ValueError):
    """Malformed dataset input or an operation on an unusable table."""


@dataclass(frozen=True)
class StatementRecord:
    """One labeled self-report: free text plus a condition name."""

    text: str
    label: str


@dataclass(frozen=True)
class LabelVocabulary:
    """Distinct condition names, lexicographic by code point, ids dense 0..K-1."""

    names: tuple[str, ...]

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "LabelVocabulary":
        return cls(tuple(sorted(set(labels))))

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DatasetError(f"unknown label {name!r}") from None

    def __len__(self) -> int:
        return len(self.names)


@dataclass
class DatasetTable:
    """Ordered records with, once encoded, a parallel list of label ids."""

    records: list[StatementRecord]
    labels_encoded: list[int] | None = None

    def __len__(self) -> int:
        return len(self.records)

    def texts(self) -> list[str]:
        return [r.text for r in self.records]


def parse_dataset(source: Iterable[str] | str) -> DatasetTable:
    """Parse line-delimited JSON into a DatasetTable.

    Blank lines are skipped; any malformed line raises DatasetError carrying
    its 1-based line number.
    """
    if isinstance(source, str):
        source = source.splitlines()
    records: list[StatementRecord] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"line {lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise DatasetError(f"line {lineno}: expected a JSON object")
        for field in ("statement", "status"):
            if field not in obj:
                raise DatasetError(f"line {lineno}: missing field '{field}'")
        text, label = obj["statement"], obj["status"]
        if not isinstance(text, str) or not isinstance(label, str):
            raise DatasetError(f"line {lineno}: 'statement' and 'status' must be strings")
        if not text.strip():
            raise DatasetError(f"line {lineno}: empty statement")
        records.append(StatementRecord(text=text, label=label))
    return DatasetTable(records)


def parse_dataset_csv(source: Iterable[str]) -> DatasetTable:
    """Parse a CSV stream with header ``statement,status`` (RFC-4180 quoting)."""
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        return DatasetTable([])
    if header != ["statement", "status"]:
        raise DatasetError(f"CSV header must be 'statement,status', got {','.join(header)!r}")
    records: list[StatementRecord] = []
    for row in reader:
        if not row:
            continue
        if len(row) != 2:
            raise DatasetError(f"line {reader.line_num}: expected 2 columns, got {len(row)}")
        text, label = row
        if not text.strip():
            raise DatasetError(f"line {reader.line_num}: empty statement")
        records.append(StatementRecord(text=text, label=label))
    return DatasetTable(records)


def load_dataset(path: str | Path) -> DatasetTable:
    """Load a dataset file, choosing the parser by file extension."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        if path.suffix.lower() == ".csv":
            return parse_dataset_csv(handle)
        return parse_dataset(handle)


def encode_labels(table: DatasetTable) -> tuple[LabelVocabulary, DatasetTable]:
    """Build the label vocabulary and return a table with ids filled in."""
    if not table.records:
        raise DatasetError("cannot encode labels of an empty dataset")
    vocab = LabelVocabulary.from_labels(r.label for r in table.records)
    encoded = [vocab.index_of(r.label) for r in table.records]
    return vocab, DatasetTable(table.records, encoded)


def stratified_split_indices(
    labels: Sequence[str], test_fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Partition record indices per class; test gets floor(fraction*count), min 1.

    Selection is a pure function of (seed, record order); both halves keep
    the original record order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    groups: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)
    for name in sorted(groups):
        if len(groups[name]) < 2:
            raise DatasetError(f"class '{name}' has fewer than 2 records")
    rng = random.Random(seed)
    test_chosen: set[int] = set()
    for name in sorted(groups):
        indices = list(groups[name])
        n_test = max(1, math.floor(test_fraction * len(indices)))
        rng.shuffle(indices)
        test_chosen.update(indices[:n_test])
    train_idx = [i for i in range(len(labels)) if i not in test_chosen]
    test_idx = [i for i in range(len(labels)) if i in test_chosen]
    return train_idx, test_idx


def _subset(table: DatasetTable, indices: Sequence[int]) -> DatasetTable:
    records = [table.records[i] for i in indices]
    encoded = None
    if table.labels_encoded is not None:
        encoded = [table.labels_encoded[i] for i in indices]
    return DatasetTable(records, encoded)


def stratified_split(
    table: DatasetTable, test_fraction: float, seed: int
) -> tuple[DatasetTable, DatasetTable]:
    """Deterministic per-class split into disjoint train and test tables."""
    train_idx, test_idx = stratified_split_indices(
        [r.label for r in table.records], test_fraction, seed
    )
    return _subset(table, train_idx), _subset(table, test_idx)
