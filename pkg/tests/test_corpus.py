"""Dataset parsing, label encoding, and stratified split contracts."""

import random

import pytest

from moodpipe.corpus import (
    DatasetError,
    DatasetTable,
    LabelVocabulary,
    StatementRecord,
    encode_labels,
    load_dataset,
    parse_dataset,
    parse_dataset_csv,
    stratified_split,
)


class TestParseDataset:
    def test_single_line(self):
        table = parse_dataset('{"statement":"I feel calm","status":"Normal"}')
        assert len(table) == 1
        assert table.records[0] == StatementRecord("I feel calm", "Normal")

    def test_empty_stream(self):
        assert len(parse_dataset("")) == 0
        assert len(parse_dataset([])) == 0

    def test_blank_lines_skipped(self):
        text = '\n{"statement":"a","status":"X"}\n\n{"statement":"b","status":"Y"}\n'
        table = parse_dataset(text)
        assert [r.text for r in table.records] == ["a", "b"]

    def test_missing_field_names_line_and_field(self):
        text = '{"statement":"a","status":"X"}\n{"statement":"x"}'
        with pytest.raises(DatasetError, match="line 2: missing field 'status'"):
            parse_dataset(text)

    def test_malformed_json_carries_line_number(self):
        with pytest.raises(DatasetError, match="line 1"):
            parse_dataset("{not json}")

    def test_empty_statement_rejected(self):
        with pytest.raises(DatasetError, match="line 1: empty statement"):
            parse_dataset('{"statement":"   ","status":"X"}')

    def test_non_object_line_rejected(self):
        with pytest.raises(DatasetError, match="line 1"):
            parse_dataset("[1, 2]")

    def test_order_preserved(self):
        lines = [
            f'{{"statement":"s{i}","status":"L{i % 3}"}}' for i in range(20)
        ]
        table = parse_dataset("\n".join(lines))
        assert [r.text for r in table.records] == [f"s{i}" for i in range(20)]


class TestParseCsv:
    def test_round_trip(self):
        table = parse_dataset_csv(["statement,status", "hello there,Normal"])
        assert table.records == [StatementRecord("hello there", "Normal")]

    def test_quoted_fields(self):
        table = parse_dataset_csv(
            ["statement,status", '"a, quoted ""x"" text",Anxiety']
        )
        assert table.records[0].text == 'a, quoted "x" text'

    def test_bad_header(self):
        with pytest.raises(DatasetError, match="header"):
            parse_dataset_csv(["text,label", "a,b"])

    def test_extension_selects_parser(self, tmp_path):
        csv_file = tmp_path / "data.csv"
        csv_file.write_text("statement,status\nhi,Normal\n", encoding="utf-8")
        jsonl_file = tmp_path / "data.jsonl"
        jsonl_file.write_text('{"statement":"hi","status":"Normal"}\n', encoding="utf-8")
        assert load_dataset(csv_file).records == load_dataset(jsonl_file).records


class TestEncodeLabels:
    def test_lexicographic_order(self):
        table = parse_dataset(
            '{"statement":"a","status":"Normal"}\n'
            '{"statement":"b","status":"Anxiety"}\n'
            '{"statement":"c","status":"Stress"}'
        )
        vocab, encoded = encode_labels(table)
        assert vocab.names == ("Anxiety", "Normal", "Stress")
        assert encoded.labels_encoded == [1, 0, 2]

    def test_seven_conditions_dense_ids(self):
        names = [
            "Normal", "Depression", "Suicidal", "Anxiety",
            "Bipolar", "Stress", "Personality disorder",
        ]
        table = DatasetTable([StatementRecord(f"t{i}", n) for i, n in enumerate(names)])
        vocab, encoded = encode_labels(table)
        assert len(vocab) == 7
        assert sorted(encoded.labels_encoded) == list(range(7))

    def test_single_label(self):
        table = DatasetTable([StatementRecord("a", "X"), StatementRecord("b", "X")])
        vocab, encoded = encode_labels(table)
        assert len(vocab) == 1
        assert encoded.labels_encoded == [0, 0]

    def test_empty_table_rejected(self):
        with pytest.raises(DatasetError):
            encode_labels(DatasetTable([]))

    def test_vocabulary_is_permutation_stable(self):
        records = [StatementRecord(f"t{i}", l) for i, l in enumerate("BACBAC")]
        shuffled = records[::-1]
        vocab_a, _ = encode_labels(DatasetTable(list(records)))
        vocab_b, _ = encode_labels(DatasetTable(list(shuffled)))
        assert vocab_a.names == vocab_b.names


def _table(class_sizes: dict) -> DatasetTable:
    records = []
    for name, count in class_sizes.items():
        records.extend(StatementRecord(f"{name}-{i}", name) for i in range(count))
    rng = random.Random(0)
    rng.shuffle(records)
    return DatasetTable(records)


class TestStratifiedSplit:
    def test_exact_counts_per_class(self):
        table = _table({"A": 10, "B": 10})
        train, test = stratified_split(table, 0.2, 42)
        for cls in ("A", "B"):
            assert sum(1 for r in test.records if r.label == cls) == 2
        assert len(train) + len(test) == len(table)

    def test_half_fraction(self):
        table = _table({"A": 4, "B": 6})
        _, test = stratified_split(table, 0.5, 1)
        assert sum(1 for r in test.records if r.label == "A") == 2

    def test_minimum_one_test_record(self):
        table = _table({"A": 3, "B": 50})
        _, test = stratified_split(table, 0.05, 9)
        assert sum(1 for r in test.records if r.label == "A") == 1

    def test_determinism(self):
        table = _table({"A": 25, "B": 13, "C": 7})
        first = stratified_split(table, 0.3, 99)
        second = stratified_split(table, 0.3, 99)
        assert [r.text for r in first[0].records] == [r.text for r in second[0].records]
        assert [r.text for r in first[1].records] == [r.text for r in second[1].records]

    def test_small_class_rejected(self):
        table = DatasetTable(
            [StatementRecord("a", "A"), StatementRecord("b", "A"), StatementRecord("c", "B")]
        )
        with pytest.raises(DatasetError, match="class 'B'"):
            stratified_split(table, 0.5, 0)

    def test_disjoint_union(self):
        table = _table({"A": 9, "B": 17, "C": 4})
        train, test = stratified_split(table, 0.25, 5)
        train_texts = {r.text for r in train.records}
        test_texts = {r.text for r in test.records}
        assert not train_texts & test_texts
        assert train_texts | test_texts == {r.text for r in table.records}

    def test_no_record_lost_across_fractions(self):
        rng = random.Random(3)
        for _ in range(20):
            sizes = {name: rng.randint(2, 30) for name in "ABCD"}
            table = _table(sizes)
            fraction = rng.choice([0.1, 0.2, 0.33, 0.5, 0.8])
            train, test = stratified_split(table, fraction, rng.randint(0, 1000))
            assert len(train) + len(test) == len(table)

    def test_encoded_labels_travel_with_split(self):
        table = _table({"A": 6, "B": 6})
        _, encoded = encode_labels(table)
        train, test = stratified_split(encoded, 0.5, 7)
        vocab = LabelVocabulary.from_labels(r.label for r in table.records)
        for part in (train, test):
            assert part.labels_encoded == [vocab.index_of(r.label) for r in part.records]
