"""Configuration parsing, the training pipeline, and the CLI surface."""

import json

import pytest

from moodpipe.cli import main
from moodpipe.pipeline import (
    ConfigError,
    config_from_dict,
    config_to_dict,
    load_config,
    load_trained_model,
    predict_statement,
    train_pipeline,
)
from synth import corpus_to_jsonl, make_corpus


def small_config(tmp_path, **overrides):
    """A fast-training config over a 350-statement corpus."""
    data = tmp_path / "data.jsonl"
    data.write_text(corpus_to_jsonl(make_corpus(350)), encoding="utf-8")
    raw = {
        "dataset": str(data),
        "output_dir": str(tmp_path / "model"),
        "seed": 11,
        "tokenizer": {"max_len": 24, "vocab_max_size": 400, "min_freq": 1},
        "encoder": {"num_layers": 1, "d_model": 32, "num_heads": 4, "d_ff": 64},
        "boost": {"num_rounds": 30, "learning_rate": 0.3, "max_depth": 3},
    }
    raw.update(overrides)
    return raw


class TestConfig:
    def test_defaults_materialize(self):
        config = config_from_dict({"dataset": "d.jsonl", "output_dir": "out"})
        assert config.test_fraction == 0.2
        assert config.valid_fraction == 0.1
        assert config.boost.num_rounds == 500
        assert config.boost.learning_rate == 0.05
        assert config.boost.early_stopping_rounds == 10
        assert config.tokenizer.max_len == 128

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys: datset"):
            config_from_dict({"dataset": "d", "output_dir": "o", "datset": "typo"})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="boost"):
            config_from_dict(
                {"dataset": "d", "output_dir": "o", "boost": {"learning_rte": 0.1}}
            )

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="dataset"):
            config_from_dict({"output_dir": "o"})

    def test_lambda_key_maps_to_regularizer(self):
        config = config_from_dict(
            {"dataset": "d", "output_dir": "o", "boost": {"lambda": 2.5}}
        )
        assert config.boost.reg_lambda == 2.5
        assert config_to_dict(config)["boost"]["lambda"] == 2.5

    def test_bad_fraction_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"dataset": "d", "output_dir": "o", "test_fraction": 1.5})

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"dataset": "d", "output_dir": "o"}), encoding="utf-8")
        assert load_config(path).dataset == "d"
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "missing.json")


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("train")
    raw = small_config(tmp)
    result = train_pipeline(config_from_dict(raw))
    return tmp, raw, result


class TestTrainPipeline:
    def test_artifacts_written(self, trained):
        tmp, raw, result = trained
        out = tmp / "model"
        for name in (
            "vocab.txt", "encoder.bin", "model.bin", "report.txt",
            "report.json", "confusion.csv", "config.snapshot.json",
        ):
            assert (out / name).exists(), name

    def test_learns_small_corpus(self, trained):
        _, _, result = trained
        assert result.accuracy >= 0.8

    def test_report_json_consistent(self, trained):
        tmp, _, result = trained
        data = json.loads((tmp / "model" / "report.json").read_text(encoding="utf-8"))
        assert data["accuracy"] == pytest.approx(result.accuracy)
        assert len(data["classes"]) == 7

    def test_snapshot_round_trips(self, trained):
        tmp, raw, _ = trained
        snap = json.loads((tmp / "model" / "config.snapshot.json").read_text(encoding="utf-8"))
        assert snap["seed"] == raw["seed"]
        assert snap["boost"]["num_rounds"] == 30
        assert config_to_dict(config_from_dict(snap)) == snap

    def test_vocabulary_built_from_train_split_only(self, trained):
        tmp, raw, _ = trained
        from moodpipe.corpus import encode_labels, load_dataset, stratified_split
        from moodpipe.tokenizer import build_vocab, load_vocab, normalize

        table = load_dataset(raw["dataset"])
        _, table = encode_labels(table)
        train_table, _ = stratified_split(table, 0.2, raw["seed"])
        expected = build_vocab(
            (normalize(t) for t in train_table.texts()),
            raw["tokenizer"]["vocab_max_size"],
            raw["tokenizer"]["min_freq"],
        )
        assert load_vocab(tmp / "model" / "vocab.txt").pieces == expected.pieces

    def test_loaded_model_predicts(self, trained):
        tmp, _, _ = trained
        model = load_trained_model(tmp / "model")
        label, probs = predict_statement(model, "i feel hopeless and empty and gloomy")
        assert label in model.label_names
        assert abs(probs.sum() - 1.0) < 1e-9

    def test_predict_never_errors_on_training_statements(self, trained):
        tmp, raw, _ = trained
        from moodpipe.corpus import load_dataset

        model = load_trained_model(tmp / "model")
        for record in load_dataset(raw["dataset"]).records[::10]:
            label, probs = predict_statement(model, record.text)
            assert label in model.label_names
            assert (probs > 0).all()

    def test_missing_dataset_raises_stage_error(self, tmp_path):
        from moodpipe.pipeline import StageError

        raw = {"dataset": str(tmp_path / "nope.jsonl"), "output_dir": str(tmp_path / "m")}
        with pytest.raises(StageError) as err:
            train_pipeline(config_from_dict(raw))
        assert err.value.stage == "load-dataset"
        assert "nope.jsonl" in str(err.value)


class TestCli:
    def test_train_predict_stats_happy_path(self, tmp_path, capsys):
        raw = small_config(tmp_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(raw), encoding="utf-8")

        assert main(["train", "--config", str(config_path)]) == 0
        out = capsys.readouterr().out
        assert "test accuracy" in out

        code = main([
            "predict", "--model", raw["output_dir"],
            "--text", "i feel panic and dread and i am jittery",
        ])
        assert code == 0
        line = capsys.readouterr().out.strip()
        label, probs = line.split("\t")
        assert len(probs.split()) == 7
        assert abs(sum(float(p) for p in probs.split()) - 1.0) < 5e-4

        assert main(["stats", "--data", raw["dataset"]]) == 0
        text = capsys.readouterr().out
        assert "Class distribution" in text

        assert main(["stats", "--data", raw["dataset"], "--format", "json"]) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["total"] == 350
        assert set(stats["metrics"]) == {
            "statement_length", "num_words", "avg_word_length", "vocabulary_size",
        }

    def test_predict_from_file_in_order(self, tmp_path, capsys):
        raw = small_config(tmp_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(raw), encoding="utf-8")
        assert main(["train", "--config", str(config_path)]) == 0
        capsys.readouterr()

        batch = tmp_path / "batch.txt"
        batch.write_text(
            "i feel calm and settled and balanced\n"
            "i feel panic and dread and worry\n",
            encoding="utf-8",
        )
        assert main(["predict", "--model", raw["output_dir"], "--input", str(batch)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2

    def test_missing_dataset_exits_2_and_names_path(self, tmp_path, capsys):
        raw = {
            "dataset": str(tmp_path / "absent.jsonl"),
            "output_dir": str(tmp_path / "m"),
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(raw), encoding="utf-8")
        assert main(["train", "--config", str(config_path)]) == 2
        assert "absent.jsonl" in capsys.readouterr().err

    def test_bad_config_exits_2(self, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"dataset": "d"}), encoding="utf-8")
        assert main(["train", "--config", str(config_path)]) == 2

    def test_empty_predict_text_exits_2(self, tmp_path, capsys):
        raw = small_config(tmp_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(raw), encoding="utf-8")
        assert main(["train", "--config", str(config_path)]) == 0
        capsys.readouterr()
        assert main(["predict", "--model", raw["output_dir"], "--text", "   "]) == 2
        assert "empty input" in capsys.readouterr().err

    def test_stats_on_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["stats", "--data", str(tmp_path / "none.jsonl")]) == 2

    def test_stats_on_empty_dataset_exits_2(self, tmp_path, capsys):
        data = tmp_path / "empty.jsonl"
        data.write_text("", encoding="utf-8")
        assert main(["stats", "--data", str(data)]) == 2

    def test_usage_error_exits_2(self, capsys):
        assert main(["train"]) == 2

    def test_single_record_stats_degenerate(self, tmp_path, capsys):
        data = tmp_path / "one.jsonl"
        data.write_text('{"statement":"only one","status":"Normal"}\n', encoding="utf-8")
        assert main(["stats", "--data", data.as_posix(), "--format", "json"]) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["distribution"][0]["percentage"] == 100.0
        assert all(stats["correlation"]["degenerate"])

    def test_identical_texts_zero_variance_flags(self, tmp_path, capsys):
        data = tmp_path / "same.jsonl"
        data.write_text(
            '{"statement":"same words here","status":"A"}\n'
            '{"statement":"same words here","status":"B"}\n',
            encoding="utf-8",
        )
        assert main(["stats", "--data", data.as_posix(), "--format", "json"]) == 0
        stats = json.loads(capsys.readouterr().out)
        assert all(stats["correlation"]["degenerate"])
