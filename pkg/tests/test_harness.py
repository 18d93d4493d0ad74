"""Experiment harness: prediction files, configs, runs, step selection."""

import json

import numpy as np
import pytest

from capvqa.errors import ConfigError, DataError, ParseError, ValidationError
from capvqa.harness.config import PRESETS, RunConfig
from capvqa.harness.experiment import run_experiment, select_training_steps
from capvqa.harness.files import (
    read_distributions,
    read_predictions,
    read_report,
    write_distributions,
    write_predictions,
    write_report,
)
from capvqa.metrics import EvalReport

from conftest import memorization_corpus, toy_run_config, write_vqa_files


class TestPredictionFiles:
    def test_round_trip_identity(self, tmp_path):
        path = tmp_path / "preds.json"
        predictions = {3: "cat", 1: "dog", 2: "pony tail"}
        write_predictions(predictions, path)
        assert read_predictions(path) == predictions

    def test_stable_ordering_by_question_id(self, tmp_path):
        path = tmp_path / "preds.json"
        write_predictions({5: "b", 1: "a"}, path)
        entries = json.loads(path.read_text())
        assert [e["question_id"] for e in entries] == [1, 5]

    def test_duplicate_question_id_rejected(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text(
            json.dumps(
                [
                    {"question_id": 1, "answer": "a"},
                    {"question_id": 1, "answer": "b"},
                ]
            )
        )
        with pytest.raises(ValidationError, match="1"):
            read_predictions(path)

    def test_empty_prediction_set(self, tmp_path):
        path = tmp_path / "empty.json"
        write_predictions({}, path)
        assert read_predictions(path) == {}

    def test_malformed_names_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('[\n{"question_id": 1, "answer": }\n]')
        with pytest.raises(ParseError, match="bad.json:2"):
            read_predictions(path)

    def test_byte_identical_rewrites(self, tmp_path):
        predictions = {2: "yes", 7: "no"}
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_predictions(predictions, a)
        write_predictions(dict(reversed(predictions.items())), b)
        assert a.read_bytes() == b.read_bytes()


class TestDistributionFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "dist.json"
        by_q = {1: np.array([0.25, 0.75]), 4: np.array([1.0, 0.0])}
        write_distributions(path, ["yes", "no"], by_q)
        vocab, loaded = read_distributions(path)
        assert vocab == ["yes", "no"]
        np.testing.assert_allclose(loaded[1], [0.25, 0.75])

    def test_invalid_distribution_rejected(self, tmp_path):
        path = tmp_path / "dist.json"
        path.write_text(
            json.dumps(
                {"vocab": ["a", "b"],
                 "entries": [{"question_id": 1, "probs": [0.9, 0.9]}]}
            )
        )
        with pytest.raises(ValidationError, match="question 1"):
            read_distributions(path)

    def test_length_mismatch_rejected(self, tmp_path):
        path = tmp_path / "dist.json"
        path.write_text(
            json.dumps(
                {"vocab": ["a", "b", "c"],
                 "entries": [{"question_id": 1, "probs": [0.5, 0.5]}]}
            )
        )
        with pytest.raises(ValidationError):
            read_distributions(path)


class TestReportFiles:
    def test_round_trip(self, tmp_path):
        report = EvalReport(
            per_question={1: 1.0, 2: 0.0}, mean_score=0.5, n=2, unanswered=[2]
        )
        path = tmp_path / "report.json"
        write_report(path, report)
        loaded = read_report(path)
        assert loaded == report


class TestRunConfig:
    def test_presets_resolve(self):
        cfg = RunConfig.from_preset("bert-classify")
        assert cfg.steps == 88_000
        assert cfg.batch_size == 56
        assert cfg.learning_rate == pytest.approx(5e-5)
        assert cfg.warmup_steps == 2_000
        assert cfg.schedule == "cosine_warmup"
        t5 = RunConfig.from_preset("t5-generate")
        assert t5.schedule == "constant"
        assert t5.warmup_steps == 0
        assert set(PRESETS) == {"bert-classify", "t5-generate", "toy-classify"}

    def test_invariants(self):
        with pytest.raises(ConfigError):
            RunConfig(steps=0, vocab_max_size=8)
        with pytest.raises(ConfigError):
            RunConfig(seeds=[], vocab_max_size=8)
        with pytest.raises(ConfigError):
            RunConfig(schedule="constant", warmup_steps=5, vocab_max_size=8)
        with pytest.raises(ConfigError):
            RunConfig(vocab_max_size=8, vocab_min_count=2)
        with pytest.raises(ConfigError):
            RunConfig()  # no vocabulary source

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="stepz"):
            RunConfig.from_dict({"stepz": 10, "vocab_max_size": 8})

    def test_config_file_round_trip(self, tmp_path):
        cfg = RunConfig(vocab_max_size=8, schedule="constant", warmup_steps=0)
        path = tmp_path / "exp.json"
        cfg.save(path)
        assert RunConfig.from_file(path) == cfg

    def test_yaml_config_with_preset(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text("preset: toy-classify\nsteps: 50\n")
        cfg = RunConfig.from_file(path)
        assert cfg.steps == 50
        assert cfg.batch_size == PRESETS["toy-classify"]["batch_size"]

    def test_hash_stable_and_sensitive(self):
        a = RunConfig(vocab_max_size=8)
        b = RunConfig(vocab_max_size=8)
        c = RunConfig(vocab_max_size=9)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()


class TestRunExperiment:
    def test_three_seed_run_structure(self, memo_dataset):
        config = RunConfig.from_dict(toy_run_config(memo_dataset))
        artifacts = run_experiment(config)
        assert artifacts.labels == ["seed0", "seed1", "seed2"]
        assert len(artifacts.aggregate.run_scores) == 3
        assert artifacts.aggregate.std >= 0.0
        for label in artifacts.labels:
            assert artifacts.prediction_paths[label].exists()
            assert artifacts.report_paths[label].exists()
        assert artifacts.config_snapshot_path.exists()
        assert (artifacts.run_dir / "aggregate.json").exists()

    def test_rerun_identical_and_snapshot_replays(self, memo_dataset):
        config = RunConfig.from_dict(
            toy_run_config(memo_dataset, steps=120, seeds=[0, 1])
        )
        first = run_experiment(config)
        first_bytes = {
            label: path.read_bytes()
            for label, path in first.prediction_paths.items()
        }
        replayed = RunConfig.from_file(first.config_snapshot_path)
        second = run_experiment(replayed)
        assert second.aggregate.run_scores == first.aggregate.run_scores
        for label, path in second.prediction_paths.items():
            assert path.read_bytes() == first_bytes[label]

    def test_single_seed_zero_std(self, memo_dataset):
        config = RunConfig.from_dict(
            toy_run_config(memo_dataset, steps=60, seeds=[5])
        )
        artifacts = run_experiment(config)
        assert artifacts.aggregate.std == 0.0

    def test_missing_dataset_path_fails_before_training(self, memo_dataset):
        config = RunConfig.from_dict(
            toy_run_config(memo_dataset, captions="nowhere.json")
        )
        with pytest.raises(DataError, match="captions"):
            run_experiment(config)
        assert not (memo_dataset["dir"] / "runs").exists()

    def test_question_only_mode(self, memo_dataset):
        config = RunConfig.from_dict(
            toy_run_config(
                memo_dataset, mode="question_only", steps=300, seeds=[0]
            )
        )
        artifacts = run_experiment(config)
        assert artifacts.aggregate.mean >= 0.9  # unique question tokens suffice

    def test_chained_runs_share_checkpoint(self, memo_dataset):
        """A finetune config warm-started at lr 0 replays the checkpoint."""
        pretrain = RunConfig.from_dict(
            toy_run_config(memo_dataset, steps=200, seeds=[0])
        )
        first = run_experiment(pretrain)
        checkpoint = first.model_paths[0]
        finetune = RunConfig.from_dict(
            toy_run_config(
                memo_dataset,
                steps=50,
                seeds=[0],
                learning_rate=0.0,
                schedule="constant",
                warmup_steps=0,
                init_checkpoint=str(checkpoint),
            )
        )
        second = run_experiment(finetune)
        assert second.reports["seed0"].per_question == (
            first.reports["seed0"].per_question
        )

    def test_checkpoint_config_mismatch_rejected(self, memo_dataset):
        pretrain = RunConfig.from_dict(
            toy_run_config(memo_dataset, steps=60, seeds=[0])
        )
        first = run_experiment(pretrain)
        finetune = RunConfig.from_dict(
            toy_run_config(
                memo_dataset,
                steps=60,
                seeds=[0],
                d_h=16,  # differs from the checkpoint's 32
                init_checkpoint=str(first.model_paths[0]),
            )
        )
        with pytest.raises(ConfigError, match="checkpoint"):
            run_experiment(finetune)

    def test_gold_caption_runs_label_eval_selections(self, tmp_path):
        from capvqa.data.records import CaptionRecord

        questions, annotations, _ = memorization_corpus(n=8)
        gold = [
            CaptionRecord(q.image_id, f"gold {v} of image {q.image_id}",
                          source="gold", gold_index=v)
            for q in questions
            for v in range(5)
        ]
        paths = write_vqa_files(tmp_path, questions, annotations, gold)
        memo = {"dir": tmp_path, "paths": paths}
        config = RunConfig.from_dict(
            toy_run_config(
                memo,
                steps=80,
                seeds=[0],
                caption_source="gold",
                gold_caption_eval_seeds=[0, 1, 2],
            )
        )
        artifacts = run_experiment(config)
        assert artifacts.labels == ["seed0-caps0", "seed0-caps1", "seed0-caps2"]
        assert len(artifacts.aggregate.run_scores) == 3


class TestSelectTrainingSteps:
    def _config(self, memo_dataset, **overrides):
        return RunConfig.from_dict(toy_run_config(memo_dataset, **overrides))

    def test_forced_peak_returned_exactly(self, memo_dataset):
        """Validation score provably peaks at step 100 in every run."""

        def evaluator(seed, train_set, val_set, max_steps, eval_interval):
            steps = list(range(eval_interval, max_steps + 1, eval_interval))
            return [(s, 1.0 - abs(s - 100) / 1000.0) for s in steps]

        config = self._config(memo_dataset, eval_interval=10, seeds=[0, 1, 2])
        assert select_training_steps(config, 300, evaluator=evaluator) == 100

    def test_mean_of_best_steps(self, memo_dataset):
        peaks = {0: 80, 1: 100, 2: 120}

        def evaluator(seed, train_set, val_set, max_steps, eval_interval):
            steps = list(range(eval_interval, max_steps + 1, eval_interval))
            return [(s, 1.0 - abs(s - peaks[seed]) / 1000.0) for s in steps]

        config = self._config(memo_dataset, eval_interval=10, seeds=[0, 1, 2])
        assert select_training_steps(config, 300, evaluator=evaluator) == 100

    def test_max_steps_one(self, memo_dataset):
        def evaluator(seed, train_set, val_set, max_steps, eval_interval):
            return [(1, 0.5)]

        config = self._config(memo_dataset, seeds=[0])
        assert select_training_steps(config, 1, evaluator=evaluator) == 1

    def test_earliest_best_step_on_ties(self, memo_dataset):
        def evaluator(seed, train_set, val_set, max_steps, eval_interval):
            return [(10, 0.9), (20, 0.9), (30, 0.1)]

        config = self._config(memo_dataset, seeds=[0])
        assert select_training_steps(config, 30, evaluator=evaluator) == 10

    def test_shared_split_across_seeds(self, memo_dataset):
        seen = {}

        def evaluator(seed, train_set, val_set, max_steps, eval_interval):
            seen[seed] = (
                tuple(sorted(train_set.question_ids())),
                tuple(sorted(val_set.question_ids())),
            )
            return [(eval_interval, 1.0)]

        config = self._config(memo_dataset, eval_interval=10, seeds=[0, 1, 2])
        select_training_steps(config, 50, evaluator=evaluator)
        assert len(set(seen.values())) == 1
        train_qids, val_qids = seen[0]
        assert set(train_qids) & set(val_qids) == set()
        assert len(val_qids) == 10  # floor(0.2 * 50)

    def test_empty_validation_split_config_error(self, tmp_path):
        questions, annotations, captions = memorization_corpus(n=3)
        paths = write_vqa_files(tmp_path, questions, annotations, captions)
        memo = {"dir": tmp_path, "paths": paths}
        config = RunConfig.from_dict(toy_run_config(memo, seeds=[0]))
        with pytest.raises(ConfigError, match="validation split"):
            select_training_steps(config, 10)

    def test_toy_training_path_returns_valid_step(self, memo_dataset):
        config = self._config(memo_dataset, eval_interval=40, seeds=[0])
        steps = select_training_steps(config, 120)
        assert 1 <= steps <= 120
        assert steps % 40 == 0
