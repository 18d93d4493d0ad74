"""CLI thin client: file round trips, exit codes, end-to-end flows."""

import json

import pytest

from capvqa.cli import main
from capvqa.data.records import QuestionRecord
from capvqa.harness.files import read_predictions, write_distributions, write_predictions
from capvqa.vocab import AnswerVocab

from conftest import make_annotation, memorization_corpus, toy_run_config, write_vqa_files


@pytest.fixture
def memo_files(tmp_path):
    questions, annotations, captions = memorization_corpus(n=12)
    paths = write_vqa_files(tmp_path, questions, annotations, captions)
    return {"dir": tmp_path, "paths": paths, "questions": questions,
            "annotations": annotations}


class TestVocabCommands:
    def test_build_writes_vocab_file(self, memo_files, capsys):
        out = memo_files["dir"] / "vocab.txt"
        code = main(
            [
                "vocab", "build",
                "--annotations", str(memo_files["paths"]["annotations"]),
                "--max-size", "5",
                "--output", str(out),
            ]
        )
        assert code == 0
        vocab = AnswerVocab.load(out)
        assert vocab.n_label == 5
        assert "built vocabulary of 5 answers" in capsys.readouterr().out

    def test_build_with_soft_label_cache(self, memo_files, capsys):
        from capvqa.vocab import load_soft_labels

        out = memo_files["dir"] / "vocab.txt"
        cache = memo_files["dir"] / "soft_labels.json"
        code = main(
            [
                "vocab", "build",
                "--annotations", str(memo_files["paths"]["annotations"]),
                "--max-size", "30",
                "--output", str(out),
                "--soft-labels", str(cache),
            ]
        )
        assert code == 0
        labels, n_label = load_soft_labels(cache)
        assert len(labels) == 12
        assert all(sum(l.probs.values()) == pytest.approx(1.0) for l in labels.values())

    def test_inspect_reports_coverage(self, memo_files, capsys):
        vocab_path = memo_files["dir"] / "vocab.txt"
        AnswerVocab(["ans0", "ans1"]).save(vocab_path)
        code = main(
            [
                "vocab", "inspect",
                "--vocab", str(vocab_path),
                "--annotations", str(memo_files["paths"]["annotations"]),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "2 answers" in out
        assert "coverage:" in out


class TestScoreCommand:
    def test_score_writes_report(self, memo_files, capsys):
        preds_path = memo_files["dir"] / "preds.json"
        write_predictions(
            {a.question_id: a.answers[0] for a in memo_files["annotations"]},
            preds_path,
        )
        report_path = memo_files["dir"] / "report.json"
        code = main(
            [
                "score",
                "--annotations", str(memo_files["paths"]["annotations"]),
                "--predictions", str(preds_path),
                "--output", str(report_path),
            ]
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["mean_score"] == 1.0
        assert "mean VQA score 1.0000" in capsys.readouterr().out

    def test_missing_prediction_file_exit_code_3(self, memo_files, capsys):
        code = main(
            [
                "score",
                "--annotations", str(memo_files["paths"]["annotations"]),
                "--predictions", str(memo_files["dir"] / "nope.json"),
            ]
        )
        assert code == 3
        assert "error (data)" in capsys.readouterr().err


class TestTrainEvalSelectSteps:
    def test_train_then_eval(self, memo_files, capsys):
        config_path = memo_files["dir"] / "exp.json"
        config_path.write_text(
            json.dumps(toy_run_config(memo_files, steps=150, seeds=[0]))
        )
        assert main(["train", "--config", str(config_path)]) == 0
        out = capsys.readouterr().out
        assert "aggregate:" in out
        run_dir = next((memo_files["dir"] / "runs").iterdir())

        preds_out = memo_files["dir"] / "eval_preds.json"
        dists_out = memo_files["dir"] / "eval_dists.json"
        code = main(
            [
                "eval",
                "--config", str(config_path),
                "--model", str(run_dir / "seed0" / "model.npz"),
                "--output-predictions", str(preds_out),
                "--output-distributions", str(dists_out),
            ]
        )
        assert code == 0
        assert len(read_predictions(preds_out)) == 12
        dump = json.loads(dists_out.read_text())
        assert len(dump["entries"]) == 12

    def test_select_steps_prints_choice(self, memo_files, capsys):
        config_path = memo_files["dir"] / "exp.yaml"
        cfg = toy_run_config(memo_files, seeds=[0], eval_interval=30)
        lines = [f"{k}: {json.dumps(v)}" for k, v in cfg.items()]
        config_path.write_text("\n".join(lines) + "\n")
        code = main(
            ["select-steps", "--config", str(config_path), "--max-steps", "60"]
        )
        assert code == 0
        printed = int(capsys.readouterr().out.strip())
        assert 1 <= printed <= 60

    def test_bad_config_exit_code_2(self, memo_files, capsys):
        config_path = memo_files["dir"] / "bad.json"
        config_path.write_text(json.dumps({"steps": -5}))
        assert main(["train", "--config", str(config_path)]) == 2
        assert "error (config)" in capsys.readouterr().err


class TestFuseCommand:
    def test_fuse_two_dumps(self, memo_files, capsys):
        vocab = ["yes", "no"]
        dist_a = memo_files["dir"] / "a.json"
        dist_b = memo_files["dir"] / "b.json"
        write_distributions(dist_a, vocab, {1: [0.9, 0.1], 2: [0.4, 0.6]})
        write_distributions(dist_b, vocab, {1: [0.2, 0.8], 2: [0.9, 0.1]})
        out = memo_files["dir"] / "fused.json"
        code = main(
            ["fuse", "--dist-a", str(dist_a), "--dist-b", str(dist_b),
             "--output", str(out)]
        )
        assert code == 0
        # products: q1 (0.18, 0.08) -> yes; q2 (0.36, 0.06) -> yes
        assert read_predictions(out) == {1: "yes", 2: "yes"}

    def test_mismatched_vocabs_exit_code_3(self, memo_files, capsys):
        dist_a = memo_files["dir"] / "a.json"
        dist_b = memo_files["dir"] / "b.json"
        write_distributions(dist_a, ["yes", "no"], {1: [0.9, 0.1]})
        write_distributions(dist_b, ["no", "yes"], {1: [0.9, 0.1]})
        code = main(
            ["fuse", "--dist-a", str(dist_a), "--dist-b", str(dist_b),
             "--output", str(memo_files["dir"] / "out.json")]
        )
        assert code == 3
        assert "vocabular" in capsys.readouterr().err


class TestDecontaminateCommand:
    def test_with_reserved_file(self, tmp_path, capsys):
        caption_train = tmp_path / "train_ids.json"
        caption_train.write_text(json.dumps({"image_ids": [1, 2, 3, 4]}))
        reserved = tmp_path / "reserved.json"
        reserved.write_text(json.dumps([2, 4]))
        out = tmp_path / "clean.json"
        code = main(
            [
                "decontaminate",
                "--caption-train", str(caption_train),
                "--reserved", str(reserved),
                "--output", str(out),
            ]
        )
        assert code == 0
        assert json.loads(out.read_text())["image_ids"] == [1, 3]
        assert "kept 2 image ids, removed 2" in capsys.readouterr().out

    def test_with_manifest(self, tmp_path, capsys):
        questions = [QuestionRecord(q, 100 + q, "why") for q in range(4)]
        paths = write_vqa_files(
            tmp_path, questions, [make_annotation(q, ["a"] * 10) for q in range(4)]
        )
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"splits": {"test": [1, 2]}}))
        caption_train = tmp_path / "train_ids.json"
        caption_train.write_text(json.dumps([100, 101, 102, 103]))
        out = tmp_path / "clean.json"
        code = main(
            [
                "decontaminate",
                "--caption-train", str(caption_train),
                "--manifest", str(manifest),
                "--questions", str(paths["questions"]),
                "--reserved-split", "test",
                "--output", str(out),
            ]
        )
        assert code == 0
        assert json.loads(out.read_text())["image_ids"] == [100, 103]

    def test_incomplete_manifest_flags_exit_code_2(self, tmp_path, capsys):
        caption_train = tmp_path / "ids.json"
        caption_train.write_text("[1]")
        code = main(
            [
                "decontaminate",
                "--caption-train", str(caption_train),
                "--manifest", str(tmp_path / "m.json"),
                "--output", str(tmp_path / "o.json"),
            ]
        )
        assert code == 2
        assert "error (config)" in capsys.readouterr().err
