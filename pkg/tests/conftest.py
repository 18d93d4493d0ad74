"""Shared fixtures: synthetic corpora and dataset files on disk."""

import json

import pytest

from capvqa.data.records import AnnotationRecord, CaptionRecord, QuestionRecord


def make_annotation(qid, answers, image_id=None):
    """Annotation record from raw answers (padded/validated to ten entries)."""
    return AnnotationRecord.from_raw(qid, image_id if image_id is not None else qid,
                                     answers)


def memorization_corpus(n=50, n_answers=25):
    """Fully memorizable corpus: unanimous answers, unique question tokens.

    Each question carries two question-specific tokens so single hashed-token
    collisions cannot make two questions indistinguishable.
    """
    answers = [f"ans{i}" for i in range(n_answers)]
    questions, annotations, captions = [], [], []
    for k in range(n):
        ans = answers[k % n_answers]
        questions.append(
            QuestionRecord(k, k, f"what is item q{k} x{k * 7 + 3} called")
        )
        annotations.append(AnnotationRecord.from_raw(k, k, [ans] * 10))
        captions.append(CaptionRecord(k, f"a photo of {ans} object {k}"))
    return questions, annotations, captions


def write_vqa_files(dirpath, questions, annotations, captions=None, prefix=""):
    """Write records in the documented (public-layout) file formats."""
    paths = {}
    qpath = dirpath / f"{prefix}questions.json"
    with open(qpath, "w") as f:
        json.dump(
            {
                "questions": [
                    {"question_id": q.question_id, "image_id": q.image_id,
                     "question": q.text}
                    for q in questions
                ]
            },
            f,
        )
    paths["questions"] = qpath
    apath = dirpath / f"{prefix}annotations.json"
    with open(apath, "w") as f:
        json.dump(
            {
                "annotations": [
                    {
                        "question_id": a.question_id,
                        "image_id": a.image_id,
                        "answers": [{"answer": ans} for ans in a.answers],
                    }
                    for a in annotations
                ]
            },
            f,
        )
    paths["annotations"] = apath
    if captions is not None:
        cpath = dirpath / f"{prefix}captions.json"
        with open(cpath, "w") as f:
            json.dump(
                {
                    "captions": [
                        {
                            "image_id": c.image_id,
                            "caption": c.text,
                            "source": c.source,
                            **(
                                {"gold_index": c.gold_index}
                                if c.gold_index is not None
                                else {}
                            ),
                        }
                        for c in captions
                    ]
                },
                f,
            )
        paths["captions"] = cpath
    return paths


@pytest.fixture
def memo_dataset(tmp_path):
    """Memorization corpus written to disk, plus the records themselves."""
    questions, annotations, captions = memorization_corpus()
    paths = write_vqa_files(tmp_path, questions, annotations, captions)
    return {
        "dir": tmp_path,
        "paths": paths,
        "questions": questions,
        "annotations": annotations,
        "captions": captions,
    }


def toy_run_config(memo, **overrides):
    """RunConfig dict for a fast memorization run on the fixture files."""
    cfg = {
        "mode": "caption",
        "steps": 600,
        "batch_size": 10,
        "learning_rate": 0.01,
        "schedule": "cosine_warmup",
        "warmup_steps": 50,
        "seeds": [0, 1, 2],
        "train_questions": str(memo["paths"]["questions"]),
        "train_annotations": str(memo["paths"]["annotations"]),
        "eval_questions": str(memo["paths"]["questions"]),
        "eval_annotations": str(memo["paths"]["annotations"]),
        "captions": str(memo["paths"]["captions"]),
        "vocab_max_size": 64,
        "run_root": str(memo["dir"] / "runs"),
        "data_root": str(memo["dir"]),
    }
    cfg.update(overrides)
    return cfg
