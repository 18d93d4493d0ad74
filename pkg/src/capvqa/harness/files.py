"""Prediction, distribution and report files.

Prediction files are JSON arrays of ``{"question_id": int, "answer": str}``
entries, written in question_id order (the layout VQA tooling expects).
Distribution dumps carry the answer vocabulary alongside one probability
vector per question:

    {"vocab": ["yes", "no", ...],
     "entries": [{"question_id": 1, "probs": [0.9, 0.1, ...]}, ...]}

Reports serialize EvalReport as produced by the metrics module.
"""

import json
from pathlib import Path

from ..errors import ParseError, ValidationError
from ..metrics import EvalReport
from ..modeling.adapters import validate_distribution


def _read_json(path):
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}: {e.msg}") from e


def write_predictions(predictions, path):
    """Write a {question_id: answer} map; entries ordered by question_id."""
    entries = [
        {"question_id": qid, "answer": predictions[qid]}
        for qid in sorted(predictions)
    ]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(entries, f, indent=2, sort_keys=True)
        f.write("\n")


def read_predictions(path):
    """Read a prediction file back into a {question_id: answer} map."""
    doc = _read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("predictions")
    if not isinstance(doc, list):
        raise ParseError(f"{path}: expected a JSON array of prediction entries")
    out = {}
    for idx, entry in enumerate(doc):
        try:
            qid = int(entry["question_id"])
            answer = str(entry["answer"])
        except (KeyError, TypeError):
            raise ParseError(
                f"{path}: entry #{idx} needs question_id and answer fields"
            ) from None
        if qid in out:
            raise ValidationError(f"{path}: duplicate question_id {qid}")
        out[qid] = answer
    return out


def write_distributions(path, vocab_answers, by_question):
    entries = [
        {"question_id": qid, "probs": [float(p) for p in by_question[qid]]}
        for qid in sorted(by_question)
    ]
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"vocab": list(vocab_answers), "entries": entries}, f)
        f.write("\n")


def read_distributions(path):
    """Read a distribution dump -> (vocab answers, {question_id: np vector})."""
    doc = _read_json(path)
    if not isinstance(doc, dict) or "vocab" not in doc or "entries" not in doc:
        raise ParseError(f"{path}: expected 'vocab' and 'entries' fields")
    vocab_answers = [str(a) for a in doc["vocab"]]
    n = len(vocab_answers)
    by_question = {}
    for idx, entry in enumerate(doc["entries"]):
        try:
            qid = int(entry["question_id"])
            probs = entry["probs"]
        except (KeyError, TypeError):
            raise ParseError(
                f"{path}: entry #{idx} needs question_id and probs fields"
            ) from None
        if qid in by_question:
            raise ValidationError(f"{path}: duplicate question_id {qid}")
        vec = validate_distribution(probs, where=f"{path}: question {qid}")
        if vec.size != n:
            raise ValidationError(
                f"{path}: question {qid} has {vec.size} probabilities for a "
                f"{n}-answer vocabulary"
            )
        by_question[qid] = vec
    return vocab_answers, by_question


def write_report(path, report):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def read_report(path):
    return EvalReport.from_dict(_read_json(path))
