"""Answer normalization, the VQA accuracy metric, and cross-run aggregation.

The per-question score is min(x/3, 1), where x counts how often the
(normalized) predicted answer occurs among the question's ten crowd answers.
The official evaluation tool instead averages that expression over all ten
leave-one-annotator-out subsets; that variant is available behind
``official_averaging`` and defaults off.

Normalization rules (pinned for reproducibility): lowercase, trim, delete
punctuation characters outright, collapse whitespace runs to single spaces.
Articles and digits are left untouched. The transform is idempotent.
"""

import math
import string
from collections import Counter
from dataclasses import dataclass, field

from .errors import ValidationError

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(raw: str) -> str:
    text = raw.lower().translate(_PUNCT_TABLE)
    return " ".join(text.split())


def answer_counts(annotation) -> Counter:
    """Multiset of a question's annotated answers, empty strings dropped."""
    return Counter(a for a in annotation.answers if a)


def vqa_accuracy(answer: str, annotation, official_averaging: bool = False) -> float:
    """Score a single answer against one annotation record."""
    predicted = normalize_answer(answer)
    answers = annotation.answers
    if not official_averaging:
        x = sum(1 for a in answers if a == predicted)
        return min(x / 3.0, 1.0)
    # Leave-one-annotator-out averaging used by the official evaluation tool.
    total = 0.0
    for i in range(len(answers)):
        x = sum(1 for j, a in enumerate(answers) if j != i and a == predicted)
        total += min(x / 3.0, 1.0)
    return total / len(answers)


@dataclass
class EvalReport:
    """Per-question scores over one evaluation run."""

    per_question: dict
    mean_score: float
    n: int
    unanswered: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n": self.n,
            "mean_score": self.mean_score,
            "unanswered": sorted(self.unanswered),
            "per_question": {str(q): s for q, s in sorted(self.per_question.items())},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            per_question={int(q): float(s) for q, s in d["per_question"].items()},
            mean_score=float(d["mean_score"]),
            n=int(d["n"]),
            unanswered=[int(q) for q in d.get("unanswered", [])],
        )


def evaluate_predictions(predictions, annotations, official_averaging=False) -> EvalReport:
    """Score a {question_id: answer} map against annotation records.

    Every annotated question contributes to the mean; questions without a
    prediction score 0 and are flagged as unanswered. A prediction for a
    question_id with no annotation is an error.
    """
    by_qid = _annotations_by_qid(annotations)
    unknown = sorted(set(predictions) - set(by_qid))
    if unknown:
        raise ValidationError(
            f"predictions reference unknown question_ids: {unknown[:10]}"
        )
    per_question = {}
    unanswered = []
    for qid, ann in by_qid.items():
        if qid in predictions:
            per_question[qid] = vqa_accuracy(
                predictions[qid], ann, official_averaging=official_averaging
            )
        else:
            per_question[qid] = 0.0
            unanswered.append(qid)
    n = len(per_question)
    mean = sum(per_question.values()) / n if n else 0.0
    return EvalReport(
        per_question=per_question, mean_score=mean, n=n, unanswered=unanswered
    )


@dataclass
class RunAggregate:
    """Mean and sample standard deviation of per-run mean scores."""

    run_scores: list
    mean: float
    std: float

    def to_dict(self):
        return {"run_scores": self.run_scores, "mean": self.mean, "std": self.std}


def aggregate_runs(reports) -> RunAggregate:
    """Aggregate ≥1 runs; accepts EvalReports or raw mean scores."""
    scores = [r.mean_score if hasattr(r, "mean_score") else float(r) for r in reports]
    if not scores:
        raise ValidationError("aggregate_runs needs at least one run")
    mean = sum(scores) / len(scores)
    if len(scores) == 1:
        std = 0.0
    else:
        var = sum((s - mean) ** 2 for s in scores) / (len(scores) - 1)
        std = math.sqrt(var)
    return RunAggregate(run_scores=scores, mean=mean, std=std)


def _annotations_by_qid(annotations):
    if hasattr(annotations, "items"):
        return dict(annotations.items())
    return {a.question_id: a for a in annotations}
