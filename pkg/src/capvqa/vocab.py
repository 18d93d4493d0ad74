"""Answer vocabulary, soft-label targets, and generative target selection.

Classification targets are distributions over a fixed answer vocabulary:
each distinct in-vocabulary answer gets weight min(count/3, 1) — the same
expression as the accuracy metric — and the weights are normalized to sum
to one. Out-of-vocabulary answers are dropped *before* normalizing, so the
label stays a proper distribution; a question whose answers are all
out-of-vocabulary gets an all-zero label and is flagged.

Generative training instead samples one target answer per epoch, uniformly
among answers given by at least two annotators; questions with no such
answer are discarded.
"""

import json
import random
from collections import Counter
from dataclasses import dataclass, field

from .errors import ConfigError, ParseError, ValidationError
from .metrics import answer_counts

MIN_GENERATIVE_COUNT = 2


@dataclass
class AnswerVocab:
    """Bidirectional answer <-> contiguous class index map."""

    answers: list

    def __post_init__(self):
        self.index = {a: i for i, a in enumerate(self.answers)}
        if len(self.index) != len(self.answers):
            raise ValidationError("vocabulary answers must be unique")

    @property
    def n_label(self):
        return len(self.answers)

    def __len__(self):
        return len(self.answers)

    def __contains__(self, answer):
        return answer in self.index

    def answer_of(self, class_index):
        return self.answers[class_index]

    def index_of(self, answer):
        return self.index[answer]

    def save(self, path):
        """One answer per line; the line number is the class index."""
        with open(path, "w", encoding="utf-8") as f:
            for a in self.answers:
                f.write(a + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls(answers=[line.rstrip("\n") for line in f if line.rstrip("\n")])


def build_answer_vocab(annotations, min_count=None, max_size=None):
    """Most frequent normalized answers under exactly one cutoff.

    Ordering and cutoff ties are deterministic: answers sort by descending
    count, then lexicographically.
    """
    if (min_count is None) == (max_size is None):
        raise ConfigError("supply exactly one of min_count or max_size")
    counts = Counter()
    for ann in annotations:
        counts.update(answer_counts(ann))
    if not counts:
        raise ValidationError("no countable answers in the annotation collection")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if min_count is not None:
        kept = [a for a, c in ranked if c >= min_count]
    else:
        kept = [a for a, _ in ranked[:max_size]]
    return AnswerVocab(answers=kept)


@dataclass
class SoftLabel:
    """Sparse target distribution for one question."""

    question_id: int
    probs: dict
    all_oov: bool = False

    def dense(self, n_label):
        vec = [0.0] * n_label
        for k, p in self.probs.items():
            vec[k] = p
        return vec


def answer_score_weights(annotation):
    """Pre-normalization weight min(count/3, 1) per distinct answer."""
    return {a: min(c / 3.0, 1.0) for a, c in answer_counts(annotation).items()}


def soft_label(annotation, vocab):
    """Target distribution proportional to each in-vocab answer's metric score."""
    weights = {
        vocab.index_of(a): w
        for a, w in answer_score_weights(annotation).items()
        if a in vocab
    }
    total = sum(weights.values())
    if total == 0.0:
        return SoftLabel(question_id=annotation.question_id, probs={}, all_oov=True)
    return SoftLabel(
        question_id=annotation.question_id,
        probs={k: w / total for k, w in weights.items()},
    )


def save_soft_labels(path, labels, n_label):
    """Write a soft-label cache keyed by question_id."""
    payload = {
        "n_label": n_label,
        "labels": [
            {
                "question_id": lab.question_id,
                "probs": {str(k): p for k, p in sorted(lab.probs.items())},
                "all_oov": lab.all_oov,
            }
            for lab in sorted(labels, key=lambda l: l.question_id)
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def load_soft_labels(path):
    """Read a soft-label cache -> (labels by question_id, n_label)."""
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict) or "labels" not in doc or "n_label" not in doc:
        raise ParseError(f"{path}: expected 'n_label' and 'labels' fields")
    out = {}
    for entry in doc["labels"]:
        label = SoftLabel(
            question_id=int(entry["question_id"]),
            probs={int(k): float(p) for k, p in entry["probs"].items()},
            all_oov=bool(entry.get("all_oov", False)),
        )
        if label.question_id in out:
            raise ValidationError(f"{path}: duplicate question_id "
                                  f"{label.question_id}")
        out[label.question_id] = label
    return out, int(doc["n_label"])


@dataclass
class TargetPool:
    """Eligible generative target answers for one question."""

    question_id: int
    eligible: list = field(default_factory=list)

    @property
    def discarded(self):
        return not self.eligible


def select_generative_targets(annotation):
    """Answers given by at least two annotators, sorted for determinism."""
    eligible = sorted(
        a
        for a, c in answer_counts(annotation).items()
        if c >= MIN_GENERATIVE_COUNT
    )
    return TargetPool(question_id=annotation.question_id, eligible=eligible)


def sample_target(pool, epoch, seed):
    """Uniform draw from the pool, fixed by (question_id, epoch, seed)."""
    if pool.discarded:
        raise ValidationError(
            f"question {pool.question_id}: no eligible generative targets"
        )
    rng = random.Random(f"target:{pool.question_id}:{epoch}:{seed}")
    return pool.eligible[rng.randrange(len(pool.eligible))]
