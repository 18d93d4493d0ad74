"""Record types for questions, crowd annotations, captions and joined examples."""

from dataclasses import dataclass, field
from typing import Optional

from ..errors import ValidationError

ANSWERS_PER_QUESTION = 10
GOLD_CAPTIONS_PER_IMAGE = 5

SPLIT_TAGS = ("train", "val", "test")
CAPTION_SOURCES = ("generated", "gold")


@dataclass(frozen=True)
class QuestionRecord:
    question_id: int
    image_id: int
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValidationError(
                f"question {self.question_id}: question text is empty"
            )


@dataclass(frozen=True)
class AnnotationRecord:
    """A question's ten crowd answers, stored normalized (repetitions allowed)."""

    question_id: int
    image_id: int
    answers: tuple

    def __post_init__(self):
        if len(self.answers) != ANSWERS_PER_QUESTION:
            raise ValidationError(
                f"question {self.question_id}: expected "
                f"{ANSWERS_PER_QUESTION} answers, got {len(self.answers)}"
            )
        object.__setattr__(self, "answers", tuple(self.answers))

    @classmethod
    def from_raw(cls, question_id, image_id, raw_answers):
        """Build a record from raw answer strings, normalizing each one."""
        from ..metrics import normalize_answer

        return cls(
            question_id=question_id,
            image_id=image_id,
            answers=tuple(normalize_answer(a) for a in raw_answers),
        )


@dataclass(frozen=True)
class CaptionRecord:
    image_id: int
    text: str
    source: str = "generated"
    gold_index: Optional[int] = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValidationError(f"image {self.image_id}: caption text is empty")
        if self.source not in CAPTION_SOURCES:
            raise ValidationError(
                f"image {self.image_id}: unknown caption source {self.source!r}"
            )
        if self.source == "gold":
            if self.gold_index is None or not (
                0 <= self.gold_index < GOLD_CAPTIONS_PER_IMAGE
            ):
                raise ValidationError(
                    f"image {self.image_id}: gold caption needs gold_index in "
                    f"[0, {GOLD_CAPTIONS_PER_IMAGE})"
                )
        elif self.gold_index is not None:
            raise ValidationError(
                f"image {self.image_id}: gold_index only valid for gold captions"
            )


@dataclass(frozen=True)
class Example:
    """One joined training/eval instance; caption is None in question-only mode."""

    question: QuestionRecord
    annotation: AnnotationRecord
    caption: Optional[CaptionRecord] = None

    @property
    def question_id(self):
        return self.question.question_id

    @property
    def image_id(self):
        return self.question.image_id


@dataclass
class ExampleSet:
    examples: list
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLIT_TAGS:
            raise ValidationError(f"unknown split tag {self.split!r}")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def question_ids(self):
        return [ex.question_id for ex in self.examples]
