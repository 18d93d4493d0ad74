from .records import (
    ANSWERS_PER_QUESTION,
    GOLD_CAPTIONS_PER_IMAGE,
    AnnotationRecord,
    CaptionRecord,
    Example,
    ExampleSet,
    QuestionRecord,
)
from .loaders import (
    captions_by_image,
    gold_captions_by_image,
    load_annotations,
    load_captions,
    load_image_ids,
    load_manifest,
    load_questions,
    manifest_image_ids,
    write_captions,
    write_image_ids,
    write_manifest,
)
from .joins import (
    decontaminate,
    join_examples,
    select_gold_caption,
    select_gold_captions,
    split_items,
    split_validation,
)

__all__ = [
    "ANSWERS_PER_QUESTION",
    "GOLD_CAPTIONS_PER_IMAGE",
    "AnnotationRecord",
    "CaptionRecord",
    "Example",
    "ExampleSet",
    "QuestionRecord",
    "captions_by_image",
    "gold_captions_by_image",
    "load_annotations",
    "load_captions",
    "load_image_ids",
    "load_manifest",
    "load_questions",
    "manifest_image_ids",
    "write_captions",
    "write_image_ids",
    "write_manifest",
    "decontaminate",
    "join_examples",
    "select_gold_caption",
    "select_gold_captions",
    "split_items",
    "split_validation",
]
