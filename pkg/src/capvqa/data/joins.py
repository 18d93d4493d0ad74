"""Joining, decontamination, gold-caption selection and validation splits.

Everything here is pure and explicitly seeded; repeated calls with the same
arguments return the same result.
"""

import logging
import random

from ..errors import ConfigError, JoinError, ValidationError
from .records import (
    GOLD_CAPTIONS_PER_IMAGE,
    CaptionRecord,
    Example,
    ExampleSet,
)

log = logging.getLogger(__name__)

JOIN_MODES = ("caption", "question_only", "multimodal")


def join_examples(questions, annotations, captions=None, mode="caption", split="train"):
    """Join questions with annotations and (mode permitting) captions.

    caption mode requires a caption for every referenced image;
    question_only drops captions even when supplied; multimodal attaches
    them opportunistically (region features travel separately).
    """
    if mode not in JOIN_MODES:
        raise ConfigError(f"unknown join mode {mode!r}")
    ann_by_qid = {a.question_id: a for a in annotations}
    missing_ann = sorted(q.question_id for q in questions if q.question_id not in ann_by_qid)
    if missing_ann:
        raise JoinError(
            f"questions without annotations: {missing_ann[:10]}"
            + ("..." if len(missing_ann) > 10 else "")
        )
    if captions is not None and not isinstance(captions, dict):
        from .loaders import captions_by_image

        captions = captions_by_image(captions)

    if mode == "caption":
        if captions is None:
            raise JoinError("caption mode requires a caption collection")
        missing = sorted({q.image_id for q in questions} - set(captions))
        if missing:
            raise JoinError(
                f"images without captions: {missing[:10]}"
                + ("..." if len(missing) > 10 else "")
            )

    examples = []
    for q in questions:
        if mode == "question_only":
            cap = None
        else:
            cap = captions.get(q.image_id) if captions else None
        examples.append(Example(question=q, annotation=ann_by_qid[q.question_id], caption=cap))
    return ExampleSet(examples=examples, split=split)


def decontaminate(caption_training_images, reserved_images):
    """Drop reserved evaluation images from a caption-training image set."""
    return set(caption_training_images) - set(reserved_images)


def select_gold_caption(image_id, gold_captions, seed, allow_fewer=False):
    """Pick one of an image's gold captions, fixed for the whole run.

    The choice depends only on (image_id, seed): the RNG is seeded from a
    string derived from both, so the same caption comes back for the same
    image no matter how often or in what order images are visited.
    """
    if len(gold_captions) != GOLD_CAPTIONS_PER_IMAGE:
        if not (allow_fewer and len(gold_captions) >= 1):
            raise ValidationError(
                f"image {image_id}: expected {GOLD_CAPTIONS_PER_IMAGE} gold "
                f"captions, got {len(gold_captions)}"
            )
        log.warning(
            "image %d: only %d gold captions, selecting among them",
            image_id,
            len(gold_captions),
        )
    rng = random.Random(f"gold-caption:{image_id}:{seed}")
    idx = rng.randrange(len(gold_captions))
    return CaptionRecord(
        image_id=image_id, text=gold_captions[idx], source="gold", gold_index=idx
    )


def select_gold_captions(gold_by_image, seed, allow_fewer=False):
    """Per-image gold selection over a whole split."""
    return {
        img: select_gold_caption(img, caps, seed, allow_fewer=allow_fewer)
        for img, caps in gold_by_image.items()
    }


def split_items(items, fraction, seed):
    """Seeded disjoint/exhaustive split of any sequence.

    The second part gets floor(fraction * N) items (documented rounding
    rule); input order is preserved within each part.
    """
    if not (0.0 < fraction < 1.0):
        raise ConfigError(f"split fraction must be in (0, 1), got {fraction}")
    n = len(items)
    if n == 0:
        raise ValidationError("cannot split an empty collection")
    n_val = int(fraction * n)
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    val_idx = set(indices[:n_val])
    kept = [x for i, x in enumerate(items) if i not in val_idx]
    held_out = [x for i, x in enumerate(items) if i in val_idx]
    return kept, held_out


def split_validation(examples, fraction, seed):
    """Split an ExampleSet into disjoint, exhaustive train/val parts."""
    train, val = split_items(list(examples), fraction, seed)
    return (
        ExampleSet(examples=train, split=examples.split),
        ExampleSet(examples=val, split="val"),
    )
