"""Readers and writers for the documented dataset file formats.

All files are JSON. The question and annotation files mirror the public VQA
layout (top-level "questions" / "annotations" arrays keyed by question_id);
a bare top-level array is accepted too. Captions live in a third document
keyed by image_id. Answer entries may be plain strings or
``{"answer": "..."}`` objects as in the public dumps.

The split manifest, used for decontamination audits, maps split tags to
question_id lists: ``{"splits": {"train": [...], "test": [...]}}``.
"""

import json
import logging
from pathlib import Path

from ..errors import ParseError, ValidationError
from .records import AnnotationRecord, CaptionRecord, QuestionRecord

log = logging.getLogger(__name__)


def _read_json(path):
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}: {e.msg}") from e


def _entries(doc, key, path):
    if isinstance(doc, list):
        return doc
    if isinstance(doc, dict) and isinstance(doc.get(key), list):
        return doc[key]
    raise ParseError(f"{path}: expected a top-level list or a {key!r} array")


def _field(entry, name, idx, path):
    try:
        return entry[name]
    except (KeyError, TypeError):
        raise ParseError(f"{path}: record #{idx} is missing field {name!r}") from None


def _check_unique_qids(records, path):
    seen = {}
    for r in records:
        if r.question_id in seen:
            raise ValidationError(
                f"{path}: duplicate question_id {r.question_id}"
            )
        seen[r.question_id] = r


def load_questions(path):
    """Load question records; duplicate question_ids are rejected."""
    doc = _read_json(path)
    records = []
    for idx, entry in enumerate(_entries(doc, "questions", path)):
        records.append(
            QuestionRecord(
                question_id=int(_field(entry, "question_id", idx, path)),
                image_id=int(_field(entry, "image_id", idx, path)),
                text=str(_field(entry, "question", idx, path)),
            )
        )
    _check_unique_qids(records, path)
    log.info("loaded %d questions from %s", len(records), path)
    return records


def load_annotations(path):
    """Load annotation records; answers are normalized, ten per question."""
    doc = _read_json(path)
    records = []
    for idx, entry in enumerate(_entries(doc, "annotations", path)):
        raw = _field(entry, "answers", idx, path)
        answers = [a["answer"] if isinstance(a, dict) else a for a in raw]
        records.append(
            AnnotationRecord.from_raw(
                question_id=int(_field(entry, "question_id", idx, path)),
                image_id=int(_field(entry, "image_id", idx, path)),
                raw_answers=[str(a) for a in answers],
            )
        )
    _check_unique_qids(records, path)
    log.info("loaded %d annotations from %s", len(records), path)
    return records


def load_captions(path):
    """Load caption records (generated or gold) keyed by image_id."""
    doc = _read_json(path)
    records = []
    for idx, entry in enumerate(_entries(doc, "captions", path)):
        records.append(
            CaptionRecord(
                image_id=int(_field(entry, "image_id", idx, path)),
                text=str(_field(entry, "caption", idx, path)),
                source=entry.get("source", "generated"),
                gold_index=entry.get("gold_index"),
            )
        )
    log.info("loaded %d captions from %s", len(records), path)
    return records


def captions_by_image(records):
    """Map image_id -> caption; duplicates for one image are rejected."""
    out = {}
    for r in records:
        if r.image_id in out:
            raise ValidationError(f"duplicate caption for image {r.image_id}")
        out[r.image_id] = r
    return out


def gold_captions_by_image(records):
    """Group gold captions per image, ordered by gold_index."""
    grouped = {}
    for r in records:
        if r.source != "gold":
            raise ValidationError(
                f"image {r.image_id}: expected gold captions, got {r.source!r}"
            )
        grouped.setdefault(r.image_id, []).append(r)
    return {
        img: [c.text for c in sorted(caps, key=lambda c: c.gold_index)]
        for img, caps in grouped.items()
    }


def write_captions(path, records):
    payload = {
        "captions": [
            {
                "image_id": r.image_id,
                "caption": r.text,
                "source": r.source,
                **({"gold_index": r.gold_index} if r.gold_index is not None else {}),
            }
            for r in records
        ]
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)


def load_manifest(path):
    """Load a split manifest: {"splits": {tag: [question_ids]}}."""
    doc = _read_json(path)
    splits = doc.get("splits") if isinstance(doc, dict) else None
    if not isinstance(splits, dict):
        raise ParseError(f"{path}: expected a top-level 'splits' object")
    return {tag: [int(q) for q in qids] for tag, qids in splits.items()}


def write_manifest(path, splits):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"splits": {t: sorted(q) for t, q in splits.items()}}, f, indent=2)


def manifest_image_ids(manifest, questions, split):
    """Image ids referenced by a manifest split, resolved via question records."""
    if split not in manifest:
        raise ValidationError(f"manifest has no split {split!r}")
    wanted = set(manifest[split])
    by_qid = {q.question_id: q for q in questions}
    missing = sorted(wanted - set(by_qid))
    if missing:
        raise ValidationError(
            f"manifest split {split!r} lists unknown question_ids: {missing[:10]}"
        )
    return {by_qid[q].image_id for q in wanted}


def load_image_ids(path):
    """Read an image-id set: a JSON list or {"image_ids": [...]}."""
    doc = _read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("image_ids")
    if not isinstance(doc, list):
        raise ParseError(f"{path}: expected a JSON list or an 'image_ids' array")
    return {int(i) for i in doc}


def write_image_ids(path, image_ids):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"image_ids": sorted(image_ids)}, f, indent=2)
