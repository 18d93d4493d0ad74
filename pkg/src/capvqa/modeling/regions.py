"""Image region features and multimodal input assembly.

Region features are consumed from files, never computed here. The on-disk
layout is a single ``.npz``: one ``<image_id>`` array of shape (n_v, d_v)
per image, with an optional ``<image_id>__boxes`` array of shape (n_v, 4).
n_v may vary per image; d_v is fixed per dump and carried by the arrays
themselves (2048 for the standard detector dumps).

A multimodal input is an ordered composite: text segments first (question,
then caption when present), then the n_v region slots. Bounding-box
concatenation is available but off by default; it buys nothing on the
target tasks.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError, NumericError, ParseError, ValidationError


@dataclass
class RegionFeatureSet:
    features: np.ndarray  # (n_v, d_v)
    boxes: Optional[np.ndarray] = None  # (n_v, 4)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise ValidationError(
                f"region features must be a non-empty (n_v, d_v) matrix, "
                f"got shape {self.features.shape}"
            )
        if not np.all(np.isfinite(self.features)):
            raise NumericError("region features contain non-finite entries")
        if self.boxes is not None:
            self.boxes = np.asarray(self.boxes, dtype=np.float64)
            if self.boxes.shape != (self.n_v, 4):
                raise ValidationError(
                    f"boxes shape {self.boxes.shape} != ({self.n_v}, 4)"
                )

    @property
    def n_v(self):
        return self.features.shape[0]

    @property
    def d_v(self):
        return self.features.shape[1]

    def with_boxes_concatenated(self):
        """(n_v, d_v + 4) matrix; requires boxes to be present."""
        if self.boxes is None:
            raise ValidationError("no bounding boxes to concatenate")
        return np.hstack([self.features, self.boxes])


def save_region_features(path, by_image):
    arrays = {}
    for image_id, rf in by_image.items():
        arrays[str(image_id)] = rf.features
        if rf.boxes is not None:
            arrays[f"{image_id}__boxes"] = rf.boxes
    np.savez(path, **arrays)


def load_region_features(path):
    """Load a region-feature dump; d_v must agree across images."""
    try:
        archive = np.load(path)
    except (OSError, ValueError) as e:
        raise ParseError(f"{path}: not a readable region-feature file ({e})") from e
    out = {}
    boxes = {}
    for key in archive.files:
        if key.endswith("__boxes"):
            boxes[int(key[: -len("__boxes")])] = archive[key]
        else:
            out[int(key)] = archive[key]
    result = {
        img: RegionFeatureSet(features=feat, boxes=boxes.get(img))
        for img, feat in out.items()
    }
    dims = {rf.d_v for rf in result.values()}
    if len(dims) > 1:
        raise ValidationError(f"{path}: inconsistent feature dims {sorted(dims)}")
    return result


@dataclass
class MultimodalInput:
    """Ordered text segments followed by region feature slots."""

    segments: list  # (name, text)
    regions: RegionFeatureSet
    include_boxes: bool = False

    @property
    def layout(self):
        return [name for name, _ in self.segments] + [f"regions[{self.regions.n_v}]"]

    @property
    def text(self):
        return " ".join(text for _, text in self.segments)

    def region_matrix(self):
        if self.include_boxes:
            return self.regions.with_boxes_concatenated()
        return self.regions.features


def assemble_multimodal_input(
    question,
    caption,
    regions,
    expected_feature_dim=None,
    include_boxes=False,
):
    """Compose question (+ optional caption) text with region features."""
    if not question or not question.strip():
        raise ValidationError("question text is empty")
    if regions is None or regions.n_v == 0:
        raise ValidationError("multimodal input needs at least one region")
    if expected_feature_dim is not None and regions.d_v != expected_feature_dim:
        raise ConfigError(
            f"region feature dim {regions.d_v} != projection dim "
            f"{expected_feature_dim}"
        )
    segments = [("question", question)]
    if caption is not None:
        segments.append(("caption", caption))
    return MultimodalInput(
        segments=segments, regions=regions, include_boxes=include_boxes
    )
