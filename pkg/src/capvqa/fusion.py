"""Late fusion of two classifiers by elementwise probability product.

Fused scores are the raw products, deliberately not renormalized (the
argmax is unaffected). Ties break toward the lowest class index. Both
inputs must be distributions over the same vocabulary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AdapterError, FusionError
from .modeling.adapters import build_classifier_input

DEFAULT_PROVENANCE = ("model_a", "model_b")


@dataclass
class FusedPrediction:
    scores: np.ndarray
    argmax: int
    provenance: tuple = DEFAULT_PROVENANCE


def late_fuse(p1, p2, provenance=DEFAULT_PROVENANCE):
    """Elementwise product of two class distributions."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise FusionError(
            f"cannot fuse distributions of sizes {p1.shape} and {p2.shape}"
        )
    scores = p1 * p2
    return FusedPrediction(
        scores=scores, argmax=int(np.argmax(scores)), provenance=tuple(provenance)
    )


def predict_fused(
    classifier_a,
    classifier_b,
    example,
    vocab,
    mode_a="caption",
    mode_b="multimodal",
    regions_by_image=None,
):
    """Answer an example by fusing a caption-based and an image-based classifier.

    Each classifier sees the input built for its own mode from the same
    question/image; the answer is the vocabulary entry at the fused argmax.
    """
    inp_a = build_classifier_input(example, mode_a, regions_by_image)
    inp_b = build_classifier_input(example, mode_b, regions_by_image)
    p1 = _predict(classifier_a, inp_a)
    p2 = _predict(classifier_b, inp_b)
    if len(p1) != len(vocab) or len(p2) != len(vocab):
        raise FusionError(
            f"classifier outputs ({len(p1)}, {len(p2)}) do not match the "
            f"{len(vocab)}-way vocabulary"
        )
    fused = late_fuse(p1, p2, provenance=(classifier_a.name, classifier_b.name))
    return vocab.answer_of(fused.argmax)


def _predict(classifier, inp):
    try:
        return classifier.predict_distribution(inp)
    except AdapterError:
        raise
    except Exception as e:
        raise AdapterError(classifier.name, str(e)) from e
