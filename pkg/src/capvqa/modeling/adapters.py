"""Adapter seams around external caption and answer models.

Adapters isolate the pipeline from heavyweight captioners, encoders and
generators: anything that can produce a caption for an image id, a class
distribution for a serialized input, or an answer string can plug in. In
eval mode adapters must be pure (same input, same output). When a live
model is unavailable the pipeline degrades to the file-backed adapters,
which replay cached captions, distributions or answers.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import AdapterError, ConfigError, JoinError, ValidationError
from .regions import RegionFeatureSet, assemble_multimodal_input
from .text import format_pair_input
from .toy import encode_tokens, predict_proba

DISTRIBUTION_ATOL = 1e-6

INPUT_MODES = ("caption", "question_only", "multimodal", "early_fusion")


@dataclass
class ClassifierInput:
    """Serialized text plus the ids and region features adapters may need."""

    text: str
    question_id: Optional[int] = None
    image_id: Optional[int] = None
    regions: Optional[RegionFeatureSet] = None


def build_classifier_input(example, mode, regions_by_image=None):
    """Build the model input an example presents under a given mode."""
    if mode not in INPUT_MODES:
        raise ConfigError(f"unknown input mode {mode!r}")
    q = example.question.text
    if mode in ("multimodal", "early_fusion"):
        regions = (regions_by_image or {}).get(example.image_id)
        if regions is None:
            raise JoinError(f"no region features for image {example.image_id}")
        caption = None
        if mode == "early_fusion":
            if example.caption is None:
                raise JoinError(
                    f"early fusion needs a caption for image {example.image_id}"
                )
            caption = example.caption.text
        mm = assemble_multimodal_input(q, caption, regions)
        return ClassifierInput(
            text=mm.text,
            question_id=example.question_id,
            image_id=example.image_id,
            regions=regions,
        )
    if mode == "caption":
        if example.caption is None:
            raise JoinError(f"no caption for image {example.image_id}")
        text = format_pair_input(example.caption.text, q, "pair_encoding")
    else:
        text = format_pair_input(None, q, "pair_encoding")
    return ClassifierInput(
        text=text, question_id=example.question_id, image_id=example.image_id
    )


def validate_distribution(vec, where="distribution"):
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise ValidationError(f"{where}: expected a non-empty probability vector")
    if np.any(vec < 0):
        raise ValidationError(f"{where}: negative probabilities")
    if abs(float(vec.sum()) - 1.0) > DISTRIBUTION_ATOL:
        raise ValidationError(f"{where}: probabilities sum to {vec.sum():.8f}, not 1")
    return vec


class CaptionGenerator:
    name = "caption-generator"

    def generate(self, image_id):
        raise NotImplementedError


class AnswerClassifier:
    name = "answer-classifier"
    n_label = None

    def predict_distribution(self, inp):
        raise NotImplementedError


class AnswerGenerator:
    name = "answer-generator"

    def generate_answer(self, inp):
        raise NotImplementedError


class FileCaptionGenerator(CaptionGenerator):
    """Replays captions from a cache keyed by image_id."""

    name = "file-captions"

    def __init__(self, captions_by_image):
        self._captions = dict(captions_by_image)

    def generate(self, image_id):
        try:
            return self._captions[image_id]
        except KeyError:
            raise AdapterError(self.name, f"no cached caption for image {image_id}")


class ConstantClassifier(AnswerClassifier):
    """Always predicts one fixed distribution; handy as a base-rate stub."""

    name = "constant-classifier"

    def __init__(self, distribution):
        self._dist = validate_distribution(distribution, where=self.name)
        self.n_label = self._dist.size

    def predict_distribution(self, inp):
        return self._dist.copy()


class FileDistributionClassifier(AnswerClassifier):
    """Replays per-question class distributions from a dump."""

    name = "file-distributions"

    def __init__(self, by_question, n_label):
        self._by_question = {
            qid: validate_distribution(v, where=f"question {qid}")
            for qid, v in by_question.items()
        }
        self.n_label = n_label

    def predict_distribution(self, inp):
        if inp.question_id not in self._by_question:
            raise AdapterError(
                self.name, f"no cached distribution for question {inp.question_id}"
            )
        return self._by_question[inp.question_id].copy()


class ToyClassifierAdapter(AnswerClassifier):
    """Inference wrapper around trained toy-classifier parameters."""

    name = "toy-classifier"

    def __init__(self, params, model_config):
        self._params = params
        self._cfg = model_config
        self.n_label = model_config.n_label

    def predict_distribution(self, inp):
        tokens = encode_tokens(inp.text, self._cfg.n_token)
        regions = inp.regions if self._cfg.region_dim is not None else None
        return predict_proba(self._params, tokens, regions)


class FileAnswerGenerator(AnswerGenerator):
    """Replays generated answer strings keyed by question_id."""

    name = "file-answers"

    def __init__(self, answers_by_question):
        self._answers = dict(answers_by_question)

    def generate_answer(self, inp):
        if inp.question_id not in self._answers:
            raise AdapterError(
                self.name, f"no cached answer for question {inp.question_id}"
            )
        return self._answers[inp.question_id]


class ConstantAnswerGenerator(AnswerGenerator):
    name = "constant-answers"

    def __init__(self, answer):
        self._answer = answer

    def generate_answer(self, inp):
        return self._answer


ADAPTER_CLASSES = {
    cls.name: cls
    for cls in (
        FileCaptionGenerator,
        ConstantClassifier,
        FileDistributionClassifier,
        ToyClassifierAdapter,
        FileAnswerGenerator,
        ConstantAnswerGenerator,
    )
}


def build_adapter(name, **kwargs):
    """Instantiate a registered adapter by its config name."""
    if name not in ADAPTER_CLASSES:
        raise ConfigError(
            f"unknown adapter {name!r}; known: {sorted(ADAPTER_CLASSES)}"
        )
    return ADAPTER_CLASSES[name](**kwargs)
