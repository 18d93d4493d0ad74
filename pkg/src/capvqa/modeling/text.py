"""Serialized model inputs for caption/question pairs, plus toy tokenization.

Two input styles are pinned (single spaces, exact templates, stable across
caches and tests):

  pair_encoding        "[CLS] {caption} [SEP] {question} [SEP]"
  prefixed_generative  "caption: {caption} question: {question}"

With no caption (question-only ablation) the caption segment or prefix is
omitted entirely.
"""

import zlib
from dataclasses import dataclass

from ..errors import ConfigError, ValidationError

INPUT_STYLES = ("pair_encoding", "prefixed_generative")

CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
CAPTION_PREFIX = "caption:"
QUESTION_PREFIX = "question:"


def format_pair_input(caption, question, style="pair_encoding"):
    """Serialize an optional caption and a question into one model input."""
    if style not in INPUT_STYLES:
        raise ConfigError(f"unknown input style {style!r}")
    if not question or not question.strip():
        raise ValidationError("question text is empty")
    if style == "prefixed_generative":
        if caption is None:
            return f"{QUESTION_PREFIX} {question}"
        return f"{CAPTION_PREFIX} {caption} {QUESTION_PREFIX} {question}"
    if caption is None:
        return f"{CLS_TOKEN} {question} {SEP_TOKEN}"
    return f"{CLS_TOKEN} {caption} {SEP_TOKEN} {question} {SEP_TOKEN}"


def token_id(token, n_token):
    """Stable hashed token id (crc32), identical across runs and platforms."""
    return zlib.crc32(token.encode("utf-8")) % n_token


@dataclass
class TokenizedInput:
    """Hashed token ids with a caption/question span layout."""

    tokens: list
    spans: list  # (segment name, start, end), non-overlapping, exhaustive

    @property
    def n_t(self):
        return len(self.tokens)


def tokenize_pair(caption, question, n_token):
    """Whitespace-tokenize the caption (if any) and question into one sequence."""
    if not question or not question.strip():
        raise ValidationError("question text is empty")
    tokens = []
    spans = []
    segments = []
    if caption is not None:
        segments.append(("caption", caption))
    segments.append(("question", question))
    for name, text in segments:
        ids = [token_id(t, n_token) for t in text.split()]
        spans.append((name, len(tokens), len(tokens) + len(ids)))
        tokens.extend(ids)
    return TokenizedInput(tokens=tokens, spans=spans)
