"""Pydantic request/response models for the HTTP service."""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class AnnotationIn(BaseModel):
    question_id: int
    image_id: int = 0
    answers: List[str]


class PredictionEntry(BaseModel):
    question_id: int
    answer: str


class NormalizeRequest(BaseModel):
    answers: List[str]


class NormalizeResponse(BaseModel):
    normalized: List[str]


class AccuracyRequest(BaseModel):
    answer: str
    annotation: AnnotationIn
    official_averaging: bool = False


class AccuracyResponse(BaseModel):
    score: float


class ScoreRequest(BaseModel):
    predictions: List[PredictionEntry]
    annotations: List[AnnotationIn]
    official_averaging: bool = False


class ReportOut(BaseModel):
    n: int
    mean_score: float
    unanswered: List[int]
    per_question: Dict[int, float]


class AggregateRequest(BaseModel):
    run_scores: List[float] = Field(min_length=1)


class AggregateResponse(BaseModel):
    run_scores: List[float]
    mean: float
    std: float


class VocabBuildRequest(BaseModel):
    annotations: List[AnnotationIn]
    min_count: Optional[int] = None
    max_size: Optional[int] = None


class VocabBuildResponse(BaseModel):
    answers: List[str]
    n_label: int


class SoftLabelRequest(BaseModel):
    annotations: List[AnnotationIn]
    vocab: List[str]


class SoftLabelOut(BaseModel):
    question_id: int
    probs: Dict[int, float]
    all_oov: bool


class SoftLabelResponse(BaseModel):
    labels: List[SoftLabelOut]


class TargetSelectRequest(BaseModel):
    annotation: AnnotationIn


class TargetSelectResponse(BaseModel):
    question_id: int
    eligible: List[str]
    discarded: bool


class TargetSampleRequest(BaseModel):
    question_id: int
    eligible: List[str]
    epoch: int
    seed: int


class TargetSampleResponse(BaseModel):
    answer: str


class DecontaminateRequest(BaseModel):
    caption_training_images: List[int]
    reserved_images: List[int]


class DecontaminateResponse(BaseModel):
    kept: List[int]
    removed: List[int]


class GoldSelectRequest(BaseModel):
    image_id: int
    captions: List[str]
    seed: int
    allow_fewer: bool = False


class GoldSelectResponse(BaseModel):
    image_id: int
    caption: str
    gold_index: int


class SplitRequest(BaseModel):
    question_ids: List[int]
    fraction: float
    seed: int


class SplitResponse(BaseModel):
    train: List[int]
    val: List[int]


class FormatInputRequest(BaseModel):
    question: str
    caption: Optional[str] = None
    style: str = "pair_encoding"


class FormatInputResponse(BaseModel):
    text: str


class HeadParamsIn(BaseModel):
    w_h: List[List[float]]
    b_h: List[float]
    ln_scale: List[float]
    ln_shift: List[float]
    w_y: List[List[float]]
    b_y: List[float]


class HeadForwardRequest(BaseModel):
    pooled: List[float]
    params: HeadParamsIn


class HeadForwardResponse(BaseModel):
    probs: List[float]


class SceLossRequest(BaseModel):
    probs: List[float]
    target: Dict[int, float]


class SceLossResponse(BaseModel):
    loss: float


class SceGradientRequest(BaseModel):
    logits: List[float]
    target: Dict[int, float]


class SceGradientResponse(BaseModel):
    gradient: List[float]


class FuseRequest(BaseModel):
    p1: List[float]
    p2: List[float]


class FuseResponse(BaseModel):
    scores: List[float]
    argmax: int


class DistributionEntry(BaseModel):
    question_id: int
    probs: List[float]


class DistributionDump(BaseModel):
    vocab: List[str]
    entries: List[DistributionEntry]


class FusePredictionsRequest(BaseModel):
    a: DistributionDump
    b: DistributionDump


class FusePredictionsResponse(BaseModel):
    predictions: List[PredictionEntry]


class ExperimentRequest(BaseModel):
    config: dict


class ExperimentResponse(BaseModel):
    run_dir: str
    config_hash: str
    labels: List[str]
    run_scores: List[float]
    mean: float
    std: float


class SelectStepsRequest(BaseModel):
    config: dict
    max_steps: int


class SelectStepsResponse(BaseModel):
    steps: int


class EvalRequest(BaseModel):
    config: dict
    model_path: str
    gold_eval_seed: Optional[int] = None
    include_distributions: bool = False


class EvalResponse(BaseModel):
    predictions: List[PredictionEntry]
    report: ReportOut
    distributions: Optional[DistributionDump] = None


class HealthResponse(BaseModel):
    status: str
    version: str
