"""FastAPI service wrapping the pipeline.

Stateless compute endpoints take dataset content inline; the experiment
endpoints take a run config and read/write files on the service host
(paths resolve against CAPVQA_DATA_ROOT). Library errors map to HTTP
status by kind: config 400, data 422, runtime 500, with a JSON body
carrying ``kind`` and ``error``.
"""

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..data.joins import decontaminate, select_gold_caption, split_items
from ..data.records import AnnotationRecord
from ..errors import CapVQAError, FusionError
from ..fusion import late_fuse
from ..harness.config import RunConfig
from ..harness.experiment import evaluate_saved_model, run_experiment, select_training_steps
from ..metrics import aggregate_runs, evaluate_predictions, normalize_answer, vqa_accuracy
from ..modeling.adapters import validate_distribution
from ..modeling.head import ClassifierHeadParams, classifier_head_forward, sce_gradient, sce_loss
from ..modeling.text import format_pair_input
from ..vocab import (
    AnswerVocab,
    TargetPool,
    build_answer_vocab,
    sample_target,
    select_generative_targets,
    soft_label,
)
from . import schemas

_STATUS_BY_KIND = {"config": 400, "data": 422, "runtime": 500}

app = FastAPI(title="capvqa", version=__version__)


@app.exception_handler(CapVQAError)
async def capvqa_error_handler(request, exc):
    return JSONResponse(
        status_code=_STATUS_BY_KIND.get(exc.kind, 500),
        content={"kind": exc.kind, "error": str(exc)},
    )


def _annotation(a: schemas.AnnotationIn) -> AnnotationRecord:
    return AnnotationRecord.from_raw(a.question_id, a.image_id, a.answers)


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=__version__)


# ---------------------------------------------------------------- metrics


@app.post("/metrics/normalize", response_model=schemas.NormalizeResponse)
def normalize(req: schemas.NormalizeRequest):
    return schemas.NormalizeResponse(
        normalized=[normalize_answer(a) for a in req.answers]
    )


@app.post("/metrics/accuracy", response_model=schemas.AccuracyResponse)
def accuracy(req: schemas.AccuracyRequest):
    score = vqa_accuracy(
        req.answer, _annotation(req.annotation), req.official_averaging
    )
    return schemas.AccuracyResponse(score=score)


@app.post("/metrics/score", response_model=schemas.ReportOut)
def score(req: schemas.ScoreRequest):
    predictions = {}
    for p in req.predictions:
        predictions[p.question_id] = p.answer
    report = evaluate_predictions(
        predictions,
        [_annotation(a) for a in req.annotations],
        official_averaging=req.official_averaging,
    )
    return schemas.ReportOut(
        n=report.n,
        mean_score=report.mean_score,
        unanswered=sorted(report.unanswered),
        per_question=report.per_question,
    )


@app.post("/metrics/aggregate", response_model=schemas.AggregateResponse)
def aggregate(req: schemas.AggregateRequest):
    agg = aggregate_runs(req.run_scores)
    return schemas.AggregateResponse(
        run_scores=agg.run_scores, mean=agg.mean, std=agg.std
    )


# ------------------------------------------------------------ vocabulary


@app.post("/vocab/build", response_model=schemas.VocabBuildResponse)
def vocab_build(req: schemas.VocabBuildRequest):
    vocab = build_answer_vocab(
        [_annotation(a) for a in req.annotations],
        min_count=req.min_count,
        max_size=req.max_size,
    )
    return schemas.VocabBuildResponse(answers=vocab.answers, n_label=vocab.n_label)


@app.post("/vocab/soft-labels", response_model=schemas.SoftLabelResponse)
def soft_labels(req: schemas.SoftLabelRequest):
    vocab = AnswerVocab(answers=req.vocab)
    labels = []
    for a in req.annotations:
        lab = soft_label(_annotation(a), vocab)
        labels.append(
            schemas.SoftLabelOut(
                question_id=lab.question_id, probs=lab.probs, all_oov=lab.all_oov
            )
        )
    return schemas.SoftLabelResponse(labels=labels)


@app.post("/targets/select", response_model=schemas.TargetSelectResponse)
def targets_select(req: schemas.TargetSelectRequest):
    pool = select_generative_targets(_annotation(req.annotation))
    return schemas.TargetSelectResponse(
        question_id=pool.question_id, eligible=pool.eligible, discarded=pool.discarded
    )


@app.post("/targets/sample", response_model=schemas.TargetSampleResponse)
def targets_sample(req: schemas.TargetSampleRequest):
    pool = TargetPool(question_id=req.question_id, eligible=req.eligible)
    return schemas.TargetSampleResponse(
        answer=sample_target(pool, req.epoch, req.seed)
    )


# ----------------------------------------------------------------- data


@app.post("/dataset/decontaminate", response_model=schemas.DecontaminateResponse)
def dataset_decontaminate(req: schemas.DecontaminateRequest):
    kept = decontaminate(req.caption_training_images, req.reserved_images)
    removed = set(req.caption_training_images) & set(req.reserved_images)
    return schemas.DecontaminateResponse(kept=sorted(kept), removed=sorted(removed))


@app.post("/dataset/select-gold-caption", response_model=schemas.GoldSelectResponse)
def dataset_select_gold(req: schemas.GoldSelectRequest):
    record = select_gold_caption(
        req.image_id, req.captions, req.seed, allow_fewer=req.allow_fewer
    )
    return schemas.GoldSelectResponse(
        image_id=record.image_id, caption=record.text, gold_index=record.gold_index
    )


@app.post("/dataset/split", response_model=schemas.SplitResponse)
def dataset_split(req: schemas.SplitRequest):
    train, val = split_items(req.question_ids, req.fraction, req.seed)
    return schemas.SplitResponse(train=train, val=val)


# ------------------------------------------------------------- modeling


@app.post("/modeling/format-input", response_model=schemas.FormatInputResponse)
def modeling_format_input(req: schemas.FormatInputRequest):
    return schemas.FormatInputResponse(
        text=format_pair_input(req.caption, req.question, req.style)
    )


@app.post("/modeling/head-forward", response_model=schemas.HeadForwardResponse)
def modeling_head_forward(req: schemas.HeadForwardRequest):
    p = req.params
    params = ClassifierHeadParams(
        w_h=np.array(p.w_h),
        b_h=np.array(p.b_h),
        ln_scale=np.array(p.ln_scale),
        ln_shift=np.array(p.ln_shift),
        w_y=np.array(p.w_y),
        b_y=np.array(p.b_y),
    )
    probs = classifier_head_forward(np.array(req.pooled), params)
    return schemas.HeadForwardResponse(probs=[float(x) for x in probs])


@app.post("/modeling/sce-loss", response_model=schemas.SceLossResponse)
def modeling_sce_loss(req: schemas.SceLossRequest):
    target = np.zeros(len(req.probs))
    for k, v in req.target.items():
        target[k] = v
    return schemas.SceLossResponse(loss=sce_loss(np.array(req.probs), target))


@app.post("/modeling/sce-gradient", response_model=schemas.SceGradientResponse)
def modeling_sce_gradient(req: schemas.SceGradientRequest):
    target = np.zeros(len(req.logits))
    for k, v in req.target.items():
        target[k] = v
    grad = sce_gradient(np.array(req.logits), target)
    return schemas.SceGradientResponse(gradient=[float(g) for g in grad])


# --------------------------------------------------------------- fusion


@app.post("/fusion/late-fuse", response_model=schemas.FuseResponse)
def fusion_late_fuse(req: schemas.FuseRequest):
    fused = late_fuse(
        validate_distribution(req.p1, "p1"), validate_distribution(req.p2, "p2")
    )
    return schemas.FuseResponse(
        scores=[float(s) for s in fused.scores], argmax=fused.argmax
    )


@app.post("/fusion/predictions", response_model=schemas.FusePredictionsResponse)
def fusion_predictions(req: schemas.FusePredictionsRequest):
    if req.a.vocab != req.b.vocab:
        raise FusionError("distribution dumps use different vocabularies")
    by_a = {e.question_id: e.probs for e in req.a.entries}
    by_b = {e.question_id: e.probs for e in req.b.entries}
    if set(by_a) != set(by_b):
        only = sorted(set(by_a) ^ set(by_b))
        raise FusionError(f"dumps cover different question_ids: {only[:10]}")
    vocab = AnswerVocab(answers=req.a.vocab)
    out = []
    for qid in sorted(by_a):
        fused = late_fuse(
            validate_distribution(by_a[qid], f"a: question {qid}"),
            validate_distribution(by_b[qid], f"b: question {qid}"),
        )
        out.append(
            schemas.PredictionEntry(
                question_id=qid, answer=vocab.answer_of(fused.argmax)
            )
        )
    return schemas.FusePredictionsResponse(predictions=out)


# ------------------------------------------------------------ harness


@app.post("/experiment/run", response_model=schemas.ExperimentResponse)
def experiment_run(req: schemas.ExperimentRequest):
    config = RunConfig.from_payload(req.config)
    artifacts = run_experiment(config)
    return schemas.ExperimentResponse(**artifacts.summary())


@app.post("/experiment/select-steps", response_model=schemas.SelectStepsResponse)
def experiment_select_steps(req: schemas.SelectStepsRequest):
    config = RunConfig.from_payload(req.config)
    return schemas.SelectStepsResponse(
        steps=select_training_steps(config, req.max_steps)
    )


@app.post("/experiment/eval", response_model=schemas.EvalResponse)
def experiment_eval(req: schemas.EvalRequest):
    config = RunConfig.from_payload(req.config)
    predictions, report, distributions = evaluate_saved_model(
        config, req.model_path, gold_eval_seed=req.gold_eval_seed
    )
    dump = None
    if req.include_distributions:
        vocab_answers = _eval_vocab_answers(config)
        dump = schemas.DistributionDump(
            vocab=vocab_answers,
            entries=[
                schemas.DistributionEntry(
                    question_id=qid, probs=[float(p) for p in vec]
                )
                for qid, vec in sorted(distributions.items())
            ],
        )
    return schemas.EvalResponse(
        predictions=[
            schemas.PredictionEntry(question_id=qid, answer=ans)
            for qid, ans in sorted(predictions.items())
        ],
        report=schemas.ReportOut(
            n=report.n,
            mean_score=report.mean_score,
            unanswered=sorted(report.unanswered),
            per_question=report.per_question,
        ),
        distributions=dump,
    )


def _eval_vocab_answers(config):
    from ..harness.experiment import load_experiment_data

    return load_experiment_data(config, need_eval=False).vocab.answers
