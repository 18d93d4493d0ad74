"""End-to-end experiment orchestration.

``run_experiment`` is a pure function of its config plus the dataset files
it names: per seed it trains (or loads) a classifier, writes a prediction
file and scored report under the run directory, then aggregates the
per-run means. ``select_training_steps`` implements the step-count search:
a fixed 80/20 split shared by all seeds, periodic validation scoring up to
``max_steps``, and the rounded mean of the per-seed best steps.

With gold captions, every train seed picks one caption per image for the
whole run, and each trained model is evaluated once per configured eval
selection seed; each (seed, selection) pair contributes one report.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from ..data.joins import join_examples, select_gold_captions, split_validation
from ..data.loaders import (
    captions_by_image,
    gold_captions_by_image,
    load_annotations,
    load_captions,
    load_questions,
)
from ..data.records import ExampleSet
from ..errors import ConfigError, DataError
from ..metrics import aggregate_runs, evaluate_predictions
from ..modeling.adapters import (
    FileDistributionClassifier,
    ToyClassifierAdapter,
    build_classifier_input,
)
from ..modeling.regions import load_region_features
from ..modeling.toy import (
    ToyModelConfig,
    TrainSettings,
    encode_tokens,
    load_toy_model,
    predict_proba,
    save_toy_model,
    train_toy_classifier,
)
from ..vocab import AnswerVocab, build_answer_vocab, soft_label
from .files import read_distributions, write_predictions, write_report

log = logging.getLogger(__name__)

_JOIN_MODE = {
    "caption": "caption",
    "question_only": "question_only",
    "multimodal": "multimodal",
    "early_fusion": "caption",
}


@dataclass
class ExperimentData:
    train_questions: list
    train_annotations: list
    eval_questions: list = None
    eval_annotations: list = None
    generated_captions: dict = None  # image_id -> CaptionRecord
    gold_captions: dict = None  # image_id -> [5 caption strings]
    regions: dict = None  # image_id -> RegionFeatureSet
    vocab: AnswerVocab = None


@dataclass
class RunArtifacts:
    run_dir: Path
    config_hash: str
    labels: list
    prediction_paths: dict
    report_paths: dict
    model_paths: dict
    reports: dict
    aggregate: object
    config_snapshot_path: Path

    def summary(self):
        return {
            "run_dir": str(self.run_dir),
            "config_hash": self.config_hash,
            "labels": self.labels,
            "run_scores": self.aggregate.run_scores,
            "mean": self.aggregate.mean,
            "std": self.aggregate.std,
        }


def _uses_captions(mode):
    return mode in ("caption", "early_fusion")


def _uses_regions(mode):
    return mode in ("multimodal", "early_fusion")


def load_experiment_data(config, need_eval=True):
    """Resolve, validate and load every file the experiment needs.

    Missing files surface here, before any training starts.
    """
    wanted = {
        "train_questions": config.train_questions,
        "train_annotations": config.train_annotations,
    }
    if need_eval:
        wanted["eval_questions"] = config.eval_questions
        wanted["eval_annotations"] = config.eval_annotations
    if _uses_captions(config.mode) or (config.captions and config.mode == "multimodal"):
        wanted["captions"] = config.captions
    if _uses_regions(config.mode):
        wanted["regions"] = config.regions
    if config.vocab_path:
        wanted["vocab_path"] = config.vocab_path

    resolved = {}
    missing = []
    for name, value in wanted.items():
        if not value:
            raise ConfigError(f"config field {name!r} is required for mode "
                              f"{config.mode!r}")
        path = config.resolve_path(value)
        if not path.exists():
            missing.append(f"{name}={path}")
        resolved[name] = path
    if missing:
        raise DataError("missing dataset paths: " + ", ".join(missing))

    data = ExperimentData(
        train_questions=load_questions(resolved["train_questions"]),
        train_annotations=load_annotations(resolved["train_annotations"]),
    )
    if need_eval:
        data.eval_questions = load_questions(resolved["eval_questions"])
        data.eval_annotations = load_annotations(resolved["eval_annotations"])
    if "captions" in resolved:
        records = load_captions(resolved["captions"])
        if config.caption_source == "gold":
            data.gold_captions = gold_captions_by_image(records)
        else:
            data.generated_captions = captions_by_image(records)
    if "regions" in resolved:
        data.regions = load_region_features(resolved["regions"])
    if config.vocab_path:
        data.vocab = AnswerVocab.load(resolved["vocab_path"])
    else:
        data.vocab = build_answer_vocab(
            data.train_annotations,
            min_count=config.vocab_min_count or None,
            max_size=config.vocab_max_size or None,
        )
    return data


def _captions_for(config, data, seed):
    if not _uses_captions(config.mode) and config.mode != "multimodal":
        return None
    if config.caption_source == "gold":
        if data.gold_captions is None:
            return None
        return select_gold_captions(data.gold_captions, seed)
    return data.generated_captions


def _join(config, questions, annotations, captions, split):
    return join_examples(
        questions,
        annotations,
        captions=captions,
        mode=_JOIN_MODE[config.mode],
        split=split,
    )


def encode_for_training(examples, mode, vocab, n_token, regions_by_image=None):
    """Turn joined examples into (token_ids, dense_label, regions) triples."""
    encoded = []
    for ex in examples:
        inp = build_classifier_input(ex, mode, regions_by_image)
        label = soft_label(ex.annotation, vocab).dense(vocab.n_label)
        encoded.append((encode_tokens(inp.text, n_token), label, inp.regions))
    return encoded


def predict_answers(classifier, examples, mode, vocab, regions_by_image=None):
    """Argmax answers for every example, via any AnswerClassifier adapter."""
    predictions = {}
    for ex in examples:
        inp = build_classifier_input(ex, mode, regions_by_image)
        probs = classifier.predict_distribution(inp)
        predictions[ex.question_id] = vocab.answer_of(int(probs.argmax()))
    return predictions


def predict_distributions(classifier, examples, mode, regions_by_image=None):
    return {
        ex.question_id: classifier.predict_distribution(
            build_classifier_input(ex, mode, regions_by_image)
        )
        for ex in examples
    }


def evaluate_examples(predictions, examples, official_averaging=False):
    annotations = [ex.annotation for ex in examples]
    return evaluate_predictions(
        predictions, annotations, official_averaging=official_averaging
    )


def _toy_model_config(config, data):
    region_dim = None
    if _uses_regions(config.mode):
        region_dim = next(iter(data.regions.values())).d_v
    return ToyModelConfig(
        n_label=data.vocab.n_label,
        n_token=config.n_token,
        d_h=config.d_h,
        region_dim=region_dim,
    )


def _train_settings(config, seed, steps=None):
    return TrainSettings(
        steps=steps or config.steps,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        schedule=config.schedule,
        warmup_steps=config.warmup_steps,
        weight_decay=config.weight_decay,
        seed=seed,
    )


def _load_checkpoint(config, model_cfg):
    """Warm-start parameters for chained runs (pretrain, then finetune)."""
    if not config.init_checkpoint:
        return None
    path = config.resolve_path(config.init_checkpoint)
    if not path.exists():
        raise DataError(f"missing dataset paths: init_checkpoint={path}")
    params, saved_cfg = load_toy_model(path)
    if saved_cfg != model_cfg:
        raise ConfigError(
            f"checkpoint model config {saved_cfg} does not match the run's "
            f"{model_cfg}"
        )
    return params


def _build_static_classifier(config, data):
    """Adapters that need no training (cached distribution replays)."""
    if config.classifier_adapter == "file-distributions":
        if not config.distributions:
            raise ConfigError("file-distributions adapter needs 'distributions'")
        answers, by_q = read_distributions(config.resolve_path(config.distributions))
        if answers != data.vocab.answers:
            raise ConfigError(
                "distribution dump vocabulary does not match the run vocabulary"
            )
        return FileDistributionClassifier(by_q, n_label=data.vocab.n_label)
    raise ConfigError(
        f"classifier_adapter {config.classifier_adapter!r} is not runnable "
        "from a config (use 'toy-classifier' or 'file-distributions')"
    )


def run_experiment(config):
    """Train and evaluate once per seed, then aggregate the run means."""
    data = load_experiment_data(config, need_eval=True)
    run_dir = config.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    snapshot = run_dir / "config.json"
    config.save(snapshot)

    artifacts = RunArtifacts(
        run_dir=run_dir,
        config_hash=config.config_hash(),
        labels=[],
        prediction_paths={},
        report_paths={},
        model_paths={},
        reports={},
        aggregate=None,
        config_snapshot_path=snapshot,
    )
    gold = config.caption_source == "gold" and _uses_captions(config.mode)

    for seed in config.seeds:
        train_examples = _join(
            config,
            data.train_questions,
            data.train_annotations,
            _captions_for(config, data, seed),
            split="train",
        )
        if config.classifier_adapter == "toy-classifier":
            model_cfg = _toy_model_config(config, data)
            encoded = encode_for_training(
                train_examples, config.mode, data.vocab, config.n_token, data.regions
            )
            result = train_toy_classifier(
                encoded,
                model_cfg,
                _train_settings(config, seed),
                initial_params=_load_checkpoint(config, model_cfg),
            )
            classifier = ToyClassifierAdapter(result.params, model_cfg)
            model_path = run_dir / f"seed{seed}" / "model.npz"
            model_path.parent.mkdir(parents=True, exist_ok=True)
            save_toy_model(model_path, result.params, model_cfg)
            artifacts.model_paths[seed] = model_path
        else:
            classifier = _build_static_classifier(config, data)

        eval_selections = [None]
        if gold:
            eval_selections = config.gold_caption_eval_seeds or [seed]
        for cap_seed in eval_selections:
            eval_captions = (
                select_gold_captions(data.gold_captions, cap_seed)
                if gold
                else _captions_for(config, data, seed)
            )
            eval_examples = _join(
                config,
                data.eval_questions,
                data.eval_annotations,
                eval_captions,
                split="test",
            )
            predictions = predict_answers(
                classifier, eval_examples, config.mode, data.vocab, data.regions
            )
            report = evaluate_examples(
                predictions, eval_examples, config.official_averaging
            )
            label = f"seed{seed}" if cap_seed is None else f"seed{seed}-caps{cap_seed}"
            out_dir = run_dir / label
            out_dir.mkdir(parents=True, exist_ok=True)
            pred_path = out_dir / "predictions.json"
            report_path = out_dir / "report.json"
            write_predictions(predictions, pred_path)
            write_report(report_path, report)
            artifacts.labels.append(label)
            artifacts.prediction_paths[label] = pred_path
            artifacts.report_paths[label] = report_path
            artifacts.reports[label] = report
            log.info("run %s: mean VQA score %.4f", label, report.mean_score)

    artifacts.aggregate = aggregate_runs(
        [artifacts.reports[label] for label in artifacts.labels]
    )
    agg_path = run_dir / "aggregate.json"
    with open(agg_path, "w", encoding="utf-8") as f:
        json.dump(
            {"labels": artifacts.labels, **artifacts.aggregate.to_dict()},
            f,
            indent=2,
            sort_keys=True,
        )
        f.write("\n")
    return artifacts


def select_training_steps(config, max_steps, evaluator=None):
    """Pick a step count from validation peaks on a shared 80/20 split.

    For every seed: train on the 80% part up to max_steps, score the
    validation part every ``eval_interval`` steps (and at the last step),
    and keep the earliest step with the best score. The result is the
    rounded mean of the per-seed best steps.

    ``evaluator(seed, train_set, val_set, max_steps, eval_interval)`` may
    replace the built-in toy training; it must return (step, score) pairs.
    """
    if max_steps <= 0:
        raise ConfigError("max_steps must be positive")
    data = load_experiment_data(config, need_eval=False)

    base = join_examples(
        data.train_questions,
        data.train_annotations,
        captions=None,
        mode="question_only",
    )
    train_base, val_base = split_validation(
        base, config.val_fraction, config.split_seed
    )
    if len(val_base) == 0:
        raise ConfigError(
            f"validation split is empty ({len(base)} examples at fraction "
            f"{config.val_fraction})"
        )
    train_qids = set(train_base.question_ids())
    val_qids = set(val_base.question_ids())

    best_steps = []
    for seed in config.seeds:
        full = _join(
            config,
            data.train_questions,
            data.train_annotations,
            _captions_for(config, data, seed),
            split="train",
        )
        train_set = ExampleSet(
            [ex for ex in full if ex.question_id in train_qids], split="train"
        )
        val_set = ExampleSet(
            [ex for ex in full if ex.question_id in val_qids], split="val"
        )
        if evaluator is not None:
            history = evaluator(
                seed=seed,
                train_set=train_set,
                val_set=val_set,
                max_steps=max_steps,
                eval_interval=config.eval_interval,
            )
        else:
            history = _toy_validation_history(config, data, seed, train_set,
                                              val_set, max_steps)
        if not history:
            raise ConfigError("step selection produced no validation scores")
        best_step, best_score = history[0]
        for step, score in history[1:]:
            if score > best_score:
                best_step, best_score = step, score
        best_steps.append(best_step)
        log.info("seed %d: best validation score %.4f at step %d",
                 seed, best_score, best_step)

    chosen = int(round(sum(best_steps) / len(best_steps)))
    return max(1, min(chosen, max_steps))


def _toy_validation_history(config, data, seed, train_set, val_set, max_steps):
    model_cfg = _toy_model_config(config, data)
    encoded = encode_for_training(
        train_set, config.mode, data.vocab, config.n_token, data.regions
    )

    def eval_fn(step, params):
        classifier = ToyClassifierAdapter(params, model_cfg)
        preds = predict_answers(
            classifier, val_set, config.mode, data.vocab, data.regions
        )
        return evaluate_examples(preds, val_set, config.official_averaging).mean_score

    result = train_toy_classifier(
        encoded,
        model_cfg,
        _train_settings(config, seed, steps=max_steps),
        eval_every=config.eval_interval,
        eval_fn=eval_fn,
    )
    return result.eval_history


def evaluate_saved_model(config, model_path, gold_eval_seed=None):
    """Score a saved toy model on the configured eval split.

    Returns (predictions, report, distributions).
    """
    data = load_experiment_data(config, need_eval=True)
    params, model_cfg = load_toy_model(config.resolve_path(model_path))
    if model_cfg.n_label != data.vocab.n_label:
        raise ConfigError(
            f"model has {model_cfg.n_label} classes but the vocabulary has "
            f"{data.vocab.n_label}"
        )
    classifier = ToyClassifierAdapter(params, model_cfg)
    seed = gold_eval_seed if gold_eval_seed is not None else config.seeds[0]
    eval_captions = _captions_for(config, data, seed)
    eval_examples = _join(
        config, data.eval_questions, data.eval_annotations, eval_captions,
        split="test",
    )
    predictions = predict_answers(
        classifier, eval_examples, config.mode, data.vocab, data.regions
    )
    distributions = predict_distributions(
        classifier, eval_examples, config.mode, data.regions
    )
    report = evaluate_examples(predictions, eval_examples, config.official_averaging)
    return predictions, report, distributions
