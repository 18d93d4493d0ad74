"""Command-line client for the pipeline service.

The CLI owns file I/O and talks to the HTTP service for every computation.
By default requests are served in-process (no daemon needed); pass
``--server http://host:port`` to target a running instance instead. Exit
codes: 0 success, 2 configuration errors, 3 data errors, 4 runtime errors.
"""

import argparse
import asyncio
import json
import sys

import httpx
import yaml

from .data.loaders import (
    load_annotations,
    load_image_ids,
    load_manifest,
    load_questions,
    manifest_image_ids,
    write_image_ids,
)
from .errors import CapVQAError, ConfigError, DataError, ParseError
from .harness.files import read_predictions, write_predictions
from .vocab import AnswerVocab, SoftLabel, save_soft_labels


class ServiceClient:
    """POSTs JSON to the service, in-process unless a server URL is given."""

    def __init__(self, server=None):
        self.server = server

    def post(self, path, payload):
        if self.server:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                response = client.post(path, json=payload)
        else:
            response = asyncio.run(self._post_in_process(path, payload))
        return self._unwrap(response)

    @staticmethod
    async def _post_in_process(path, payload):
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://capvqa", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    @staticmethod
    def _unwrap(response):
        if response.is_success:
            return response.json()
        try:
            body = response.json()
        except ValueError:
            body = {}
        kind = body.get("kind")
        message = body.get("error") or body.get("detail") or response.text
        if kind == "config" or response.status_code == 400:
            raise ConfigError(message)
        if kind == "data" or response.status_code in (404, 422):
            raise DataError(str(message))
        raise CapVQAError(str(message))


def _annotation_payload(path):
    return [
        {"question_id": a.question_id, "image_id": a.image_id,
         "answers": list(a.answers)}
        for a in load_annotations(path)
    ]


def _read_config_payload(path):
    try:
        with open(path, encoding="utf-8") as f:
            if str(path).endswith((".yaml", ".yml")):
                doc = yaml.safe_load(f)
            else:
                doc = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"{path}: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping of config fields")
    return doc


def _read_json_file(path):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}: {e.msg}") from e


# ------------------------------------------------------------- commands


def cmd_vocab_build(args, client):
    annotations = _annotation_payload(args.annotations)
    payload = {
        "annotations": annotations,
        "min_count": args.min_count,
        "max_size": args.max_size,
    }
    result = client.post("/vocab/build", payload)
    AnswerVocab(answers=result["answers"]).save(args.output)
    print(f"built vocabulary of {result['n_label']} answers -> {args.output}")
    if args.soft_labels:
        labels = client.post(
            "/vocab/soft-labels",
            {"annotations": annotations, "vocab": result["answers"]},
        )["labels"]
        cache = [
            SoftLabel(
                question_id=lab["question_id"],
                probs={int(k): p for k, p in lab["probs"].items()},
                all_oov=lab["all_oov"],
            )
            for lab in labels
        ]
        save_soft_labels(args.soft_labels, cache, result["n_label"])
        print(f"cached {len(cache)} soft labels -> {args.soft_labels}")
    return 0


def cmd_vocab_inspect(args, client):
    vocab = AnswerVocab.load(args.vocab)
    print(f"{args.vocab}: {vocab.n_label} answers")
    for i, a in enumerate(vocab.answers[: args.head]):
        print(f"  {i:4d}  {a}")
    if args.annotations:
        payload = {
            "annotations": _annotation_payload(args.annotations),
            "vocab": vocab.answers,
        }
        labels = client.post("/vocab/soft-labels", payload)["labels"]
        oov = sum(1 for lab in labels if lab["all_oov"])
        covered = len(labels) - oov
        print(
            f"coverage: {covered}/{len(labels)} questions have at least one "
            f"in-vocabulary answer ({oov} fully out-of-vocabulary)"
        )
    return 0


def cmd_score(args, client):
    predictions = read_predictions(args.predictions)
    payload = {
        "predictions": [
            {"question_id": qid, "answer": ans} for qid, ans in predictions.items()
        ],
        "annotations": _annotation_payload(args.annotations),
        "official_averaging": args.official_averaging,
    }
    report = client.post("/metrics/score", payload)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
    print(
        f"mean VQA score {report['mean_score']:.4f} over {report['n']} questions "
        f"({len(report['unanswered'])} unanswered)"
    )
    return 0


def cmd_train(args, client):
    config = _read_config_payload(args.config)
    result = client.post("/experiment/run", {"config": config})
    scores = ", ".join(f"{s:.4f}" for s in result["run_scores"])
    print(f"run {result['config_hash']} -> {result['run_dir']}")
    print(f"per-run scores: [{scores}]")
    print(f"aggregate: {result['mean']:.4f} +/- {result['std']:.4f}")
    return 0


def cmd_eval(args, client):
    config = _read_config_payload(args.config)
    payload = {
        "config": config,
        "model_path": args.model,
        "gold_eval_seed": args.gold_eval_seed,
        "include_distributions": bool(args.output_distributions),
    }
    result = client.post("/experiment/eval", payload)
    predictions = {p["question_id"]: p["answer"] for p in result["predictions"]}
    if args.output_predictions:
        write_predictions(predictions, args.output_predictions)
    if args.output_report:
        with open(args.output_report, "w", encoding="utf-8") as f:
            json.dump(result["report"], f, indent=2, sort_keys=True)
            f.write("\n")
    if args.output_distributions:
        with open(args.output_distributions, "w", encoding="utf-8") as f:
            json.dump(result["distributions"], f)
            f.write("\n")
    report = result["report"]
    print(f"mean VQA score {report['mean_score']:.4f} over {report['n']} questions")
    return 0


def cmd_fuse(args, client):
    payload = {
        "a": _read_json_file(args.dist_a),
        "b": _read_json_file(args.dist_b),
    }
    result = client.post("/fusion/predictions", payload)
    predictions = {p["question_id"]: p["answer"] for p in result["predictions"]}
    write_predictions(predictions, args.output)
    print(f"fused {len(predictions)} predictions -> {args.output}")
    return 0


def cmd_select_steps(args, client):
    config = _read_config_payload(args.config)
    result = client.post(
        "/experiment/select-steps",
        {"config": config, "max_steps": args.max_steps},
    )
    print(result["steps"])
    return 0


def cmd_decontaminate(args, client):
    caption_train = load_image_ids(args.caption_train)
    if args.reserved:
        reserved = load_image_ids(args.reserved)
    else:
        if not (args.manifest and args.questions and args.reserved_split):
            raise ConfigError(
                "pass --reserved, or all of --manifest/--questions/--reserved-split"
            )
        reserved = manifest_image_ids(
            load_manifest(args.manifest),
            load_questions(args.questions),
            args.reserved_split,
        )
    result = client.post(
        "/dataset/decontaminate",
        {
            "caption_training_images": sorted(caption_train),
            "reserved_images": sorted(reserved),
        },
    )
    write_image_ids(args.output, result["kept"])
    print(
        f"kept {len(result['kept'])} image ids, removed {len(result['removed'])} "
        f"reserved -> {args.output}"
    )
    return 0


def cmd_serve(args, client):
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# --------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="capvqa",
        description="Caption-based VQA pipeline client",
    )
    parser.add_argument(
        "--server",
        default=None,
        help="service URL; omit to run the service in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    vocab = sub.add_parser("vocab", help="answer vocabulary tools")
    vocab_sub = vocab.add_subparsers(dest="vocab_command", required=True)
    vb = vocab_sub.add_parser("build", help="build a vocabulary from annotations")
    vb.add_argument("--annotations", required=True)
    vb.add_argument("--min-count", type=int, default=None)
    vb.add_argument("--max-size", type=int, default=None)
    vb.add_argument("--output", required=True)
    vb.add_argument(
        "--soft-labels",
        default=None,
        help="also write a soft-label cache for the same annotations",
    )
    vb.set_defaults(func=cmd_vocab_build)
    vi = vocab_sub.add_parser("inspect", help="show a vocabulary file")
    vi.add_argument("--vocab", required=True)
    vi.add_argument("--annotations", default=None)
    vi.add_argument("--head", type=int, default=10)
    vi.set_defaults(func=cmd_vocab_inspect)

    score = sub.add_parser("score", help="score a prediction file")
    score.add_argument("--annotations", required=True)
    score.add_argument("--predictions", required=True)
    score.add_argument("--output", default=None)
    score.add_argument("--official-averaging", action="store_true")
    score.set_defaults(func=cmd_score)

    train = sub.add_parser("train", help="run a configured experiment")
    train.add_argument("--config", required=True)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a saved model")
    ev.add_argument("--config", required=True)
    ev.add_argument("--model", required=True)
    ev.add_argument("--output-predictions", default=None)
    ev.add_argument("--output-report", default=None)
    ev.add_argument("--output-distributions", default=None)
    ev.add_argument("--gold-eval-seed", type=int, default=None)
    ev.set_defaults(func=cmd_eval)

    fuse = sub.add_parser("fuse", help="late-fuse two distribution dumps")
    fuse.add_argument("--dist-a", required=True)
    fuse.add_argument("--dist-b", required=True)
    fuse.add_argument("--output", required=True)
    fuse.set_defaults(func=cmd_fuse)

    steps = sub.add_parser("select-steps", help="pick a training step count")
    steps.add_argument("--config", required=True)
    steps.add_argument("--max-steps", type=int, required=True)
    steps.set_defaults(func=cmd_select_steps)

    deco = sub.add_parser("decontaminate", help="drop reserved images")
    deco.add_argument("--caption-train", required=True)
    deco.add_argument("--reserved", default=None)
    deco.add_argument("--manifest", default=None)
    deco.add_argument("--questions", default=None)
    deco.add_argument("--reserved-split", default=None)
    deco.add_argument("--output", required=True)
    deco.set_defaults(func=cmd_decontaminate)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    client = ServiceClient(server=args.server)
    try:
        return args.func(args, client)
    except CapVQAError as e:
        print(f"error ({e.kind}): {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
