"""Small trainable reference classifier: hashed bag-of-embeddings + head.

This model stands in for large pretrained encoders in tests and desk-scale
experiments. Token embeddings (and, in multimodal modes, linearly projected
region features) are mean-pooled into one vector, which feeds the
GELU/LayerNorm classification head. Training minimizes the soft
cross-entropy loss with a decoupled-weight-decay Adam optimizer
(beta1 0.9, beta2 0.999, eps 1e-8) under either a constant learning rate
or linear warmup followed by cosine decay.

All randomness (init, batch order) comes from one explicit seed; two runs
with identical settings produce bitwise-identical parameters.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigError, ValidationError
from .head import LOG_CLAMP, gelu, gelu_grad, layer_norm, softmax
from .text import token_id

SCHEDULES = ("cosine_warmup", "constant")


@dataclass
class ToyModelConfig:
    n_label: int
    n_token: int = 512
    d_h: int = 32
    region_dim: Optional[int] = None
    weight_scale: float = 0.02

    def to_dict(self):
        return {
            "n_label": self.n_label,
            "n_token": self.n_token,
            "d_h": self.d_h,
            "region_dim": self.region_dim,
            "weight_scale": self.weight_scale,
        }


@dataclass
class TrainSettings:
    steps: int
    batch_size: int
    learning_rate: float
    schedule: str = "constant"
    warmup_steps: int = 0
    weight_decay: float = 0.0
    seed: int = 0
    skip_all_oov: bool = True

    def __post_init__(self):
        if self.steps <= 0:
            raise ConfigError("steps must be positive")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "constant" and self.warmup_steps != 0:
            raise ConfigError("constant schedule requires warmup_steps = 0")


def learning_rate_at(step, settings):
    """Learning rate for a 0-based step index."""
    if settings.schedule == "constant":
        return settings.learning_rate
    if step < settings.warmup_steps:
        return settings.learning_rate * (step + 1) / settings.warmup_steps
    span = max(1, settings.steps - settings.warmup_steps)
    progress = (step - settings.warmup_steps) / span
    return settings.learning_rate * 0.5 * (1.0 + math.cos(math.pi * progress))


def init_toy_params(cfg, seed):
    rng = np.random.default_rng(seed)
    s = cfg.weight_scale
    params = {
        "emb": rng.normal(0.0, s, size=(cfg.n_token, cfg.d_h)),
        "w_h": rng.normal(0.0, s, size=(cfg.d_h, cfg.d_h)),
        "b_h": np.zeros(cfg.d_h),
        "ln_scale": np.ones(cfg.d_h),
        "ln_shift": np.zeros(cfg.d_h),
        "w_y": rng.normal(0.0, s, size=(cfg.d_h, cfg.n_label)),
        "b_y": np.zeros(cfg.n_label),
    }
    if cfg.region_dim is not None:
        params["w_v"] = rng.normal(0.0, s, size=(cfg.region_dim, cfg.d_h))
    return params


def _pool(params, token_ids, regions):
    """Mean over token embeddings and projected region features."""
    d_h = params["emb"].shape[1]
    total = np.zeros(d_h)
    count = 0
    if token_ids:
        total += params["emb"][token_ids].sum(axis=0)
        count += len(token_ids)
    if regions is not None:
        total += (regions.features @ params["w_v"]).sum(axis=0)
        count += regions.n_v
    if count == 0:
        raise ValidationError("cannot pool an input with no tokens or regions")
    return total / count, count


def toy_forward(params, batch_tokens, batch_regions=None):
    """Forward pass over a batch; returns probabilities and a backprop cache."""
    b = len(batch_tokens)
    regions = batch_regions if batch_regions is not None else [None] * b
    d_h = params["emb"].shape[1]
    x = np.zeros((b, d_h))
    counts = np.zeros(b)
    for i, (ids, reg) in enumerate(zip(batch_tokens, regions)):
        x[i], counts[i] = _pool(params, ids, reg)
    u = x @ params["w_h"].T + params["b_h"]
    g = gelu(u)
    mu = g.mean(axis=-1, keepdims=True)
    sigma = np.sqrt(g.var(axis=-1, keepdims=True) + 1e-5)
    z = (g - mu) / sigma
    h = params["ln_scale"] * z + params["ln_shift"]
    logits = h @ params["w_y"] + params["b_y"]
    probs = softmax(logits)
    cache = {
        "x": x,
        "u": u,
        "sigma": sigma,
        "z": z,
        "h": h,
        "probs": probs,
        "counts": counts,
        "tokens": batch_tokens,
        "regions": regions,
    }
    return probs, cache


def toy_loss_and_grads(params, batch_tokens, batch_labels, batch_regions=None):
    """Mean soft cross-entropy over the batch plus gradients for every parameter."""
    probs, cache = toy_forward(params, batch_tokens, batch_regions)
    y = np.asarray(batch_labels, dtype=np.float64)
    b = probs.shape[0]
    loss = float(-np.sum(y * np.log(np.maximum(probs, LOG_CLAMP))) / b)

    dlogits = (probs - y) / b
    grads = {
        "w_y": cache["h"].T @ dlogits,
        "b_y": dlogits.sum(axis=0),
    }
    dh = dlogits @ params["w_y"].T
    grads["ln_scale"] = (dh * cache["z"]).sum(axis=0)
    grads["ln_shift"] = dh.sum(axis=0)
    dz = dh * params["ln_scale"]
    d = dz.shape[-1]
    dg = (
        dz
        - dz.mean(axis=-1, keepdims=True)
        - cache["z"] * (dz * cache["z"]).sum(axis=-1, keepdims=True) / d
    ) / cache["sigma"]
    du = dg * gelu_grad(cache["u"])
    grads["w_h"] = du.T @ cache["x"]
    grads["b_h"] = du.sum(axis=0)
    dx = du @ params["w_h"]

    grads["emb"] = np.zeros_like(params["emb"])
    if "w_v" in params:
        grads["w_v"] = np.zeros_like(params["w_v"])
    for i, (ids, reg) in enumerate(zip(cache["tokens"], cache["regions"])):
        contrib = dx[i] / cache["counts"][i]
        np.add.at(grads["emb"], ids, contrib)
        if reg is not None:
            grads["w_v"] += np.outer(reg.features.sum(axis=0), contrib)
    return loss, grads


@dataclass
class AdamWState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def for_params(cls, params):
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adamw_step(params, grads, state, lr, weight_decay=0.0,
               beta1=0.9, beta2=0.999, eps=1e-8):
    """In-place decoupled-weight-decay Adam update."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for k, p in params.items():
        g = grads[k]
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        step = state.m[k] / bc1 / (np.sqrt(state.v[k] / bc2) + eps)
        p -= lr * (step + weight_decay * p)


@dataclass
class ToyTrainResult:
    params: dict
    model_config: ToyModelConfig
    loss_history: list = field(default_factory=list)
    eval_history: list = field(default_factory=list)  # (step, score)

    @property
    def final_loss(self):
        return self.loss_history[-1] if self.loss_history else None


def train_toy_classifier(
    encoded_examples,
    model_config,
    settings,
    eval_every=None,
    eval_fn=None,
    initial_params=None,
):
    """Train the toy classifier on pre-encoded examples.

    ``encoded_examples`` is a list of (token_ids, dense_label, regions)
    triples (regions None for text-only modes). When ``eval_every`` and
    ``eval_fn`` are given, eval_fn(step, params) is recorded every
    eval_every steps and at the final step. ``initial_params`` warm-starts
    from an earlier run's checkpoint instead of random init.
    """
    usable = [
        ex for ex in encoded_examples if not settings.skip_all_oov or any(ex[1])
    ]
    if not usable:
        raise ValidationError("no trainable examples (all labels out of vocabulary)")
    if initial_params is not None:
        fresh = init_toy_params(model_config, settings.seed)
        if set(initial_params) != set(fresh) or any(
            initial_params[k].shape != fresh[k].shape for k in fresh
        ):
            raise ConfigError("checkpoint parameters do not fit the model config")
        params = {k: np.array(v, dtype=np.float64) for k, v in initial_params.items()}
    else:
        params = init_toy_params(model_config, settings.seed)
    state = AdamWState.for_params(params)
    rng = np.random.default_rng(settings.seed)
    n = len(usable)
    batch = min(settings.batch_size, n)
    result = ToyTrainResult(params=params, model_config=model_config)

    order = []
    for step in range(settings.steps):
        if len(order) < batch:
            order = list(rng.permutation(n)) + order
        take, order = order[:batch], order[batch:]
        tok = [usable[i][0] for i in take]
        lab = [usable[i][1] for i in take]
        reg = [usable[i][2] for i in take]
        if all(r is None for r in reg):
            reg = None
        loss, grads = toy_loss_and_grads(params, tok, lab, reg)
        adamw_step(
            params,
            grads,
            state,
            lr=learning_rate_at(step, settings),
            weight_decay=settings.weight_decay,
        )
        result.loss_history.append(loss)
        at_eval_point = eval_every and ((step + 1) % eval_every == 0)
        if eval_fn is not None and (at_eval_point or step + 1 == settings.steps):
            if not result.eval_history or result.eval_history[-1][0] != step + 1:
                result.eval_history.append((step + 1, eval_fn(step + 1, params)))
    return result


def predict_proba(params, token_ids, regions=None):
    """Class distribution for a single encoded input."""
    batch_regions = [regions] if regions is not None else None
    probs, _ = toy_forward(params, [token_ids], batch_regions)
    return probs[0]


def encode_tokens(text, n_token):
    return [token_id(t, n_token) for t in text.split()]


def save_toy_model(path, params, model_config):
    meta = np.array(json.dumps(model_config.to_dict()))
    np.savez(path, __config__=meta, **params)


def load_toy_model(path):
    archive = np.load(path, allow_pickle=False)
    cfg = ToyModelConfig(**json.loads(str(archive["__config__"])))
    params = {k: archive[k] for k in archive.files if k != "__config__"}
    return params, cfg
