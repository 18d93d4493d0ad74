"""Classification head math and the soft cross-entropy loss.

The head maps a pooled encoder representation t to a distribution over
answer classes:

    h = LayerNorm(GELU(W_h t + b_h))        (learned scale/shift, eps 1e-5)
    y_hat = Softmax(W_y h + b_y)

GELU is the exact erf form. Softmax subtracts the max logit before
exponentiating; logs are clamped at 1e-12. The loss against a soft target
distribution y is -sum_k y_k log y_hat_k, whose gradient with respect to
the logits is softmax(logits) - y whenever y sums to one.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ValidationError

LAYER_NORM_EPS = 1e-5
LOG_CLAMP = 1e-12

_erf = np.vectorize(math.erf)


def gelu(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + _erf(x / math.sqrt(2.0)))


def gelu_grad(x):
    x = np.asarray(x, dtype=np.float64)
    cdf = 0.5 * (1.0 + _erf(x / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return cdf + x * pdf


def layer_norm(x, scale, shift, eps=LAYER_NORM_EPS):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return scale * (x - mu) / np.sqrt(var + eps) + shift


def softmax(logits):
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ClassifierHeadParams:
    """Head weights; layer-norm scale/shift ride along with the projections."""

    w_h: np.ndarray  # (d_h, d_h)
    b_h: np.ndarray  # (d_h,)
    ln_scale: np.ndarray  # (d_h,)
    ln_shift: np.ndarray  # (d_h,)
    w_y: np.ndarray  # (d_h, n_label)
    b_y: np.ndarray  # (n_label,)

    def __post_init__(self):
        d_h = self.w_h.shape[0]
        n_label = self.w_y.shape[1]
        expected = {
            "w_h": (d_h, d_h),
            "b_h": (d_h,),
            "ln_scale": (d_h,),
            "ln_shift": (d_h,),
            "w_y": (d_h, n_label),
            "b_y": (n_label,),
        }
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ValidationError(f"head parameter {name}: shape {got} != {shape}")

    @property
    def d_h(self):
        return self.w_h.shape[0]

    @property
    def n_label(self):
        return self.w_y.shape[1]


def init_head_params(d_h, n_label, rng, weight_scale=0.02):
    """Small-random weight matrices, zero biases, identity layer norm."""
    return ClassifierHeadParams(
        w_h=rng.normal(0.0, weight_scale, size=(d_h, d_h)),
        b_h=np.zeros(d_h),
        ln_scale=np.ones(d_h),
        ln_shift=np.zeros(d_h),
        w_y=rng.normal(0.0, weight_scale, size=(d_h, n_label)),
        b_y=np.zeros(n_label),
    )


def classifier_head_forward(pooled, params):
    """Distribution over answer classes for one pooled vector (or a batch)."""
    pooled = np.asarray(pooled, dtype=np.float64)
    if not np.all(np.isfinite(pooled)):
        raise NumericError("pooled representation contains non-finite entries")
    if pooled.shape[-1] != params.d_h:
        raise ValidationError(
            f"pooled dimension {pooled.shape[-1]} != head d_h {params.d_h}"
        )
    u = pooled @ params.w_h.T + params.b_h
    h = layer_norm(gelu(u), params.ln_scale, params.ln_shift)
    return softmax(h @ params.w_y + params.b_y)


def _dense_label(y, n_label):
    if hasattr(y, "probs"):
        vec = np.zeros(n_label)
        for k, p in y.probs.items():
            vec[k] = p
        return vec
    return np.asarray(y, dtype=np.float64)


def sce_loss(y_hat, y):
    """Soft cross-entropy -sum y log y_hat; all-zero targets cost nothing."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    target = _dense_label(y, y_hat.shape[-1])
    if not target.any():
        return 0.0
    return float(-np.sum(target * np.log(np.maximum(y_hat, LOG_CLAMP))))


def sce_gradient(logits, y):
    """Gradient of sce_loss(softmax(logits), y) w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    return softmax(logits) - _dense_label(y, logits.shape[-1])
