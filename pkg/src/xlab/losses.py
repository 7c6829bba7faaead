"""Cross-entropy against soft or one-hot targets, with per-class re-weighting."""

import numpy as np

from .errors import ShapeError

# Guard inside log(); also used when deriving the exact gradient.
LOG_EPS = 1e-7


def weighted_cross_entropy(pred, target, class_weights=None):
    """Mean re-weighted cross-entropy.

    loss = (1/N) * sum_n w(argmax target_n) * (-sum_k target_nk * log(pred_nk + eps))

    `pred` and `target` are [N,K] rows of probabilities (targets may be
    one-hot). With class_weights None every sample weighs 1.
    """
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    per_sample = -(target * np.log(pred.astype(np.float64) + LOG_EPS)).sum(axis=1)
    if class_weights is not None:
        per_sample = per_sample * np.asarray(class_weights, dtype=np.float64)[target.argmax(axis=1)]
    return float(per_sample.mean())


def softmax_cross_entropy_grad(probs, target, class_weights=None):
    """Gradient of weighted_cross_entropy w.r.t. the logits feeding `probs`.

    Keeps the log-guard epsilon in the derivative so the analytic gradient
    matches finite differences of the actual loss: with r_k = p_k/(p_k+eps),
    dL/dz_j = w_n/N * (p_j * sum_k t_k r_k - t_j r_j).
    """
    r = probs / (probs + np.asarray(LOG_EPS, dtype=probs.dtype))
    tr = target * r
    grad = probs * tr.sum(axis=1, keepdims=True) - tr
    n = probs.shape[0]
    if class_weights is not None:
        w = np.asarray(class_weights, dtype=probs.dtype)[target.argmax(axis=1)]
        grad *= (w / n)[:, None]
    else:
        grad /= n
    return grad


def compute_class_weights(responses):
    """Balanced class weights from the argmax of each response row.

    w_k = N / (K * max(count_k, 1)); the floor keeps weights finite for
    classes that never win the argmax.
    """
    responses = np.asarray(responses)
    if responses.ndim != 2 or responses.shape[0] < 1:
        raise ShapeError(f"responses must be a non-empty [N,K] matrix, got shape {responses.shape}")
    n, k = responses.shape
    counts = np.bincount(responses.argmax(axis=1), minlength=k)
    return n / (k * np.maximum(counts, 1).astype(np.float64))


def one_hot(labels, num_classes, dtype=np.float32):
    out = np.zeros((len(labels), num_classes), dtype=dtype)
    out[np.arange(len(labels)), labels] = 1
    return out
