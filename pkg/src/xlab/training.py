"""Seeded minibatch training and batched inference.

All randomness in one training run flows from a single seed, split into
three named streams (init / shuffle / dropout), so a rerun with the same
seed reproduces parameters bit-exactly on the same platform.
"""

import numpy as np

from .errors import ConfigError, ShapeError
from .losses import one_hot
from .network import backward, forward, init_params
from .optim import AdadeltaState, adadelta_step

_INIT, _SHUFFLE, _DROPOUT = 0, 1, 2


def stream(seed: int, channel: int) -> np.random.Generator:
    """Independent Philox stream `channel` of the given seed."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(channel,)))
    )


def _as_targets(targets, num_classes):
    targets = np.asarray(targets)
    if targets.ndim == 1:
        if not np.issubdtype(targets.dtype, np.integer):
            raise ShapeError("1-D targets must be integer class labels")
        return one_hot(targets, num_classes)
    if targets.ndim == 2 and targets.shape[1] == num_classes:
        return targets.astype(np.float32, copy=False)
    raise ShapeError(f"targets must be [N] labels or [N,{num_classes}] rows, got {targets.shape}")


def train(
    config,
    images,
    targets,
    *,
    epochs,
    batch_size=128,
    lr=1.0,
    rho=0.95,
    epsilon=1e-7,
    class_weights=None,
    seed=0,
    shuffle=True,
    verbose=0,
):
    """Train a freshly initialized network with Adadelta.

    `targets` may be integer labels or [N,K] probability rows (soft
    targets). Returns (params, history) where history holds one
    {"loss", "accuracy"} entry per epoch; accuracy is argmax agreement with
    the targets, measured on the minibatch outputs as they stream by.
    """
    images = np.asarray(images)
    n = images.shape[0]
    if n == 0:
        raise ConfigError("training set is empty")
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")
    target_rows = _as_targets(targets, config.num_classes)
    if target_rows.shape[0] != n:
        raise ShapeError(f"{n} images but {target_rows.shape[0]} targets")
    if class_weights is not None:
        class_weights = np.asarray(class_weights, dtype=np.float64)
        if class_weights.shape != (config.num_classes,):
            raise ShapeError(f"class_weights must have shape ({config.num_classes},)")

    params = init_params(config, stream(seed, _INIT))
    flat_params = [t for pair in params for t in pair]
    state = AdadeltaState.for_params(flat_params, lr=lr, rho=rho, epsilon=epsilon)
    shuffle_rng = stream(seed, _SHUFFLE)
    dropout_rng = stream(seed, _DROPOUT)
    target_labels = target_rows.argmax(axis=1)

    history = []
    for epoch in range(epochs):
        order = shuffle_rng.permutation(n) if shuffle else np.arange(n)
        loss_sum = 0.0
        hits = 0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            batch = images[idx]
            grads, loss, probs = backward(
                config, params, batch, target_rows[idx], class_weights, dropout_rng,
                return_probs=True,
            )
            adadelta_step(flat_params, [t for pair in grads for t in pair], state)
            loss_sum += loss * len(idx)
            hits += int((probs.argmax(axis=1) == target_labels[idx]).sum())
        entry = {"loss": loss_sum / n, "accuracy": hits / n}
        history.append(entry)
        if verbose:
            print(f"epoch {epoch + 1}/{epochs}  loss {entry['loss']:.4f}  acc {entry['accuracy']:.4f}")
    return params, history


def predict(config, params, images, batch_size=256):
    """Class probabilities for a batch of images, dropout inactive.

    Output is independent of batch_size up to float32 rounding.
    """
    images = np.asarray(images)
    out = np.empty((images.shape[0], config.num_classes), dtype=np.float32)
    for start in range(0, images.shape[0], batch_size):
        probs, _ = forward(config, params, images[start : start + batch_size], training=False)
        out[start : start + batch_size] = probs
    return out


def evaluate_accuracy(config, params, images, labels, batch_size=256) -> float:
    probs = predict(config, params, images, batch_size)
    return float((probs.argmax(axis=1) == np.asarray(labels)).mean())
