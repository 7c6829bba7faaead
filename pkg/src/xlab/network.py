"""Network description, parameter initialization, and whole-model passes.

A network is a fixed sequence of layer descriptors. The stock architecture
for 28x28 grayscale inputs is Conv(32,3x3,relu) -> Conv(64,3x3,relu) ->
MaxPool(2x2) -> Dropout(0.25) -> Flatten -> Dense(128,relu) ->
Dropout(0.5) -> Dense(10,softmax); the extraction clone drops both dropout
layers and changes nothing else.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import layers
from .errors import ConfigError, ShapeError
from .losses import softmax_cross_entropy_grad, weighted_cross_entropy


@dataclass(frozen=True)
class Conv:
    filters: int
    kernel: int = 3
    activation: Optional[str] = "relu"
    kind: str = "conv"


@dataclass(frozen=True)
class MaxPool:
    kind: str = "maxpool"


@dataclass(frozen=True)
class Dropout:
    rate: float
    kind: str = "dropout"


@dataclass(frozen=True)
class Flatten:
    kind: str = "flatten"


@dataclass(frozen=True)
class Dense:
    units: int
    activation: Optional[str] = None
    kind: str = "dense"


@dataclass(frozen=True)
class NetworkConfig:
    """Input shape plus an ordered layer list; the last layer must be a
    softmax Dense so the model outputs class probabilities."""

    input_shape: tuple
    layers: tuple

    def __post_init__(self):
        if not self.layers or not (
            isinstance(self.layers[-1], Dense) and self.layers[-1].activation == "softmax"
        ):
            raise ConfigError("network must end in a softmax Dense layer")
        self.layer_shapes()  # validate the whole chain eagerly

    @property
    def include_dropout(self) -> bool:
        return any(isinstance(l, Dropout) for l in self.layers)

    @property
    def num_classes(self) -> int:
        return self.layers[-1].units

    def without_dropout(self) -> "NetworkConfig":
        """Same architecture minus every Dropout layer (the clone config)."""
        return replace(self, layers=tuple(l for l in self.layers if not isinstance(l, Dropout)))

    def layer_shapes(self):
        """Per-layer output shapes (excluding the batch dimension)."""
        shape = tuple(self.input_shape)
        out = []
        for layer in self.layers:
            if isinstance(layer, Conv):
                if len(shape) != 3:
                    raise ConfigError(f"conv layer needs a [H,W,C] input, got {shape}")
                h, w, _ = shape
                if layer.kernel != 3:
                    raise ConfigError("only 3x3 convolutions are supported")
                if h < 3 or w < 3:
                    raise ConfigError(f"conv input {h}x{w} smaller than the 3x3 kernel")
                shape = (h - 2, w - 2, layer.filters)
            elif isinstance(layer, MaxPool):
                h, w, c = shape
                if h % 2 or w % 2:
                    raise ConfigError(f"pooling needs even spatial dims, got {h}x{w}")
                shape = (h // 2, w // 2, c)
            elif isinstance(layer, Flatten):
                shape = (int(np.prod(shape)),)
            elif isinstance(layer, Dense):
                if len(shape) != 1:
                    raise ConfigError(f"dense layer needs a flat input, got {shape}")
                if layer.activation == "softmax" and layer is not self.layers[-1]:
                    raise ConfigError("softmax is only supported on the output layer")
                shape = (layer.units,)
            elif isinstance(layer, Dropout):
                if not 0.0 <= layer.rate < 1.0:
                    raise ConfigError(f"dropout rate must be in [0, 1), got {layer.rate}")
            else:
                raise ConfigError(f"unknown layer kind {layer!r}")
            out.append(shape)
        return out


def default_architecture(include_dropout=True, input_shape=(28, 28, 1), num_classes=10):
    """The victim architecture; pass include_dropout=False for the clone."""
    stack = [
        Conv(32, activation="relu"),
        Conv(64, activation="relu"),
        MaxPool(),
    ]
    if include_dropout:
        stack.append(Dropout(0.25))
    stack.append(Flatten())
    stack.append(Dense(128, activation="relu"))
    if include_dropout:
        stack.append(Dropout(0.5))
    stack.append(Dense(num_classes, activation="softmax"))
    return NetworkConfig(input_shape=tuple(input_shape), layers=tuple(stack))


def init_params(config: NetworkConfig, rng, dtype=np.float32):
    """Glorot-uniform weights, zero biases, in layer order.

    Returns a list of [weights, bias] pairs, one per Conv/Dense layer. Conv
    fan counts use receptive-field size times channels.
    """
    params = []
    shape = tuple(config.input_shape)
    for layer, out_shape in zip(config.layers, config.layer_shapes()):
        if isinstance(layer, Conv):
            c_in = shape[2]
            fan_in = 9 * c_in
            fan_out = 9 * layer.filters
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(3, 3, c_in, layer.filters))
            params.append([w.astype(dtype), np.zeros(layer.filters, dtype=dtype)])
        elif isinstance(layer, Dense):
            fan_in = shape[0]
            limit = np.sqrt(6.0 / (fan_in + layer.units))
            w = rng.uniform(-limit, limit, size=(fan_in, layer.units))
            params.append([w.astype(dtype), np.zeros(layer.units, dtype=dtype)])
        shape = out_shape
    return params


def param_count(params) -> int:
    return sum(int(w.size + b.size) for w, b in params)


def param_shapes(config: NetworkConfig):
    """Expected (weights, bias) shapes per Conv/Dense layer, in order."""
    shapes = []
    shape = tuple(config.input_shape)
    for layer, out_shape in zip(config.layers, config.layer_shapes()):
        if isinstance(layer, Conv):
            shapes.append(((3, 3, shape[2], layer.filters), (layer.filters,)))
        elif isinstance(layer, Dense):
            shapes.append(((shape[0], layer.units), (layer.units,)))
        shape = out_shape
    return shapes


def forward(config: NetworkConfig, params, x, training=False, rng=None):
    """Full forward pass; returns (probabilities, caches).

    Dropout draws from `rng` only when training; caches feed backward().
    """
    if x.ndim != len(config.input_shape) + 1 or x.shape[1:] != tuple(config.input_shape):
        raise ShapeError(
            f"input shape {x.shape[1:]} does not match network input {config.input_shape}"
        )
    if training and config.include_dropout and rng is None:
        raise ConfigError("training forward pass through dropout needs an rng")

    caches = []
    p_idx = 0
    out = x
    for layer in config.layers:
        if isinstance(layer, Conv):
            w, b = params[p_idx]
            out, cache = layers.conv2d_forward(out, w, b)
            act_mask = None
            if layer.activation == "relu":
                out, act_mask = layers.relu_forward(out)
            caches.append(("conv", cache, act_mask, p_idx))
            p_idx += 1
        elif isinstance(layer, MaxPool):
            out, winners = layers.maxpool2x2_forward(out)
            caches.append(("maxpool", winners))
        elif isinstance(layer, Dropout):
            out, keep = layers.dropout_forward(out, layer.rate, training, rng)
            caches.append(("dropout", keep))
        elif isinstance(layer, Flatten):
            out, shape = layers.flatten_forward(out)
            caches.append(("flatten", shape))
        elif isinstance(layer, Dense):
            w, b = params[p_idx]
            out, cache = layers.dense_forward(out, w, b)
            act_mask = None
            if layer.activation == "relu":
                out, act_mask = layers.relu_forward(out)
            elif layer.activation == "softmax":
                out = layers.softmax(out)
            caches.append(("dense", cache, act_mask, p_idx))
            p_idx += 1
    return out, caches


def backward(
    config: NetworkConfig, params, batch, targets, class_weights=None, rng=None, return_probs=False
):
    """Loss and exact parameter gradients for one minibatch.

    Targets are [N,K] probability rows (soft) or one-hot. Dropout masks (if
    the config has dropout) are drawn once from `rng` and shared between the
    forward and backward pass. Returns (grads, loss) with grads shaped like
    params, plus the forward probabilities when return_probs is set.
    """
    if batch.shape[0] != targets.shape[0]:
        raise ShapeError(
            f"batch has {batch.shape[0]} samples but targets has {targets.shape[0]}"
        )
    probs, caches = forward(config, params, batch, training=True, rng=rng)
    loss = weighted_cross_entropy(probs, targets, class_weights)
    grads = [[np.empty(0)] * 2 for _ in params]

    delta = softmax_cross_entropy_grad(probs, targets.astype(probs.dtype), class_weights)
    first_param_layer = next(
        i for i, l in enumerate(config.layers) if isinstance(l, (Conv, Dense))
    )
    for li in range(len(config.layers) - 1, -1, -1):
        cache = caches[li]
        kind = cache[0]
        if kind == "dense":
            _, dense_cache, act_mask, p_idx = cache
            if act_mask is not None:
                delta = layers.relu_backward(delta, act_mask)
            need_dx = li > first_param_layer
            delta, dw, db = layers.dense_backward(delta, dense_cache, need_dx)
            grads[p_idx] = [dw, db]
        elif kind == "conv":
            _, conv_cache, act_mask, p_idx = cache
            if act_mask is not None:
                delta = layers.relu_backward(delta, act_mask)
            need_dx = li > first_param_layer
            delta, dw, db = layers.conv2d_backward(delta, conv_cache, need_dx)
            grads[p_idx] = [dw, db]
        elif kind == "maxpool":
            delta = layers.maxpool2x2_backward(delta, cache[1])
        elif kind == "dropout":
            delta = layers.dropout_backward(delta, cache[1])
        elif kind == "flatten":
            delta = layers.flatten_backward(delta, cache[1])
    if return_probs:
        return grads, loss, probs
    return grads, loss
