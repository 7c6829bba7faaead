"""Forward and backward passes for the individual layer types.

All image tensors are NHWC, row-major. Forward functions return
``(output, cache)`` where ``cache`` carries exactly what the matching
backward function needs. Convolution is lowered to a patch matrix plus one
GEMM (the patch matrix is cached and reused for the weight gradient).
"""

import numpy as np

from . import kernels
from .errors import ConfigError, ShapeError


def _require(cond: bool, message: str):
    if not cond:
        raise ShapeError(message)


def conv2d_forward(x, weights, bias):
    """3x3 valid convolution, stride 1.

    x: [N,H,W,C_in], weights: [3,3,C_in,C_out], bias: [C_out]
    returns ([N,H-2,W-2,C_out], cache).
    """
    _require(x.ndim == 4, f"conv input must be [N,H,W,C], got shape {x.shape}")
    _require(
        weights.ndim == 4 and weights.shape[0] == 3 and weights.shape[1] == 3,
        f"conv kernels must be [3,3,C_in,C_out], got shape {weights.shape}",
    )
    n, h, w, c_in = x.shape
    _require(h >= 3 and w >= 3, f"conv input spatial dims must be >= 3, got {h}x{w}")
    _require(
        weights.shape[2] == c_in,
        f"conv kernels expect {weights.shape[2]} input channels, input has {c_in}",
    )
    c_out = weights.shape[3]
    _require(
        bias.shape == (c_out,),
        f"conv bias must have shape ({c_out},), got {bias.shape}",
    )

    ho, wo = h - 2, w - 2
    cols = np.empty((n, ho, wo, 9 * c_in), dtype=x.dtype)
    kernels.im2col3(x, cols)
    flat_w = weights.reshape(9 * c_in, c_out)
    out = cols.reshape(-1, 9 * c_in) @ flat_w
    out += bias
    return out.reshape(n, ho, wo, c_out), (cols, weights, x.shape)


def conv2d_backward(dout, cache, need_dx=True):
    """Gradients of conv2d_forward; returns (dx or None, dweights, dbias)."""
    cols, weights, x_shape = cache
    n, ho, wo, _ = cache[0].shape
    c_in, c_out = weights.shape[2], weights.shape[3]
    dflat = dout.reshape(-1, c_out)
    cols2d = cols.reshape(-1, 9 * c_in)
    dw = (cols2d.T @ dflat).reshape(weights.shape)
    db = dflat.sum(axis=0)
    dx = None
    if need_dx:
        dcols = dflat @ weights.reshape(9 * c_in, c_out).T
        dx = np.zeros(x_shape, dtype=dout.dtype)
        kernels.col2im3_add(dcols.reshape(n, ho, wo, 9 * c_in), dx)
    return dx, dw, db


def relu_forward(x):
    """Elementwise max(0, x); cache is the activation mask."""
    out = np.maximum(x, 0)
    return out, out > 0


def relu_backward(dout, mask):
    return dout * mask


def maxpool2x2_forward(x):
    """2x2 max pooling with stride 2.

    Returns ([N,H/2,W/2,C], winners) where winners maps each output back to
    the in-window argmax position (ties broken toward the lowest position).
    """
    _require(x.ndim == 4, f"pool input must be [N,H,W,C], got shape {x.shape}")
    n, h, w, c = x.shape
    _require(h % 2 == 0 and w % 2 == 0, f"pool input spatial dims must be even, got {h}x{w}")
    out = np.empty((n, h // 2, w // 2, c), dtype=x.dtype)
    winners = np.empty((n, h // 2, w // 2, c), dtype=np.uint8)
    kernels.maxpool2x2(x, out, winners)
    return out, winners


def maxpool2x2_backward(dout, winners):
    n, ho, wo, c = dout.shape
    dx = np.zeros((n, 2 * ho, 2 * wo, c), dtype=dout.dtype)
    kernels.maxpool2x2_grad(dout, winners, dx)
    return dx


def dropout_forward(x, rate, training, rng):
    """Inverted dropout: zero each element w.p. `rate`, scale survivors by 1/(1-rate).

    Inference (training=False) is the identity. The rng is consumed only in
    training mode, one draw per element.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype)
    keep /= np.asarray(1.0 - rate, dtype=x.dtype)
    return x * keep, keep


def dropout_backward(dout, keep):
    if keep is None:
        return dout
    return dout * keep


def dense_forward(x, weights, bias):
    """Affine map out = x @ weights + bias for x [N,F_in]."""
    _require(x.ndim == 2, f"dense input must be [N,F_in], got shape {x.shape}")
    _require(
        weights.ndim == 2 and x.shape[1] == weights.shape[0],
        f"dense weights must be [{x.shape[1]},F_out], got shape {weights.shape}",
    )
    _require(
        bias.shape == (weights.shape[1],),
        f"dense bias must have shape ({weights.shape[1]},), got {bias.shape}",
    )
    return x @ weights + bias, (x, weights)


def dense_backward(dout, cache, need_dx=True):
    x, weights = cache
    dw = x.T @ dout
    db = dout.sum(axis=0)
    dx = dout @ weights.T if need_dx else None
    return dx, dw, db


def flatten_forward(x):
    return x.reshape(x.shape[0], -1), x.shape


def flatten_backward(dout, shape):
    return dout.reshape(shape)


def softmax(logits):
    """Row-wise softmax with max-subtraction for stability."""
    _require(logits.ndim == 2, f"softmax expects [N,K] logits, got shape {logits.shape}")
    z = logits - logits.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z
