"""Input checking and coercion at the public API boundary."""

import numpy as np

from .errors import ShapeError


def as_image_batch(X, spatial=(28, 28), dtype=np.float32):
    """Coerce X to a [N,H,W,1] float array.

    Accepts [N,H,W,1], [N,H,W], or flat [N,H*W]. Rejects non-finite values.
    """
    X = np.asarray(X)
    h, w = spatial
    if X.ndim == 2 and X.shape[1] == h * w:
        X = X.reshape(-1, h, w, 1)
    elif X.ndim == 3 and X.shape[1:] == (h, w):
        X = X[..., None]
    elif X.ndim == 4 and X.shape[1:] == (h, w, 1):
        pass
    else:
        raise ShapeError(
            f"expected images shaped [N,{h},{w}], [N,{h},{w},1] or [N,{h * w}], got {X.shape}"
        )
    X = X.astype(dtype, copy=False)
    if not np.isfinite(X).all():
        raise ShapeError("images contain NaN or Inf")
    return X


def check_labels(y, num_classes=10):
    """Validate integer class labels in [0, num_classes)."""
    y = np.asarray(y)
    if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
        raise ShapeError(f"labels must be a 1-D integer array, got {y.dtype} with shape {y.shape}")
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise ShapeError(f"labels must lie in [0, {num_classes}), got range [{y.min()}, {y.max()}]")
    return y


def check_probability_rows(Y, num_classes=10, tol=1e-5):
    """Validate [N,K] rows of probabilities summing to 1 within tol."""
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[1] != num_classes:
        raise ShapeError(f"expected [N,{num_classes}] probability rows, got shape {Y.shape}")
    if Y.size:
        if Y.min() < -tol:
            raise ShapeError("probability rows contain negative entries")
        err = np.abs(Y.sum(axis=1) - 1.0).max()
        if err > tol:
            raise ShapeError(f"probability rows must sum to 1 within {tol}, worst error {err:.2e}")
    return Y
