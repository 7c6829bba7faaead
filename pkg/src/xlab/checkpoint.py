"""Model checkpoints: magic "XLAB", bit-exact round trip of config + weights."""

import numpy as np

from .binio import read_preamble, read_tensor, read_u32, write_preamble, write_tensor, write_u32
from .errors import FormatError
from .network import Conv, Dense, Dropout, Flatten, MaxPool, NetworkConfig, param_shapes

MAGIC = b"XLAB"
VERSION = 1


def _layer_to_dict(layer):
    if isinstance(layer, Conv):
        return {"kind": "conv", "filters": layer.filters, "kernel": layer.kernel,
                "activation": layer.activation}
    if isinstance(layer, Dense):
        return {"kind": "dense", "units": layer.units, "activation": layer.activation}
    if isinstance(layer, Dropout):
        return {"kind": "dropout", "rate": layer.rate}
    if isinstance(layer, MaxPool):
        return {"kind": "maxpool"}
    if isinstance(layer, Flatten):
        return {"kind": "flatten"}
    raise FormatError(f"cannot serialize layer {layer!r}")


def _layer_from_dict(d):
    kind = d.get("kind")
    if kind == "conv":
        return Conv(filters=d["filters"], kernel=d.get("kernel", 3), activation=d.get("activation"))
    if kind == "dense":
        return Dense(units=d["units"], activation=d.get("activation"))
    if kind == "dropout":
        return Dropout(rate=d["rate"])
    if kind == "maxpool":
        return MaxPool()
    if kind == "flatten":
        return Flatten()
    raise FormatError(f"unknown layer kind {kind!r} in checkpoint")


def save_checkpoint(path, config: NetworkConfig, params):
    """Write config and parameters; float32 tensors round-trip bit-exactly."""
    descriptor = {
        "input_shape": list(config.input_shape),
        "include_dropout": config.include_dropout,
        "layers": [_layer_to_dict(l) for l in config.layers],
    }
    with open(path, "wb") as fh:
        write_preamble(fh, MAGIC, VERSION, descriptor)
        tensors = [t for pair in params for t in pair]
        write_u32(fh, len(tensors))
        for t in tensors:
            write_tensor(fh, np.asarray(t))


def load_checkpoint(path):
    """Read (config, params) back; validates tensor shapes against the config."""
    with open(path, "rb") as fh:
        descriptor = read_preamble(fh, MAGIC, VERSION)
        config = NetworkConfig(
            input_shape=tuple(descriptor["input_shape"]),
            layers=tuple(_layer_from_dict(d) for d in descriptor["layers"]),
        )
        count = read_u32(fh, "tensor count")
        tensors = [read_tensor(fh) for _ in range(count)]
        if fh.read(1):
            raise FormatError("trailing bytes after checkpoint tensors")

    expected = param_shapes(config)
    if count != 2 * len(expected):
        raise FormatError(f"checkpoint holds {count} tensors, config needs {2 * len(expected)}")
    params = [[tensors[i], tensors[i + 1]] for i in range(0, count, 2)]
    for (w, b), (w_shape, b_shape) in zip(params, expected):
        if w.shape != w_shape or b.shape != b_shape:
            raise FormatError(
                f"tensor shapes {w.shape}/{b.shape} do not match config ({w_shape}/{b_shape})"
            )
    return config, params
