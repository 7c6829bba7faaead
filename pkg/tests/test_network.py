import numpy as np
import pytest

from xlab.errors import ConfigError
from xlab.network import (
    Conv,
    Dense,
    Dropout,
    Flatten,
    MaxPool,
    NetworkConfig,
    default_architecture,
    forward,
    init_params,
    param_shapes,
)


def test_shape_chain_of_default_architecture():
    config = default_architecture()
    shapes = config.layer_shapes()
    # conv -> conv -> pool -> dropout -> flatten -> dense -> dropout -> dense
    assert shapes[0] == (26, 26, 32)
    assert shapes[1] == (24, 24, 64)
    assert shapes[2] == (12, 12, 64)
    assert shapes[4] == (9216,)
    assert shapes[5] == (128,)
    assert shapes[-1] == (10,)


def test_dense1_fan_in_is_9216():
    config = default_architecture()
    shapes = param_shapes(config)
    assert shapes[2][0] == (9216, 128)


def test_without_dropout_changes_nothing_else():
    victim = default_architecture(include_dropout=True)
    clone = victim.without_dropout()
    assert victim.include_dropout and not clone.include_dropout
    assert [l for l in victim.layers if not isinstance(l, Dropout)] == list(clone.layers)
    assert victim.input_shape == clone.input_shape
    assert clone.layer_shapes()[-1] == (10,)


def test_dropout_layers_sit_after_pool_and_dense(tiny_config):
    victim = default_architecture(include_dropout=True)
    kinds = [l.kind for l in victim.layers]
    assert kinds == ["conv", "conv", "maxpool", "dropout", "flatten", "dense", "dropout", "dense"]
    rates = [l.rate for l in victim.layers if isinstance(l, Dropout)]
    assert rates == [0.25, 0.5]


def test_forward_outputs_probability_rows(tiny_config):
    rng = np.random.default_rng(0)
    params = init_params(tiny_config, rng)
    x = rng.random((5, 8, 8, 1), dtype=np.float32)
    probs, _ = forward(tiny_config, params, x)
    assert probs.shape == (5, 4)
    assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-6
    assert np.isfinite(probs).all()


def test_full_architecture_forward_28x28():
    config = default_architecture()
    params = init_params(config, np.random.default_rng(1))
    x = np.random.default_rng(2).random((2, 28, 28, 1), dtype=np.float32)
    probs, _ = forward(config, params, x)
    assert probs.shape == (2, 10)
    assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-6


def test_glorot_init_ranges():
    config = default_architecture()
    params = init_params(config, np.random.default_rng(3))
    (w1, b1) = params[0]
    limit = np.sqrt(6.0 / (9 * 1 + 9 * 32))
    assert w1.dtype == np.float32
    assert np.abs(w1).max() <= limit
    assert np.array_equal(b1, np.zeros(32, dtype=np.float32))


def test_pool_on_odd_dims_rejected():
    with pytest.raises(ConfigError):
        NetworkConfig(input_shape=(9, 9, 1), layers=(
            Conv(2), Conv(2), MaxPool(), Flatten(), Dense(4, activation="softmax")))


def test_must_end_in_softmax_dense():
    with pytest.raises(ConfigError):
        NetworkConfig(input_shape=(8, 8, 1), layers=(Conv(2), Flatten(), Dense(4)))


def test_intermediate_softmax_rejected():
    with pytest.raises(ConfigError):
        NetworkConfig(input_shape=(8, 8, 1), layers=(
            Flatten(), Dense(8, activation="softmax"), Dense(4, activation="softmax")))


def test_bad_dropout_rate_rejected():
    with pytest.raises(ConfigError):
        NetworkConfig(input_shape=(8, 8, 1), layers=(
            Flatten(), Dropout(1.5), Dense(4, activation="softmax")))
