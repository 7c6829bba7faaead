"""Analytic gradients versus central finite differences on the small stack.

The finite-difference oracle is only meaningful where the loss is smooth
and the difference quotient resolves above float noise, so the relative
error uses a denominator floor at the oracle's resolution limit
(|a - f| / max(|a|, |f|, floor)). Seeds are fixed; see the acceptance
suite for the headline 100-coordinate run.
"""

import numpy as np
import pytest

from xlab.network import backward, init_params

from conftest import tiny_architecture


def build_problem(dtype, seed, nbatch=4):
    config = tiny_architecture()
    rng = np.random.default_rng(seed)
    params = [[w.astype(dtype), b.astype(dtype)] for w, b in init_params(config, rng)]
    x = rng.random((nbatch, 8, 8, 1)).astype(dtype)
    targets = rng.random((nbatch, 4))
    targets /= targets.sum(axis=1, keepdims=True)
    class_weights = rng.uniform(0.5, 2.0, 4)
    return config, params, x, targets, class_weights


def fd_check(dtype, h, floor, seed, n_checks):
    config, params, x, targets, w = build_problem(dtype, seed)
    grads, _ = backward(config, params, x, targets, w)
    slots = [(li, pi) for li in range(len(params)) for pi in range(2)]
    sizes = [params[li][pi].size for li, pi in slots]
    offsets = np.cumsum([0] + sizes)
    rng = np.random.default_rng(seed)
    coords = rng.choice(offsets[-1], size=n_checks, replace=False)
    worst = 0.0
    for c in coords:
        seg = int(np.searchsorted(offsets, c, side="right")) - 1
        li, pi = slots[seg]
        k = int(c - offsets[seg])
        arr = params[li][pi].ravel()
        orig = arr[k].item()
        arr[k] = orig + h
        _, loss_plus = backward(config, params, x, targets, w)
        arr[k] = orig - h
        _, loss_minus = backward(config, params, x, targets, w)
        arr[k] = orig
        fd = (loss_plus - loss_minus) / (2 * h)
        an = grads[li][pi].ravel()[k].item()
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), floor))
    return worst


def test_gradcheck_float32():
    worst = fd_check(np.float32, h=1e-3, floor=1e-2, seed=12345, n_checks=100)
    assert worst <= 1e-2, f"worst relative error {worst:.3e}"


def test_gradcheck_float64():
    worst = fd_check(np.float64, h=1e-5, floor=1e-6, seed=12345, n_checks=100)
    assert worst <= 1e-5, f"worst relative error {worst:.3e}"


def test_duplicate_sample_contributes_twice():
    config, params, x, targets, _ = build_problem(np.float64, seed=3, nbatch=2)
    a, b = x[0:1], x[1:2]
    ta, tb = targets[0:1], targets[1:2]
    g_a, _ = backward(config, params, a, ta)
    g_b, _ = backward(config, params, b, tb)
    g_aab, _ = backward(
        config, params, np.concatenate([a, a, b]), np.concatenate([ta, ta, tb])
    )
    for (wa, ba), (wb, bb), (wc, bc) in zip(g_a, g_b, g_aab):
        assert np.allclose(wc, (2 * wa + wb) / 3, rtol=1e-12, atol=1e-15)
        assert np.allclose(bc, (2 * ba + bb) / 3, rtol=1e-12, atol=1e-15)


def test_gradient_scales_linearly_with_class_weights():
    config, params, x, targets, w = build_problem(np.float64, seed=4)
    g1, loss1 = backward(config, params, x, targets, w)
    scale = 1e-3
    g2, loss2 = backward(config, params, x, targets, w * scale)
    assert loss2 == pytest.approx(loss1 * scale, rel=1e-12)
    for (w1, b1), (w2, b2) in zip(g1, g2):
        assert np.allclose(w2, w1 * scale, rtol=1e-12, atol=0.0)
        assert np.allclose(b2, b1 * scale, rtol=1e-12, atol=0.0)


def test_gradients_finite_and_shaped():
    config, params, x, targets, w = build_problem(np.float32, seed=5)
    grads, loss = backward(config, params, x, targets, w)
    assert np.isfinite(loss)
    for (gw, gb), (pw, pb) in zip(grads, params):
        assert gw.shape == pw.shape and gb.shape == pb.shape
        assert np.isfinite(gw).all() and np.isfinite(gb).all()
