"""Numba inner loops for the hot paths.

These kernels exist purely for speed; the public contracts live in
:mod:`xlab.layers` and :mod:`xlab.noise`. All of them write disjoint output
elements per parallel iteration (or run a strictly sequential chain), so
results do not depend on thread count or scheduling.
"""

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def im2col3(x, out):
    """Lower 3x3 valid-convolution patches of x [N,H,W,C] into out [N,Ho,Wo,9*C].

    Patch elements are ordered (row offset, col offset, channel), matching a
    kernel tensor [3,3,C,O] flattened to [9*C, O] by a plain reshape.
    """
    n, h, w, c = x.shape
    ho = h - 2
    wo = w - 2
    for ni in prange(n):
        for i in range(ho):
            for j in range(wo):
                t = 0
                for a in range(3):
                    for b in range(3):
                        for cc in range(c):
                            out[ni, i, j, t] = x[ni, i + a, j + b, cc]
                            t += 1


@njit(parallel=True, cache=True)
def col2im3_add(dcols, dx):
    """Scatter-add patch gradients [N,Ho,Wo,9*C] back onto dx [N,H,W,C]."""
    n, ho, wo, _ = dcols.shape
    c = dx.shape[3]
    for ni in prange(n):
        for i in range(ho):
            for j in range(wo):
                t = 0
                for a in range(3):
                    for b in range(3):
                        for cc in range(c):
                            dx[ni, i + a, j + b, cc] += dcols[ni, i, j, t]
                            t += 1


@njit(parallel=True, cache=True)
def maxpool2x2(x, out, winners):
    """2x2/stride-2 max pool of x [N,H,W,C] into out [N,H/2,W/2,C].

    winners[n,i,j,c] records the in-window position (0..3, raster order) of
    the maximum; ties go to the lowest position so pooling is deterministic.
    """
    n, h, w, c = x.shape
    ho = h // 2
    wo = w // 2
    for ni in prange(n):
        for i in range(ho):
            for j in range(wo):
                for cc in range(c):
                    best = x[ni, 2 * i, 2 * j, cc]
                    pos = 0
                    for t in range(1, 4):
                        v = x[ni, 2 * i + (t >> 1), 2 * j + (t & 1), cc]
                        if v > best:
                            best = v
                            pos = t
                    out[ni, i, j, cc] = best
                    winners[ni, i, j, cc] = pos


@njit(parallel=True, cache=True)
def maxpool2x2_grad(dout, winners, dx):
    """Route pooled gradients back to the winning positions; dx starts zeroed."""
    n, ho, wo, c = dout.shape
    for ni in prange(n):
        for i in range(ho):
            for j in range(wo):
                for cc in range(c):
                    t = winners[ni, i, j, cc]
                    dx[ni, 2 * i + (t >> 1), 2 * j + (t & 1), cc] = dout[ni, i, j, cc]


@njit(cache=True)
def metropolis_sweeps(spins, beta, coupling, sweeps, rng):
    """Run single-spin-flip Metropolis on a +-1 lattice, in place.

    Energy is E(x) = -coupling * sum over 4-neighbor edges of x_i*x_j with
    free boundaries; a flip is accepted with min(1, exp(-beta * dE)). One
    sweep visits every site once in raster order.
    """
    h, w = spins.shape
    for _ in range(sweeps):
        for i in range(h):
            for j in range(w):
                nb = 0
                if i > 0:
                    nb += spins[i - 1, j]
                if i < h - 1:
                    nb += spins[i + 1, j]
                if j > 0:
                    nb += spins[i, j - 1]
                if j < w - 1:
                    nb += spins[i, j + 1]
                delta_e = 2.0 * coupling * spins[i, j] * nb
                if delta_e <= 0.0 or rng.random() < np.exp(-beta * delta_e):
                    spins[i, j] = -spins[i, j]
