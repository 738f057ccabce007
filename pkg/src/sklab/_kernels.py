"""Numba kernels for exact enumeration and Metropolis sweeps.

All kernels take the symmetrized, rescaled interaction matrix

    W = (beta / sqrt(N)) * (H + H^T) / 2

so that the Gibbs exponent of a configuration sigma in {-1,+1}^N is

    e(sigma) = sigma^T W sigma + r * sum(sigma)
             = (beta / sqrt(N)) * sigma^T H sigma + r * sum(sigma).

Enumeration walks the reflected-Gray-code order: consecutive configurations
differ in exactly one spin, and the O(N) update of the cached vector s = W
sigma gives each energy in O(N) instead of O(N^2).
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def gray_energies(W, r):
    """Gibbs exponents of all 2^N configurations, in Gray-code order."""
    n = W.shape[0]
    total = 1 << n
    sigma = np.full(n, -1.0)
    s = W @ sigma
    e = W.sum() - r * n
    out = np.empty(total)
    out[0] = e
    for m in range(1, total):
        k = 0
        while not (m >> k) & 1:
            k += 1
        e += -4.0 * sigma[k] * s[k] + 4.0 * W[k, k] - 2.0 * r * sigma[k]
        delta = -2.0 * sigma[k]
        for i in range(n):
            s[i] += W[i, k] * delta
        sigma[k] = -sigma[k]
        out[m] = e
    return out


@njit(cache=True, nogil=True)
def gray_pair_expectations(W, r):
    """(log Z, <sigma_i sigma_j> matrix) by a two-pass Gray-code walk."""
    n = W.shape[0]
    total = 1 << n
    energies = gray_energies(W, r)
    emax = energies.max()

    z = 0.0
    pairs = np.zeros((n, n))
    sigma = np.full(n, -1.0)
    for m in range(total):
        if m > 0:
            k = 0
            while not (m >> k) & 1:
                k += 1
            sigma[k] = -sigma[k]
        wgt = np.exp(energies[m] - emax)
        z += wgt
        for i in range(n):
            wsi = wgt * sigma[i]
            for j in range(i, n):
                pairs[i, j] += wsi * sigma[j]
    for i in range(n):
        for j in range(i, n):
            pairs[i, j] /= z
            pairs[j, i] = pairs[i, j]
    return emax + np.log(z), pairs


@njit(cache=True, nogil=True)
def metropolis_chain(W, r, sigma, uniforms, n_sweeps, out_bits):
    """Sequential-sweep single-flip Metropolis; records one bit word per sweep.

    sigma is modified in place; uniforms must hold n_sweeps * N variates.
    Returns nothing; out_bits[s] encodes the configuration after sweep s
    (bit i set <-> sigma_i = +1).
    """
    n = W.shape[0]
    s = W @ sigma
    u_idx = 0
    for sweep in range(n_sweeps):
        for k in range(n):
            delta_e = -4.0 * sigma[k] * s[k] + 4.0 * W[k, k] - 2.0 * r * sigma[k]
            if delta_e >= 0.0 or uniforms[u_idx] < np.exp(delta_e):
                delta = -2.0 * sigma[k]
                for i in range(n):
                    s[i] += W[i, k] * delta
                sigma[k] = -sigma[k]
            u_idx += 1
        bits = np.uint64(0)
        for i in range(n):
            if sigma[i] > 0.0:
                bits |= np.uint64(1) << np.uint64(i)
        out_bits[sweep] = bits
