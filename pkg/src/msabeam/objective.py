"""Sum-rate objective and its fractional-programming surrogate.

The analog stage is a per-subarray combiner: stream j reaches user k with
gain G[k, j] = hbar_k^H v_j, where hbar_k[m] compresses user k's channel
over subarray m through the conjugated analog weights. All quantities here
are functions of G, the (K, K) gain matrix.
"""

import math

import numpy as np

LN2 = math.log(2.0)


def effective_channel(channels, w_stack, num_subarrays):
    """(K, M) per-subarray combined channels hbar_k[m] = sum_n conj(w) h."""
    K = channels.shape[0]
    blocks = channels.reshape(K, num_subarrays, -1)
    w = np.asarray(w_stack).reshape(num_subarrays, -1)
    return np.einsum("kmn,mn->km", blocks, w.conj())


def beam_gains(channels, w_stack, V):
    """(K, K) gain matrix; entry [k, j] is stream j's amplitude at user k."""
    eff = effective_channel(channels, w_stack, V.shape[0])
    return eff.conj() @ V


def sinr_values(G, noise_power):
    """Per-user SINR under the current gains."""
    mag2 = np.abs(G) ** 2
    sig = np.diag(mag2)
    interf = mag2.sum(axis=1) - sig
    return sig / (interf + noise_power)


def sum_rate(G, noise_power):
    """Sum spectral efficiency in bit/s/Hz."""
    return float(np.sum(np.log2(1.0 + sinr_values(G, noise_power))))


def sinr_update(G, noise_power):
    """Closed-form optimal ratio auxiliaries: the current SINRs."""
    return sinr_values(G, noise_power)


def scale_update(G, eta, noise_power):
    """Closed-form optimal scale auxiliaries for fixed ratio auxiliaries."""
    total = np.sum(np.abs(G) ** 2, axis=1) + noise_power
    return np.sqrt(1.0 + eta) * np.diag(G) / total


def surrogate(G, eta, mu, noise_power):
    """Quadratic surrogate: concave in each beamforming block for fixed
    auxiliaries, so the block solvers maximize it in closed form."""
    total = np.sum(np.abs(G) ** 2, axis=1) + noise_power
    lin = 2.0 * np.sum(np.sqrt(1.0 + eta) * (np.conj(mu) * np.diag(G)).real)
    return float(lin - np.sum(np.abs(mu) ** 2 * total))


def transformed_rate(G, eta, mu, noise_power):
    """Tight transformed objective: equals sum_rate at the closed-form
    auxiliaries and lower-bounds it elsewhere (the eta correction term keeps
    the bound exact)."""
    return float(np.sum(np.log2(1.0 + eta)) - np.sum(eta) / LN2
                 + surrogate(G, eta, mu, noise_power) / LN2)
