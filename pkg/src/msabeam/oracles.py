"""Slow reference implementations used to cross-check the optimizer.

Everything here trades speed for independence: explicit loops instead of
einsum, finite differences instead of closed-form gradients, and a general
constrained solver instead of the ADMM. Tests compare the fast paths against
these, and the CLI exposes a self-check that runs a desk-sized subset.
"""

import numpy as np
from scipy.optimize import minimize

from .analog import analog_objective
from .arrays import element_offsets
from .positions import placement_objective


def dense_hybrid_channel(scenario, geometry, positions):
    """Triple-loop hybrid channel, one scalar entry at a time."""
    offsets = element_offsets(geometry)
    k0 = 2.0 * np.pi / geometry.wavelength
    num_users, num_paths = scenario.gains.shape
    M = geometry.num_subarrays
    N = geometry.antennas_per_subarray
    h = np.zeros((num_users, M * N), dtype=complex)
    for k in range(num_users):
        for p in range(num_paths):
            source = scenario.sources[k, p]
            direction = source / np.linalg.norm(source)
            for m in range(M):
                ref = np.array([positions[m, 0], positions[m, 1], 0.0])
                dist = np.linalg.norm(source - ref)
                spherical = np.exp(-1j * k0 * dist)
                for n in range(N):
                    ramp = np.exp(1j * k0 * (offsets[n, 0] * direction[0]
                                             + offsets[n, 1] * direction[1]))
                    h[k, m * N + n] += scenario.gains[k, p] * spherical * ramp
    return h


def dense_exact_channel(scenario, geometry, positions):
    """Per-element spherical-wave channel via explicit distance loops."""
    offsets = element_offsets(geometry)
    k0 = 2.0 * np.pi / geometry.wavelength
    num_users, num_paths = scenario.gains.shape
    M = geometry.num_subarrays
    N = geometry.antennas_per_subarray
    h = np.zeros((num_users, M * N), dtype=complex)
    for k in range(num_users):
        for p in range(num_paths):
            source = scenario.sources[k, p]
            for m in range(M):
                for n in range(N):
                    element = np.array([positions[m, 0] + offsets[n, 0],
                                        positions[m, 1] + offsets[n, 1], 0.0])
                    dist = np.linalg.norm(source - element)
                    h[k, m * N + n] += scenario.gains[k, p] * np.exp(-1j * k0 * dist)
    return h


def sum_rate_loops(h, w_stack, V, noise_power):
    """Sum rate from scalar loops over users and interferers."""
    num_users = h.shape[0]
    M, N = w_stack.shape
    total = 0.0
    for k in range(num_users):
        eff = np.zeros(M, dtype=complex)
        for m in range(M):
            for n in range(N):
                eff[m] += np.conj(w_stack[m, n]) * h[k, m * N + n]
        signal = abs(np.vdot(eff, V[:, k]).conjugate()) ** 2
        interference = 0.0
        for j in range(num_users):
            if j != k:
                interference += abs(np.conj(eff) @ V[:, j]) ** 2
        total += np.log2(1.0 + signal / (interference + noise_power[k]))
    return total


def fd_gradient(fun, point, step=1e-7):
    """Central-difference gradient of a real function on R^d."""
    point = np.asarray(point, dtype=float)
    grad = np.zeros_like(point)
    for i in range(point.size):
        up = point.copy()
        dn = point.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (fun(up) - fun(dn)) / (2.0 * step)
    return grad


def fd_wirtinger(fun, w, step=1e-7):
    """Real and imaginary partials of a real function of a complex vector,
    packed as d/dRe + 1j * d/dIm."""
    w = np.asarray(w, dtype=complex)
    grad = np.zeros_like(w)
    for i in range(w.size):
        for direction, weight in ((1.0, 1.0), (1j, 1j)):
            up = w.copy()
            dn = w.copy()
            up[i] += step * direction
            dn[i] -= step * direction
            grad[i] += weight * (fun(up) - fun(dn)) / (2.0 * step)
    return grad


def _pack(w):
    return np.concatenate([w.real, w.imag])


def _unpack(x):
    half = x.size // 2
    return x[:half] + 1j * x[half:]


def best_feasible_analog(sub, num_restarts=8, seed=0, maxiter=400):
    """Best f4 value a general-purpose solver finds on the analog feasible
    set (per-entry unit disk plus the transmit power ball). Small problems
    only; used as a quality bar for the ADMM."""
    size = sub.lin.size
    rng = np.random.default_rng(seed)

    def negated(x):
        return -analog_objective(sub, _unpack(x))

    def modulus_slack(x):
        w = _unpack(x)
        return 1.0 - np.abs(w) ** 2

    def power_slack(x):
        w = _unpack(x)
        return sub.power - float(np.sum(np.abs(sub.v_expand * w) ** 2))

    constraints = [{"type": "ineq", "fun": modulus_slack},
                   {"type": "ineq", "fun": power_slack}]
    best_value = -np.inf
    best_w = None
    for r in range(num_restarts):
        if r == 0:
            w0 = np.exp(1j * np.zeros(size))
        else:
            w0 = np.exp(2j * np.pi * rng.uniform(size=size)) * rng.uniform(0.5, 1.0, size)
        res = minimize(negated, _pack(w0), method="SLSQP",
                       constraints=constraints,
                       options={"maxiter": maxiter, "ftol": 1e-12})
        w = _unpack(res.x)
        # clip tiny constraint violations before scoring
        mod = np.abs(w)
        w = np.where(mod > 1.0, w / np.maximum(mod, 1e-300), w)
        p = float(np.sum(np.abs(sub.v_expand * w) ** 2))
        if p > sub.power:
            w = w * np.sqrt(sub.power / p)
        value = analog_objective(sub, w)
        if value > best_value:
            best_value = value
            best_w = w
    return best_value, best_w


def grid_best_position(sub, box, step):
    """Scalar scan of the placement objective over the region lattice."""
    best_value = -np.inf
    best_point = None
    nx = int(box.side_x / step + 1e-9) + 1
    ny = int(box.side_y / step + 1e-9) + 1
    for iy in range(ny):
        for ix in range(nx):
            point = np.array([box.x_lo + ix * step, box.y_lo + iy * step])
            value = placement_objective(sub, point)
            if value > best_value:
                best_value = value
                best_point = point
    return best_point, best_value


def matched_filter_bound(h, power, noise_power):
    """Interference-free upper bound on the sum rate: all power to each
    user over a matched beam."""
    gains = np.sum(np.abs(h) ** 2, axis=1)
    return float(np.sum(np.log2(1.0 + power * gains / noise_power)))
