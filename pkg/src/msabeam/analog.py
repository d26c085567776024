"""Analog weight update by scaled ADMM under relaxed per-element moduli.

For fixed auxiliaries and digital weights the surrogate reduces, up to a
constant, to f(w) = 2 Re{r^H w} - quad_coeff * w^H T w over the
intersection of the unit polydisk with the transmit-power ball. Splitting
variables carry the two constraint sets; the w update is an unconstrained
quadratic solve whose system matrix is fixed over the inner loop.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@dataclass
class AnalogSubproblem:
    quad: np.ndarray      # (MN, MN) Hermitian PSD coupling matrix
    lin: np.ndarray       # (MN,) linear coefficient
    v_expand: np.ndarray  # (K, MN) digital weights broadcast over their subarray
    power: float
    rho: float
    quad_coeff: float = 1.0  # 2.0 reproduces the doubled-quadratic reading

    @property
    def pw_diag(self):
        """Diagonal of the power quadratic sum_k vhat_k^H vhat_k."""
        return np.sum(np.abs(self.v_expand) ** 2, axis=0)


def build_analog_subproblem(channels, V, eta, mu, power, rho, quad_coeff=1.0):
    K, MN = channels.shape
    M = V.shape[0]
    N = MN // M
    vex = np.repeat(V.T, N, axis=1)                # (K, MN), row j broadcasts v_j
    # coupling: sum_k |mu_k|^2 sum_j (conj(v_j) o h_k)(conj(v_j) o h_k)^H
    S = np.einsum("k,ka,kb->ab", np.abs(mu) ** 2, channels, channels.conj())
    C = vex.conj().T @ vex
    quad = S * C
    lin = np.einsum("k,ka->a", np.sqrt(1.0 + eta) * mu, vex.conj() * channels)
    return AnalogSubproblem(quad, lin, vex, float(power), float(rho), float(quad_coeff))


def analog_objective(sub, w):
    """Surrogate restricted to the analog weights (constant terms dropped)."""
    return float(2.0 * np.vdot(sub.lin, w).real
                 - sub.quad_coeff * np.vdot(w, sub.quad @ w).real)


def project_unit_disk(v):
    """Entrywise projection onto |v_i| <= 1."""
    mag = np.abs(v)
    scale = np.where(mag > 1.0, 1.0 / np.maximum(mag, 1e-300), 1.0)
    return v * scale


def project_power_ball(z, power):
    """Joint scaling of the stacked per-stream splits onto the power ball."""
    total = float(np.sum(np.abs(z) ** 2))
    if total <= power:
        return z
    return z * np.sqrt(power / total)


def system_matrix(sub):
    MN = sub.quad.shape[0]
    return (2.0 * sub.quad_coeff * sub.quad
            + sub.rho * np.eye(MN)
            + sub.rho * np.diag(sub.pw_diag))


def w_step(sub, kappa, x, zeta, z_dual, factor=None):
    """Unconstrained quadratic solve for the analog weights."""
    theta = (2.0 * sub.lin
             + sub.rho * (kappa + x)
             + sub.rho * np.einsum("ka,ka->a", sub.v_expand.conj(), zeta + z_dual))
    if factor is None:
        factor = cho_factor(system_matrix(sub))
    return cho_solve(factor, theta)


def augmented_objective(sub, w, kappa, x, zeta, z_dual):
    """Smooth part of the augmented Lagrangian as a function of w (the
    indicator terms are constant in w); the w step is its exact minimizer."""
    split = sub.v_expand * w[None, :]
    return float(-analog_objective(sub, w)
                 + 0.5 * sub.rho * np.sum(np.abs(kappa - w + x) ** 2)
                 + 0.5 * sub.rho * np.sum(np.abs(zeta - split + z_dual) ** 2))


@dataclass
class AdmmResult:
    w: np.ndarray
    iterations: int
    residual: float
    converged: bool


def admm_solve(sub, w_init, tol=1e-4, max_iter=300):
    """Scaled ADMM with warm start.

    Stops when both the max primal residual and the dual residual (the
    penalty-scaled change of the consensus blocks) fall below tol; the
    primal gap alone collapses immediately when rho dwarfs the objective
    terms, long before the iterate stops drifting. The returned weights
    are clipped to the unit polydisk (final feasibility projection);
    power feasibility is within the residual tolerance and is tightened
    by the caller when it must be exact.
    """
    w = np.asarray(w_init, dtype=complex).copy()
    kappa = project_unit_disk(w)
    zeta = project_power_ball(sub.v_expand * w[None, :], sub.power)
    x = np.zeros_like(w)
    z_dual = np.zeros_like(zeta)
    factor = cho_factor(system_matrix(sub))

    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        w = w_step(sub, kappa, x, zeta, z_dual, factor=factor)
        kappa_prev, zeta_prev = kappa, zeta
        kappa = project_unit_disk(w - x)
        split = sub.v_expand * w[None, :]
        zeta = project_power_ball(split - z_dual, sub.power)
        x += kappa - w
        z_dual += zeta - split
        primal = max(float(np.max(np.abs(kappa - w))),
                     float(np.max(np.abs(zeta - split))))
        dual = sub.rho * max(float(np.max(np.abs(kappa - kappa_prev))),
                             float(np.max(np.abs(zeta - zeta_prev))))
        residual = max(primal, dual)
        if residual <= tol:
            break
    return AdmmResult(project_unit_disk(w), it, residual, residual <= tol)


def dense_mixing_matrix(w_stack, num_subarrays):
    """Explicit (MN, M) block-diagonal analog matrix; test/diagnostic use."""
    w = np.asarray(w_stack, dtype=complex)
    MN = w.size
    N = MN // num_subarrays
    W = np.zeros((MN, num_subarrays), dtype=complex)
    for m in range(num_subarrays):
        W[m * N:(m + 1) * N, m] = w[m * N:(m + 1) * N]
    return W
