"""Digital precoder update: per-stream closed form plus a power bisection.

For fixed auxiliaries and analog weights the surrogate is a concave
quadratic in the stacked digital weights, so each column solves a
regularized linear system; the multiplier on the power constraint is found
by bisection on the monotone transmit-power curve.
"""

from dataclasses import dataclass

import numpy as np

from .objective import effective_channel


@dataclass
class DigitalSubproblem:
    eff: np.ndarray      # (K, M) combined channels
    quad: np.ndarray     # (M, M) sum_k |mu_k|^2 hbar_k hbar_k^H
    gram: np.ndarray     # (M,) per-subarray analog power |w_m|^2 summed
    targets: np.ndarray  # (M, K) column k: sqrt(1+eta_k) mu_k hbar_k
    power: float


def build_digital_subproblem(channels, w_stack, eta, mu, power, num_subarrays):
    eff = effective_channel(channels, w_stack, num_subarrays)
    quad = np.einsum("k,km,kl->ml", np.abs(mu) ** 2, eff, eff.conj())
    w = np.asarray(w_stack).reshape(num_subarrays, -1)
    gram = np.sum(np.abs(w) ** 2, axis=1)
    targets = (eff * (np.sqrt(1.0 + eta) * mu)[:, None]).T
    return DigitalSubproblem(eff, quad, gram, np.ascontiguousarray(targets), float(power))


def solve_columns(sub, lam):
    """All stream columns at a fixed power multiplier."""
    A = sub.quad + lam * np.diag(sub.gram)
    try:
        return np.linalg.solve(A, sub.targets)
    except np.linalg.LinAlgError:
        M = A.shape[0]
        jitter = 1e-12 * max(np.trace(A).real / M, 1.0)
        try:
            return np.linalg.solve(A + jitter * np.eye(M), sub.targets)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(A, sub.targets, rcond=None)[0]


def transmit_power(w_stack, V):
    """||diag(w) Phi V||_F^2 via the diagonal analog Gram."""
    M = V.shape[0]
    w = np.asarray(w_stack).reshape(M, -1)
    gram = np.sum(np.abs(w) ** 2, axis=1)
    return float(np.sum(gram * np.sum(np.abs(V) ** 2, axis=1)))


def _power_of(sub, V):
    return float(np.sum(sub.gram * np.sum(np.abs(V) ** 2, axis=1)))


def solve_digital(sub, rel_tol=1e-6, max_steps=100):
    """Digital weights and multiplier satisfying the power budget.

    Returns the unconstrained solution when it is already feasible;
    otherwise bisects until the budget binds to within rel_tol (relative
    complementary slackness), with doubling to bracket the multiplier.
    """
    V0 = solve_columns(sub, 0.0)
    p0 = _power_of(sub, V0)
    budget = sub.power
    if p0 <= budget * (1.0 + rel_tol):
        return V0, 0.0

    steps = 0
    hi = 1.0
    V_hi = solve_columns(sub, hi)
    while _power_of(sub, V_hi) > budget and steps < max_steps:
        hi *= 2.0
        V_hi = solve_columns(sub, hi)
        steps += 1
    lo = 0.0
    while steps < max_steps:
        p_hi = _power_of(sub, V_hi)
        if p_hi <= budget and hi * (budget - p_hi) <= rel_tol * budget:
            break
        mid = 0.5 * (lo + hi)
        V_mid = solve_columns(sub, mid)
        if _power_of(sub, V_mid) > budget:
            lo = mid
        else:
            hi, V_hi = mid, V_mid
        steps += 1
    return V_hi, hi
