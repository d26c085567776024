"""Per-subarray placement: surrogate restricted to one reference point,
its analytic gradient, a backtracked ascent step, and a lattice search.

With every other block frozen, the surrogate depends on subarray m only
through that subarray's response vectors c_k(t); the restriction is linear
minus a per-user quadratic in c_k, with coupling to the other subarrays
folded into the linear coefficients.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class PositionSubproblem:
    ctx: object            # ChannelContext
    sub_index: int
    self_quad: np.ndarray  # (N, N) stream-summed block outer product
    lin: np.ndarray        # (K, N) linear coefficient per user
    user_weight: np.ndarray  # (K,) |mu_k|^2


def build_position_subproblem(ctx, w_stack, V, eta, mu, positions, m):
    K = ctx.scenario.num_users
    M = ctx.geometry.num_subarrays
    N = ctx.geometry.antennas_per_subarray
    # per-stream weights on the element grid: omega_j = diag(w) Phi v_j
    vex = np.repeat(V.T, N, axis=1)
    omega = (vex * np.asarray(w_stack)[None, :]).reshape(K, M, N)
    # stream-summed cross blocks against subarray m
    x_row = np.einsum("kn,kil->inl", omega[:, m, :], omega.conj())  # (M, N, N)
    others = [i for i in range(M) if i != m]
    c_all = ctx.subarray_gains(np.asarray(positions))               # (K, M, N)
    cross = np.einsum("inl,kil->kn", x_row[others],
                      c_all[:, others]) if others else np.zeros((K, N), dtype=complex)
    lin = (np.sqrt(1.0 + eta) * np.conj(mu))[:, None] * omega[:, m, :] \
        - (np.abs(mu) ** 2)[:, None] * cross
    return PositionSubproblem(ctx, m, x_row[m], lin, np.abs(mu) ** 2)


def placement_objective(sub, point):
    """Surrogate restricted to subarray sub_index at reference `point`
    (per-point constant terms dropped)."""
    K = sub.lin.shape[0]
    c = sub.ctx.gains_at(np.arange(K), point)                       # (K, N)
    linear = 2.0 * np.einsum("kn,kn->", c.conj(), sub.lin).real
    quad = np.einsum("k,kn,nl,kl->", sub.user_weight, c.conj(), sub.self_quad, c).real
    return float(linear - quad)


def placement_objective_batch(sub, points):
    """(G,) objective over candidate points in one vectorized pass."""
    c = sub.ctx.gains_on_grid(points)                               # (G, K, N)
    linear = 2.0 * np.einsum("gkn,kn->g", c.conj(), sub.lin).real
    quad = np.einsum("k,gkn,nl,gkl->g", sub.user_weight, c.conj(),
                     sub.self_quad, c).real
    return linear - quad


def placement_gradient(sub, point):
    """(2,) analytic gradient of the restricted surrogate."""
    K = sub.lin.shape[0]
    c = sub.ctx.gains_at(np.arange(K), point)
    jac = sub.ctx.gain_jacobian(point)                              # (K, N, 2)
    lin_part = 2.0 * np.einsum("knd,kn->d", jac.conj(), sub.lin).real
    quad_part = 2.0 * np.einsum("k,knd,nl,kl->d", sub.user_weight,
                                jac.conj(), sub.self_quad, c).real
    return lin_part - quad_part


def project_region(point, box):
    """Clamp a candidate reference point into its placement box."""
    return box.clamp(point)


def optimize_position(sub, start, box, step0, step_min):
    """One backtracked ascent pass from `start`.

    Walks the raw gradient with a halving step; each candidate is clamped
    into the box and adopted as soon as it strictly improves the
    objective. Returns (point, value, moved); the input point is retained
    when no candidate improves, so the objective never decreases.
    """
    f0 = placement_objective(sub, start)
    grad = placement_gradient(sub, start)
    if not np.any(grad):
        return np.asarray(start, dtype=float), f0, False
    tau = step0
    while tau > step_min:
        candidate = project_region(np.asarray(start) + tau * grad, box)
        fc = placement_objective(sub, candidate)
        if fc > f0:
            return candidate, fc, True
        tau *= 0.5
    return np.asarray(start, dtype=float), f0, False


def exhaustive_position(sub, box, grid_step, current, extra=()):
    """Argmax of the restricted surrogate over the box lattice, the current
    point, and any extra candidates (so the search never loses to them)."""
    candidates = [box.grid(grid_step), np.asarray(current, dtype=float)[None, :]]
    for point in extra:
        candidates.append(np.asarray(point, dtype=float)[None, :])
    points = np.vstack(candidates)
    values = placement_objective_batch(sub, points)
    best = int(np.argmax(values))
    return points[best], float(values[best])
