"""Alternating optimization over auxiliaries, digital weights, analog
weights, and subarray placements, plus the fixed-layout baselines.

Every block update leaves the surrogate no worse, so the recorded sum-rate
trace is non-decreasing; the loop stops when the squared trace increment
falls below the threshold or the iteration cap is hit.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import analog, digital, objective, positions
from .arrays import (dense_layout, fixed_geometry, region_centers,
                     sparse_layout, validate_positions)
from .channels import ChannelContext


@dataclass
class AOConfig:
    power: float = 0.01          # watts
    rho: float = 30.0
    step0: float = 0.1           # initial placement step, meters
    eps_conv: float = 1e-3       # threshold on the squared trace increment
    eps_step: float = 1e-3       # smallest retained placement step
    eps_admm: float = 1e-3       # inner-loop residual target
    max_outer: int = 200
    admm_max_iter: int = 300
    relative_stop: bool = False  # normalize the increment by the rate level
    quad_coeff: float = 1.0      # analog quadratic coefficient (see analog module)
    grid_step: float = None      # lattice pitch for the grid placement mode
    grid_cap: int = 40000        # largest allowed per-subarray lattice


@dataclass
class BeamformerState:
    w_stack: np.ndarray   # (M*N,) analog weights
    V: np.ndarray         # (M, K) digital weights
    positions: np.ndarray  # (M, 2) reference points


@dataclass
class IterationStats:
    surrogate_aux: float
    surrogate_digital: float
    surrogate_analog: float
    surrogate_placement: float
    admm_iterations: int
    admm_residual: float
    power_multiplier: float
    digital_power: float    # budget use right after the digital solve
    peak_modulus: float
    tx_power: float         # budget use at the end of the iteration


@dataclass
class AOResult:
    rates: np.ndarray
    state: BeamformerState
    stats: list
    iterations: int
    converged: bool
    wall_s: float


def init_state(ctx, config, seed):
    """Deterministic start: region centers, random unit-modulus analog
    phases, matched digital weights scaled to the full power budget."""
    geometry = ctx.geometry
    pos = region_centers(geometry)
    rng = np.random.default_rng([seed, 1])
    w = np.exp(2j * math.pi * rng.uniform(size=geometry.total_antennas))
    eff = objective.effective_channel(ctx.hybrid(pos), w, geometry.num_subarrays)
    V = np.ascontiguousarray(eff.T)
    p = digital.transmit_power(w, V)
    if p > 0:
        V *= math.sqrt(config.power / p)
    return BeamformerState(w, V, pos)


def _check_grid(geometry, step, cap):
    for m, box in enumerate(geometry.regions):
        size = box.grid_size(step)
        if size > cap:
            raise ValueError(
                f"placement lattice for subarray {m} has {size} points "
                f"(cap {cap}); use desk-scale regions or a coarser step")


def run_ao(scenario, geometry, config, seed, placement="gradient"):
    """Full alternating loop; placement is 'gradient', 'grid', or 'fixed'."""
    if placement not in ("gradient", "grid", "fixed"):
        raise ValueError(f"unknown placement mode {placement!r}")
    grid_step = config.grid_step
    if placement == "grid":
        if grid_step is None:
            grid_step = geometry.wavelength / 100.0
        _check_grid(geometry, grid_step, config.grid_cap)

    t_start = time.perf_counter()
    ctx = ChannelContext(scenario, geometry)
    state = init_state(ctx, config, seed)
    validate_positions(geometry, state.positions)
    noise = scenario.noise_power
    M = geometry.num_subarrays

    channels = ctx.hybrid(state.positions)
    G = objective.beam_gains(channels, state.w_stack, state.V)
    rates = [objective.sum_rate(G, noise)]
    stats = []
    converged = False

    for _ in range(config.max_outer):
        eta = objective.sinr_update(G, noise)
        mu = objective.scale_update(G, eta, noise)
        s_aux = objective.surrogate(G, eta, mu, noise)

        # digital block: exact maximizer under the power budget
        dsub = digital.build_digital_subproblem(
            channels, state.w_stack, eta, mu, config.power, M)
        V, lam = digital.solve_digital(dsub)
        p_digital = digital.transmit_power(state.w_stack, V)
        G = objective.beam_gains(channels, state.w_stack, V)
        s_digital = objective.surrogate(G, eta, mu, noise)

        # analog block: ADMM, then exact feasibility and a monotone guard
        asub = analog.build_analog_subproblem(
            channels, V, eta, mu, config.power, config.rho, config.quad_coeff)
        admm = analog.admm_solve(asub, state.w_stack, tol=config.eps_admm,
                                 max_iter=config.admm_max_iter)
        w = admm.w
        p = digital.transmit_power(w, V)
        if p > config.power:
            w = w * math.sqrt(config.power / p)
        if analog.analog_objective(asub, w) < analog.analog_objective(asub, state.w_stack):
            w = state.w_stack
        state = BeamformerState(w, V, state.positions)
        G = objective.beam_gains(channels, w, V)
        s_analog = objective.surrogate(G, eta, mu, noise)

        # placement block: sequential over subarrays
        if placement != "fixed":
            pos = state.positions.copy()
            for m in range(M):
                psub = positions.build_position_subproblem(
                    ctx, state.w_stack, V, eta, mu, pos, m)
                if placement == "gradient":
                    point, _, _ = positions.optimize_position(
                        psub, pos[m], geometry.regions[m],
                        config.step0, config.eps_step)
                else:
                    probe, _, _ = positions.optimize_position(
                        psub, pos[m], geometry.regions[m],
                        config.step0, config.eps_step)
                    point, _ = positions.exhaustive_position(
                        psub, geometry.regions[m], grid_step, pos[m],
                        extra=(probe,))
                pos[m] = point
            state = BeamformerState(state.w_stack, V, pos)
            channels = ctx.hybrid(pos)

        G = objective.beam_gains(channels, state.w_stack, state.V)
        s_place = objective.surrogate(G, eta, mu, noise)
        rates.append(objective.sum_rate(G, noise))
        stats.append(IterationStats(
            s_aux, s_digital, s_analog, s_place,
            admm.iterations, admm.residual, lam, p_digital,
            float(np.max(np.abs(state.w_stack))),
            digital.transmit_power(state.w_stack, state.V)))

        delta = rates[-1] - rates[-2]
        if config.relative_stop:
            delta = delta / max(abs(rates[-2]), 1.0)
        if delta * delta < config.eps_conv:
            converged = True
            break

    return AOResult(np.array(rates), state, stats, len(stats), converged,
                    time.perf_counter() - t_start)


def strict_modulus_rate(scenario, geometry, result, config):
    """Reporting mode with hard unit-modulus analog weights: renormalize
    every entry to the unit circle, rescale the digital weights back into
    the power budget, and re-evaluate the final sum rate."""
    state = result.state
    w = state.w_stack / np.maximum(np.abs(state.w_stack), 1e-300)
    V = state.V.copy()
    p = digital.transmit_power(w, V)
    if p > config.power:
        V = V * math.sqrt(config.power / p)
    ctx = ChannelContext(scenario, geometry)
    G = objective.beam_gains(ctx.hybrid(state.positions), w, V)
    return objective.sum_rate(G, scenario.noise_power)


def run_proposed(scenario, geometry, config, seed):
    return run_ao(scenario, geometry, config, seed, placement="gradient")


def run_exhaustive(scenario, geometry, config, seed):
    """Lattice placement search; any gradient candidate is folded into the
    search so this scheme never trails the gradient step."""
    return run_ao(scenario, geometry, config, seed, placement="grid")


def run_baseline_sparse(scenario, geometry, config, seed):
    """Fixed uniform sparse layout at aperture/8 pitch."""
    coords = sparse_layout(geometry.num_subarrays, geometry.antennas_per_subarray,
                           geometry.aperture, geometry.intra_spacing)
    geo = fixed_geometry(coords, geometry.antennas_per_subarray,
                         geometry.wavelength, geometry.aperture,
                         geometry.intra_spacing)
    return run_ao(scenario, geo, config, seed, placement="fixed")


def run_baseline_dense(scenario, geometry, config, seed):
    """Fixed contiguous half-wavelength array split into adjacent subarrays."""
    coords = dense_layout(geometry.num_subarrays, geometry.antennas_per_subarray,
                          geometry.intra_spacing)
    geo = fixed_geometry(coords, geometry.antennas_per_subarray,
                         geometry.wavelength, geometry.aperture,
                         geometry.intra_spacing)
    return run_ao(scenario, geo, config, seed, placement="fixed")


SCHEME_RUNNERS = {
    "proposed": run_proposed,
    "exhaustive": run_exhaustive,
    "sparse_upa": run_baseline_sparse,
    "dense_upa": run_baseline_dense,
}
