"""Shared builders for the test suite: desk-scale systems and random states."""

import numpy as np

from msabeam.arrays import movable_geometry
from msabeam.channels import SPEED_OF_LIGHT, ScenarioConfig, build_scenario
from msabeam.digital import transmit_power

LAM = SPEED_OF_LIGHT / 30e9
POWER = 0.01
NOISE = 1e-11


def desk_geometry(num_subarrays=4, antennas=4, aperture_lam=2.0):
    return movable_geometry(num_subarrays, antennas, LAM, aperture_lam * LAM)


def desk_scenario_config(num_users=4, paths=3):
    return ScenarioConfig(num_users=num_users, paths_per_user=paths,
                          wavelength=LAM, noise_power=NOISE)


def desk_scenario(seed, num_users=4, paths=3):
    return build_scenario(desk_scenario_config(num_users, paths), seed)


def random_positions(geometry, rng):
    """One uniform draw per placement region."""
    pts = [(rng.uniform(box.x_lo, box.x_hi), rng.uniform(box.y_lo, box.y_hi))
           for box in geometry.regions]
    return np.array(pts)


def random_state(geometry, num_users, rng, power=POWER):
    """Feasible beamformer: unit-modulus analog, digital scaled to the budget."""
    M = geometry.num_subarrays
    w = np.exp(2j * np.pi * rng.uniform(size=geometry.total_antennas))
    V = rng.standard_normal((M, num_users)) + 1j * rng.standard_normal((M, num_users))
    V *= np.sqrt(power / transmit_power(w, V))
    return w, V


def random_aux(num_users, rng):
    """Plausible auxiliary variables for surrogate-level tests."""
    eta = rng.uniform(0.1, 3.0, size=num_users)
    mu = 0.5 * (rng.standard_normal(num_users) + 1j * rng.standard_normal(num_users))
    return eta, mu
