"""Multipath scenarios and the two-scale near-field channel model.

Each propagation path is a point source (the user for the line-of-sight
path, a scatterer otherwise). A source contributes, per subarray, a common
spherical phase taken at the subarray reference point times a planar phase
ramp across the subarray's elements; the exact model applies the spherical
distance at every element and is kept as a diagnostic.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .arrays import element_offsets

SPEED_OF_LIGHT = 299_792_458.0

# sources closer than this to the aperture plane make reference distances
# ill-conditioned; scenario construction rejects them outright
MIN_SOURCE_HEIGHT = 1e-6


@dataclass
class ScenarioConfig:
    """Drop parameters for one random multipath scenario."""

    num_users: int = 16
    paths_per_user: int = 6
    wavelength: float = SPEED_OF_LIGHT / 30e9
    min_distance: float = 5.0
    max_distance: float = 30.0
    noise_power: float = 1e-11
    scatter_gain: float = 10.0 ** -0.5
    max_direction_sine: float = math.sin(math.radians(60.0))


@dataclass
class Scenario:
    """Path sources and gains for K users; sources[:, 0] are the users."""

    sources: np.ndarray      # (K, P, 3)
    gains: np.ndarray        # (K, P) complex
    noise_power: np.ndarray  # (K,)

    def __post_init__(self):
        self.sources = np.asarray(self.sources, dtype=float)
        self.gains = np.asarray(self.gains, dtype=complex)
        self.noise_power = np.asarray(self.noise_power, dtype=float)
        if self.sources.ndim != 3 or self.sources.shape[2] != 3:
            raise ValueError("sources must be (K, P, 3)")
        if self.gains.shape != self.sources.shape[:2]:
            raise ValueError("gains shape must match sources")
        if self.noise_power.shape != (self.sources.shape[0],):
            raise ValueError("one noise power per user required")
        if np.any(self.noise_power <= 0):
            raise ValueError("noise power must be positive")
        if np.any(self.sources[:, :, 2] < MIN_SOURCE_HEIGHT):
            raise ValueError("path source degenerate: too close to the aperture plane")

    @property
    def num_users(self):
        return self.sources.shape[0]

    @property
    def paths_per_user(self):
        return self.sources.shape[1]


def _draw_direction(rng, s_max):
    # direction cosines uniform on the square, kept strictly in front of
    # the array (rejection keeps the z cosine bounded away from zero)
    while True:
        ux, uy = rng.uniform(-s_max, s_max, size=2)
        r2 = ux * ux + uy * uy
        if r2 <= 0.99:
            return ux, uy, math.sqrt(1.0 - r2)


def build_scenario(config, seed):
    """Draw one scenario; a pure function of (config, seed)."""
    rng = np.random.default_rng(seed)
    K, P = config.num_users, config.paths_per_user
    lam = config.wavelength
    sources = np.zeros((K, P, 3))
    gains = np.zeros((K, P), dtype=complex)
    for k in range(K):
        for p in range(P):
            ux, uy, uz = _draw_direction(rng, config.max_direction_sine)
            d = rng.uniform(config.min_distance, config.max_distance)
            sources[k, p] = (d * ux, d * uy, d * uz)
            amp = lam / (4.0 * math.pi * d)
            if p == 0:
                psi = rng.uniform(0.0, 2.0 * math.pi)
                gains[k, p] = amp * np.exp(1j * psi)
            else:
                g = (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2.0)
                gains[k, p] = config.scatter_gain * amp * g
    noise = np.full(K, config.noise_power)
    return Scenario(sources, gains, noise)


def inter_subarray_phase(ref_point, source, wavelength):
    """Spherical phase factor exp(-j 2 pi d / lambda) from a z = 0 reference
    point to a source in front of the array."""
    dx = source[0] - ref_point[0]
    dy = source[1] - ref_point[1]
    d = math.sqrt(dx * dx + dy * dy + source[2] * source[2])
    return complex(np.exp(-2j * math.pi * d / wavelength))


def source_angles(source):
    """(polar, azimuth) of a source direction seen from the array origin."""
    sx, sy, sz = float(source[0]), float(source[1]), float(source[2])
    d = math.sqrt(sx * sx + sy * sy + sz * sz)
    return math.acos(sz / d), math.atan2(sy, sx)


def far_field_response(geometry, theta, phi):
    """Planar-wavefront response of one subarray; entry n carries phase
    -(2 pi / lambda) offset_n . (sin(theta)cos(phi), sin(theta)sin(phi))."""
    u = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi)])
    offs = element_offsets(geometry)
    return np.exp(-1j * (2.0 * math.pi / geometry.wavelength) * (offs @ u))


class ChannelContext:
    """Per-scenario cache: path geometry and planar responses, reused by
    channel synthesis and the placement subproblems."""

    def __init__(self, scenario, geometry):
        self.scenario = scenario
        self.geometry = geometry
        self.wavenumber = 2.0 * math.pi / geometry.wavelength
        self.offsets = element_offsets(geometry)                    # (N, 2)
        dists = np.linalg.norm(scenario.sources, axis=2)            # (K, P)
        unit = scenario.sources / dists[:, :, None]                 # (K, P, 3)
        phase = np.einsum("nd,kpd->kpn", self.offsets, unit[:, :, :2])
        # elements displaced toward the source sit closer to it, so they
        # lead in phase; the ramp then cancels the first-order term of the
        # per-element spherical expansion
        steering = np.exp(1j * self.wavenumber * phase)             # (K, P, N)
        # planar response pre-weighted by the path gain
        self.weighted = scenario.gains[:, :, None] * steering

    # -- distances and reference-point phases ------------------------------

    def _ref_dists(self, positions):
        positions = np.asarray(positions, dtype=float)
        diff = positions[None, None, :, :] - self.scenario.sources[:, :, None, :2]
        z = self.scenario.sources[:, :, None, 2]
        return np.sqrt(np.sum(diff * diff, axis=3) + z * z)         # (K, P, M)

    def reference_phases(self, positions):
        return np.exp(-1j * self.wavenumber * self._ref_dists(positions))

    # -- channel synthesis -------------------------------------------------

    def subarray_gains(self, positions):
        """(K, M, N) per-subarray responses; block m of user k's channel."""
        b = self.reference_phases(positions)
        return np.einsum("kpm,kpn->kmn", b, self.weighted)

    def hybrid(self, positions):
        """(K, M*N) channel rows, subarray-major element order."""
        g = self.subarray_gains(positions)
        K = self.scenario.num_users
        return g.reshape(K, -1)

    def exact(self, positions):
        """Per-element spherical distances throughout; diagnostic reference."""
        positions = np.asarray(positions, dtype=float)
        el = positions[:, None, :] + self.offsets[None, :, :]            # (M, N, 2)
        diff = el[None, None] - self.scenario.sources[:, :, None, None, :2]
        z = self.scenario.sources[:, :, None, None, 2]
        d = np.sqrt(np.sum(diff * diff, axis=4) + z * z)                 # (K, P, M, N)
        h = np.einsum("kp,kpmn->kmn", self.scenario.gains,
                      np.exp(-1j * self.wavenumber * d))
        return h.reshape(self.scenario.num_users, -1)

    # -- single-subarray views for the placement solver --------------------

    def gains_at(self, indices, point):
        """(len(indices), N) responses of one subarray at reference `point`
        for the selected users."""
        src = self.scenario.sources[indices]                             # (k, P, 3)
        diff = src[:, :, :2] - np.asarray(point, dtype=float)[None, None, :]
        d = np.sqrt(np.sum(diff * diff, axis=2) + src[:, :, 2] ** 2)     # (k, P)
        b = np.exp(-1j * self.wavenumber * d)
        return np.einsum("kp,kpn->kn", b, self.weighted[indices])

    def gains_on_grid(self, points):
        """(G, K, N) responses of one subarray swept over candidate points."""
        points = np.asarray(points, dtype=float)
        diff = points[None, None, :, :] - self.scenario.sources[:, :, None, :2]
        z = self.scenario.sources[:, :, None, 2]
        d = np.sqrt(np.sum(diff * diff, axis=3) + z * z)                 # (K, P, G)
        b = np.exp(-1j * self.wavenumber * d)
        return np.einsum("kpg,kpn->gkn", b, self.weighted)

    def gain_jacobian(self, point):
        """(K, N, 2) derivative of each user's subarray response with
        respect to the reference coordinates (x, y) at `point`."""
        src = self.scenario.sources
        diff2 = np.asarray(point, dtype=float)[None, None, :] - src[:, :, :2]
        d = np.sqrt(np.sum(diff2 * diff2, axis=2) + src[:, :, 2] ** 2)   # (K, P)
        unit2 = diff2 / d[:, :, None]                                    # (K, P, 2)
        b = np.exp(-1j * self.wavenumber * d)
        return (-1j * self.wavenumber) * np.einsum(
            "kp,kpn,kpd->knd", b, self.weighted, unit2)


def hybrid_channel(scenario, geometry, positions):
    """(K, M*N) two-scale channel matrix at the given reference points."""
    return ChannelContext(scenario, geometry).hybrid(positions)


def exact_channel(scenario, geometry, positions):
    """(K, M*N) per-element spherical-wave channel matrix."""
    return ChannelContext(scenario, geometry).exact(positions)


def element_phase_error(geometry, position, source):
    """Largest wrapped per-element phase gap between the two-scale and exact
    responses of one subarray for a single unit-gain source."""
    k0 = 2.0 * math.pi / geometry.wavelength
    offs = element_offsets(geometry)
    position = np.asarray(position, dtype=float)
    source = np.asarray(source, dtype=float)

    d_ref = math.sqrt((source[0] - position[0]) ** 2
                      + (source[1] - position[1]) ** 2 + source[2] ** 2)
    u = source / np.linalg.norm(source)
    hybrid_ph = -k0 * (d_ref - offs @ u[:2])

    el = position[None, :] + offs
    diff = source[None, :2] - el
    d_el = np.sqrt(np.sum(diff * diff, axis=1) + source[2] ** 2)
    exact_ph = -k0 * d_el

    gap = np.angle(np.exp(1j * (exact_ph - hybrid_ph)))
    return float(np.max(np.abs(gap)))
