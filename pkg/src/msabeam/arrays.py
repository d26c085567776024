"""Array geometry: movable subarrays, placement regions, reference layouts.

Positions are (M, 2) float arrays of subarray reference points on the z = 0
aperture plane. Element n of subarray m sits at position[m] + offset[n].
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RegionBox:
    """Axis-aligned placement region for one subarray reference point.

    Zero-width sides are allowed and pin the coordinate (fixed layouts reuse
    the same machinery with point regions).
    """

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo <= self.x_hi and self.y_lo <= self.y_hi):
            raise ValueError("region bounds out of order")

    @property
    def center(self):
        return np.array([0.5 * (self.x_lo + self.x_hi), 0.5 * (self.y_lo + self.y_hi)])

    @property
    def side_x(self):
        return self.x_hi - self.x_lo

    @property
    def side_y(self):
        return self.y_hi - self.y_lo

    def contains(self, point, tol=0.0):
        x, y = float(point[0]), float(point[1])
        return (self.x_lo - tol <= x <= self.x_hi + tol
                and self.y_lo - tol <= y <= self.y_hi + tol)

    def clamp(self, point):
        """Per-coordinate projection of a candidate point onto the box."""
        return np.array([
            min(max(float(point[0]), self.x_lo), self.x_hi),
            min(max(float(point[1]), self.y_lo), self.y_hi),
        ])

    def grid(self, step):
        """Lattice anchored at the lower corner, inclusive; (G, 2) points."""
        if step <= 0:
            raise ValueError("grid step must be positive")
        nx = int(math.floor(self.side_x / step + 1e-9)) + 1
        ny = int(math.floor(self.side_y / step + 1e-9)) + 1
        xs = self.x_lo + step * np.arange(nx)
        ys = self.y_lo + step * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def grid_size(self, step):
        nx = int(math.floor(self.side_x / step + 1e-9)) + 1
        ny = int(math.floor(self.side_y / step + 1e-9)) + 1
        return nx * ny


def _isqrt_exact(n, what):
    root = math.isqrt(n)
    if root * root != n:
        raise ValueError(f"{what} must be a perfect square, got {n}")
    return root


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmit array: M square subarrays of N antennas inside a square aperture.

    The aperture spans [-A/2, A/2]^2; regions[m] bounds subarray m's reference
    point (lower-left element) so the whole footprint stays in its frame.
    """

    num_subarrays: int
    antennas_per_subarray: int
    wavelength: float
    aperture: float
    intra_spacing: float
    regions: tuple

    def __post_init__(self):
        if self.num_subarrays < 1:
            raise ValueError("need at least one subarray")
        _isqrt_exact(self.antennas_per_subarray, "antennas per subarray")
        if self.wavelength <= 0 or self.aperture <= 0 or self.intra_spacing <= 0:
            raise ValueError("wavelength, aperture and spacing must be positive")
        if len(self.regions) != self.num_subarrays:
            raise ValueError("one region per subarray required")
        half = 0.5 * self.aperture + 1e-12
        ext = self.footprint
        for box in self.regions:
            if (box.x_lo < -half or box.y_lo < -half
                    or box.x_hi + ext > half or box.y_hi + ext > half):
                raise ValueError("region (with subarray footprint) exceeds the aperture")

    @property
    def side(self):
        return math.isqrt(self.antennas_per_subarray)

    @property
    def footprint(self):
        """Edge length of one subarray, reference corner to far element."""
        return (self.side - 1) * self.intra_spacing

    @property
    def total_antennas(self):
        return self.num_subarrays * self.antennas_per_subarray


def element_offsets(geometry):
    """(N, 2) offsets from the reference element, row-major with x fastest."""
    side = geometry.side
    s = geometry.intra_spacing
    xx, yy = np.meshgrid(np.arange(side) * s, np.arange(side) * s)
    return np.column_stack([xx.ravel(), yy.ravel()])


def tiled_regions(num_subarrays, antennas_per_subarray, aperture, intra_spacing):
    """Split the aperture into a sqrt(M) x sqrt(M) grid of frames.

    Each box is its frame shrunk on the upper x/y edges by the subarray
    footprint, so any reference point in the box keeps all elements inside
    the frame. Frames exactly as large as the footprint give point boxes.
    """
    g = _isqrt_exact(num_subarrays, "subarray count for a tiled layout")
    side = _isqrt_exact(antennas_per_subarray, "antennas per subarray")
    cell = aperture / g
    ext = (side - 1) * intra_spacing
    if ext > cell + 1e-12:
        raise ValueError("subarray footprint does not fit the per-subarray frame")
    boxes = []
    for p in range(g):
        for q in range(g):
            x_lo = -0.5 * aperture + q * cell
            y_lo = -0.5 * aperture + p * cell
            boxes.append(RegionBox(x_lo, x_lo + cell - ext, y_lo, y_lo + cell - ext))
    return tuple(boxes)


def movable_geometry(num_subarrays, antennas_per_subarray, wavelength, aperture,
                     intra_spacing=None):
    """Geometry with the standard tiled placement regions."""
    if intra_spacing is None:
        intra_spacing = 0.5 * wavelength
    regions = tiled_regions(num_subarrays, antennas_per_subarray, aperture, intra_spacing)
    return ArrayGeometry(num_subarrays, antennas_per_subarray, wavelength,
                         aperture, intra_spacing, regions)


def point_regions(coords):
    """Degenerate boxes pinning each reference point (fixed layouts)."""
    coords = np.asarray(coords, dtype=float)
    return tuple(RegionBox(x, x, y, y) for x, y in coords)


def fixed_geometry(coords, antennas_per_subarray, wavelength, aperture,
                   intra_spacing=None):
    """Geometry whose subarrays are pinned at the given reference points."""
    coords = np.asarray(coords, dtype=float)
    if intra_spacing is None:
        intra_spacing = 0.5 * wavelength
    return ArrayGeometry(len(coords), antennas_per_subarray, wavelength,
                         aperture, intra_spacing, point_regions(coords))


def region_centers(geometry):
    return np.array([box.center for box in geometry.regions])


def sparse_layout(num_subarrays, antennas_per_subarray, aperture, intra_spacing):
    """Reference points of the uniform sparse layout: sqrt(M) x sqrt(M) grid
    at aperture/8 pitch, subarray centers centered on the origin."""
    g = _isqrt_exact(num_subarrays, "subarray count for the sparse layout")
    side = _isqrt_exact(antennas_per_subarray, "antennas per subarray")
    pitch = aperture / 8.0
    ext = (side - 1) * intra_spacing
    idx = np.arange(g) - 0.5 * (g - 1)
    coords = [(q * pitch - 0.5 * ext, p * pitch - 0.5 * ext)
              for p in idx for q in idx]
    return np.array(coords)


def dense_layout(num_subarrays, antennas_per_subarray, intra_spacing):
    """Reference points partitioning one contiguous half-wavelength UPA into
    M adjacent subarrays (blocks of a sqrt(MN) x sqrt(MN) element grid)."""
    g = _isqrt_exact(num_subarrays, "subarray count for the dense layout")
    side = _isqrt_exact(antennas_per_subarray, "antennas per subarray")
    total_side = g * side
    half = 0.5 * (total_side - 1)
    coords = [((q * side - half) * intra_spacing, (p * side - half) * intra_spacing)
              for p in range(g) for q in range(g)]
    return np.array(coords)


def validate_positions(geometry, positions, tol=1e-9):
    """Check every reference point sits in its region (footprint containment
    is folded into the region construction). Raises on violation."""
    positions = np.asarray(positions, dtype=float)
    if positions.shape != (geometry.num_subarrays, 2):
        raise ValueError(f"positions must be ({geometry.num_subarrays}, 2), "
                         f"got {positions.shape}")
    for m, box in enumerate(geometry.regions):
        if not box.contains(positions[m], tol=tol):
            raise ValueError(f"subarray {m} reference {positions[m]} outside its region")
    return positions
