"""Cophase beam steering and beam-peak extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import PlaneSpec
from .errors import EmptyRegion
from .surface import Aperture, Mode, normalize_phase


@dataclass(frozen=True)
class SteeringSpec:
    """Target directions for both half-spaces.

    Angles are radians from the surface normal on each side (+z for T, -z
    for R), inside the plane at ``azimuth`` from the x axis.
    """

    target_angle_t: float
    target_angle_r: float
    tx_position: tuple[float, float, float]
    azimuth: float = 0.0

    def __post_init__(self):
        for a in (self.target_angle_t, self.target_angle_r):
            if not (0.0 <= a < math.pi / 2):
                raise ValueError(f"target angle {a} rad outside [0, pi/2)")
        object.__setattr__(self, "tx_position", tuple(float(v) for v in self.tx_position))

    @classmethod
    def from_degrees(cls, angle_t: float, angle_r: float, tx_position, azimuth: float = 0.0) -> "SteeringSpec":
        return cls(math.radians(angle_t), math.radians(angle_r), tx_position, math.radians(azimuth))

    def target_direction(self, mode: Mode | str) -> np.ndarray:
        mode = Mode.parse(mode)
        theta = self.target_angle_t if mode is Mode.T else self.target_angle_r
        sign = 1.0 if mode is Mode.T else -1.0
        s = math.sin(theta)
        return np.array([s * math.cos(self.azimuth), s * math.sin(self.azimuth), sign * math.cos(theta)])


def cophase_phases(aperture: Aperture, spec: SteeringSpec, mode: Mode | str, incident: str = "spherical") -> np.ndarray:
    """Phases that align every element's total path phase toward the target.

    In the target direction the receiver distance to element ``m`` is
    ``d - p_m . u``, so the element phase cancels the incident path phase
    and adds back ``k p_m . u``.
    """
    pos = aperture.element_positions
    k = aperture.wavenumber
    tx = np.asarray(spec.tx_position, dtype=float)
    if incident == "spherical":
        path = np.linalg.norm(pos - tx, axis=1)
    elif incident == "plane":
        d0 = np.linalg.norm(tx)
        path = d0 + pos @ (-tx / d0)
    else:
        raise ValueError(f"unknown incident field kind {incident!r}")
    u = spec.target_direction(mode)
    return normalize_phase(-k * (path - pos @ u))


def grid_angles(plane: PlaneSpec) -> tuple[np.ndarray, np.ndarray]:
    """Signed angle from the normal and radius of every grid cell, shaped like the grid."""
    uu, vv = np.meshgrid(plane.u, plane.v)
    return np.arctan2(uu, np.abs(vv)), np.hypot(uu, vv)


def beam_peak(grid, plane: PlaneSpec, min_radius: float, bin_width: float = math.radians(0.5)) -> tuple[float, float]:
    """Angle and gain of the strongest ray beyond ``min_radius``.

    Cells are binned by angle from the surface centre (bins aligned to
    -90 deg); each bin is scored by its largest gain. Ties go to the
    smaller angle.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.shape != (plane.nv, plane.nu):
        raise ValueError(f"grid shape {grid.shape} does not match plane ({plane.nv}, {plane.nu})")
    angle, radius = grid_angles(plane)
    mask = radius > min_radius
    if not mask.any():
        raise EmptyRegion(f"no grid cell beyond radius {min_radius:g}")
    n_bins = int(math.ceil(math.pi / bin_width))
    idx = np.clip(((angle[mask] + math.pi / 2) // bin_width).astype(int), 0, n_bins - 1)
    best = np.full(n_bins, -np.inf)
    np.maximum.at(best, idx, grid[mask])
    i = int(np.argmax(best))
    return -math.pi / 2 + (i + 0.5) * bin_width, float(best[i])
