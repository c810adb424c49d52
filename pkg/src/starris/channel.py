"""Far-field and near-field channel models, Ricean fading and the field boundary."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import LengthMismatch, NearFieldRegionWarning, NonPositiveDistance, TooCloseToSurface
from .surface import Aperture, Mode, SurfaceConfig, transfer_diagonal


@dataclass(frozen=True)
class RiceanParams:
    """Ricean fading with shape factor ``K`` and mean-square magnitude ``omega``."""

    K: float
    omega: float

    def __post_init__(self):
        if self.K < 0 or not self.omega > 0:
            raise ValueError(f"need K >= 0 and omega > 0, got K={self.K}, omega={self.omega}")

    @property
    def los_amplitude(self) -> float:
        return math.sqrt(self.K * self.omega / (self.K + 1.0))

    @property
    def diffuse_sigma(self) -> float:
        """Per-dimension std of the diffuse component."""
        return math.sqrt(self.omega / (2.0 * (self.K + 1.0)))

    def magnitude_pdf(self, x, scale: float = 1.0):
        """Exact PDF of ``scale * |h|`` (Bessel form, computed with ``i0e`` for stability)."""
        from scipy.special import i0e

        y = np.asarray(x, dtype=float) / scale
        s2 = self.diffuse_sigma**2
        nu = self.los_amplitude
        with np.errstate(divide="ignore", invalid="ignore"):
            pdf = y / s2 * np.exp(-((y - nu) ** 2) / (2 * s2)) * i0e(y * nu / s2)
        return np.where(y > 0, pdf, 0.0) / scale

    def magnitude_cdf(self, x, scale: float = 1.0):
        """CDF of ``scale * |h|`` through the noncentral chi-square (Marcum-Q) law."""
        from scipy.stats import ncx2

        y = np.asarray(x, dtype=float) / scale
        s2 = self.diffuse_sigma**2
        if self.K == 0:
            return -np.expm1(-(y**2) / (2 * s2))
        return ncx2.cdf(y**2 / s2, 2, self.los_amplitude**2 / s2)

    def magnitude_moments(self, scale: float = 1.0) -> tuple[float, float]:
        """Mean and variance of ``scale * |h|``."""
        from scipy.stats import rice

        s = self.diffuse_sigma
        dist = rice(self.los_amplitude / s, scale=s)
        return scale * float(dist.mean()), scale**2 * float(dist.var())


def sample_ricean(params: RiceanParams, rng: np.random.Generator, size=None):
    """Draw complex Ricean samples: fixed LoS term plus circular Gaussian diffuse term."""
    s = params.diffuse_sigma
    z = rng.standard_normal(size=(2,) if size is None else (2, *np.atleast_1d(size)))
    out = params.los_amplitude + s * (z[0] + 1j * z[1])
    return complex(out) if size is None else out


@dataclass(frozen=True)
class LinkGeometry:
    """Tx and Rx positions relative to a surface centred at the origin.

    The Tx sits on the z<0 side; receivers on that side are served by
    reflection (R), receivers with z>0 by transmission (T).
    """

    tx_position: tuple[float, float, float]
    rx_position: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "tx_position", tuple(float(v) for v in self.tx_position))
        object.__setattr__(self, "rx_position", tuple(float(v) for v in self.rx_position))
        if not self.tx_position[2] < 0:
            raise ValueError("Tx must lie strictly on the z<0 (reflection) side")
        if self.rx_position[2] == 0:
            raise ValueError("Rx lies in the surface plane; side is undefined")
        if self.d0 <= 0 or self.d_rx <= 0:
            raise NonPositiveDistance("Tx and Rx must be away from the surface centre")

    @property
    def d0(self) -> float:
        return math.dist(self.tx_position, (0.0, 0.0, 0.0))

    @property
    def d_rx(self) -> float:
        return math.dist(self.rx_position, (0.0, 0.0, 0.0))

    @property
    def side(self) -> Mode:
        return Mode.R if self.rx_position[2] < 0 else Mode.T


@dataclass(frozen=True)
class PathLossModel:
    """Power-law path loss applied to channel amplitudes; ``c0`` is the gain at 1 m."""

    alpha_0: float = 2.0
    alpha_t: float = 2.0
    alpha_r: float = 2.0
    c0: float = 1.0

    def __post_init__(self):
        if min(self.alpha_0, self.alpha_t, self.alpha_r) < 0:
            raise ValueError("path-loss exponents must be non-negative")

    def exponent(self, mode: Mode | str) -> float:
        return self.alpha_t if Mode.parse(mode) is Mode.T else self.alpha_r


def cascaded_channel(r_vec, phi_diag, h_vec) -> complex:
    """``r^H diag(phi) h``."""
    r = np.asarray(r_vec, dtype=complex)
    phi = np.asarray(phi_diag, dtype=complex)
    h = np.asarray(h_vec, dtype=complex)
    if not (r.shape == phi.shape == h.shape) or r.ndim != 1:
        raise LengthMismatch(f"shapes differ: r{r.shape}, phi{phi.shape}, h{h.shape}")
    return complex(np.vdot(r, phi * h))


def field_boundary(aperture: Aperture) -> float:
    """Near/far-field boundary ``2 L_a**2 / wavelength``."""
    return 2.0 * aperture.largest_dimension**2 / aperture.wavelength


def far_field_gain(
    geometry: LinkGeometry,
    path_loss: PathLossModel,
    smallscale_r,
    smallscale_h,
    config: SurfaceConfig,
    mode: Mode | str | None = None,
) -> float:
    """Far-field channel gain ``c0 |r~^H Phi h~| / (d_rx**a_chi * d0**a_0)``.

    Receivers inside the field boundary are not rejected; a
    :class:`NearFieldRegionWarning` is emitted instead.
    """
    mode = geometry.side if mode is None else Mode.parse(mode)
    d0, d = geometry.d0, geometry.d_rx
    if d0 <= 0 or d <= 0:
        raise NonPositiveDistance(f"d0={d0}, d={d}")
    if d < field_boundary(config.aperture):
        warnings.warn(
            f"far-field gain evaluated at d={d:.4g} m inside boundary "
            f"{field_boundary(config.aperture):.4g} m",
            NearFieldRegionWarning,
            stacklevel=2,
        )
    g = cascaded_channel(smallscale_r, transfer_diagonal(config, mode), smallscale_h)
    return path_loss.c0 * abs(g) / (d ** path_loss.exponent(mode) * d0**path_loss.alpha_0)


def los_smallscale(aperture: Aperture, tx_position, rx_position) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic unit-modulus LoS vectors ``(r~, h~)`` for the far-field model.

    ``h~`` carries the exact Tx-to-element phase; ``r~`` uses the planar
    wavefront toward the receiver direction, conjugated so that ``r~^H``
    contributes ``exp(+j k (d - p.u))`` as in the near-field sum.
    """
    pos = aperture.element_positions
    k = aperture.wavenumber
    tx = np.asarray(tx_position, dtype=float)
    rx = np.asarray(rx_position, dtype=float)
    d = np.linalg.norm(rx)
    u = rx / d
    h = np.exp(1j * k * np.linalg.norm(pos - tx, axis=1))
    r = np.exp(-1j * k * (d - pos @ u))
    return r, h


def leaning_factor(theta):
    """Obliquity factor ``(1 + cos theta) / 2``."""
    out = 0.5 * (1.0 + np.cos(theta))
    return float(out) if np.ndim(out) == 0 else out


def incident_field(aperture: Aperture, tx_position, kind: str = "spherical") -> np.ndarray:
    """Incident field ``h_m`` at each element from a LoS Tx.

    ``spherical``: ``exp(j k d_m) / d_m`` with the exact Tx-element distance.
    ``plane``: unit-amplitude plane wave travelling from the Tx toward the
    surface centre, normalised to ``1/d0``.
    """
    pos = aperture.element_positions
    k = aperture.wavenumber
    tx = np.asarray(tx_position, dtype=float)
    if kind == "spherical":
        d = np.linalg.norm(pos - tx, axis=1)
        return np.exp(1j * k * d) / d
    if kind == "plane":
        d0 = np.linalg.norm(tx)
        khat = -tx / d0
        return np.exp(1j * k * (d0 + pos @ khat)) / d0
    raise ValueError(f"unknown incident field kind {kind!r}")


def _normal_z(mode: Mode) -> float:
    return 1.0 if mode is Mode.T else -1.0


def default_min_distance(aperture: Aperture) -> float:
    return aperture.spacing / 10.0


def near_field_channels(
    config: SurfaceConfig,
    incident_h,
    points,
    mode: Mode | str,
    include_leaning: bool = True,
    min_distance: float | None = None,
) -> np.ndarray:
    """Vectorised :func:`near_field_channel` over an ``(N, 3)`` array of points."""
    mode = Mode.parse(mode)
    ap = config.aperture
    h = np.asarray(incident_h, dtype=complex)
    if h.shape != (ap.n_elements,):
        raise LengthMismatch(f"incident field must have length {ap.n_elements}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if min_distance is None:
        min_distance = default_min_distance(ap)
    weights = transfer_diagonal(config, mode) * h
    sums, dmin = kernels.near_field_sum(
        pts, ap.element_positions, weights, ap.wavelength, _normal_z(mode), bool(include_leaning)
    )
    if dmin < min_distance:
        raise TooCloseToSurface(f"point within {dmin:.3g} m of an element (min {min_distance:.3g} m)")
    return ap.element_area / (1j * ap.wavelength) * sums


def near_field_channel(
    config: SurfaceConfig,
    incident_h,
    rx_point,
    mode: Mode | str,
    include_leaning: bool = True,
    min_distance: float | None = None,
) -> complex:
    """Element-wise Fresnel-Kirchhoff sum at one receiver point.

    ``g = A_e/(j lambda) sum_m Phi_m h_m F(theta_m) exp(j 2 pi d_m / lambda) / d_m``
    where ``theta_m`` is measured from the surface normal on the output side
    (+z for T, -z for R). With ``include_leaning=False`` the obliquity is 1.
    """
    g = near_field_channels(config, incident_h, np.reshape(rx_point, (1, 3)), mode, include_leaning, min_distance)
    return complex(g[0])


@dataclass(frozen=True)
class PlaneSpec:
    """Observation grid in a plane through the surface normal.

    ``u`` runs along the in-surface axis (``x`` or ``y``), ``v`` along z.
    ``v`` values are signed, so a T-side grid has positive ``v``.
    """

    u_min: float
    u_max: float
    v_min: float
    v_max: float
    nu: int
    nv: int
    axis: str = "x"

    def __post_init__(self):
        if self.nu < 1 or self.nv < 1:
            raise ValueError("grid resolution must be positive")
        if self.axis not in ("x", "y"):
            raise ValueError("axis must be 'x' or 'y'")

    @property
    def u(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.nu)

    @property
    def v(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.nv)

    def row_points(self, i: int) -> np.ndarray:
        u = self.u
        pts = np.zeros((self.nu, 3))
        pts[:, 0 if self.axis == "x" else 1] = u
        pts[:, 2] = self.v[i]
        return pts

    @classmethod
    def for_side(cls, mode: Mode | str, extent: float, depth: float, n: int, axis: str = "x") -> "PlaneSpec":
        """Square-ish ``n x n`` grid covering ``|u| <= extent`` and ``0 < |v| <= depth``."""
        sign = 1.0 if Mode.parse(mode) is Mode.T else -1.0
        first = depth / n
        v0, v1 = sorted((sign * first, sign * depth))
        return cls(-extent, extent, v0, v1, n, n, axis)


def coverage_map(
    config: SurfaceConfig,
    incident_h,
    plane: PlaneSpec,
    mode: Mode | str,
    include_leaning: bool = True,
    min_distance: float | None = None,
    workers: int = 1,
) -> np.ndarray:
    """``|g|`` on every grid point; rows follow ``plane.v``, columns ``plane.u``.

    Rows are independent tasks, so the result does not depend on ``workers``.
    """

    def row(i):
        return np.abs(near_field_channels(config, incident_h, plane.row_points(i), mode, include_leaning, min_distance))

    if workers <= 1:
        rows = [row(i) for i in range(plane.nv)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(plane.nv)))
    return np.vstack(rows)
