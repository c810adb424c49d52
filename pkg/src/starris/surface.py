"""Element and surface models for simultaneously transmitting and reflecting surfaces.

Each element splits an incident signal into a transmitted part ``T_m s_m`` and a
reflected part ``R_m s_m``.  Coefficients are stored as power fractions and
phases, ``T_m = sqrt(beta_t) exp(j phi_t)`` and ``R_m = sqrt(beta_r) exp(j phi_r)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateImpedance, LengthMismatch, PartitionMismatch, PassivityViolation

TWO_PI = 2.0 * math.pi
ETA0 = 376.73  # free-space impedance, ohms
PASSIVITY_TOL = 1e-12


class Mode(str, enum.Enum):
    """Which half-space an output signal goes to."""

    T = "T"  # transmitted, opposite side to the Tx
    R = "R"  # reflected, same side as the Tx

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        return value if isinstance(value, cls) else cls(str(value).upper())


class SurfaceKind(str, enum.Enum):
    STAR = "star"
    CONVENTIONAL = "conventional"


def normalize_phase(phi):
    """Wrap phases into [0, 2pi)."""
    out = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    # np.mod can return exactly 2pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SurfaceImpedance:
    """Surface-averaged electric admittance ``Y`` and magnetic impedance ``Z``."""

    electric_admittance: complex
    magnetic_impedance: complex
    free_space_impedance: float = ETA0

    def __post_init__(self):
        if not self.free_space_impedance > 0:
            raise ValueError("free_space_impedance must be positive")


def coefficients_from_impedance(imp: SurfaceImpedance, eps: float = 1e-12) -> tuple[complex, complex]:
    """Map surface impedances to the (T, R) coefficient pair.

    The relations are used exactly as written in the source model::

        R = -2 (eta0**2 Y - Z) / ((2 + eta0**2 Y) (2 eta0 + Z))
        T = (2 - eta0 Y) / (2 + eta0 Y) - R

    No passivity guarantee is made on the result.
    """
    y = complex(imp.electric_admittance)
    z = complex(imp.magnetic_impedance)
    eta = float(imp.free_space_impedance)

    den_t = 2.0 + eta * y
    den_r = (2.0 + eta**2 * y) * (2.0 * eta + z)
    if abs(den_t) < eps or abs(den_r) < eps:
        raise DegenerateImpedance(f"denominator below {eps:g} for Y={y}, Z={z}")

    r = -2.0 * (eta**2 * y - z) / den_r
    t = (2.0 - eta * y) / den_t - r
    return t, r


@dataclass(frozen=True)
class ElementCoefficients:
    t_power: float
    t_phase: float
    r_power: float
    r_phase: float

    @property
    def T(self) -> complex:
        return math.sqrt(self.t_power) * complex(math.cos(self.t_phase), math.sin(self.t_phase))

    @property
    def R(self) -> complex:
        return math.sqrt(self.r_power) * complex(math.cos(self.r_phase), math.sin(self.r_phase))


def _check_powers(beta_t: float, beta_r: float, lossless_override: bool) -> None:
    for name, b in (("beta_t", beta_t), ("beta_r", beta_r)):
        if not (0.0 <= b <= 1.0):
            raise ValueError(f"{name}={b} outside [0, 1]")
    if not lossless_override and beta_t + beta_r > 1.0 + PASSIVITY_TOL:
        raise PassivityViolation(f"beta_t + beta_r = {beta_t + beta_r} > 1")


def make_element(
    t_power: float,
    t_phase: float,
    r_power: float,
    r_phase: float,
    *,
    lossless_override: bool = False,
) -> ElementCoefficients:
    """Build a validated element. Phases are wrapped into [0, 2pi)."""
    t_power, r_power = float(t_power), float(r_power)
    _check_powers(t_power, r_power, lossless_override)
    return ElementCoefficients(t_power, normalize_phase(t_phase), r_power, normalize_phase(r_phase))


@dataclass(frozen=True)
class Aperture:
    """Rectangular grid of ``rows x cols`` elements in the z=0 plane.

    Positions are row-major and centred on the origin; the column index runs
    along x and the row index along y.
    """

    rows: int
    cols: int
    spacing: float
    wavelength: float
    element_area: float | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("aperture needs at least one row and one column")
        if not (self.spacing > 0 and self.wavelength > 0):
            raise ValueError("spacing and wavelength must be positive")
        if self.element_area is None:
            object.__setattr__(self, "element_area", self.spacing**2)

    @classmethod
    def square(cls, n: int, wavelength: float, spacing_in_wavelengths: float = 0.5) -> "Aperture":
        return cls(n, n, spacing_in_wavelengths * wavelength, wavelength)

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @cached_property
    def element_positions(self) -> np.ndarray:
        xs = (np.arange(self.cols) - (self.cols - 1) / 2.0) * self.spacing
        ys = (np.arange(self.rows) - (self.rows - 1) / 2.0) * self.spacing
        gx, gy = np.meshgrid(xs, ys)
        pos = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
        pos.setflags(write=False)
        return pos

    @property
    def largest_dimension(self) -> float:
        # single element: fall back to its physical diagonal
        if self.n_elements == 1:
            return math.sqrt(2.0) * self.spacing
        return math.hypot((self.cols - 1) * self.spacing, (self.rows - 1) * self.spacing)

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurfaceConfig:
    """Per-element coefficients for a whole surface.

    Arrays are read-only; build instances with :func:`uniform_star_surface`
    or :func:`conventional_surface`.
    """

    aperture: Aperture
    t_power: np.ndarray
    t_phase: np.ndarray
    r_power: np.ndarray
    r_phase: np.ndarray
    kind: SurfaceKind = SurfaceKind.STAR
    m_t: int | None = None
    m_r: int | None = None
    lossless_override: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_elements(self) -> int:
        return self.aperture.n_elements

    @property
    def elements(self) -> tuple[ElementCoefficients, ...]:
        return tuple(
            ElementCoefficients(float(a), float(b), float(c), float(d))
            for a, b, c, d in zip(self.t_power, self.t_phase, self.r_power, self.r_phase)
        )

    def with_phases(self, t_phases=None, r_phases=None) -> "SurfaceConfig":
        """Copy of this config with new phase vectors (amplitudes kept)."""
        t = self.t_phase if t_phases is None else _phase_vector(t_phases, self.n_elements)
        r = self.r_phase if r_phases is None else _phase_vector(r_phases, self.n_elements)
        return SurfaceConfig(
            self.aperture, self.t_power, _frozen(t), self.r_power, _frozen(r),
            self.kind, self.m_t, self.m_r, self.lossless_override,
        )


def _phase_vector(phases, m: int) -> np.ndarray:
    arr = np.asarray(phases, dtype=float)
    if arr.shape != (m,):
        raise LengthMismatch(f"phase vector must have length {m}, got shape {arr.shape}")
    return normalize_phase(arr)


def uniform_star_surface(
    aperture: Aperture,
    beta_t: float,
    beta_r: float,
    t_phases,
    r_phases,
    *,
    lossless_override: bool = False,
) -> SurfaceConfig:
    """STAR surface where every element shares the same power split."""
    _check_powers(float(beta_t), float(beta_r), lossless_override)
    m = aperture.n_elements
    t = _phase_vector(t_phases, m)
    r = _phase_vector(r_phases, m)
    return SurfaceConfig(
        aperture,
        _frozen(np.full(m, float(beta_t))), _frozen(t),
        _frozen(np.full(m, float(beta_r))), _frozen(r),
        SurfaceKind.STAR, lossless_override=lossless_override,
    )


def conventional_surface(aperture: Aperture, m_t: int, m_r: int, t_phases, r_phases) -> SurfaceConfig:
    """Composite of a reflect-only block (first ``m_r``) and a transmit-only block (last ``m_t``)."""
    m = aperture.n_elements
    if m_t < 0 or m_r < 0 or m_t + m_r != m:
        raise PartitionMismatch(f"M_t + M_r = {m_t} + {m_r} != M = {m}")
    t = _phase_vector(t_phases, m)
    r = _phase_vector(r_phases, m)
    t_power = np.zeros(m)
    t_power[m_r:] = 1.0
    r_power = 1.0 - t_power
    # phases of switched-off elements carry no meaning; zero them
    t = np.where(t_power > 0, t, 0.0)
    r = np.where(r_power > 0, r, 0.0)
    return SurfaceConfig(
        aperture, _frozen(t_power), _frozen(t), _frozen(r_power), _frozen(r),
        SurfaceKind.CONVENTIONAL, m_t=m_t, m_r=m_r,
    )


def transfer_diagonal(config: SurfaceConfig, mode: Mode | str) -> np.ndarray:
    """Diagonal of Phi^T (mode T) or Phi^R (mode R) as a complex vector."""
    mode = Mode.parse(mode)
    if mode is Mode.T:
        power, phase = config.t_power, config.t_phase
    else:
        power, phase = config.r_power, config.r_phase
    out = np.sqrt(power) * np.exp(1j * phase)
    # keep switched-off entries exactly zero
    out[power == 0] = 0.0
    return out
