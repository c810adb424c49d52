"""Simulation toolkit for simultaneously transmitting and reflecting surfaces (STAR-RIS)."""

from .analysis import (
    LinkBudget,
    OutageCurve,
    OutagePoint,
    OutageScenario,
    asymptotic_outage,
    asymptotic_outage_conventional,
    asymptotic_outage_star,
    estimate_diversity_order,
    monte_carlo_curve,
    monte_carlo_outage,
    outage_oracle_numeric,
    snr,
)
from .beamform import SteeringSpec, beam_peak, cophase_phases
from .channel import (
    LinkGeometry,
    PathLossModel,
    PlaneSpec,
    RiceanParams,
    cascaded_channel,
    coverage_map,
    far_field_gain,
    field_boundary,
    incident_field,
    leaning_factor,
    near_field_channel,
    near_field_channels,
    sample_ricean,
)
from .kernels import BACKEND
from .surface import (
    Aperture,
    ElementCoefficients,
    Mode,
    SurfaceConfig,
    SurfaceImpedance,
    SurfaceKind,
    coefficients_from_impedance,
    conventional_surface,
    make_element,
    transfer_diagonal,
    uniform_star_surface,
)

__version__ = "0.1.0"
