"""Scenario documents: schema, bundled presets, lint checks and object builders.

Scenario files are YAML. Spacing and cut distances are given in wavelengths;
every other length is in meters. Angles are in degrees.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .analysis import LinkBudget, OutageScenario
from .beamform import SteeringSpec, cophase_phases
from .channel import PathLossModel, PlaneSpec, RiceanParams, field_boundary
from .errors import ScenarioError
from .surface import PASSIVITY_TOL, Aperture, Mode, SurfaceConfig, conventional_surface, uniform_star_surface


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ApertureSection(_Section):
    rows: int = Field(1, ge=1)
    cols: int = Field(1, ge=1)
    spacing_in_wavelengths: float = Field(0.5, gt=0)
    wavelength_m: float = Field(0.01, gt=0)


class SurfaceSection(_Section):
    kind: Literal["star", "conventional"] = "star"
    beta_t: float = Field(0.4, ge=0, le=1)
    beta_r: float = Field(0.6, ge=0, le=1)
    m_t: int | None = Field(None, ge=0)
    m_r: int | None = Field(None, ge=0)
    lossless_override: bool = False


class SteeringSection(_Section):
    angle_t_deg: float = Field(0.0, ge=0, lt=90)
    angle_r_deg: float = Field(0.0, ge=0, lt=90)
    azimuth_deg: float = 0.0
    tx_position: tuple[float, float, float] = (0.0, 0.0, -1.0)

    @model_validator(mode="after")
    def _tx_side(self):
        if not self.tx_position[2] < 0:
            raise ValueError("tx_position must have z < 0")
        return self


class PathLossSection(_Section):
    alpha_0: float = Field(2.0, ge=0)
    alpha_t: float = Field(2.0, ge=0)
    alpha_r: float = Field(2.0, ge=0)
    c0: float = Field(1.0, gt=0)


class FadingSection(_Section):
    k_s: float = Field(1.0, ge=0)
    omega_s: float = Field(1.0, gt=0)
    k_d: float = Field(1.0, ge=0)
    omega_d: float = Field(1.0, gt=0)


class BudgetSection(_Section):
    w_k: float = Field(1.0, gt=0)
    sigma0_sq: float = Field(1.0, gt=0)
    gamma_k: float = Field(1.0, gt=0)


class SweepSection(_Section):
    start_db: float = 0.0
    stop_db: float = 40.0
    num: int = Field(21, ge=2)

    @property
    def gamma_t_db(self) -> np.ndarray:
        return np.linspace(self.start_db, self.stop_db, self.num)


class GridSection(_Section):
    """Observation grid per side: ``|u| <= extent_m``, ``0 < |z| <= depth_m``, ``n x n`` cells."""

    extent_m: float = Field(gt=0)
    depth_m: float = Field(gt=0)
    n: int = Field(200, ge=2)
    axis: Literal["x", "y"] = "x"


class CutSection(_Section):
    """Straight line through the surface centre, sampled on both sides."""

    angle_deg: float = Field(60.0, ge=0, lt=90)
    d_min_wavelengths: float = Field(0.1, ge=0)
    d_max_wavelengths: float = Field(1000.0, gt=0)
    num: int = Field(200, ge=2)
    spacing: Literal["log", "linear"] = "log"


class RunSection(_Section):
    seed: int = Field(0, ge=0)
    trials: int = Field(10_000, ge=10_000)
    max_trials: int = Field(10_000_000, ge=10_000)
    gamma_t_sweep_db: SweepSection = SweepSection()
    grid: GridSection | None = None
    cut: CutSection | None = None
    include_leaning: bool = True
    incident: Literal["spherical", "plane"] = "spherical"
    beta_in_pdf: bool = True
    oracle_resolution: int = Field(4096, ge=4096)
    oracle: bool = True
    groups: tuple[Literal["T", "R"], ...] = ("T", "R")
    fit: Literal["asymptotic", "oracle", "mc"] = "asymptotic"
    tail_fraction: float = Field(0.4, gt=0, le=1)


class ScenarioDocument(_Section):
    name: str = ""
    description: str = ""
    aperture: ApertureSection = ApertureSection()
    surface: SurfaceSection = SurfaceSection()
    steering: SteeringSection = SteeringSection()
    pathloss: PathLossSection = PathLossSection()
    fading: FadingSection = FadingSection()
    budget: BudgetSection = BudgetSection()
    run: RunSection = RunSection()

    # -- derived objects ------------------------------------------------------

    def build_aperture(self) -> Aperture:
        a = self.aperture
        return Aperture(a.rows, a.cols, a.spacing_in_wavelengths * a.wavelength_m, a.wavelength_m)

    def build_steering(self) -> SteeringSpec:
        s = self.steering
        return SteeringSpec.from_degrees(s.angle_t_deg, s.angle_r_deg, s.tx_position, s.azimuth_deg)

    def build_surface(self, aperture: Aperture | None = None) -> SurfaceConfig:
        """Surface with cophase steering toward the configured targets."""
        ap = aperture or self.build_aperture()
        spec = self.build_steering()
        t = cophase_phases(ap, spec, Mode.T, self.run.incident)
        r = cophase_phases(ap, spec, Mode.R, self.run.incident)
        s = self.surface
        if s.kind == "conventional":
            m_t, m_r = self.partition()
            return conventional_surface(ap, m_t, m_r, t, r)
        return uniform_star_surface(ap, s.beta_t, s.beta_r, t, r, lossless_override=s.lossless_override)

    def partition(self) -> tuple[int, int]:
        m = self.aperture.rows * self.aperture.cols
        m_t, m_r = self.surface.m_t, self.surface.m_r
        if m_t is None and m_r is None:
            m_t = m // 2
        if m_t is None:
            m_t = m - m_r
        if m_r is None:
            m_r = m - m_t
        return m_t, m_r

    def build_pathloss(self) -> PathLossModel:
        p = self.pathloss
        return PathLossModel(p.alpha_0, p.alpha_t, p.alpha_r, p.c0)

    def outage_scenario(self, group: str) -> OutageScenario:
        f = self.fading
        surface_fading = RiceanParams(f.k_s, f.omega_s)
        direct_fading = RiceanParams(f.k_d, f.omega_d)
        budget = LinkBudget(self.budget.w_k, self.budget.sigma0_sq, self.budget.gamma_k)
        s = self.surface
        if s.kind == "conventional":
            m_t, m_r = self.partition()
            return OutageScenario.conventional(m_t, m_r, group, surface_fading, direct_fading, budget,
                                               beta_in_pdf=self.run.beta_in_pdf)
        return OutageScenario.star(self.aperture.rows * self.aperture.cols, s.beta_t, s.beta_r, group,
                                   surface_fading, direct_fading, budget,
                                   lossless_override=s.lossless_override, beta_in_pdf=self.run.beta_in_pdf)

    def plane(self, mode: Mode | str) -> PlaneSpec:
        g = self.run.grid
        if g is None:
            raise ScenarioError("run.grid is required for coverage maps")
        return PlaneSpec.for_side(mode, g.extent_m, g.depth_m, g.n, g.axis)

    def cut_distances(self) -> np.ndarray:
        """Signed cut distances in wavelengths, ascending; negative is the transmit side."""
        c = self.run.cut
        if c is None:
            raise ScenarioError("run.cut is required for gain profiles")
        if c.spacing == "log":
            lo = max(c.d_min_wavelengths, 1e-6)
            mags = np.geomspace(lo, c.d_max_wavelengths, c.num)
        else:
            mags = np.linspace(c.d_min_wavelengths, c.d_max_wavelengths, c.num)
        return np.concatenate([-mags[::-1], mags])

    # -- serialisation --------------------------------------------------------

    def resolved(self) -> dict:
        """Full document with defaults plus derived SI quantities."""
        ap = self.build_aperture()
        out = self.model_dump(mode="json")
        out["resolved_si"] = {
            "n_elements": ap.n_elements,
            "wavelength_m": ap.wavelength,
            "spacing_m": ap.spacing,
            "element_area_m2": ap.element_area,
            "largest_dimension_m": ap.largest_dimension,
            "field_boundary_m": field_boundary(ap),
            "tx_position_m": list(self.steering.tx_position),
        }
        if self.run.cut is not None:
            out["resolved_si"]["cut_d_min_m"] = self.run.cut.d_min_wavelengths * ap.wavelength
            out["resolved_si"]["cut_d_max_m"] = self.run.cut.d_max_wavelengths * ap.wavelength
        return out

    def digest(self) -> str:
        blob = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_scenario(data: dict) -> ScenarioDocument:
    try:
        return ScenarioDocument.model_validate(data or {})
    except ValidationError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> ScenarioDocument:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return parse_scenario(data)


def preset_names() -> list[str]:
    files = resources.files("starris").joinpath("presets").iterdir()
    return sorted(f.name[: -len(".yaml")] for f in files if f.name.endswith(".yaml"))


def load_preset(name: str) -> ScenarioDocument:
    res = resources.files("starris").joinpath("presets", f"{name}.yaml")
    if not res.is_file():
        raise ScenarioError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_scenario(yaml.safe_load(res.read_text()))


# -- lint -------------------------------------------------------------------

# Stable lint codes. Severity is fixed per code.
LINT_CODES = {
    "SCHEMA": ("error", "document does not match the scenario schema"),
    "PASSIVITY": ("error", "beta_t + beta_r exceeds 1 without lossless_override"),
    "PARTITION": ("error", "conventional surface with m_t + m_r != rows * cols"),
    "LOSSLESS": ("warning", "lossless_override active; passivity is not enforced"),
    "NEARFIELD": ("warning", "far-field model evaluated at distances inside the field boundary"),
    "MCBUDGET": ("warning", "MC slope requested but max_trials cannot reach 50 outage events at the top of the sweep"),
}


@dataclass(frozen=True)
class LintIssue:
    code: str
    message: str

    @property
    def severity(self) -> str:
        return LINT_CODES[self.code][0]


def lint(doc: ScenarioDocument) -> list[LintIssue]:
    issues: list[LintIssue] = []
    s = doc.surface
    m = doc.aperture.rows * doc.aperture.cols
    if s.kind == "star":
        if s.lossless_override:
            issues.append(LintIssue("LOSSLESS", f"beta_t={s.beta_t}, beta_r={s.beta_r} with lossless_override"))
        elif s.beta_t + s.beta_r > 1 + PASSIVITY_TOL:
            issues.append(LintIssue("PASSIVITY", f"beta_t + beta_r = {s.beta_t + s.beta_r:g} > 1"))
    else:
        m_t, m_r = doc.partition()
        if m_t < 0 or m_r < 0 or m_t + m_r != m:
            issues.append(LintIssue("PARTITION", f"m_t + m_r = {m_t} + {m_r} != {m}"))

    ap = doc.build_aperture()
    boundary = field_boundary(ap)
    cut = doc.run.cut
    if cut is not None and cut.d_min_wavelengths * ap.wavelength < boundary:
        issues.append(LintIssue(
            "NEARFIELD",
            f"cut starts at {cut.d_min_wavelengths:g} wavelengths, boundary is {boundary / ap.wavelength:g}",
        ))

    if doc.run.fit == "mc" and not any(i.severity == "error" for i in issues):
        issues.extend(_mc_budget_issues(doc))
    return issues


def _mc_budget_issues(doc: ScenarioDocument) -> list[LintIssue]:
    from .analysis import asymptotic_outage

    g_top = 10 ** (doc.run.gamma_t_sweep_db.stop_db / 10)
    out = []
    for group in doc.run.groups:
        try:
            p = asymptotic_outage(doc.outage_scenario(group), g_top)
        except ValueError:
            continue
        if p * doc.run.max_trials < 50:
            out.append(LintIssue(
                "MCBUDGET",
                f"group {group}: asymptotic outage {p:.3g} at {doc.run.gamma_t_sweep_db.stop_db:g} dB "
                f"needs ~{math.ceil(50 / max(p, 1e-300)):.3g} trials",
            ))
    return out
