"""Outage probability and diversity order for STAR and conventional surfaces.

All receivers are in the far field, the Tx-surface link is LoS and the
surface-Rx and direct links are i.i.d. Ricean. Element phases are assumed
coherently aligned with the direct link, so the overall channel magnitude
is ``s * sum_m |r_m| + |h|`` with a per-element amplitude scale ``s``.

Amplitude scale convention (``beta_in_pdf``)
--------------------------------------------
The closed-form asymptote carries a ``beta**(-M/2)`` factor, which is exact
when each element's contributed magnitude has small-x density
``2 (K+1) / (sqrt(beta) Omega) exp(-K) x``, i.e. ``s = beta**(1/4)``.  This is
the default.  With ``beta_in_pdf=False`` the physical scale ``s = sqrt(beta)``
is used and the asymptote's factor becomes ``beta**(-M)`` so the two stay
consistent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .channel import RiceanParams, sample_ricean
from .errors import InsufficientPoints, PartitionMismatch, PassivityViolation, ResolutionTooCoarse, ZeroProbability
from .surface import PASSIVITY_TOL, Mode, SurfaceKind

MC_CHUNK = 10_000
MIN_EVENTS = 50
Z95 = 1.959963984540054


@dataclass(frozen=True)
class LinkBudget:
    w_k: float = 1.0
    sigma0_sq: float = 1.0
    gamma_k: float = 1.0
    gamma_t: float = 1.0

    def __post_init__(self):
        for name in ("w_k", "sigma0_sq", "gamma_k", "gamma_t"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


def snr(H, budget: LinkBudget):
    """Received SNR ``gamma_t |H|^2 w_k^2 / sigma0^2``."""
    out = budget.gamma_t * np.abs(H) ** 2 * budget.w_k**2 / budget.sigma0_sq
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class OutageScenario:
    """One receiver group served by a STAR or conventional surface.

    Use :meth:`star` or :meth:`conventional` to build instances.
    """

    kind: SurfaceKind
    group: Mode
    surface_fading: RiceanParams
    direct_fading: RiceanParams
    budget: LinkBudget = field(default_factory=LinkBudget)
    m: int = 0
    beta_t: float = 0.0
    beta_r: float = 0.0
    m_t: int = 0
    m_r: int = 0
    lossless_override: bool = False
    beta_in_pdf: bool = True

    def __post_init__(self):
        object.__setattr__(self, "group", Mode.parse(self.group))
        object.__setattr__(self, "kind", SurfaceKind(self.kind))
        if self.kind is SurfaceKind.STAR:
            if self.m < 0:
                raise ValueError("element count must be non-negative")
            for b in (self.beta_t, self.beta_r):
                if not 0.0 <= b <= 1.0:
                    raise ValueError(f"beta {b} outside [0, 1]")
            if not self.lossless_override and self.beta_t + self.beta_r > 1.0 + PASSIVITY_TOL:
                raise PassivityViolation(f"beta_t + beta_r = {self.beta_t + self.beta_r} > 1")
        else:
            if self.m_t < 0 or self.m_r < 0:
                raise PartitionMismatch("M_t and M_r must be non-negative")
            object.__setattr__(self, "m", self.m_t + self.m_r)

    @classmethod
    def star(cls, m, beta_t, beta_r, group, surface_fading, direct_fading, budget=None, **kw):
        return cls(SurfaceKind.STAR, group, surface_fading, direct_fading, budget or LinkBudget(),
                   m=m, beta_t=beta_t, beta_r=beta_r, **kw)

    @classmethod
    def conventional(cls, m_t, m_r, group, surface_fading, direct_fading, budget=None, **kw):
        return cls(SurfaceKind.CONVENTIONAL, group, surface_fading, direct_fading, budget or LinkBudget(),
                   m_t=m_t, m_r=m_r, **kw)

    @property
    def n_terms(self) -> int:
        """Number of surface elements serving this group (M, or M_t / M_r)."""
        if self.kind is SurfaceKind.STAR:
            return self.m
        return self.m_t if self.group is Mode.T else self.m_r

    @property
    def beta(self) -> float:
        if self.kind is SurfaceKind.CONVENTIONAL:
            return 1.0
        return self.beta_t if self.group is Mode.T else self.beta_r

    @property
    def element_scale(self) -> float:
        return self.beta**0.25 if self.beta_in_pdf else math.sqrt(self.beta)


def magnitude_threshold(scenario: OutageScenario, gamma_t):
    """Largest ``|H|`` still in outage: ``sigma0 / w_k * sqrt(gamma_k / gamma_t)``."""
    b = scenario.budget
    return np.sqrt(b.sigma0_sq * b.gamma_k / (np.asarray(gamma_t, dtype=float) * b.w_k**2))


def series_slope(params: RiceanParams, beta: float = 1.0) -> float:
    """Leading small-x slope of a Ricean magnitude PDF, ``2 (K+1) exp(-K) / (sqrt(beta) Omega)``."""
    return 2.0 * (params.K + 1.0) * math.exp(-params.K) / (math.sqrt(beta) * params.omega)


# -- closed-form asymptotes -------------------------------------------------

def _log_asymptote(n: int, scenario: OutageScenario, gamma_t, beta_log_factor: float):
    ks, om_s = scenario.surface_fading.K, scenario.surface_fading.omega
    kd, om_d = scenario.direct_fading.K, scenario.direct_fading.omega
    b = scenario.budget
    gamma_t = np.asarray(gamma_t, dtype=float)
    return (
        (n + 1) * math.log(2.0)
        + n * math.log1p(ks)
        + math.log1p(kd)
        - gammaln(2 * n + 3)
        - n * math.log(om_s)
        - math.log(om_d)
        - (2 * n + 2) * math.log(b.w_k)
        + beta_log_factor
        - n * ks
        - kd
        + (n + 1) * math.log(b.sigma0_sq)
        + (n + 1) * math.log(b.gamma_k)
        - (n + 1) * np.log(gamma_t)
    )


def _as_output(x):
    return float(x) if np.ndim(x) == 0 else x


def asymptotic_outage_star(scenario: OutageScenario, gamma_t):
    """High-SNR outage of a STAR surface receiver (log-space evaluation).

    ``2^(M+1) (Ks+1)^M (Kd+1) / ((2M+2)! Os^M Od w^(2M+2)) beta^(-M/2)
    exp(-M Ks - Kd) sigma0^(2M+2) gamma_k^(M+1) gamma_t^-(M+1)``.

    The value is not clamped and exceeds 1 at low ``gamma_t``.
    """
    if scenario.kind is not SurfaceKind.STAR:
        raise ValueError("scenario is not a STAR surface")
    n = scenario.n_terms
    beta = scenario.beta
    if n and beta == 0:
        raise ValueError(f"group {scenario.group.value} receives no power (beta = 0)")
    exponent = n / 2.0 if scenario.beta_in_pdf else float(n)
    beta_log = -exponent * math.log(beta) if n else 0.0
    return _as_output(np.exp(_log_asymptote(n, scenario, gamma_t, beta_log)))


def asymptotic_outage_conventional(scenario: OutageScenario, gamma_t):
    """High-SNR outage of a conventional-surface receiver, with ``M'`` = M_t or M_r."""
    if scenario.kind is not SurfaceKind.CONVENTIONAL:
        raise ValueError("scenario is not a conventional surface")
    return _as_output(np.exp(_log_asymptote(scenario.n_terms, scenario, gamma_t, 0.0)))


def asymptotic_outage(scenario: OutageScenario, gamma_t):
    if scenario.kind is SurfaceKind.STAR:
        return asymptotic_outage_star(scenario, gamma_t)
    return asymptotic_outage_conventional(scenario, gamma_t)


# -- numerical convolution oracle --------------------------------------------

def _sum_support(scenario: OutageScenario, n: int, scale: float) -> float:
    mean_d, var_d = scenario.direct_fading.magnitude_moments()
    mean_e, var_e = scenario.surface_fading.magnitude_moments(scale) if n else (0.0, 0.0)
    mean = mean_d + n * mean_e
    sd = math.sqrt(var_d + n * var_e)
    return mean + 12.0 * sd


def _oracle_cdf(scenario: OutageScenario, x: float, n_grid: int) -> float:
    scale = scenario.element_scale
    n = scenario.n_terms if scale > 0 else 0
    # all summands are non-negative, so the CDF at x only needs densities on [0, x]
    upper = min(x, _sum_support(scenario, n, scale))
    if upper <= 0:
        return 0.0
    grid = np.linspace(0.0, upper, n_grid)
    h = grid[1] - grid[0]
    dens = scenario.direct_fading.magnitude_pdf(grid)
    if n:
        elem = scenario.surface_fading.magnitude_pdf(grid, scale)
        for _ in range(n):
            # trapezoidal convolution on the shared grid
            conv = np.convolve(dens, elem)[:n_grid]
            conv -= 0.5 * (dens[0] * elem + elem[0] * dens)
            dens = conv * h
    cdf = float(np.trapezoid(dens, dx=h))
    return min(max(cdf, 0.0), 1.0)


def outage_oracle_numeric(
    scenario: OutageScenario,
    gamma_t: float,
    grid_resolution: int = 4096,
    check: bool = True,
    rtol: float = 0.005,
) -> float:
    """Outage by direct numerical convolution of exact Ricean magnitude PDFs.

    Mirrors the convolution-theorem argument behind the asymptote but uses
    the full Bessel-form densities. With ``check`` the grid is doubled and
    the finer result is returned if both agree to ``rtol``.
    """
    if grid_resolution < 2**12:
        raise ValueError("grid_resolution must be at least 4096")
    x = float(magnitude_threshold(scenario, gamma_t))
    p = _oracle_cdf(scenario, x, grid_resolution)
    if not check:
        return p
    fine = _oracle_cdf(scenario, x, 2 * grid_resolution)
    if abs(fine - p) > rtol * max(abs(fine), 1e-300):
        raise ResolutionTooCoarse(f"grid doubling moved outage from {p:.6g} to {fine:.6g}")
    return fine


# -- Monte Carlo --------------------------------------------------------------

def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _chunk_counts(scenario: OutageScenario, thr_sq: np.ndarray, seed: int, chunk: int, lo: int, hi: int) -> np.ndarray:
    rng = _chunk_rng(seed, chunk)
    n = scenario.n_terms
    if n:
        r = sample_ricean(scenario.surface_fading, rng, (MC_CHUNK, n))
        mag = scenario.element_scale * np.abs(r).sum(axis=1)
    else:
        mag = np.zeros(MC_CHUNK)
    mag += np.abs(sample_ricean(scenario.direct_fading, rng, MC_CHUNK))
    h2 = np.sort(mag[lo:hi] ** 2)
    return np.searchsorted(h2, thr_sq, side="left").astype(np.int64)


def _tasks(start: int, stop: int):
    """Split the global trial range [start, stop) into per-chunk pieces."""
    out = []
    t = start
    while t < stop:
        c = t // MC_CHUNK
        end = min(stop, (c + 1) * MC_CHUNK)
        out.append((c, t - c * MC_CHUNK, end - c * MC_CHUNK))
        t = end
    return out


def wilson_halfwidth(events: int, trials: int, z: float = Z95) -> float:
    """Half-width of the Wilson score interval."""
    if trials <= 0:
        return float("nan")
    p = events / trials
    denom = 1.0 + z * z / trials
    return z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom


@dataclass(frozen=True)
class OutagePoint:
    gamma_t: float
    probability: float
    source: str = "mc"  # "mc", "oracle" or "asymptotic"
    trials: int = 0
    halfwidth: float = 0.0
    events: int | None = None

    @property
    def exact(self) -> bool:
        return self.source != "mc"


@dataclass(frozen=True)
class OutageCurve:
    points: tuple[OutagePoint, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        g = np.array([p.gamma_t for p in pts], dtype=float)
        if len(g) > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("gamma_t values must be strictly increasing")
        for p in pts:
            # asymptotes are unclamped; everything else is a probability
            hi = np.inf if p.source == "asymptotic" else 1.0
            if not 0.0 <= p.probability <= hi:
                raise ValueError(f"probability {p.probability} out of range for source {p.source}")

    @property
    def gamma_t(self) -> np.ndarray:
        return np.array([p.gamma_t for p in self.points])

    @property
    def probability(self) -> np.ndarray:
        return np.array([p.probability for p in self.points])

    @classmethod
    def from_arrays(cls, gamma_t, probability, source: str) -> "OutageCurve":
        return cls(tuple(OutagePoint(float(g), float(p), source) for g, p in zip(gamma_t, probability)))


def monte_carlo_curve(
    scenario: OutageScenario,
    gamma_t,
    trials: int = 10_000,
    seed: int = 0,
    max_trials: int = 10_000_000,
    min_events: int = MIN_EVENTS,
    workers: int = 1,
) -> OutageCurve:
    """Monte Carlo outage over a sweep, with common random numbers across points.

    Trials come from per-chunk Philox streams keyed by ``(seed, chunk)``.
    A point whose count is below ``min_events`` escalates its trial budget
    by 10x up to ``max_trials``; each point reports the first budget level
    that reached ``min_events`` (or the cap).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    gamma_t = np.atleast_1d(np.asarray(gamma_t, dtype=float))
    thr_sq = magnitude_threshold(scenario, gamma_t) ** 2
    max_trials = max(max_trials, trials)

    levels = [trials]
    while levels[-1] < max_trials:
        levels.append(min(levels[-1] * 10, max_trials))

    counts = np.zeros(len(gamma_t), dtype=np.int64)
    chosen: list[tuple[int, int] | None] = [None] * len(gamma_t)
    done = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for level in levels:
            tasks = _tasks(done, level)

            def run(task):
                return _chunk_counts(scenario, thr_sq, seed, *task)

            parts = pool.map(run, tasks) if pool else map(run, tasks)
            for part in parts:
                counts += part
            done = level
            for i in range(len(gamma_t)):
                if chosen[i] is None and (counts[i] >= min_events or level == levels[-1]):
                    chosen[i] = (int(counts[i]), level)
            if all(c is not None for c in chosen):
                break
    finally:
        if pool:
            pool.shutdown()

    pts = []
    for g, (ev, n) in zip(gamma_t, chosen):
        pts.append(OutagePoint(float(g), ev / n, "mc", n, wilson_halfwidth(ev, n), ev))
    return OutageCurve(tuple(pts))


def monte_carlo_outage(
    scenario: OutageScenario,
    gamma_t: float,
    trials: int = 10_000,
    seed: int = 0,
    max_trials: int = 10_000_000,
    workers: int = 1,
) -> tuple[float, float]:
    """Outage fraction and its 95% binomial (Wilson) half-width at one ``gamma_t``."""
    if trials < 10_000:
        raise ValueError("trials must be at least 1e4")
    pt = monte_carlo_curve(scenario, [gamma_t], trials, seed, max_trials, workers=workers).points[0]
    return pt.probability, pt.halfwidth


def asymptotic_curve(scenario: OutageScenario, gamma_t) -> OutageCurve:
    g = np.atleast_1d(np.asarray(gamma_t, dtype=float))
    return OutageCurve.from_arrays(g, np.atleast_1d(asymptotic_outage(scenario, g)), "asymptotic")


def oracle_curve(scenario: OutageScenario, gamma_t, grid_resolution: int = 4096) -> OutageCurve:
    g = np.atleast_1d(np.asarray(gamma_t, dtype=float))
    p = [outage_oracle_numeric(scenario, x, grid_resolution) for x in g]
    return OutageCurve.from_arrays(g, p, "oracle")


def estimate_diversity_order(curve: OutageCurve, tail_fraction: float = 0.4) -> float:
    """Least-squares ``-d log P / d log gamma_t`` over the highest-SNR tail of the curve."""
    pts = curve.points
    n_tail = math.ceil(tail_fraction * len(pts))
    if n_tail < 3:
        raise InsufficientPoints(f"{n_tail} points in the tail window, need at least 3")
    tail = pts[-n_tail:]
    p = np.array([q.probability for q in tail])
    if np.any(p <= 0):
        raise ZeroProbability("zero outage probability in the tail window")
    x = np.log([q.gamma_t for q in tail])
    slope = np.polyfit(x, np.log(p), 1)[0]
    return float(-slope)
