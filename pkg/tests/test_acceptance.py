"""End-to-end acceptance checks, one test per criterion, each with its runtime budget."""

import csv
import json
import math
import time
import warnings

import mpmath
import numpy as np
import pytest
from scipy.optimize import brentq

from starris import cli
from starris.analysis import (
    OutageScenario,
    asymptotic_curve,
    asymptotic_outage,
    estimate_diversity_order,
    monte_carlo_outage,
    outage_oracle_numeric,
)
from starris.channel import (
    LinkGeometry,
    RiceanParams,
    far_field_gain,
    field_boundary,
    incident_field,
    los_smallscale,
    near_field_channel,
)
from starris.errors import NearFieldRegionWarning, PassivityViolation
from starris.scenario import load_preset
from starris.surface import ETA0, PASSIVITY_TOL, SurfaceImpedance, coefficients_from_impedance, make_element

pytestmark = pytest.mark.slow


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


def run_cli(*args):
    code = cli.main(list(args))
    assert code == 0, f"{args[0]} exited {code}"


def sidecar(path):
    return json.loads(path.with_name(path.name + ".json").read_text())


@pytest.mark.criterion(1, "passivity property suite, 1e5 random elements")
def test_passivity_suite():
    rng = np.random.default_rng(20210601)
    n = 10**5
    bt, br = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
    pt, pr = rng.uniform(-20, 20, n), rng.uniform(-20, 20, n)
    accepted = rejected = 0
    with Budget(5):
        for i in range(n):
            over = bt[i] + br[i] > 1 + PASSIVITY_TOL
            try:
                e = make_element(bt[i], pt[i], br[i], pr[i])
            except PassivityViolation:
                assert over
                rejected += 1
                continue
            assert not over
            assert abs(e.T) ** 2 + abs(e.R) ** 2 <= 1 + 1e-12
            accepted += 1
    assert accepted > 0.4 * n and rejected > 0.4 * n


@pytest.mark.criterion(2, "impedance mapping: matched zero and high-precision agreement")
def test_impedance_mapping():
    rng = np.random.default_rng(7)
    with Budget(5):
        y = (rng.uniform(-1, 1, 1000) + 1j * rng.uniform(-1, 1, 1000)) * 10.0 ** rng.uniform(-5, 0, 1000)
        for yi in y:
            _, r = coefficients_from_impedance(SurfaceImpedance(yi, ETA0**2 * yi))
            assert abs(r) < 1e-12
        ys = (rng.normal(size=100) + 1j * rng.normal(size=100)) * 1e-2
        zs = (rng.normal(size=100) + 1j * rng.normal(size=100)) * 1e2
        with mpmath.workdps(40):
            eta = mpmath.mpf(ETA0)
            for yi, zi in zip(ys, zs):
                t, r = coefficients_from_impedance(SurfaceImpedance(yi, zi))
                ym, zm = mpmath.mpc(yi), mpmath.mpc(zi)
                r_ref = -2 * (eta**2 * ym - zm) / ((2 + eta**2 * ym) * (2 * eta + zm))
                t_ref = (2 - eta * ym) / (2 + eta * ym) - r_ref
                assert abs(r - complex(r_ref)) <= 1e-10 * abs(complex(r_ref))
                assert abs(t - complex(t_ref)) <= 1e-10 * abs(complex(t_ref))


@pytest.mark.criterion(3, "coverage maps: beam peaks and STAR vs conventional gain")
def test_coverage_reproduction(tmp_path, capsys):
    with Budget(120):
        star, conv = tmp_path / "star.csv", tmp_path / "conv.csv"
        run_cli("coverage", "--preset", "fig3b.star", "--out", str(star), "--workers", "8")
        run_cli("coverage", "--preset", "fig3c.conventional", "--out", str(conv), "--workers", "8")
    s, c = sidecar(star), sidecar(conv)
    doc = load_preset("fig3b.star")
    assert doc.run.grid.n == 200
    targets = {"T": doc.steering.angle_t_deg, "R": doc.steering.angle_r_deg}
    for side, target in targets.items():
        assert abs(s["peaks"][side]["angle_deg"] - target) <= 2.0
        assert c["peaks"][side]["gain"] > 0
        assert c["peaks"][side]["gain"] < s["peaks"][side]["gain"]
    with open(star) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 401 and len(rows[0]) == 201


@pytest.mark.criterion(4, "gain along the 60 deg cut: bounded near field, ratio settling, leaning")
def test_gain_profile_behaviour(tmp_path):
    doc = load_preset("fig4")
    ap = doc.build_aperture()
    lam = ap.wavelength
    cfg = doc.build_surface(ap)
    tx = doc.steering.tx_position
    h = incident_field(ap, tx)
    pl = doc.build_pathloss()
    th = math.radians(doc.run.cut.angle_deg)
    b = field_boundary(ap)

    def point(d):
        return (d * math.sin(th), 0.0, d * math.cos(th))

    def far(d):
        p = point(d)
        r_s, h_s = los_smallscale(ap, tx, p)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearFieldRegionWarning)
            return far_field_gain(LinkGeometry(tx, p), pl, r_s, h_s, cfg, "T")

    with Budget(60):
        out = tmp_path / "fig4.csv"
        run_cli("gain-profile", "--preset", "fig4", "--out", str(out), "--workers", "4")

        # (a) bounded near field at 0.1 lambda, far-field formula unbounded as d -> 0
        g_near = abs(near_field_channel(cfg, h, point(0.1 * lam), "T"))
        assert np.isfinite(g_near)
        far_vals = [far(0.1 * lam * 10.0**-k) for k in range(6)]
        assert np.all(np.diff(far_vals) > 0)
        assert far_vals[-1] > 1e4 * g_near

        # (b) near/far ratio over [2B, 4B]
        ds = np.linspace(2 * b, 4 * b, 41)
        ratio = np.array([abs(near_field_channel(cfg, h, point(d), "T")) / far(d) for d in ds])
        assert np.std(ratio) / np.mean(ratio) < 0.05
        assert sidecar(out)["near_far_ratio_relstd_2B_4B"] < 0.05

        # (c) leaning factor: matters off-axis, vanishes on-axis
        rows = list(csv.DictReader(open(out)))
        rel = [abs(float(r["near_leaning"]) - float(r["near_no_leaning"])) / float(r["near_no_leaning"]) for r in rows]
        assert max(rel) > 0.01
        for d in (b, 2 * b, 4 * b):
            on = abs(near_field_channel(cfg, h, (0, 0, d), "T", True))
            off = abs(near_field_channel(cfg, h, (0, 0, d), "T", False))
            assert abs(on - off) / off < 1e-4
        single = load_preset("desk.m1").build_surface()
        hs = incident_field(single.aperture, tx)
        assert near_field_channel(single, hs, (0, 0, 0.3), "T", True) == near_field_channel(single, hs, (0, 0, 0.3), "T", False)


def _crossing(scenario, target=1e-6):
    return 10 ** brentq(lambda v: math.log(outage_oracle_numeric(scenario, 10**v) / target), -2, 10, xtol=1e-9)


@pytest.mark.criterion(5, "closed-form asymptote vs numerical convolution at outage 1e-6")
def test_asymptote_against_oracle():
    cases = []
    with Budget(180):
        for k in (0.0, 1.0):
            p = RiceanParams(k, 1.0)
            for m in (1, 2, 3):
                cases.append(OutageScenario.star(m, 0.5, 0.5, "T", p, p))
            for mp in (1, 2):
                cases.append(OutageScenario.conventional(mp, 0, "T", p, p))
        for sc in cases:
            g = _crossing(sc)
            ratio = asymptotic_outage(sc, g) / outage_oracle_numeric(sc, g)
            assert abs(ratio - 1) < 0.15, (sc, ratio)


@pytest.mark.criterion(6, "diversity orders from asymptotes and from Monte Carlo")
def test_diversity_orders(tmp_path):
    unit = RiceanParams(1.0, 1.0)
    with Budget(300):
        g = np.logspace(0, 4, 21)
        for group in "TR":
            sc = OutageScenario.star(8, 0.4, 0.6, group, unit, unit)
            assert abs(estimate_diversity_order(asymptotic_curve(sc, g)) - 9) < 1e-6
        for group, want in (("T", 4), ("R", 6)):
            sc = OutageScenario.conventional(3, 5, group, unit, unit)
            assert abs(estimate_diversity_order(asymptotic_curve(sc, g)) - want) < 1e-6

        out = tmp_path / "desk.csv"
        run_cli("outage", "--preset", "desk.m1", "--out", str(out), "--workers", "8")
    doc = load_preset("desk.m1")
    sweep = doc.run.gamma_t_sweep_db
    assert sweep.stop_db - sweep.start_db == 40 and doc.run.max_trials == 10**7
    fit = sidecar(out)["diversity_orders"]["T"]["mc"]
    assert fit is not None and abs(fit - 2.0) <= 0.3


@pytest.mark.criterion(7, "Monte Carlo vs oracle at outage ~1e-3 over 20 seeds")
def test_monte_carlo_coverage():
    p = RiceanParams(1.0, 1.0)
    sc = OutageScenario.star(2, 0.5, 0.5, "T", p, p)
    with Budget(120):
        g = _crossing(sc, 1e-3)
        ref = outage_oracle_numeric(sc, g)
        hits = 0
        for seed in range(20):
            est, hw = monte_carlo_outage(sc, g, trials=10**4, seed=seed, max_trials=10**7)
            hits += abs(est - ref) <= 3 * hw
    assert hits >= 19


@pytest.mark.criterion(8, "byte-identical CSVs at 1 and 8 workers")
def test_determinism(tmp_path):
    with Budget(120):
        for cmd, preset in (("outage", "fig5.star"), ("coverage", "fig3b.star")):
            outs = []
            for i, workers in enumerate(("1", "8", "8")):
                out = tmp_path / f"{cmd}{i}.csv"
                run_cli(cmd, "--preset", preset, "--out", str(out), "--workers", workers, "--seed", "99")
                outs.append(out.read_bytes())
            assert outs[0] == outs[1] == outs[2]
