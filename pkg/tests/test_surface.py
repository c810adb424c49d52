import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starris.errors import DegenerateImpedance, LengthMismatch, PartitionMismatch, PassivityViolation
from starris.surface import (
    ETA0,
    Aperture,
    Mode,
    SurfaceImpedance,
    SurfaceKind,
    coefficients_from_impedance,
    conventional_surface,
    make_element,
    normalize_phase,
    transfer_diagonal,
    uniform_star_surface,
)

unit = st.floats(0.0, 1.0, allow_nan=False)
phase = st.floats(-50.0, 50.0, allow_nan=False)


def printed_formulas_mp(y, z, eta, dps=50):
    """High-precision re-evaluation of the two rational expressions."""
    with mpmath.workdps(dps):
        y, z, eta = mpmath.mpc(y), mpmath.mpc(z), mpmath.mpf(eta)
        r = -2 * (eta**2 * y - z) / ((2 + eta**2 * y) * (2 * eta + z))
        t = (2 - eta * y) / (2 + eta * y) - r
        return complex(t), complex(r)


class TestImpedance:
    def test_zero_impedances_give_pure_transmission(self):
        t, r = coefficients_from_impedance(SurfaceImpedance(0, 0, 376.73))
        assert t == 1 and r == 0

    def test_matched_impedance_kills_reflection(self):
        y = 0.002 - 0.0007j
        _, r = coefficients_from_impedance(SurfaceImpedance(y, ETA0**2 * y))
        assert abs(r) < 1e-12

    def test_against_high_precision(self):
        t, r = coefficients_from_impedance(SurfaceImpedance(0.001 + 0j, 100 + 0j, 376.73))
        t_ref, r_ref = printed_formulas_mp(0.001, 100, 376.73)
        assert t == pytest.approx(t_ref, rel=1e-13)
        assert r == pytest.approx(r_ref, rel=1e-13)

    def test_degenerate_denominator(self):
        # 2 + eta*Y = 0
        with pytest.raises(DegenerateImpedance):
            coefficients_from_impedance(SurfaceImpedance(-2 / ETA0, 1.0))
        with pytest.raises(DegenerateImpedance):
            coefficients_from_impedance(SurfaceImpedance(0.0, -2 * ETA0))

    def test_eta_must_be_positive(self):
        with pytest.raises(ValueError):
            SurfaceImpedance(0, 0, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False))
    def test_matched_property(self, y):
        imp = SurfaceImpedance(y, ETA0**2 * y)
        try:
            _, r = coefficients_from_impedance(imp)
        except DegenerateImpedance:
            return
        assert abs(r) < 1e-12


class TestElement:
    def test_paper_split_is_valid(self):
        e = make_element(0.4, 0, 0.6, 0)
        assert abs(e.T) ** 2 + abs(e.R) ** 2 == pytest.approx(1.0)

    def test_pure_transmission_boundary(self):
        e = make_element(1.0, 0, 0.0, 0)
        assert e.T == 1 and e.R == 0

    def test_passivity_violation(self):
        with pytest.raises(PassivityViolation):
            make_element(0.7, 0, 0.7, 0)

    def test_override_allows_lossless_pair(self):
        e = make_element(1.0, 0, 1.0, 0, lossless_override=True)
        assert abs(e.T) == abs(e.R) == 1

    def test_power_out_of_range(self):
        with pytest.raises(ValueError):
            make_element(-0.1, 0, 0.5, 0)

    def test_phase_wrapping(self):
        e = make_element(0.5, -math.pi / 2, 0.5, 5 * math.pi)
        assert e.t_phase == pytest.approx(1.5 * math.pi)
        assert e.r_phase == pytest.approx(math.pi)
        assert 0 <= normalize_phase(-1e-18) < 2 * math.pi

    @settings(max_examples=300, deadline=None)
    @given(unit, phase, unit, phase)
    def test_roundtrip_and_passivity(self, bt, pt, br, pr):
        if bt + br > 1 + 1e-12:
            with pytest.raises(PassivityViolation):
                make_element(bt, pt, br, pr)
            return
        e = make_element(bt, pt, br, pr)
        assert abs(e.T) ** 2 + abs(e.R) ** 2 <= 1 + 1e-12
        assert abs(e.T) ** 2 == pytest.approx(bt, abs=1e-12)
        assert abs(e.R) ** 2 == pytest.approx(br, abs=1e-12)
        # phases agree modulo 2pi
        for got, want in ((e.t_phase, pt), (e.r_phase, pr)):
            assert 0 <= got < 2 * math.pi
            assert abs(np.exp(1j * got) - np.exp(1j * want)) < 1e-12


class TestAperture:
    def test_grid_layout(self):
        ap = Aperture(2, 3, 0.5, 1.0)
        pos = ap.element_positions
        assert pos.shape == (6, 3)
        # row-major: x varies fastest
        np.testing.assert_allclose(pos[:3, 0], [-0.5, 0.0, 0.5])
        np.testing.assert_allclose(pos[:3, 1], -0.25)
        np.testing.assert_allclose(pos[3:, 1], 0.25)
        assert np.all(pos[:, 2] == 0)
        np.testing.assert_allclose(pos.mean(axis=0), 0, atol=1e-15)

    def test_defaults_and_dimension(self):
        ap = Aperture.square(16, 1.0)
        assert ap.n_elements == 256
        assert ap.element_area == 0.25
        assert ap.largest_dimension == pytest.approx(math.sqrt(2) * 7.5)

    def test_single_element_uses_physical_diagonal(self):
        ap = Aperture(1, 1, 0.5, 1.0)
        assert ap.largest_dimension == pytest.approx(math.sqrt(2) * 0.5)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Aperture(0, 4, 0.5, 1.0)


class TestSurfaces:
    def test_star_power_violation(self):
        ap = Aperture.square(16, 1.0)
        with pytest.raises(PassivityViolation):
            uniform_star_surface(ap, 1.0, 1.0, np.zeros(256), np.zeros(256))
        cfg = uniform_star_surface(ap, 1.0, 1.0, np.zeros(256), np.zeros(256), lossless_override=True)
        assert cfg.lossless_override

    def test_star_eight_elements(self):
        cfg = uniform_star_surface(Aperture(1, 8, 0.5, 1.0), 0.4, 0.6, np.zeros(8), np.zeros(8))
        assert len(cfg.elements) == 8
        assert {e.t_power for e in cfg.elements} == {0.4}
        assert {e.r_power for e in cfg.elements} == {0.6}
        assert cfg.kind is SurfaceKind.STAR

    def test_reflect_only_star(self):
        cfg = uniform_star_surface(Aperture(2, 2, 0.5, 1.0), 0.0, 1.0, np.zeros(4), np.zeros(4))
        assert np.all(transfer_diagonal(cfg, "T") == 0)
        np.testing.assert_allclose(transfer_diagonal(cfg, "R"), 1)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            uniform_star_surface(Aperture(1, 4, 0.5, 1.0), 0.5, 0.5, np.zeros(3), np.zeros(4))

    def test_conventional_zero_pattern(self):
        cfg = conventional_surface(Aperture(1, 8, 0.5, 1.0), 3, 5, np.zeros(8), np.zeros(8))
        assert [e.t_power for e in cfg.elements] == [0, 0, 0, 0, 0, 1, 1, 1]
        assert [e.r_power for e in cfg.elements] == [1, 1, 1, 1, 1, 0, 0, 0]
        assert np.all(transfer_diagonal(cfg, Mode.T)[:5] == 0)

    def test_conventional_reflect_only(self):
        cfg = conventional_surface(Aperture(1, 2, 0.5, 1.0), 0, 2, np.zeros(2), np.zeros(2))
        assert np.all(transfer_diagonal(cfg, "T") == 0)

    def test_conventional_full_size(self):
        cfg = conventional_surface(Aperture.square(16, 1.0), 128, 128, np.zeros(256), np.zeros(256))
        assert np.count_nonzero(transfer_diagonal(cfg, "T")) == 128
        assert np.count_nonzero(transfer_diagonal(cfg, "R")) == 128

    def test_partition_mismatch(self):
        with pytest.raises(PartitionMismatch):
            conventional_surface(Aperture(1, 8, 0.5, 1.0), 3, 4, np.zeros(8), np.zeros(8))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 12), st.integers(0, 2**32 - 1))
    def test_conventional_supports_disjoint(self, m, m_t, seed):
        m_t = min(m_t, m)
        rng = np.random.default_rng(seed)
        cfg = conventional_surface(Aperture(1, m, 0.5, 1.0), m_t, m - m_t,
                                   rng.uniform(0, 7, m), rng.uniform(0, 7, m))
        t = transfer_diagonal(cfg, "T") != 0
        r = transfer_diagonal(cfg, "R") != 0
        assert not np.any(t & r)
        assert t.sum() == m_t and r.sum() == m - m_t


class TestTransferDiagonal:
    def test_uniform_amplitude(self):
        cfg = uniform_star_surface(Aperture(1, 4, 0.5, 1.0), 0.25, 0.75, np.zeros(4), np.zeros(4))
        np.testing.assert_array_equal(transfer_diagonal(cfg, "T"), np.full(4, 0.5 + 0j))

    def test_quadrature_phase(self):
        cfg = uniform_star_surface(Aperture(1, 1, 0.5, 1.0), 0.4, 0.6, [0.0], [math.pi / 2])
        # sqrt(0.6) = 0.7745966692414834
        assert transfer_diagonal(cfg, "R")[0] == pytest.approx(0.7745966692414834j, abs=1e-15)

    def test_with_phases_keeps_amplitudes(self):
        cfg = uniform_star_surface(Aperture(1, 3, 0.5, 1.0), 0.3, 0.7, np.zeros(3), np.zeros(3))
        new = cfg.with_phases(t_phases=[0.0, math.pi, 2 * math.pi])
        np.testing.assert_allclose(transfer_diagonal(new, "T"), np.sqrt(0.3) * np.array([1, -1, 1]), atol=1e-15)
        assert cfg.t_phase[1] == 0
