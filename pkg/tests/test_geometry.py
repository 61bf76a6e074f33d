import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydlink.config import load_config
from rydlink.geometry import (
    Beam,
    UnknownBeamError,
    WaveVector,
    beam_wavevector,
    compose_mode,
    mode_overlap,
    modes_distinguishable,
    protocol_modes,
    retrieval_direction,
)


@pytest.fixture(scope="module")
def geo():
    return load_config().geometry


class TestWaveVector:
    def test_magnitude_from_wavelength(self, geo):
        # |k| = 2 pi / lambda; 795 nm -> 7.903 rad/um
        k = beam_wavevector("A", geo)
        assert k.norm() == pytest.approx(2.0 * np.pi / 0.795, rel=1e-12)

    def test_add_sub_roundtrip(self):
        a = WaveVector(1.0, -2.0, 3.0)
        b = WaveVector(0.5, 0.5, -1.0)
        back = (a + b) - b
        assert np.allclose(back.as_array(), a.as_array())

    def test_transverse_norm_of_axial_vector_is_zero(self):
        assert WaveVector(0.0, 0.0, 5.0).transverse_norm() == pytest.approx(0.0)

    def test_transverse_norm_general(self):
        v = WaveVector(3.0, 4.0, 12.0)
        assert v.transverse_norm((0.0, 0.0, 1.0)) == pytest.approx(5.0)


class TestBeamValidation:
    def test_rejects_unnormalized_direction(self):
        with pytest.raises(ValueError):
            Beam(795.0, np.array([1.0, 1.0, 0.0]), 7.0, 1.0)

    def test_rejects_nonpositive_waist(self):
        with pytest.raises(ValueError):
            Beam(795.0, np.array([0.0, 0.0, 1.0]), 0.0, 1.0)

    def test_unknown_beam(self, geo):
        with pytest.raises(UnknownBeamError):
            beam_wavevector("Z", geo)


class TestModeComposition:
    def test_unknown_beam_in_terms(self, geo):
        with pytest.raises(UnknownBeamError):
            compose_mode([("Q", 1)], geo)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.sampled_from([("A", 1), ("B", 1), ("C", -1), ("D", -1), ("E", 1)]), min_size=1, max_size=6))
    def test_numeric_matches_integer_coefficients(self, terms):
        # the numeric vector must always equal the signed sum its label claims
        g = load_config().geometry
        mode = compose_mode(terms, g)
        total = np.zeros(3)
        for beam_id, c in mode.coeffs:
            total += c * beam_wavevector(beam_id, g).as_array()
        assert np.allclose(mode.numeric.as_array(), total, atol=1e-12)

    def test_cancellation_drops_coefficient(self, geo):
        mode = compose_mode([("A", 1), ("A", -1), ("B", 1)], geo)
        assert mode.coeff_dict == {"B": 1}

    def test_negate(self, geo):
        m = compose_mode([("A", 1), ("B", 1)], geo)
        n = m.negate()
        assert np.allclose(n.numeric.as_array(), -m.numeric.as_array())
        assert n.coeff_dict == {"A": -1, "B": -1}


class TestProtocolModes:
    def test_mode_algebra_identities(self, geo):
        m = protocol_modes(geo)
        assert np.allclose(
            m.k3.numeric.as_array(), (m.k1.numeric + m.dk.numeric).as_array()
        )
        assert np.allclose(
            m.k4.numeric.as_array(), (m.k2.numeric - m.dk.numeric).as_array()
        )

    def test_first_photon_direction_equals_beam_A(self, geo):
        # read beam retro to B, so k2 - k_read collapses to k_A exactly
        m = protocol_modes(geo)
        k_a = beam_wavevector("A", geo)
        assert np.allclose(m.k_up.as_array(), k_a.as_array(), atol=1e-9)

    def test_retrieval_direction_definition(self, geo):
        m = protocol_modes(geo)
        expect = m.k3.numeric - beam_wavevector("read", geo)
        assert np.allclose(m.k_down.as_array(), expect.as_array())

    def test_free_spinwave_momentum_magnitude(self, geo):
        # counter-propagating 795/474 pair: |k_A + k_B| = 2pi(1/0.474 - 1/0.795)
        m = protocol_modes(geo)
        expect = 2.0 * np.pi * (1.0 / 0.474 - 1.0 / 0.795)
        assert m.k2.numeric.norm() == pytest.approx(expect, rel=1e-9)


class TestModeOverlap:
    def test_identical_modes_overlap_one(self, geo):
        m = protocol_modes(geo)
        assert mode_overlap(m.k2, m.k2, 7.0) == pytest.approx(1.0)

    def test_longitudinal_mismatch_is_invisible(self, geo):
        # k1 and k2 differ along z only for a hypothetical axial dk
        a = compose_mode([("A", 1)], geo)
        b = compose_mode([("A", 1), ("read", -1)], geo)  # read is axial
        assert mode_overlap(a, b, 520.0) == pytest.approx(1.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 50.0), st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
    def test_bounds_and_monotonicity_in_waist(self, w, dx, dy):
        g = load_config().geometry
        m1 = protocol_modes(g).k2
        m2 = protocol_modes(g).k3
        v = mode_overlap(m1, m2, w)
        assert 0.0 <= v <= 1.0
        assert mode_overlap(m1, m2, 2.0 * w) <= v + 1e-15

    def test_default_geometry_passes_gate(self, geo):
        assert modes_distinguishable(geo)
        m = protocol_modes(geo)
        assert mode_overlap(m.k2, m.k3, 7.0) < 0.01
        assert mode_overlap(m.k1, m.k4, 7.0) < 0.01

    def test_degenerate_geometry_fails_gate(self, geo):
        # fold C and E onto the optical axis: the kick becomes purely axial
        beams = dict(geo.beams)
        beams["C"] = Beam(795.0, np.array([0.0, 0.0, 1.0]), 13.0, beams["C"].rabi)
        beams["E"] = Beam(474.0, np.array([0.0, 0.0, 1.0]), 520.0, beams["E"].rabi)
        degenerate = type(geo)(
            beams=beams,
            detuning_1=geo.detuning_1,
            detuning_2=geo.detuning_2,
            theta_1_deg=0.0,
            theta_2_deg=0.0,
        )
        assert not modes_distinguishable(degenerate)
