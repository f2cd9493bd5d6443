import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as o
from conflab.interferometer import (FWHM_TO_SIGMA, IndeterminateError, PhaseLaw, Spectrum, classify,
                                    classify_points, fit_fringe, fringe)
from conflab.quantities import ChannelSpec, CutoffError, TemporalWindow

LAM0 = 0.1
A = 1.0
# channel length giving dphi(lambda0) = 20 rad under the leading-order law
L20 = 80 / (math.pi * LAM0)
OFFSETS = np.linspace(0, 2 * math.pi, 64, endpoint=False)

# frozen from tests/oracles.py (mpmath midpoint rule, 10^4 nodes, 50 digits)
VIS_STATIC_10PCT = 0.69720641783504035273


@pytest.fixture(scope="module")
def static_law():
    return PhaseLaw.static_eq2(ChannelSpec(A, L20))


def test_frozen_oracle_matches_live_quadrature():
    k = mp.pi * L20 / (4 * A ** 2)
    v = o.gaussian_visibility(LAM0, 0.1 * LAM0, lambda x: k * x, n=2000)
    assert float(v) == pytest.approx(VIS_STATIC_10PCT, rel=1e-6)


def test_static_visibility_matches_quadrature(static_law):
    assert static_law.phase([LAM0])[0] == pytest.approx(20.0, rel=1e-14)
    ig = fringe(static_law, Spectrum.gaussian(LAM0, 0.1 * LAM0), OFFSETS)
    assert abs(ig.visibility - VIS_STATIC_10PCT) <= 1e-3


def test_static_visibility_matches_characteristic_function(static_law):
    # a phase linear in lambda turns the visibility into the Gaussian characteristic function
    k = math.pi * L20 / (4 * A ** 2)
    sig = 0.1 * LAM0 * FWHM_TO_SIGMA
    ig = fringe(static_law, Spectrum.gaussian(LAM0, 0.1 * LAM0, points=2048), OFFSETS)
    assert ig.visibility == pytest.approx(math.exp(-0.5 * (k * sig) ** 2), abs=1e-6)


def test_duality_between_intensity_and_phasor(static_law):
    ig = fringe(static_law, Spectrum.gaussian(LAM0, 0.1 * LAM0), OFFSETS)
    assert abs(ig.visibility_fit - ig.visibility) <= 1e-10
    assert ig.intensity.max() <= 1 + 1e-12 and ig.intensity.min() >= -1e-12


def test_monochromatic_beam_has_full_visibility(static_law):
    ig = fringe(static_law, Spectrum.monochromatic(LAM0), OFFSETS)
    assert ig.visibility == pytest.approx(1.0, abs=1e-12)
    assert ig.centroid_shift == pytest.approx(20.0 - 6 * math.pi, abs=1e-12)


@pytest.mark.parametrize("fwhm", [0.01, 0.1, 0.2])
def test_temporal_law_keeps_full_visibility(fwhm):
    law = PhaseLaw.temporal_eq4(TemporalWindow(A, 3.0, 0.0, 20 * A))
    ig = fringe(law, Spectrum.gaussian(LAM0, fwhm * LAM0), OFFSETS)
    assert ig.visibility == pytest.approx(1.0, abs=1e-12)


def test_exact_law_is_slightly_less_coherent(static_law):
    sp = Spectrum.gaussian(LAM0, 0.1 * LAM0)
    exact = fringe(PhaseLaw.exact_dispersion(ChannelSpec(A, L20)), sp, OFFSETS)
    lead = fringe(static_law, sp, OFFSETS)
    assert exact.visibility == pytest.approx(lead.visibility, abs=0.02)


def test_visibility_shrinks_with_bandwidth(static_law):
    vs = [fringe(static_law, Spectrum.gaussian(LAM0, f * LAM0), OFFSETS).visibility for f in (0.01, 0.05, 0.1, 0.2)]
    assert all(x > y for x, y in zip(vs, vs[1:]))


def test_tabulated_law_reproduces_sampled_linear_law(static_law):
    lam = np.linspace(0.05, 0.15, 11)
    tab = PhaseLaw.tabulated(lam, static_law.phase(lam))
    sp = Spectrum.gaussian(LAM0, 0.05 * LAM0)
    assert fringe(tab, sp, OFFSETS).visibility == pytest.approx(fringe(static_law, sp, OFFSETS).visibility, abs=1e-12)
    with pytest.raises(CutoffError, match="0.2"):
        tab.phase([0.2])


def test_classification_of_both_laws(static_law):
    sp = Spectrum.gaussian(LAM0, 0.1 * LAM0)
    c = classify(static_law, sp)
    assert c.label == "dispersive" and c.slope == pytest.approx(1.0, rel=1e-9)
    t = classify(PhaseLaw.temporal_eq4(TemporalWindow(A, 3.0, 0.0, 20 * A)), sp)
    assert t.label == "non_dispersive" and t.spread == 0.0


def test_classification_edge_cases():
    lam = np.array([0.9, 1.0, 1.1])
    with pytest.raises(IndeterminateError):
        classify_points(lam, 1 + 0.1 * (lam - 1))
    with pytest.raises(ValueError, match="distinct"):
        classify_points([1.0, 1.0, 1.1], [1.0, 1.0, 1.1])
    with pytest.raises(ValueError, match="span"):
        classify_points([1.0, 1.01, 1.02], [1.0, 1.01, 1.02])


def test_cutoff_lists_offending_wavelengths():
    law = PhaseLaw.static_eq2(ChannelSpec(A, 10.0))
    with pytest.raises(CutoffError, match=r"2\.5"):
        law.phase([0.5, 2.5])


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum.gaussian(1.0, 0.5)
    with pytest.raises(ValueError):
        Spectrum.tabulated([1.0, -1.0], [1.0, 1.0])
    sp = Spectrum.tabulated([1.0, 2.0], [3.0, 1.0])
    assert sp.weights.sum() == pytest.approx(1.0) and sp.center == pytest.approx(1.25)


@settings(max_examples=100, deadline=None)
@given(shift=st.integers(0, 63), fwhm=st.floats(0.0, 0.2))
def test_offset_shift_equivariance(static_law, shift, fwhm):
    sp = Spectrum.monochromatic(LAM0) if fwhm == 0 else Spectrum.gaussian(LAM0, max(fwhm, 1e-4) * LAM0, points=128)
    a = fringe(static_law, sp, OFFSETS)
    b = fringe(static_law, sp, np.roll(OFFSETS, -shift))
    np.testing.assert_allclose(b.intensity, np.roll(a.intensity, -shift), atol=1e-12)
    assert b.visibility == pytest.approx(a.visibility, abs=1e-12)
    assert 0.0 <= a.visibility <= 1.0


@settings(max_examples=100, deadline=None)
@given(chi0=st.floats(-10.0, 10.0), fwhm=st.floats(1e-3, 0.2))
def test_fitted_phase_follows_an_offset_shift(static_law, chi0, fwhm):
    # intensities read at chi + chi0 but fitted against the labels chi
    sp = Spectrum.gaussian(LAM0, fwhm * LAM0, points=128)
    base = fringe(static_law, sp, OFFSETS)
    shifted = fringe(static_law, sp, OFFSETS + chi0)
    vis, phase = fit_fringe(OFFSETS, shifted.intensity)
    assert base.phase_fit == pytest.approx(math.remainder(base.centroid_shift, 2 * math.pi), abs=1e-9)
    assert math.remainder(phase - base.phase_fit - chi0, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)
    assert vis == pytest.approx(base.visibility, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(phases=st.lists(st.floats(-50, 50), min_size=1, max_size=20))
def test_visibility_bounded_by_one(phases):
    lam = np.arange(1, len(phases) + 1, dtype=float)
    law = PhaseLaw.tabulated(lam, phases)
    ig = fringe(law, Spectrum.tabulated(lam, np.ones_like(lam)), OFFSETS)
    assert 0.0 <= ig.visibility <= 1.0
    assert abs(ig.visibility_fit - ig.visibility) <= 1e-9


def test_narrow_band_limit_is_monotone(static_law):
    vs = [fringe(static_law, Spectrum.gaussian(LAM0, f * LAM0), OFFSETS).visibility for f in (1e-2, 1e-3, 1e-4)]
    assert vs[0] < vs[1] < vs[2] and vs[2] == pytest.approx(1.0, abs=1e-5)
