import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as o
from conflab.quantities import (NATURAL, NEUTRON_MASS, SI, ChannelSpec, CutoffError, DomainError, NaturalScale,
                                ParticleSpec, TemporalWindow, box_level, delta_E_temporal,
                                delta_E_temporal_corrected, delta_p_static, delta_phi_static,
                                delta_phi_static_exact, delta_phi_temporal, effective_duration, equivalence_check,
                                predict, tof_delay, validity)

REL = 1e-12
N_RANDOM = 10_000

# frozen from tests/oracles.py at 50 digits
SI_DPHI_STATIC = 1.5707963267948966192
SI_DE = 3.2766198559561374937e-29
SI_DPHI_TEMPORAL = 310.70618455150100922
SI_DP = 1.6565175364850199141e-32
SI_TOF = 2.5277841332033893766e-14


def rel(x, ref):
    return abs(x - float(ref)) / abs(float(ref))


@pytest.fixture(scope="module")
def random_inputs():
    rng = np.random.default_rng(20240601)
    a = 10 ** rng.uniform(-3, 3, N_RANDOM)
    lam = a * 10 ** rng.uniform(-4, math.log10(1.99), N_RANDOM)
    l = a * 10 ** rng.uniform(-1, 4, N_RANDOM)
    T = 10 ** rng.uniform(-3, 3, N_RANDOM)
    m = 10 ** rng.uniform(-2, 2, N_RANDOM)
    return a, lam, l, T, m


def test_formulas_match_oracle_on_random_inputs(random_inputs):
    mp.mp.dps = 30
    worst = {}
    for a, lam, l, T, m in zip(*random_inputs):
        p = ParticleSpec(m, lam)
        ch = ChannelSpec(a, l)
        w = TemporalWindow(a, T, 0.0, 20 * a)
        checks = {
            "dp": (delta_p_static(p, ch), o.dp_static(lam, a)),
            "dphi_static": (delta_phi_static(p, ch), o.dphi_static(lam, a, l)),
            "dE": (delta_E_temporal(p, w), o.dE_temporal(a, m)),
            "dphi_temporal": (delta_phi_temporal(p, w), o.dphi_temporal(a, T, m)),
            "tof": (tof_delay(p, ch), o.tof(lam, a, l, m)),
        }
        for k, (x, ref) in checks.items():
            worst[k] = max(worst.get(k, 0.0), rel(x, ref))
    mp.mp.dps = 50
    assert all(v <= REL for v in worst.values()), worst


def test_dual_forms_agree(random_inputs):
    for a, lam, l, _, m in zip(*random_inputs):
        p, ch = ParticleSpec(m, lam), ChannelSpec(a, l)
        assert rel(delta_p_static(p, ch, form="wavelength"), delta_p_static(p, ch)) <= REL
        assert rel(delta_phi_static(p, ch, form="energy"), delta_phi_static(p, ch)) <= REL


def test_equivalence_identity(random_inputs):
    for a, lam, l, _, m in zip(*random_inputs):
        _, _, d = equivalence_check(ParticleSpec(m, lam), ChannelSpec(a, l))
        assert d <= REL


def test_exact_dispersion_matches_oracle(random_inputs):
    mp.mp.dps = 40
    a, lam, l = (x[:2000] for x in random_inputs[:3])
    for ai, li, lli in zip(a, lam, l):
        x = delta_phi_static_exact(ParticleSpec(1.0, li), ChannelSpec(ai, lli))
        assert rel(x, o.dphi_exact(li, ai, lli)) <= 1e-10
    mp.mp.dps = 50


def test_exact_dispersion_with_outer_guide():
    x = delta_phi_static_exact(ParticleSpec(1.0, 0.1), ChannelSpec(1.0, 4.0, a_out=1.05))
    assert rel(x, o.dphi_exact(0.1, 1, 4, a_out=1.05)) <= 1e-12


def test_canonical_si_values():
    n = ParticleSpec(NEUTRON_MASS, 2e-10)
    ch = ChannelSpec(1e-6, 1e-2)
    w = TemporalWindow(1e-6, 1e-3, 0.0, 2e-5)
    assert rel(delta_phi_static(n, ch, SI), SI_DPHI_STATIC) <= REL
    assert rel(delta_E_temporal(n, w, SI), SI_DE) <= REL
    assert rel(delta_phi_temporal(n, w, SI), SI_DPHI_TEMPORAL) <= REL
    assert rel(delta_p_static(n, ch, SI), SI_DP) <= REL
    assert rel(tof_delay(n, ch, SI), SI_TOF) <= REL


def test_natural_unit_examples():
    p = ParticleSpec(1.0, 1.0)
    assert delta_phi_static(p, ChannelSpec(1.0, 1.0)) == pytest.approx(math.pi / 4, rel=1e-15)
    assert delta_p_static(p, ChannelSpec(1.0, 1.0)) == pytest.approx(math.pi / 4, rel=1e-15)
    assert tof_delay(p, ChannelSpec(1.0, 1.0)) == pytest.approx(1 / (16 * math.pi), rel=1e-14)


@pytest.mark.parametrize("schedule", ["linear", "smooth"])
@pytest.mark.parametrize("ramp", [0.0, 1.0, 10.0, 100.0])
def test_effective_duration_matches_quadrature(schedule, ramp):
    p = ParticleSpec(1.0, 2.0)
    w = TemporalWindow(1.0, 3.0, ramp, 20.0, schedule)
    assert rel(effective_duration(p, w), o.t_eff(1, 20, ramp, 3, 1, schedule)) <= 1e-10


def test_corrected_level_difference():
    p = ParticleSpec(1.0, 2.0)
    w = TemporalWindow(1.0, 1.0, 10.0, 20.0)
    assert rel(delta_E_temporal_corrected(p, w), o.level(1, 1) * (1 - mp.mpf(1) / 400)) <= REL


def test_validity_report():
    r = validity(ParticleSpec(1.0, 0.1), ChannelSpec(1.0, 4.0))
    assert r.epsilon == pytest.approx(0.0025) and r.propagating
    assert not validity(ParticleSpec(1.0, 2.0), ChannelSpec(1.0, 4.0)).propagating
    rt = validity(ParticleSpec(1.0, 2.0), TemporalWindow(1.0, 1.0, 10.0, 20.0))
    assert rt.adiabaticity == pytest.approx(10 * 1.5 * math.pi ** 2)
    assert rt.adiabatic


def test_predict_bundles_the_formulas():
    p, ch = ParticleSpec(1.0, 0.1), ChannelSpec(1.0, 4.0)
    s = predict(p, ch)
    assert s.delta_phi == delta_phi_static(p, ch)
    assert s.delta_p == delta_p_static(p, ch)
    t = predict(p, TemporalWindow(1.0, 2.0, 0.0, 20.0))
    assert math.isnan(t.delta_p) and t.delta_E == box_level(1, 1.0, 1.0)


def test_cutoff_and_domain_errors():
    with pytest.raises(CutoffError, match="cutoff"):
        delta_phi_static_exact(ParticleSpec(1.0, 2.5), ChannelSpec(1.0, 4.0))
    with pytest.raises(CutoffError):
        tof_delay(ParticleSpec(1.0, 2.0), ChannelSpec(1.0, 4.0))
    with pytest.raises(DomainError):
        ChannelSpec(0.0, 1.0)
    with pytest.raises(DomainError):
        ChannelSpec(1.0, 1.0, taper_len=0.5)
    with pytest.raises(DomainError, match="a_wide"):
        TemporalWindow(1.0, 1.0, 1.0, 10.0)
    with pytest.raises(DomainError):
        ParticleSpec(-1.0, 1.0)
    with pytest.raises(DomainError):
        delta_phi_static(ParticleSpec(1.0, 1e-300), ChannelSpec(1e-300, 1e300))


pos = st.floats(1e-3, 1e3)


@settings(max_examples=200, deadline=None)
@given(a=pos, r=st.floats(1e-3, 1.9), l=pos, s=st.floats(1e-3, 1e3))
def test_static_phase_is_scale_free(a, r, l, s):
    p, ch = ParticleSpec(1.0, r * a), ChannelSpec(a, l)
    p2, ch2 = ParticleSpec(1.0, r * a * s), ChannelSpec(a * s, l * s)
    assert delta_phi_static(p2, ch2) == pytest.approx(delta_phi_static(p, ch), rel=1e-12)
    assert delta_phi_static_exact(p2, ch2) == pytest.approx(delta_phi_static_exact(p, ch), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(a=pos, r=st.floats(1e-3, 0.5), l=pos)
def test_exact_exceeds_leading_order(a, r, l):
    p, ch = ParticleSpec(1.0, r * a), ChannelSpec(a, l)
    lead, exact = delta_phi_static(p, ch), delta_phi_static_exact(p, ch)
    assert exact >= lead * (1 - 1e-12)
    # next order is eps/4 relative with eps = (lambda / 2a)^2
    eps = (r / 2) ** 2
    assert exact / lead - 1 == pytest.approx(eps / 4, rel=0.1, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(a=pos, T=pos, m=st.floats(1e-2, 1e2), l1=pos, l2=pos)
def test_temporal_phase_ignores_wavelength(a, T, m, l1, l2):
    w = TemporalWindow(a, T, 0.0, 20 * a)
    assert delta_phi_temporal(ParticleSpec(m, l1), w) == delta_phi_temporal(ParticleSpec(m, l2), w)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(1e-3, 1.9), lr=st.floats(1e-1, 1e4))
def test_natural_scale_round_trip(r, lr):
    a = 1e-6
    scale = NaturalScale(NEUTRON_MASS, a)
    p, ch = ParticleSpec(NEUTRON_MASS, r * a), ChannelSpec(a, lr * a)
    pn, chn = scale.particle(p), scale.channel(ch)
    assert scale.to_si(delta_p_static(pn, chn), "momentum") == pytest.approx(delta_p_static(p, ch, SI), rel=1e-12)
    assert scale.to_si(tof_delay(pn, chn), "time") == pytest.approx(tof_delay(p, ch, SI), rel=1e-12)
    assert delta_phi_static(pn, chn) == pytest.approx(delta_phi_static(p, ch, SI), rel=1e-12)
    w = TemporalWindow(a, 1e-3, 1e-4, 20 * a)
    wn = scale.window(w)
    assert scale.to_si(delta_E_temporal(pn, wn), "energy") == pytest.approx(delta_E_temporal(p, w, SI), rel=1e-12)
    assert delta_phi_temporal(pn, wn) == pytest.approx(delta_phi_temporal(p, w, SI), rel=1e-12)
    assert scale.to_si(effective_duration(pn, wn), "time") == pytest.approx(effective_duration(p, w, SI), rel=1e-12)
