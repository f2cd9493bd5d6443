import math

import pytest

from conflab.experiments import (AdiabaticityError, ConfigError, Measurement, PerturbativeRegimeError, StaticRun,
                                 TemporalRun, check_convergence, dilation_phase, eq5_view, guided_contrast,
                                 resolve_static, run_static_2d, run_static_effective, run_temporal, run_tof, sweep,
                                 with_parameter)
from conflab.quantities import ChannelSpec, ParticleSpec, TemporalWindow, delta_phi_static

P = ParticleSpec(1.0, 0.1)
CH = ChannelSpec(1.0, 4.0)  # l = 40 lambda


@pytest.fixture(scope="module")
def static_run():
    return run_static_effective(StaticRun(P, CH))


def test_static_effective_reproduces_formulas(static_run):
    m = static_run
    assert 0.98 <= m.dphi_sim / m.dphi_eq <= 1.02
    assert m.rel_err_exact <= 0.005
    assert 0.98 <= m.dp_sim / m.dp_eq <= 1.02
    assert m.diagnostics["reflection"] < 1e-3


def test_static_mechanism_momentum_dips_and_returns(static_run):
    d = static_run.diagnostics
    assert d["p_min"] < d["p_incident"]
    assert d["p_mid_sys"] < d["p_mid_ref"]
    assert d["p_return_rel"] <= 1e-6


def test_static_null_experiment():
    m = run_static_effective(StaticRun(P, CH, constriction=False))
    assert abs(m.dphi_sim) <= 1e-6 and m.dphi_eq == 0.0


def test_static_convergence_flag(static_run):
    m = check_convergence(static_run.run, static_run)
    assert m.diagnostics["converged"] and m.diagnostics["convergence_delta"] <= 0.005
    assert m.diagnostics["refined"]["rel_err_exact"] <= 0.005


def test_resolved_run_reproduces_measurement(static_run):
    again = run_static_effective(static_run.run)
    assert again.dphi_sim == static_run.dphi_sim
    assert resolve_static(StaticRun(P, CH)) == static_run.run


def test_tapered_channel_matches_exact_dispersion():
    m = run_static_effective(StaticRun(P, ChannelSpec(1.0, 4.0, taper_len=0.5)))
    assert m.rel_err_exact <= 0.005


def test_run_preconditions():
    with pytest.raises(ConfigError, match="cutoff"):
        StaticRun(ParticleSpec(1.0, 2.0), CH)
    with pytest.raises(ConfigError):
        StaticRun(P, CH, fidelity="3d")
    with pytest.raises(ConfigError, match="detector"):
        run_tof(StaticRun(P, CH, detector_offset=-1.0))
    with pytest.raises(ConfigError):
        StaticRun(P, CH).refined()


def test_vanishing_channel_gives_vanishing_phase():
    # l = 0 is not a channel; the shortest admissible one is all taper
    short = ChannelSpec(1.0, 2.05 * 0.05, taper_len=0.05)
    m = run_static_effective(StaticRun(P, short))
    assert 0 < m.dphi_sim < 0.05 * delta_phi_static(P, CH)
    # the raised-cosine ends integrate to l, so the leading-order law still applies
    assert m.dphi_sim == pytest.approx(delta_phi_static(P, short), rel=0.05)


def test_reflection_outside_perturbative_regime():
    with pytest.raises(PerturbativeRegimeError) as ei:
        run_static_effective(StaticRun(ParticleSpec(1.0, 1.9), ChannelSpec(1.0, 2.0)))
    assert ei.value.measurement is not None and "epsilon" in ei.value.details


@pytest.mark.slow
def test_full_2d_phase_grows_with_wavelength():
    ch = ChannelSpec(1.0, 4.0, taper_len=0.5)
    ph = [run_static_2d(StaticRun(ParticleSpec(1.0, lam), ch, fidelity="full_2d")).dphi_sim
          for lam in (0.06, 0.08, 0.10)]
    assert 0 < ph[0] < ph[1] < ph[2]


def test_guided_contrast():
    assert guided_contrast(CH) == 1.0
    assert guided_contrast(ChannelSpec(1.0, 4.0, a_out=2.0)) == pytest.approx(0.75)


# -- time of flight -----------------------------------------------------------


@pytest.fixture(scope="module")
def tof_run():
    return run_tof(StaticRun(P, CH))


def test_tof_delay_matches_kinematics(tof_run):
    delay, pred, rel, _ = tof_run
    assert delay > 0 and rel <= 0.05


def test_tof_delay_is_linear_in_length(tof_run):
    d2, _, _, _ = run_tof(StaticRun(P, ChannelSpec(1.0, 8.0)))
    assert d2 / tof_run[0] == pytest.approx(2.0, rel=0.05)


def test_tof_without_channel():
    delay, pred, _, m = run_tof(StaticRun(P, CH, constriction=False))
    assert pred == 0.0 and abs(delay) <= m.run.solver.dt


# -- sweeps -------------------------------------------------------------------


@pytest.fixture(scope="module")
def lambda_sweep():
    return sweep(StaticRun(P, CH), "lambda", [0.06, 0.08, 0.10, 0.12], jobs=2)


def test_static_lambda_sweep_exponent(lambda_sweep):
    assert lambda_sweep.complete
    assert lambda_sweep.values.tolist() == [0.06, 0.08, 0.10, 0.12]
    assert abs(lambda_sweep.exponent() - 1.0) <= 0.02


def test_sweep_order_and_parallel_determinism(lambda_sweep):
    serial = sweep(StaticRun(P, CH), "lambda", [0.12, 0.06], jobs=1)
    assert serial.values.tolist() == [0.12, 0.06]
    assert serial.phases().tolist() == [lambda_sweep.phases()[3], lambda_sweep.phases()[0]]


def test_single_value_sweep_equals_direct_run(static_run):
    t = sweep(StaticRun(P, CH), "lambda", [0.1])
    assert len(t.rows) == 1 and t.rows[0].measurement.dphi_sim == static_run.dphi_sim
    assert t.exponent() is None and t.spread() == 0.0


def test_sweep_collects_point_errors():
    t = sweep(StaticRun(P, CH), "lambda", [0.1, 2.5])
    assert t.rows[0].ok and not t.rows[1].ok and "cutoff" in t.rows[1].error
    assert not t.complete


def test_with_parameter_rejects_mismatched_axes():
    with pytest.raises(ConfigError):
        with_parameter(StaticRun(P, CH), "T", 1.0)
    with pytest.raises(ConfigError):
        with_parameter(TemporalRun(TemporalWindow(1.0, 1.0, 100.0, 20.0)), "l", 1.0)
    with pytest.raises(ConfigError):
        with_parameter(StaticRun(P, CH), "mass", 1.0)
    r = with_parameter(StaticRun(P, CH), "l", 8.0)
    assert r.channel.l == 8.0 and r.grid is None


# -- temporal -----------------------------------------------------------------


def test_no_constriction_interval_gives_no_phase():
    w = TemporalWindow(1.0, 0.0, 0.0, 20.0)
    m = run_temporal(TemporalRun(w, target_eq3=False))
    assert abs(m.dphi_sim) <= 1e-3


def test_adiabaticity_threshold_is_enforced():
    with pytest.raises(ConfigError, match="adiabaticity"):
        run_temporal(TemporalRun(TemporalWindow(1.0, 1.0, 1.0, 20.0)))


def test_sudden_closure_reports_excitation():
    w = TemporalWindow(1.0, 1.0, 0.0, 20.0)
    with pytest.raises(AdiabaticityError) as ei:
        run_temporal(TemporalRun(w, target_eq3=False))
    m = ei.value.measurement
    assert m.diagnostics["fidelity"] < 0.99
    assert len(ei.value.details["populations_final"]) == 5


def test_dilation_phase_linear_ramp_closed_form():
    # w' is constant on each ramp, so int w'^2 dt = 2 (a_wide - a)^2 / ramp
    w = TemporalWindow(1.0, 1.0, 50.0, 20.0, "linear")
    xi2 = 1 / 12 - 1 / (2 * math.pi ** 2)
    assert dilation_phase(w) == pytest.approx(-xi2 * 19 ** 2 / 50, rel=1e-6)
    assert dilation_phase(TemporalWindow(1.0, 1.0, 0.0, 20.0)) == 0.0


def test_measurement_dict_round_trip(static_run):
    d = static_run.to_dict()
    back = Measurement.from_dict(d)
    assert back.to_dict() == d
    assert d["rel_err_eq"] == pytest.approx(abs(d["dphi_sim"] / d["dphi_eq"] - 1))


def test_eq5_view_on_synthetic_table():
    from conflab.experiments import SweepRow, SweepTable
    w = TemporalWindow(1.0, 0.5, 0.0, 20.0)
    base = TemporalRun(w, P)
    hold = 0.5 * math.pi ** 2 / 2 * (1 - 1 / 400)
    m = Measurement(hold, hold, hold, diagnostics={"dphi_hold": hold, "dphi_hold_eq": hold})
    view = eq5_view(SweepTable("T", "temporal", [SweepRow(0.5, m)]), base)
    l_eq = P.speed() * 0.5
    assert view[0]["l_equiv"] == pytest.approx(l_eq)
    assert view[0]["dphi_static_formula"] == pytest.approx(delta_phi_static(P, ChannelSpec(1.0, l_eq)))
    assert view[0]["rel_diff"] == pytest.approx(1 / 400, rel=1e-6)
