"""Static-channel drivers: effective 1D, full 2D, and time of flight."""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from ..quantities import (ChannelSpec, ParticleSpec, delta_p_static, delta_phi_static,
                          delta_phi_static_exact, tof_delay, validity)
from ..tdse import (PERIODIC, BarrierWalls, Grid, PropagatorConfig, box, effective_channel, fastest_energy,
                    free, gaussian_packet, propagate_pair, static_channel, transverse_eigenstates)
from ..tdse.grid import WaveState
from ..tdse.propagators import DT_SAFETY
from .runs import (OUTER_GUIDE_RATIO, ConfigError, Measurement, NonAdiabaticEntranceError,
                   PerturbativeRegimeError, StaticRun, rel_err)

SUPPORT = 8.0  # packet margins in sigma
NYQUIST_FACTOR = 2.05  # grid Nyquist wavenumber >= this many times the carrier
DT_FRACTION = 0.8  # fraction of the stability bound used for the time step
N_PROBES = 400
N_PROBES_2D = 200
ENERGY_EVERY = 25
REFLECTION_LIMIT = 0.05
MIXING_LIMIT = 0.05


def _pow2(n: float) -> int:
    return 1 << max(6, math.ceil(math.log2(max(n, 1.0))))


def guided_contrast(channel: ChannelSpec) -> float:
    """Fraction of the channel's confinement level not already present in the outer guide."""
    return 1.0 if math.isinf(channel.a_out) else 1.0 - (channel.a / channel.a_out) ** 2


def _layout(run: StaticRun, channel: ChannelSpec) -> dict:
    p, m = run.particle, run.particle.mass
    k0 = p.wavenumber()
    v = k0 / m
    sigma = run.packet_width if run.packet_width is not None else 0.5 * channel.a
    tl = channel.taper_len
    x_in, x_out = 0.0, channel.l
    if run.detector_offset is not None and run.detector_offset < 0:
        raise ConfigError("detector plane lies inside the channel or its taper")
    det_off = 4 * sigma if run.detector_offset is None else run.detector_offset
    x_det = x_out + tl / 2 + det_off
    x_start = x_in - tl / 2 - SUPPORT * sigma
    lag = channel.l * delta_p_static(p, channel) * guided_contrast(channel) / p.momentum()
    sig_f = sigma
    for _ in range(3):
        x_end = max(x_out + tl / 2 + SUPPORT * sig_f, x_det + 2 * sig_f) + 2 * lag
        t_end = (x_end - x_start) / v
        sig_f = sigma * math.sqrt(1 + (t_end / (2 * m * sigma ** 2)) ** 2)
    x_end = max(x_out + tl / 2 + SUPPORT * sig_f, x_det + 2 * sig_f) + 2 * lag
    t_end = (x_end - x_start) / v
    lo, hi = x_start - SUPPORT * sigma, x_end + SUPPORT * sig_f
    shift = -(lo + hi) / 2
    return {"sigma": sigma, "k0": k0, "t_end": t_end, "span": hi - lo, "x_in": x_in + shift,
            "x_out": x_out + shift, "x_start": x_start + shift, "x_det": x_det + shift, "sigma_final": sig_f}


def _x_points(lay: dict, channel: ChannelSpec) -> int:
    dx = min(math.pi / (NYQUIST_FACTOR * lay["k0"]), lay["sigma"] / 8)
    if channel.taper_len > 0:
        dx = min(dx, channel.taper_len / 8)
    return _pow2(lay["span"] / dx)


def _auto_solver(state, potential, t_end: float, mass: float, n_probes: int = N_PROBES) -> PropagatorConfig:
    probe = PropagatorConfig(dt=1.0, steps=1, mass=mass)
    e = fastest_energy(state, potential, probe)
    dt0 = DT_FRACTION * DT_SAFETY / e
    steps = max(1, math.ceil(t_end / dt0))
    return PropagatorConfig("split_step_spectral", dt=t_end / steps, steps=steps, boundary=(PERIODIC,),
                            probe_every=max(1, steps // n_probes), mass=mass)


def _window_mask(x: np.ndarray, lay: dict, frac: float) -> np.ndarray:
    l = lay["x_out"] - lay["x_in"]
    lo = lay["x_in"] + 0.5 * (1 - frac) * l
    hi = lay["x_out"] - 0.5 * (1 - frac) * l
    return (x >= lo) & (x <= hi)


def _flux_probe(grid: Grid, mask_x: np.ndarray):
    """Probe returning (int_W Im(psi* d_x psi), int_W |psi|^2) over the window W."""
    kx = grid.wavenumbers[0]
    shape = (-1,) + (1,) * (grid.dim - 1)
    ik = (1j * kx).reshape(shape)
    m = mask_x.reshape(shape)

    def probe(state: WaveState):
        psi = state.psi
        d = np.fft.ifft(np.fft.fft(psi, axis=0) * ik, axis=0)
        j = np.sum(m * np.imag(np.conj(psi) * d)) * grid.cell
        rho = np.sum(m * np.abs(psi) ** 2) * grid.cell
        return np.array([j, rho])

    return probe


def _backward_fraction(state: WaveState) -> float:
    """Probability carried by k_x < 0; unlike a position window it survives wrap-around on a periodic grid."""
    pw = np.abs(np.fft.fft(state.psi, axis=0)) ** 2
    back = (state.grid.wavenumbers[0] < 0).reshape((-1,) + (1,) * (state.grid.dim - 1))
    return float(np.sum(pw * back) / np.sum(pw))


def _diag_common(run: StaticRun, lay: dict, grid: Grid, cfg: PropagatorConfig) -> dict:
    return {
        "epsilon": validity(run.particle, run.channel).epsilon,
        "grid_extent": list(grid.extent), "grid_points": list(grid.points),
        "dt": cfg.dt, "steps": cfg.steps, "probe_every": cfg.probe_every, "method": cfg.method,
        "packet_width": lay["sigma"], "t_end": cfg.duration,
    }


def _predictions(run: StaticRun, channel: ChannelSpec):
    if not run.constriction:
        return 0.0, 0.0, 0.0
    c = guided_contrast(channel)
    return (delta_phi_static(run.particle, channel) * c, delta_phi_static_exact(run.particle, channel),
            delta_p_static(run.particle, channel) * c)


def _resolve_grid(run: StaticRun, lay: dict, shape_fn) -> Grid:
    if run.grid is None:
        return shape_fn()
    if run.grid.extent[0] < lay["span"] * (1 - 1e-12):
        raise ConfigError(f"grid extent {run.grid.extent[0]:g} cannot hold the packet transit "
                          f"with {SUPPORT:g} sigma margins (need {lay['span']:g})")
    return run.grid


def _finish_static(run, lay, grid, cfg, res, flux_sys, flux_ref, channel, extra):
    dphi = res.phase
    dphi_eq, dphi_exact, dp_eq = _predictions(run, channel)
    js, jr = res.series.extra["flux"], res.ref_series.extra["flux"]
    p_sys = js[:, 0].sum() / js[:, 1].sum()
    p_ref = jr[:, 0].sum() / jr[:, 1].sum()
    dp_sim = float(p_ref - p_sys) * run.particle.mass ** 0  # hbar = 1: wavenumber = momentum
    refl = max(_backward_fraction(res.state) - _backward_fraction(res.ref_state), 0.0)
    p0 = res.series.p_mean[0, 0]
    diag = _diag_common(run, lay, grid, cfg)
    diag.update({
        "reflection": min(refl, 1.0),
        "absorbed": float(max(0.0, 1 - res.series.norm[-1])),
        "p_incident": float(p0),
        "p_final": float(res.series.p_mean[-1, 0]),
        "p_return_rel": float(abs(res.series.p_mean[-1, 0] - p0) / abs(p0)),
        "p_min": float(res.series.p_mean[:, 0].min()),
        "p_mid_sys": float(p_sys), "p_mid_ref": float(p_ref),
        "a_out": channel.a_out if math.isfinite(channel.a_out) else None,
        "constriction": run.constriction,
    })
    diag.update(extra)
    m = Measurement(dphi_sim=float(dphi), dphi_eq=dphi_eq, dphi_exact=dphi_exact, dp_sim=dp_sim, dp_eq=dp_eq,
                    diagnostics=diag, trace=res)
    return m


def resolve_static(run: StaticRun) -> StaticRun:
    """Fill in grid, solver and packet width exactly as the driver would."""
    if run.fidelity == "effective_1d":
        _, resolved = _setup_effective(run)
    else:
        _, resolved = _setup_2d(run)
    return resolved


def _setup_effective(run: StaticRun):
    ch = run.channel
    lay = _layout(run, ch)
    grid = _resolve_grid(run, lay, lambda: Grid((lay["span"],), (_x_points(lay, ch),)))
    k0 = run.particle.wavenumber()
    state = gaussian_packet(grid, lay["x_start"], k0, lay["sigma"])
    pot = effective_channel(grid, ch, lay["x_in"], run.particle.mass) if run.constriction else free(grid)
    cfg = run.solver or _auto_solver(state, pot, lay["t_end"], run.particle.mass)
    if cfg.mass != run.particle.mass:
        cfg = replace(cfg, mass=run.particle.mass)
    resolved = replace(run, grid=grid, solver=cfg, packet_width=lay["sigma"])
    return (lay, grid, state, pot, cfg), resolved


def run_static_effective(run: StaticRun) -> Measurement:
    """Packet over the effective longitudinal potential of the transverse ground level.

    The reference is the same packet propagating freely.  Raises
    :class:`PerturbativeRegimeError` when more than 5% is reflected.
    """
    if run.fidelity != "effective_1d":
        raise ConfigError("run_static_effective needs fidelity='effective_1d'")
    (lay, grid, state, pot, cfg), resolved = _setup_effective(run)
    mask = _window_mask(grid.axes[0], lay, run.dp_window)
    probe = _flux_probe(grid, mask)
    res = propagate_pair(state, pot, state, free(grid), cfg, probes={"flux": probe}, ref_probes={"flux": probe},
                         energy_every=ENERGY_EVERY)
    m = _finish_static(resolved, lay, grid, cfg, res, None, None, run.channel, {})
    m.run = resolved
    if m.diagnostics["reflection"] > REFLECTION_LIMIT:
        raise PerturbativeRegimeError(
            f"outside perturbative regime: reflection {m.diagnostics['reflection']:.3g} > {REFLECTION_LIMIT} "
            f"(epsilon = {m.diagnostics['epsilon']:.3g})", m, epsilon=m.diagnostics["epsilon"])
    return m


def _channel_2d(run: StaticRun) -> ChannelSpec:
    ch = run.channel
    if math.isinf(ch.a_out):
        ch = replace(ch, a_out=OUTER_GUIDE_RATIO * ch.a)
    return ch


def _setup_2d(run: StaticRun):
    ch = _channel_2d(run)
    lay = _layout(run, ch)
    m = run.particle.mass
    v0 = run.v0_factor * (math.pi / ch.a) ** 2 / (2 * m)

    def make_grid():
        ny_dy = ch.a / 96
        kap = math.sqrt(2 * m * (v0 - (math.pi / ch.a_out) ** 2 / (2 * m)))
        margin = 6 * run.wall_cells * ny_dy + 20 / kap
        ly = ch.a_out + 2 * margin
        return Grid((lay["span"], ly), (_x_points(lay, ch), _pow2(ly / ny_dy)))

    grid = _resolve_grid(run, lay, make_grid)
    walls = BarrierWalls(v0=v0, s=run.wall_cells * grid.spacing[1], w_min=ch.a, w_max=ch.a_out, mass=m)
    gy = Grid((grid.extent[1],), (grid.points[1],))
    ref_pot = box(grid, ch.a_out, walls, axis=1)
    sys_pot = static_channel(grid, ch, walls, lay["x_in"]) if run.constriction else ref_pot
    _, (phi_out,) = transverse_eigenstates(gy, ref_pot.static[0], 1, m, kinetic="spectral")
    gx = Grid((grid.extent[0],), (grid.points[0],))
    px = gaussian_packet(gx, lay["x_start"], run.particle.wavenumber(), lay["sigma"])
    state = WaveState(grid, np.outer(px.psi, phi_out.psi)).normalized()
    cfg = run.solver or _auto_solver(state, sys_pot, lay["t_end"], m, N_PROBES_2D)
    if cfg.mass != m:
        cfg = replace(cfg, mass=m)
    resolved = replace(run, grid=grid, solver=cfg, packet_width=lay["sigma"])
    return (lay, grid, state, sys_pot, ref_pot, cfg, ch, gy, phi_out), resolved


def run_static_2d(run: StaticRun) -> Measurement:
    """Full transverse-longitudinal propagation through a walled channel.

    The guide outside the channel has width ``channel.a_out`` (default
    1.01 a when the channel leaves it unset), so the incident packet already
    sits in a guided transverse ground mode and the taper only narrows it.
    """
    if run.fidelity != "full_2d":
        raise ConfigError("run_static_2d needs fidelity='full_2d'")
    (lay, grid, state, sys_pot, ref_pot, cfg, ch, gy, phi_out), resolved = _setup_2d(run)
    x = grid.axes[0]
    mask = _window_mask(x, lay, run.dp_window)
    flux = _flux_probe(grid, mask)
    mid = int(np.argmin(np.abs(x - 0.5 * (lay["x_in"] + lay["x_out"]))))
    _, (phi_a,) = transverse_eigenstates(gy, sys_pot.static[mid], 1, run.particle.mass, kinetic="spectral")
    fa = np.conj(phi_a.psi) * gy.cell

    def proj(st: WaveState):
        amp = st.psi[mask] @ fa
        return np.array([np.sum(np.abs(amp) ** 2) * grid.spacing[0],
                         np.sum(np.abs(st.psi[mask]) ** 2) * grid.cell])

    res = propagate_pair(state, sys_pot, state, ref_pot, cfg, probes={"flux": flux, "proj": proj},
                         ref_probes={"flux": flux}, energy_every=ENERGY_EVERY)
    pr = res.series.extra["proj"]
    mixing = float(max(0.0, 1 - pr[:, 0].sum() / pr[:, 1].sum())) if pr[:, 1].sum() > 0 else 0.0
    beyond = x > lay["x_out"] + ch.taper_len / 2
    amp = res.state.psi[beyond] @ (np.conj(phi_out.psi) * gy.cell)
    dens = np.sum(np.abs(res.state.psi[beyond]) ** 2) * grid.cell
    exit_mixing = float(max(0.0, 1 - np.sum(np.abs(amp) ** 2) * grid.spacing[0] / dens)) if dens > 0 else 0.0
    extra = {"mode_mixing": mixing, "exit_mode_mixing": exit_mixing, "v0": sys_pot.v0,
             "wall_smoothing": run.wall_cells * grid.spacing[1]}
    m = _finish_static(resolved, lay, grid, cfg, res, None, None, ch, extra)
    m.run = resolved
    if m.diagnostics["reflection"] > REFLECTION_LIMIT:
        raise PerturbativeRegimeError(f"outside perturbative regime: reflection {m.diagnostics['reflection']:.3g}",
                                      m, epsilon=m.diagnostics["epsilon"])
    if mixing > MIXING_LIMIT:
        raise NonAdiabaticEntranceError(f"non-adiabatic entrance: mode mixing {mixing:.3g} > {MIXING_LIMIT}", m)
    return m


def _crossing_time(times: np.ndarray, x: np.ndarray, x_det: float) -> float:
    above = np.flatnonzero(x >= x_det)
    if above.size == 0 or above[0] == 0:
        raise ConfigError("packet centroid never crosses the detector plane within the run")
    i = above[0]
    t0, t1, x0, x1 = times[i - 1], times[i], x[i - 1], x[i]
    return float(t0 + (x_det - x0) * (t1 - t0) / (x1 - x0))


def run_tof(run: StaticRun):
    """Arrival-time delay of the packet centroid at a detector plane beyond the channel.

    Returns ``(delay_sim, delay_pred, rel_err, measurement)``.
    """
    if run.fidelity != "effective_1d":
        raise ConfigError("run_tof uses the effective 1D channel")
    m = run_static_effective(run)
    lay = _layout(m.run, run.channel)
    res = m.trace
    t_sys = _crossing_time(res.series.times, res.series.x_mean[:, 0], lay["x_det"])
    t_ref = _crossing_time(res.ref_series.times, res.ref_series.x_mean[:, 0], lay["x_det"])
    delay = t_sys - t_ref
    pred = tof_delay(run.particle, run.channel) * guided_contrast(run.channel) if run.constriction else 0.0
    m.diagnostics.update({"delay_sim": delay, "delay_pred": pred, "detector_x": lay["x_det"]})
    return delay, pred, rel_err(delay, pred), m
