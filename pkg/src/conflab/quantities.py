"""Closed-form confinement phase shifts, unit systems and regime diagnostics.

Every formula here is a pure function of immutable inputs.  Quantities are
expressed in whatever :class:`UnitSystem` is passed; ``NATURAL`` has
``hbar = 1`` and is what the simulation drivers use internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

__all__ = [
    "UnitSystem", "NATURAL", "SI", "NEUTRON_MASS",
    "ParticleSpec", "ChannelSpec", "TemporalWindow", "RegimeReport", "PredictedShift",
    "NaturalScale", "DomainError", "CutoffError",
    "box_level", "delta_p_static", "delta_phi_static", "delta_phi_static_exact",
    "delta_E_temporal", "delta_E_temporal_corrected", "delta_phi_temporal",
    "equivalence_check", "tof_delay", "validity", "effective_duration",
    "inverse_width_sq_integral", "predict",
]

ADIABATIC_THRESHOLD = 50.0
WIDE_LIMIT = 20.0  # a_wide / a at which the "infinitely wide" idealization is accepted


class DomainError(ValueError):
    """A formula evaluated to a non-finite value or was handed invalid input."""

    def __init__(self, parameter: str, message: str):
        super().__init__(f"{parameter}: {message}")
        self.parameter = parameter


class CutoffError(DomainError):
    """The guided ground mode does not propagate (lambda >= 2a)."""


@dataclass(frozen=True)
class UnitSystem:
    label: str
    hbar: float

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar


NATURAL = UnitSystem("natural", 1.0)
SI = UnitSystem("si", 1.054571817e-34)
NEUTRON_MASS = 1.67492749804e-27  # kg, CODATA 2018


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0) or math.isnan(value):
        raise DomainError(name, f"must be > 0, got {value!r}")
    return value


def _inv_sq(x: float) -> float:
    r = 1.0 / x
    return r * r


def _finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise DomainError(name, "result is not finite (parameter out of representable range)")
    return value


@dataclass(frozen=True)
class ParticleSpec:
    """A massive particle with central de Broglie wavelength ``wavelength``."""

    mass: float
    wavelength: float

    def __post_init__(self):
        _positive("mass", self.mass)
        _positive("lambda", self.wavelength)

    def momentum(self, units: UnitSystem = NATURAL) -> float:
        return units.h / self.wavelength

    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    def energy(self, units: UnitSystem = NATURAL) -> float:
        p = self.momentum(units)
        return p * p / (2.0 * self.mass)

    def speed(self, units: UnitSystem = NATURAL) -> float:
        return self.momentum(units) / self.mass

    def with_wavelength(self, wavelength: float) -> "ParticleSpec":
        return replace(self, wavelength=wavelength)


@dataclass(frozen=True)
class ChannelSpec:
    """Static channel: walls ``a`` apart over length ``l``.

    ``a_out`` is the wall separation of the guide outside the channel;
    infinity means the particle is unconfined there.
    """

    a: float
    l: float
    taper_len: float = 0.0
    a_out: float = math.inf

    def __post_init__(self):
        _positive("a", self.a)
        _positive("l", self.l)
        if not (0.0 <= self.taper_len < self.l / 2):
            raise DomainError("taper_len", f"must satisfy 0 <= taper_len < l/2, got {self.taper_len}")
        if not self.a_out > self.a:
            raise DomainError("a_out", "outer guide must be wider than the channel")


@dataclass(frozen=True)
class TemporalWindow:
    """Time-gated constriction: walls close from ``a_wide`` to ``a``, hold for ``T``, reopen.

    ``schedule`` selects the closing law: ``"linear"`` moves the walls at
    constant speed; ``"smooth"`` ramps 1/w along a smootherstep in the
    dilated time ``tau = int dt / w(t)^2``, which keeps the compression
    adiabatic at the wide end as well as at width ``a``.
    """

    a: float
    T: float
    ramp: float
    a_wide: float
    schedule: str = "linear"

    def __post_init__(self):
        _positive("a", self.a)
        if not self.T >= 0:
            raise DomainError("T", f"must be >= 0, got {self.T}")
        if not self.ramp >= 0:
            raise DomainError("ramp", f"must be >= 0, got {self.ramp}")
        if not self.a_wide / self.a >= WIDE_LIMIT * (1 - 1e-12):
            raise DomainError("a_wide", f"a_wide/a must be >= {WIDE_LIMIT:g}, got {self.a_wide / self.a:g}")
        if self.schedule not in ("smooth", "linear"):
            raise DomainError("schedule", f"unknown schedule {self.schedule!r}")

    @property
    def duration(self) -> float:
        return 2.0 * self.ramp + self.T

    def with_hold(self, T: float) -> "TemporalWindow":
        return replace(self, T=T)


@dataclass(frozen=True)
class RegimeReport:
    epsilon: float
    propagating: bool
    adiabaticity: float | None = None
    adiabaticity_wide: float | None = None
    threshold: float = ADIABATIC_THRESHOLD

    @property
    def adiabatic(self) -> bool:
        return self.adiabaticity is not None and self.adiabaticity >= self.threshold


@dataclass(frozen=True)
class PredictedShift:
    delta_p: float
    delta_phi: float
    delta_E: float
    regime: RegimeReport


def box_level(n: int, width: float, mass: float, units: UnitSystem = NATURAL) -> float:
    """Level ``n`` of a hard-wall box of the given width."""
    q = n * math.pi * units.hbar / width
    return q * q / (2.0 * mass)


# -- static channel ---------------------------------------------------------


def delta_p_static(particle: ParticleSpec, channel: ChannelSpec, units: UnitSystem = NATURAL,
                   form: str = "momentum") -> float:
    """Longitudinal momentum drop inside the channel.

    ``form="momentum"`` evaluates pi^2 hbar^2 / (2 a^2 p); ``form="wavelength"``
    evaluates h lambda / (8 a^2).  They are algebraically identical.
    """
    a = channel.a
    if form == "momentum":
        p = particle.momentum(units)
        value = math.pi ** 2 * units.hbar ** 2 * _inv_sq(a) / (2.0 * p)
    elif form == "wavelength":
        value = units.h * particle.wavelength * _inv_sq(a) / 8.0
    else:
        raise ValueError(f"unknown form {form!r}")
    return _finite("a", value)


def delta_phi_static(particle: ParticleSpec, channel: ChannelSpec, units: UnitSystem = NATURAL,
                     form: str = "wavelength") -> float:
    """Phase retardation of the constricted path: pi lambda l / (4 a^2)."""
    a, l = channel.a, channel.l
    if form == "wavelength":
        value = math.pi * particle.wavelength * l * _inv_sq(a) / 4.0
    elif form == "energy":
        E = particle.energy(units)
        value = math.pi ** 2 * units.hbar * l * _inv_sq(a) / (2.0 * math.sqrt(2.0 * particle.mass * E))
    else:
        raise ValueError(f"unknown form {form!r}")
    return _finite("a", value)


def _guided_wavenumber_drop(particle: ParticleSpec, channel: ChannelSpec) -> float:
    k = particle.wavenumber()
    inv_out = 0.0 if math.isinf(channel.a_out) else _inv_sq(channel.a_out)
    cut = math.pi ** 2 * (_inv_sq(channel.a) - inv_out)
    if k * k <= cut:
        raise CutoffError("lambda", f"below cutoff: lambda={particle.wavelength:g} >= 2a={2 * channel.a:g} "
                                    "(guided mode does not propagate)")
    q = math.sqrt(k * k - cut)
    # k - q without cancellation
    return cut / (k + q)


def delta_phi_static_exact(particle: ParticleSpec, channel: ChannelSpec, units: UnitSystem = NATURAL) -> float:
    """Guided-mode phase deficit (k - sqrt(k^2 - (pi/a)^2)) l.

    With a finite ``channel.a_out`` the outer guide's own transverse level is
    subtracted, i.e. (pi/a)^2 becomes pi^2 (1/a^2 - 1/a_out^2).
    """
    return _finite("a", _guided_wavenumber_drop(particle, channel) * channel.l)


def tof_delay(particle: ParticleSpec, channel: ChannelSpec, units: UnitSystem = NATURAL) -> float:
    """Extra transit time of the slowed packet over the channel, l dp m / p^2."""
    _guided_wavenumber_drop(particle, channel)  # cutoff check
    p = particle.momentum(units)
    dp = delta_p_static(particle, channel, units)
    return _finite("a", channel.l * dp * particle.mass / (p * p))


# -- temporal window --------------------------------------------------------


def delta_E_temporal(particle: ParticleSpec, window: TemporalWindow, units: UnitSystem = NATURAL) -> float:
    """Energy gained when the walls close from infinity to ``a``: (pi hbar / a)^2 / 2m."""
    return _finite("a", box_level(1, window.a, particle.mass, units))


def delta_E_temporal_corrected(particle: ParticleSpec, window: TemporalWindow,
                               units: UnitSystem = NATURAL) -> float:
    """Level difference E1(a) - E1(a_wide) for a finite starting width."""
    m = particle.mass
    return box_level(1, window.a, m, units) - box_level(1, window.a_wide, m, units)


def delta_phi_temporal(particle: ParticleSpec, window: TemporalWindow, units: UnitSystem = NATURAL) -> float:
    """Phase pi^2 hbar T / (2 a^2 m); independent of the particle wavelength."""
    a = window.a
    return _finite("a", math.pi ** 2 * units.hbar * window.T * _inv_sq(a) / (2.0 * particle.mass))


def _smootherstep(u: float) -> float:
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def inverse_width_sq_integral(window: TemporalWindow) -> float:
    """Integral of 1/w(t)^2 over one closing ramp."""
    a, aw, ramp = window.a, window.a_wide, window.ramp
    if ramp == 0.0:
        return 0.0
    if window.schedule == "linear":
        return ramp / (a * aw)
    # smooth: dt = w^2 dtau, so the integral is the dilated duration
    return ramp / _smooth_norm(a, aw)


def _smooth_norm(a: float, aw: float) -> float:
    from scipy.integrate import quad

    s0, s1 = 1.0 / aw, 1.0 / a

    def f(u):
        s = s0 + (s1 - s0) * _smootherstep(u)
        return 1.0 / (s * s)

    val, _ = quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def effective_duration(particle: ParticleSpec, window: TemporalWindow, units: UnitSystem = NATURAL) -> float:
    """Plateau-equivalent duration: int [E1(w(t)) - E1(a_wide)] dt / (E1(a) - E1(a_wide))."""
    m = particle.mass
    dE = delta_E_temporal_corrected(particle, window, units)
    e_wide = box_level(1, window.a_wide, m, units)
    ramp_area = box_level(1, 1.0, m, units) * inverse_width_sq_integral(window) - e_wide * window.ramp
    return window.T + 2.0 * ramp_area / dE


# -- bridges and diagnostics -------------------------------------------------


def equivalence_check(particle: ParticleSpec, channel: ChannelSpec, units: UnitSystem = NATURAL):
    """Evaluate the temporal phase at the transit time l/v against the static phase.

    Returns ``(phase_static, phase_temporal_at_transit, rel_diff)``.
    """
    t_transit = channel.l / particle.speed(units)
    window = TemporalWindow(a=channel.a, T=t_transit, ramp=0.0, a_wide=WIDE_LIMIT * channel.a)
    static = delta_phi_static(particle, channel, units)
    temporal = delta_phi_temporal(particle, window, units)
    rel = abs(static - temporal) / abs(static) if static else abs(temporal)
    return static, temporal, rel


def validity(particle: ParticleSpec, geometry: Union[ChannelSpec, TemporalWindow],
             units: UnitSystem = NATURAL, threshold: float = ADIABATIC_THRESHOLD) -> RegimeReport:
    a = geometry.a
    eps = (particle.wavelength / (2.0 * a)) ** 2
    propagating = particle.wavelength < 2.0 * a
    if isinstance(geometry, TemporalWindow):
        m = particle.mass
        gap = box_level(2, a, m, units) - box_level(1, a, m, units)
        gap_wide = box_level(2, geometry.a_wide, m, units) - box_level(1, geometry.a_wide, m, units)
        return RegimeReport(eps, propagating, geometry.ramp * gap / units.hbar,
                            geometry.ramp * gap_wide / units.hbar, threshold)
    return RegimeReport(eps, propagating, threshold=threshold)


def predict(particle: ParticleSpec, geometry: Union[ChannelSpec, TemporalWindow],
            units: UnitSystem = NATURAL) -> PredictedShift:
    regime = validity(particle, geometry, units)
    if isinstance(geometry, ChannelSpec):
        window = TemporalWindow(a=geometry.a, T=geometry.l / particle.speed(units), ramp=0.0,
                                a_wide=WIDE_LIMIT * geometry.a)
        return PredictedShift(delta_p_static(particle, geometry, units),
                              delta_phi_static(particle, geometry, units),
                              delta_E_temporal(particle, window, units), regime)
    return PredictedShift(math.nan, delta_phi_temporal(particle, geometry, units),
                          delta_E_temporal(particle, geometry, units), regime)


# -- unit conversion ----------------------------------------------------------


@dataclass(frozen=True)
class NaturalScale:
    """Conversion between SI and natural units with hbar = 1, mass unit ``mass`` and length unit ``length``."""

    mass: float
    length: float
    hbar: float = SI.hbar
    factors: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m, L, hb = self.mass, self.length, self.hbar
        object.__setattr__(self, "factors", {
            "length": L,
            "mass": m,
            "time": m * L * L / hb,
            "momentum": hb / L,
            "energy": hb * hb / (m * L * L),
            "phase": 1.0,
        })

    def to_natural(self, value: float, kind: str) -> float:
        return value / self.factors[kind]

    def to_si(self, value: float, kind: str) -> float:
        return value * self.factors[kind]

    def particle(self, p: ParticleSpec) -> ParticleSpec:
        return ParticleSpec(self.to_natural(p.mass, "mass"), self.to_natural(p.wavelength, "length"))

    def channel(self, c: ChannelSpec) -> ChannelSpec:
        return ChannelSpec(self.to_natural(c.a, "length"), self.to_natural(c.l, "length"),
                           self.to_natural(c.taper_len, "length"), self.to_natural(c.a_out, "length"))

    def window(self, w: TemporalWindow) -> TemporalWindow:
        return TemporalWindow(self.to_natural(w.a, "length"), self.to_natural(w.T, "time"),
                              self.to_natural(w.ramp, "time"), self.to_natural(w.a_wide, "length"),
                              w.schedule)
