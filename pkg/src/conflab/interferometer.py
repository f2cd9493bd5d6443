"""Two-path fringes over a polychromatic beam and the dispersive/non-dispersive classification.

The constricted path picks up a phase law dphi(lambda); the other path is
free.  For balanced unit-amplitude paths the detector reads

    I(chi) = sum_i w_i (1 + cos(dphi(lambda_i) + chi)) / 2

whose fringe visibility is |sum_i w_i exp(i dphi_i)|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quantities import (NATURAL, ChannelSpec, CutoffError, ParticleSpec, UnitSystem, TemporalWindow, delta_phi_static,
                         delta_phi_static_exact, delta_phi_temporal)

SPREAD_THRESHOLD = 1e-2
SLOPE_THRESHOLD = 0.5
MIN_POINTS = 3
MIN_RELATIVE_RANGE = 0.2
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


class IndeterminateError(ValueError):
    """Neither classification threshold is met."""


@dataclass(frozen=True)
class Spectrum:
    """Discrete wavelength distribution with weights summing to one."""

    kind: str
    wavelengths: np.ndarray
    weights: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.wavelengths, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if lam.shape != w.shape or lam.ndim != 1 or lam.size == 0:
            raise ValueError("wavelengths and weights must be 1D arrays of equal length")
        if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("all wavelengths must be positive")
        if np.any(~np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be non-negative with a positive sum")
        object.__setattr__(self, "wavelengths", lam)
        object.__setattr__(self, "weights", w / w.sum())

    @property
    def center(self) -> float:
        return float(np.sum(self.weights * self.wavelengths))

    @classmethod
    def monochromatic(cls, wavelength: float) -> "Spectrum":
        return cls("monochromatic", [wavelength], [1.0], {"lambda0": wavelength})

    @classmethod
    def gaussian(cls, lambda0: float, fwhm: float, points: int = 512, span: float = 4.0) -> "Spectrum":
        """Gaussian line sampled at ``points`` nodes over lambda0 +- span * fwhm (midpoint rule)."""
        if fwhm <= 0:
            raise ValueError("fwhm must be positive")
        lo = lambda0 - span * fwhm
        if lo <= 0:
            raise ValueError("spectrum support reaches non-positive wavelengths; reduce fwhm or span")
        edges = np.linspace(lo, lambda0 + span * fwhm, points + 1)
        lam = 0.5 * (edges[1:] + edges[:-1])
        sig = fwhm * FWHM_TO_SIGMA
        w = np.exp(-0.5 * ((lam - lambda0) / sig) ** 2)
        return cls("gaussian", lam, w, {"lambda0": lambda0, "fwhm": fwhm, "points": points, "span": span})

    @classmethod
    def tabulated(cls, wavelengths, weights) -> "Spectrum":
        return cls("tabulated", wavelengths, weights)


@dataclass(frozen=True)
class PhaseLaw:
    """A wavelength-to-phase map with a label; ``phase`` raises :class:`CutoffError` listing bad wavelengths."""

    kind: str
    func: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def phase(self, wavelengths) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(wavelengths, dtype=float))
        return np.asarray(self.func(lam), dtype=float)

    @classmethod
    def static_eq2(cls, channel: ChannelSpec, mass: float = 1.0) -> "PhaseLaw":
        def f(lam):
            _check_cutoff(lam, channel)
            return np.array([delta_phi_static(ParticleSpec(mass, x), channel) for x in lam])
        return cls("static_eq2", f, {"channel": channel, "mass": mass})

    @classmethod
    def exact_dispersion(cls, channel: ChannelSpec, mass: float = 1.0) -> "PhaseLaw":
        def f(lam):
            _check_cutoff(lam, channel)
            return np.array([delta_phi_static_exact(ParticleSpec(mass, x), channel) for x in lam])
        return cls("exact_dispersion", f, {"channel": channel, "mass": mass})

    @classmethod
    def temporal_eq4(cls, window: TemporalWindow, mass: float = 1.0, units: UnitSystem = NATURAL) -> "PhaseLaw":
        def f(lam):
            return np.array([delta_phi_temporal(ParticleSpec(mass, x), window, units) for x in lam])
        return cls("temporal_eq4", f, {"window": window, "mass": mass})

    @classmethod
    def tabulated(cls, wavelengths, phases) -> "PhaseLaw":
        """Piecewise-linear law through measured points (for example a sweep table)."""
        lam0 = np.asarray(wavelengths, dtype=float)
        ph0 = np.asarray(phases, dtype=float)
        order = np.argsort(lam0)
        lam0, ph0 = lam0[order], ph0[order]
        if lam0.size == 0 or np.any(~np.isfinite(ph0)):
            raise ValueError("tabulated law needs finite phases")

        def f(lam):
            bad = lam[(lam < lam0[0] * (1 - 1e-12)) | (lam > lam0[-1] * (1 + 1e-12))]
            if bad.size:
                raise CutoffError("lambda", f"tabulated law undefined at wavelengths {bad.tolist()}")
            if lam0.size == 1:
                return np.full(lam.shape, ph0[0])
            return np.interp(lam, lam0, ph0)
        return cls("tabulated", f, {"wavelengths": lam0, "phases": ph0})


def _check_cutoff(lam: np.ndarray, channel: ChannelSpec):
    bad = lam[lam >= 2 * channel.a]
    if bad.size:
        raise CutoffError("lambda", f"law undefined below cutoff (lambda >= 2a = {2 * channel.a:g}) "
                                    f"at wavelengths {bad.tolist()}")


@dataclass(frozen=True)
class Interferogram:
    offsets: np.ndarray
    intensity: np.ndarray
    visibility: float
    centroid_shift: float
    visibility_fit: float | None = None
    phase_fit: float | None = None


def fit_fringe(offsets, intensity):
    """Least-squares fit of I = c0 + c1 cos chi + c2 sin chi.

    Returns ``(visibility, phase)`` with visibility (I_max - I_min)/(I_max + I_min)
    of the fitted sinusoid and phase such that I ~ c0 (1 + V cos(phase + chi)).
    """
    chi = np.asarray(offsets, dtype=float)
    y = np.asarray(intensity, dtype=float)
    a = np.column_stack([np.ones_like(chi), np.cos(chi), np.sin(chi)])
    if chi.size < 3 or np.linalg.matrix_rank(a) < 3:
        raise ValueError("need at least three distinct offsets (mod 2 pi) to fit a fringe")
    (c0, c1, c2), *_ = np.linalg.lstsq(a, y, rcond=None)
    amp = math.hypot(c1, c2)
    return amp / c0, math.atan2(-c2, c1)


def fringe(law: PhaseLaw, spectrum: Spectrum, offsets) -> Interferogram:
    chi = np.asarray(offsets, dtype=float)
    phi = law.phase(spectrum.wavelengths)
    w = spectrum.weights
    z = np.sum(w * np.exp(1j * phi))
    intensity = np.sum(w[:, None] * (1 + np.cos(phi[:, None] + chi[None, :])), axis=0) / 2
    vis = float(abs(z))
    vfit = pfit = None
    try:
        vfit, pfit = fit_fringe(chi, intensity)
    except ValueError:
        pass
    return Interferogram(chi, intensity, min(vis, 1.0), float(np.angle(z)), vfit, pfit)


@dataclass(frozen=True)
class Classification:
    label: str
    spread: float
    slope: float
    thresholds: dict


def classify_points(wavelengths, phases, spread_threshold: float = SPREAD_THRESHOLD,
                    slope_threshold: float = SLOPE_THRESHOLD) -> Classification:
    lam = np.asarray(wavelengths, dtype=float)
    ph = np.asarray(phases, dtype=float)
    good = np.isfinite(lam) & np.isfinite(ph)
    lam, ph = lam[good], ph[good]
    if np.unique(lam).size < MIN_POINTS:
        raise ValueError(f"classification needs at least {MIN_POINTS} distinct wavelengths")
    rng = (lam.max() - lam.min()) / lam.mean()
    if rng < MIN_RELATIVE_RANGE * (1 - 1e-9):
        raise ValueError(f"wavelengths span {rng:.3g} relative; at least {MIN_RELATIVE_RANGE} is required")
    mean = abs(ph.mean())
    spread = float((ph.max() - ph.min()) / mean) if mean > 0 else (0.0 if np.ptp(ph) == 0 else math.inf)
    lam0 = lam.mean()
    slope = float(np.polyfit(lam, ph, 1)[0] * lam0 / mean) if mean > 0 else math.inf
    thresholds = {"spread": spread_threshold, "slope": slope_threshold}
    if spread <= spread_threshold:
        return Classification("non_dispersive", spread, slope, thresholds)
    if abs(slope) >= slope_threshold:
        return Classification("dispersive", spread, slope, thresholds)
    raise IndeterminateError(f"indeterminate: spread {spread:.3g} > {spread_threshold} and "
                             f"normalized slope {abs(slope):.3g} < {slope_threshold}")


def classify(source, spectrum: Spectrum | None = None, samples: int = 5, rel_span: float = 0.2,
             **thresholds) -> Classification:
    """Classify a sweep table, or a law over a spectrum's support (or +-rel_span/2 around its centre)."""
    if isinstance(source, PhaseLaw):
        if spectrum is None:
            raise ValueError("classifying a law needs a spectrum")
        lam = np.unique(spectrum.wavelengths)
        if lam.size < MIN_POINTS or (lam.max() - lam.min()) / lam.mean() < rel_span:
            c = spectrum.center
            lam = np.linspace(c * (1 - rel_span / 2), c * (1 + rel_span / 2), samples)
        return classify_points(lam, source.phase(lam), **thresholds)
    if hasattr(source, "rows"):
        if source.parameter != "lambda":
            raise ValueError("only wavelength sweeps can be classified")
        return classify_points(source.values, source.phases(), **thresholds)
    lam, ph = source
    return classify_points(lam, ph, **thresholds)
