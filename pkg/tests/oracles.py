"""Arbitrary-precision reference values, written from the physics and independent of the package."""
import mpmath as mp

mp.mp.dps = 50

HBAR_SI = mp.mpf("1.054571817e-34")
NEUTRON_MASS = mp.mpf("1.67492749804e-27")


def _h(hbar):
    return 2 * mp.pi * hbar


def momentum(lam, hbar=1):
    return _h(mp.mpf(hbar)) / mp.mpf(lam)


def dp_static(lam, a, hbar=1):
    p = momentum(lam, hbar)
    return mp.pi ** 2 * mp.mpf(hbar) ** 2 / (2 * mp.mpf(a) ** 2 * p)


def dphi_static(lam, a, l):
    return mp.pi * mp.mpf(lam) * mp.mpf(l) / (4 * mp.mpf(a) ** 2)


def dphi_exact(lam, a, l, a_out=None):
    k = 2 * mp.pi / mp.mpf(lam)
    cut = (mp.pi / mp.mpf(a)) ** 2 - (0 if a_out is None else (mp.pi / mp.mpf(a_out)) ** 2)
    return (k - mp.sqrt(k * k - cut)) * mp.mpf(l)


def level(a, m, hbar=1, n=1):
    return (n * mp.pi * mp.mpf(hbar) / mp.mpf(a)) ** 2 / (2 * mp.mpf(m))


def dE_temporal(a, m, hbar=1):
    return level(a, m, hbar)


def dphi_temporal(a, T, m, hbar=1):
    return dE_temporal(a, m, hbar) * mp.mpf(T) / mp.mpf(hbar)


def tof(lam, a, l, m, hbar=1):
    p = momentum(lam, hbar)
    return mp.mpf(l) * dp_static(lam, a, hbar) * mp.mpf(m) / p ** 2


def transit_phase(lam, a, l, m, hbar=1):
    """Temporal phase over the transit time l / v of a particle of wavelength lam."""
    v = momentum(lam, hbar) / mp.mpf(m)
    return dphi_temporal(a, mp.mpf(l) / v, m, hbar)


def width_linear(t, a, aw, ramp):
    return mp.mpf(aw) + (mp.mpf(a) - mp.mpf(aw)) * mp.mpf(t) / mp.mpf(ramp)


def t_eff(a, aw, ramp, T, m, schedule="linear", hbar=1):
    """Plateau-equivalent duration by direct quadrature of the level along the ramp."""
    a, aw, ramp = mp.mpf(a), mp.mpf(aw), mp.mpf(ramp)
    e_wide = level(aw, m, hbar)
    de = level(a, m, hbar) - e_wide
    if ramp == 0:
        return mp.mpf(T)
    if schedule == "linear":
        area = mp.quad(lambda t: level(width_linear(t, a, aw, ramp), m, hbar) - e_wide, [0, ramp])
    else:
        # 1/w follows a smootherstep in the dilated time tau; dt = w^2 dtau
        s0, s1 = 1 / aw, 1 / a

        def s(u):
            return s0 + (s1 - s0) * u ** 3 * (10 - 15 * u + 6 * u ** 2)

        norm = mp.quad(lambda u: 1 / s(u) ** 2, [0, 1])
        # t(u) = ramp * int_0^u ds/s^2 / norm, so dt = ramp du / (s^2 norm)
        area = mp.quad(lambda u: (level(1 / s(u), m, hbar) - e_wide) * ramp / (s(u) ** 2 * norm), [0, 1])
    return mp.mpf(T) + 2 * area / de


def gaussian_visibility(lam0, fwhm, law, n=10_000, span=4):
    """|int g(lam) exp(i law(lam)) dlam| by an n-point midpoint rule over +-span fwhm."""
    lam0, fwhm = float(lam0), float(fwhm)
    sig = fwhm / (2 * mp.sqrt(2 * mp.log(2)))
    lo, hi = lam0 - span * fwhm, lam0 + span * fwhm
    h = (hi - lo) / n
    tot = mp.mpc(0)
    wsum = mp.mpf(0)
    for i in range(n):
        x = lo + (i + mp.mpf(1) / 2) * h
        g = mp.exp(-(x - lam0) ** 2 / (2 * sig ** 2))
        tot += g * mp.expj(law(x))
        wsum += g
    return abs(tot / wsum)
