"""Temporal gate: walls close from a_wide to a, hold for T, reopen.

    python3 scripts/run_temporal.py [--T 1] [--ramp 10] [--schedule linear] [--longitudinal]

The default window is the canonical one (ramp 10, a_wide = 20 a), which is
not adiabatic at the wide end; try ``--ramp 200 --schedule smooth``.
"""
import argparse

from conflab.experiments import AdiabaticityError, TemporalRun, run_temporal
from conflab.quantities import TemporalWindow


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--a-wide", dest="a_wide", type=float, default=20.0)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--ramp", type=float, default=10.0)
    ap.add_argument("--schedule", default="linear", choices=["linear", "smooth"])
    ap.add_argument("--longitudinal", action="store_true", help="carry a moving packet along x (2D)")
    args = ap.parse_args()

    w = TemporalWindow(args.a, args.T, args.ramp, args.a_wide, args.schedule)
    try:
        m = run_temporal(TemporalRun(w, with_longitudinal=args.longitudinal))
        status = "ok"
    except AdiabaticityError as exc:
        m, status = exc.measurement, f"adiabaticity failure ({exc})"
    d = m.diagnostics
    print(f"status      = {status}")
    print(f"dE_sim      = {m.dE_sim:.6g}  dE_eq = {m.dE_eq:.6g}  (rel {m.rel_err_dE:.2e})")
    print(f"dphi_sim    = {m.dphi_sim:.6g}  dE*T_eff = {m.dphi_exact:.6g}  (rel {m.rel_err_exact:.2e})")
    print(f"dphi_hold   = {d['dphi_hold']:.6g}  dE*T = {d['dphi_hold_eq']:.6g}")
    print(f"dilation    = {d['dphi_dilation']:.4g}")
    print(f"fidelity    = {d['fidelity']:.7f}")
    if d["px_drift"] is not None:
        print(f"px_drift    = {d['px_drift']:.2e}")


if __name__ == "__main__":
    main()
