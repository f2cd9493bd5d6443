"""Static channel: simulated phase and momentum deficit against the closed forms, plus a wavelength sweep.

    python3 scripts/run_static.py [--lambda 0.1] [--l 4] [--taper 0] [--2d] [--sweep]
"""
import argparse

from conflab.experiments import StaticRun, check_convergence, run_static_2d, run_static_effective, sweep
from conflab.quantities import ChannelSpec, ParticleSpec


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda", dest="lam", type=float, default=0.1)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--l", type=float, default=4.0)
    ap.add_argument("--taper", type=float, default=0.0)
    ap.add_argument("--2d", dest="two_d", action="store_true", help="full transverse simulation")
    ap.add_argument("--sweep", action="store_true", help="also sweep lambda/a over 0.06..0.12")
    ap.add_argument("--refine", action="store_true", help="rerun with dx and dt halved")
    args = ap.parse_args()

    run = StaticRun(ParticleSpec(1.0, args.lam), ChannelSpec(args.a, args.l, taper_len=args.taper),
                    fidelity="full_2d" if args.two_d else "effective_1d")
    m = run_static_2d(run) if args.two_d else run_static_effective(run)
    print(f"dphi_sim   = {m.dphi_sim:.6g}")
    print(f"dphi_eq    = {m.dphi_eq:.6g}  (rel {m.rel_err_eq:.2e})")
    print(f"dphi_exact = {m.dphi_exact:.6g}  (rel {m.rel_err_exact:.2e})")
    if m.dp_sim is not None:
        print(f"dp_sim     = {m.dp_sim:.6g}  dp_eq = {m.dp_eq:.6g}")
    print(f"reflection = {m.diagnostics['reflection']:.2e}")
    if args.refine:
        c = check_convergence(m.run, m)
        print(f"refined delta = {c.diagnostics['convergence_delta']:.2e}  converged = {c.diagnostics['converged']}")
    if args.sweep:
        t = sweep(run, "lambda", [f * args.a for f in (0.06, 0.08, 0.10, 0.12)])
        for v, p in zip(t.values, t.phases()):
            print(f"lambda = {v:.3g}  dphi = {p:.6g}")
        print(f"exponent = {t.exponent():.4f}")


if __name__ == "__main__":
    main()
