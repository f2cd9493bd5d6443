"""Fringe visibility of a polychromatic beam for the static and temporal phase laws.

    python3 scripts/run_fringe.py [--fwhm 0.1]
"""
import argparse
import math

import numpy as np

from conflab.interferometer import PhaseLaw, Spectrum, classify, fringe
from conflab.quantities import ChannelSpec, TemporalWindow


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda0", type=float, default=0.1)
    ap.add_argument("--fwhm", type=float, default=0.1, help="relative bandwidth")
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--phase", type=float, default=20.0, help="static phase at lambda0 (rad)")
    args = ap.parse_args()

    l = 4 * args.a ** 2 * args.phase / (math.pi * args.lambda0)
    sp = Spectrum.gaussian(args.lambda0, args.fwhm * args.lambda0)
    offsets = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    laws = {"static": PhaseLaw.static_eq2(ChannelSpec(args.a, l)),
            "exact": PhaseLaw.exact_dispersion(ChannelSpec(args.a, l)),
            "temporal": PhaseLaw.temporal_eq4(TemporalWindow(args.a, 3.0, 0.0, 20 * args.a))}
    for name, law in laws.items():
        ig = fringe(law, sp, offsets)
        c = classify(law, sp)
        print(f"{name:9s} visibility = {ig.visibility:.6f}  centroid = {ig.centroid_shift:+.4f}  {c.label}")


if __name__ == "__main__":
    main()
