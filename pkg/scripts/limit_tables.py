#!/usr/bin/env python3
"""Tabulate the four limiting functions on small grids (n = 1) as CSV."""

import argparse

import numpy as np

from betasource.scalinglimits import crit_b, gauss_g, hard_w, pearcey_p


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--a", type=float, default=1.0)
    parser.add_argument("--sigma", type=float, default=None, help="add one sigma variable (m = 1)")
    args = parser.parse_args()
    sigma = () if args.sigma is None else (args.sigma,)

    print("kind,tau,y,re,im,est_error")
    for tau in (-1.0, 0.0, 1.0):
        for y in np.linspace(-2, 2, 9):
            for kind, lv in (("pearcey", pearcey_p(args.alpha, tau, [y], sigma)),
                             ("crit_b", crit_b(args.a, args.alpha, tau, [abs(y)], sigma))):
                print(f"{kind},{tau:g},{y if kind == 'pearcey' else abs(y):g},"
                      f"{lv.value.real:.12g},{lv.value.imag:.12g},{lv.est_error:.2e}")
    for y in np.linspace(-2, 2, 9):
        for kind, lv in (("gauss_g", gauss_g(args.alpha, [y], sigma)),
                         ("hard_w", hard_w(args.a, args.alpha, [abs(y)], sigma))):
            print(f"{kind},,{y if kind == 'gauss_g' else abs(y):g},"
                  f"{lv.value.real:.12g},{lv.value.imag:.12g},{lv.est_error:.2e}")


if __name__ == "__main__":
    main()
