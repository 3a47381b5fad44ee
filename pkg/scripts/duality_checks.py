#!/usr/bin/env python3
"""Check both finite-N duality identities at small sizes.

Quadrature is used for sides of dimension <= 2 and Monte Carlo otherwise.
"""

import argparse

from betasource.charpoly import duality_check_gaussian, duality_check_laguerre

CASES = [
    (1, 1, (0.7,), (0.3,)),
    (1, 2, (0.7,), (0.3, 0.9)),
    (2, 3, (0.5, 0.9), (0.2, 0.5, 1.0)),
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--t", type=float, default=1.0)
    parser.add_argument("--a", type=float, default=1.0, help="Laguerre parameter")
    args = parser.parse_args()

    print("family,beta,n,N,lhs_method,rhs_method,re_lhs,re_rhs,abs_diff,tolerance,consistent")
    for beta in (1, 2):
        for n, N, s, f in CASES:
            for name, res in (
                ("gaussian", duality_check_gaussian(n, N, beta, args.t, s, f, args.samples, args.seed)),
                ("laguerre", duality_check_laguerre(n, N, args.a, beta, args.t, s, f, args.samples, args.seed)),
            ):
                tol = res.lhs.stderr + res.rhs.stderr
                print(f"{name},{beta},{n},{N},{res.lhs_method},{res.rhs_method},"
                      f"{res.lhs.mean.real:.10g},{res.rhs.mean.real:.10g},{abs(res.difference):.3e},"
                      f"{3 * tol:.3e},{res.consistent()}")


if __name__ == "__main__":
    main()
