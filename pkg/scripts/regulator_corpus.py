"""Solve the regulator equations on a random corpus with both methods.

Prints residual and agreement statistics and the time spent per method.

    python scripts/regulator_corpus.py --count 500 --seed 1
"""

import argparse
import time
import warnings

import numpy as np

from regtrack.fixtures import random_exosystem, random_plant
from regtrack.regulator import solve_regulator


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--nmax", type=int, default=8)
    ap.add_argument("--mmax", type=int, default=3)
    ap.add_argument("--rmax", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    corpus = []
    for _ in range(args.count):
        n = int(rng.integers(1, args.nmax + 1))
        m = int(rng.integers(1, min(n, args.mmax) + 1))
        sys = random_plant(rng, n=n, m=m)
        corpus.append((sys, random_exosystem(rng, m, rmax=args.rmax)))
    sols = {}
    for method in ("analytic", "oracle"):
        t0 = time.perf_counter()
        sols[method] = [solve_regulator(s, e, method=method, rtol=None) for s, e in corpus]
        dt = time.perf_counter() - t0
        rel = [max(x.residual1, x.residual2) / (1 + np.linalg.norm(x.Pi)) for x in sols[method]]
        print(f"{method:8s} {dt:6.2f} s  worst relative residual {max(rel):.2e}  "
              f"median {np.median(rel):.2e}")
    agree = [np.linalg.norm(a.Pi - o.Pi) / (1 + np.linalg.norm(a.Pi))
             for a, o in zip(sols["analytic"], sols["oracle"])]
    gam = [np.linalg.norm(a.Gamma - o.Gamma) / (1 + np.linalg.norm(a.Gamma))
           for a, o in zip(sols["analytic"], sols["oracle"])]
    print(f"agreement: worst relative |Pi_a - Pi_o| {max(agree):.2e}, "
          f"|Gamma_a - Gamma_o| {max(gam):.2e}")


if __name__ == "__main__":
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        main()
