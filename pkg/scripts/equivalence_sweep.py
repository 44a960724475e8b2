"""Compare ORT and FBT control laws on random flat plants.

Reports the worst gain, feedforward and simulated-input differences, both
absolute and relative to the signal size.

    python scripts/equivalence_sweep.py --count 100 --max-dstar-cond 1e3
"""

import argparse
import warnings

import numpy as np

from regtrack.analysis import relative_degrees
from regtrack.fixtures import flat_plant, random_exosystem
from regtrack.sim import simulate
from regtrack.tracking import (ErrorDynamicsSpec, design_fbt, design_ort,
                               verify_equivalence)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--horizon", type=float, default=10.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--max-dstar-cond", type=float, default=1e3)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.count):
        m = int(rng.choice(args.m))
        sys = flat_plant(rng, m=m, max_dstar_cond=args.max_dstar_cond)
        exo = random_exosystem(rng, m, rmax=2)
        rd = relative_degrees(sys)
        spec = ErrorDynamicsSpec.from_poles([-rng.uniform(0.5, 3.0, d) for d in rd.deltas])
        rep = verify_equivalence(sys, exo, spec)
        x0 = rng.standard_normal(sys.n)
        a = simulate(sys, design_ort(sys, exo, spec=spec), exo, x0, args.horizon, args.dt)
        b = simulate(sys, design_fbt(sys, spec), exo, x0, args.horizon, args.dt)
        du = np.abs(a.u - b.u).max()
        rows.append((sys.n, m, np.linalg.cond(rd.Dstar), rep.K_diff, rep.F_diff, du,
                     du / (1 + np.abs(a.u).max())))
    r = np.array(rows)
    print(f"{args.count} plants, m in {args.m}, cond(D*) <= {args.max_dstar_cond:g}")
    print(f"  worst |K diff|        {r[:, 3].max():.2e}")
    print(f"  worst |F diff|        {r[:, 4].max():.2e}")
    print(f"  worst sup |du|        {r[:, 5].max():.2e}  (cond(D*) {r[r[:, 5].argmax(), 2]:.1e})")
    print(f"  worst sup |du|/|u|    {r[:, 6].max():.2e}")
    print(f"  plants with |du| > 1e-8: {int((r[:, 5] > 1e-8).sum())}")


if __name__ == "__main__":
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        main()
