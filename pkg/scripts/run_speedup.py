"""Repeat-until-success runs per algorithm; compares mean runs and oracle queries."""
import argparse
import math

import numpy as np

from ampqft import montecarlo as mc
from ampqft.analytic import AlgKind
from ampqft.oracle import CompositeOracle, PeriodicSet


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--s", type=int, default=208)
    ap.add_argument("--period", type=int, default=5)
    ap.add_argument("--m", type=int, default=7)
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    N = 1 << a.n
    ps = PeriodicSet(N, a.s, a.period, a.m)
    means = {}
    for j, alg in enumerate(AlgKind):
        dist = mc.simulate_distribution(alg, CompositeOracle(ps))
        rows = []
        for i in range(a.runs):
            r = mc.repeat_until_recovered(alg, CompositeOracle(ps), mc.block_rng(a.seed + j, i), dist=dist)
            rows.append((r.runs, r.quantum_queries, r.classical_queries, r.status == "Recovered"))
        arr = np.array(rows, dtype=float)
        means[alg] = arr.mean(axis=0)
        print(f"{alg.value:14s} runs={arr[:, 0].mean():8.2f} quantum queries={arr[:, 1].mean():8.2f} "
              f"classical queries={arr[:, 2].mean():6.2f} recovered={arr[:, 3].mean():.3f}")
    ratio = means[AlgKind.QFT][1] / means[AlgKind.AMPLIFIED_QFT][1]
    pred = (N / (4 * a.m)) / (math.pi / 4 * math.sqrt(N / a.m))
    print(f"query ratio qft/amplified = {ratio:.2f} (prediction {pred:.2f})")


if __name__ == "__main__":
    main()
