"""Error-stream experiment: empirical vs analytic success rates for a noisy oracle."""
import argparse
from pathlib import Path

from ampqft import montecarlo as mc
from ampqft.analytic import AlgKind


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--s", type=int, default=208)
    ap.add_argument("--period", type=int, default=5)
    ap.add_argument("--m", type=int, default=7)
    ap.add_argument("--p", type=float, default=0.005)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/error_stream")
    a = ap.parse_args()
    rec = mc.run_error_stream_experiment(1 << a.n, a.m, a.period, a.s, a.p, a.trials, a.seed,
                                         workers=a.workers)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    rec.write_trials(out / "trials.jsonl")
    rec.write_aggregate(out / "aggregate.csv")
    for alg in mc.ALGS:
        line = (f"{alg.value:14s} empirical={rec.empirical_success(alg):.4f} "
                f"analytic={rec.analytic_success(alg):.4f}")
        if alg is not AlgKind.AMPLIFIED_QFT:
            lo, hi = rec.ratio_bounds(alg)
            line += f" amplified/{alg.value} ratio bounds=[{lo:.3f}, {hi:.3f}]"
        print(line)
    print(f"max |analytic - simulated| over trials: {rec.max_abs_diff:.2e}")


if __name__ == "__main__":
    main()
