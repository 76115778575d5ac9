"""Sweep the error-set size and compare the empirical bound minimizer with the closed form."""
import argparse

from ampqft import montecarlo as mc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--m", type=int, default=7)
    ap.add_argument("--l-max", type=int, default=400)
    ap.add_argument("--l-step", type=int, default=8)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--model", choices=("iid", "set"), default="iid")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/minl_curve.csv")
    a = ap.parse_args()
    curve = mc.min_l_sweep(1 << a.n, a.m, range(0, a.l_max + 1, a.l_step), a.trials, a.seed,
                           model=a.model)
    curve.write_csv(a.out)
    print(f"closed form {curve.closed_form:.3f}  smoothed {curve.smoothed_minimizer:.2f}  "
          f"raw grid {curve.raw_minimizer}")


if __name__ == "__main__":
    main()
