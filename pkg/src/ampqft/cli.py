"""Command-line runner: one subcommand per pipeline, JSON/CSV outputs, gated exit codes.

Exit codes: 0 success, 1 configuration error, 2 a tolerance check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from . import recovery as rc
from . import simulator as sim
from .config import ConfigError, ExperimentConfig
from .oracle import CompositeOracle, PeriodicSet, sample_error_stream

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE = 0, 1, 2
TABLE_TOL = 1e-9


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x)}")


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _oracle(cfg: ExperimentConfig, rng=None) -> CompositeOracle:
    ps = PeriodicSet(cfg.N, cfg.s, cfg.P, cfg.M)
    es = sample_error_stream(ps, cfg.p, rng) if cfg.p > 0 else None
    return CompositeOracle(ps, es)


def cmd_simulate(cfg: ExperimentConfig, trace: bool = False) -> int:
    cfg.validate(stochastic=cfg.p > 0)
    rng = np.random.default_rng(cfg.seed) if cfg.p > 0 else None
    oracle = _oracle(cfg, rng)
    G = oracle.G if cfg.p > 0 else None
    out = _out(cfg)
    summary = {"N": cfg.N, "M": cfg.M, "P": cfg.P, "s": cfg.s, "L": oracle.L, "max_abs_diff": {}}
    for alg in cfg.algs:
        table = an.analytic_table(alg, cfg.N, cfg.M, cfg.P, cfg.s, G)
        dist = mc.simulate_distribution(alg, CompositeOracle(oracle.periodic, oracle.errors))
        table.write_csv(out / f"table_{alg.value}.csv", dist)
        summary["max_abs_diff"][alg.value] = float(np.abs(table.probs - dist).max())
    worst = max(summary["max_abs_diff"].values())
    summary["pass"] = worst < TABLE_TOL
    _write_json(out / "simulate.json", summary)
    print(f"max |analytic - simulated| = {worst:.3e}")
    return EXIT_OK if summary["pass"] else EXIT_TOLERANCE


def cmd_recover(cfg: ExperimentConfig, trace: bool = False) -> int:
    cfg.validate(stochastic=True)
    if cfg.M < 2:
        raise ConfigError("recovery needs M >= 2; a single marked label has no period")
    out = _out(cfg)
    fh = (out / "recover_trace.jsonl").open("w") if trace else None
    report = {"N": cfg.N, "M": cfg.M, "P": cfg.P, "s": cfg.s, "runs": cfg.trials, "algorithms": {}}
    try:
        for ai, alg in enumerate(cfg.algs):
            base = CompositeOracle(PeriodicSet(cfg.N, cfg.s, cfg.P, cfg.M))
            dist = mc.simulate_distribution(alg, CompositeOracle(base.periodic))
            results, offsets = [], []
            for i in range(cfg.trials):
                rng = mc.block_rng(cfg.seed, ai * 2**32 + i)
                oracle = CompositeOracle(base.periodic)
                r = mc.repeat_until_recovered(alg, oracle, rng, dist, cfg.max_retries,
                                              cfg.max_trials, fh)
                results.append(r)
                if r.status == "Recovered":
                    off = rc.find_offset_decreasing(oracle, r.P, cfg.M, rng)
                    offsets.append(off.s)
            ok = [r for r in results if r.status == "Recovered"]
            entry = {
                "recovered_runs": len(ok),
                "failed_runs": len(results) - len(ok),
                "recovered_periods": sorted({r.P for r in ok}),
                "recovered_offsets": sorted({s for s in offsets if s is not None}),
                "mean_trials": float(np.mean([r.runs for r in results])),
                "mean_quantum_queries": float(np.mean([r.quantum_queries for r in results])),
                "mean_classical_queries": float(np.mean([r.classical_queries for r in results])),
            }
            if 2 * cfg.M < cfg.N:
                bound = an.expected_trials(alg, cfg.N, cfg.M)
                entry["trials_lower_bound"] = bound.expected_lower
                entry["work_per_run"] = bound.work_per_run
            report["algorithms"][alg.value] = entry
            print(f"{alg.value}: recovered {len(ok)}/{len(results)}, "
                  f"mean trials {entry['mean_trials']:.2f}")
    finally:
        if fh is not None:
            fh.close()
    _write_json(out / "recover.json", report)
    failed = any(e["failed_runs"] for e in report["algorithms"].values())
    return EXIT_TOLERANCE if failed else EXIT_OK


def cmd_error_stream(cfg: ExperimentConfig, trace: bool = False) -> int:
    cfg.validate(stochastic=True)
    rec = mc.run_error_stream_experiment(cfg.N, cfg.M, cfg.P, cfg.s, cfg.p, cfg.trials,
                                         cfg.seed, workers=cfg.workers)
    out = _out(cfg)
    rec.write_trials(out / "error_stream_trials.jsonl")
    rec.write_aggregate(out / "error_stream.csv")
    bounds_ok = all(all(t.ratio_in_bounds.values()) for t in rec.trials)
    print(f"max |analytic - simulated| = {rec.max_abs_diff:.3e}; ratio bounds hold: {bounds_ok}")
    return EXIT_OK if rec.max_abs_diff < TABLE_TOL and bounds_ok else EXIT_TOLERANCE


def cmd_minl_sweep(cfg: ExperimentConfig, trace: bool = False) -> int:
    cfg.validate(oracle=False, stochastic=True)
    if cfg.M < 2:
        raise ConfigError("the MinL sweep needs M >= 2")
    hi = min(cfg.l_max, cfg.N - cfg.M - 1)
    Ls = range(0, hi + 1, cfg.l_step)
    curve = mc.min_l_sweep(cfg.N, cfg.M, Ls, cfg.trials, cfg.seed, workers=cfg.workers)
    out = _out(cfg)
    curve.write_csv(out / "minl_curve.csv")
    tol = max(2.0, 0.05 * curve.closed_form)
    ok = abs(curve.smoothed_minimizer - curve.closed_form) <= tol
    _write_json(out / "minl.json", {"closed_form": curve.closed_form, "smoothed_minimizer":
                                    curve.smoothed_minimizer, "raw_minimizer": curve.raw_minimizer,
                                    "tolerance": tol, "pass": ok})
    print(f"MinL closed form {curve.closed_form:.3f}, empirical {curve.smoothed_minimizer:.3f}")
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_moments(cfg: ExperimentConfig, trace: bool = False) -> int:
    cfg.validate(oracle=False, stochastic=True)
    if cfg.trials < 100:
        raise ConfigError("moment estimates need at least 100 trials")
    if cfg.L < 0:
        raise ConfigError("L must be >= 0")
    T = cfg.L + cfg.M
    forms = {"plain": dict(), "with_offset": dict(a=cfg.M / T, b=1 / T)}
    report, ok = {"N": cfg.N, "L": cfg.L, "M": cfg.M, "trials": cfg.trials}, True
    for i, (name, kw) in enumerate(forms.items()):
        est = mc.estimate_random_sum_moments(cfg.N, cfg.L, cfg.trials, cfg.seed + i, name,
                                             workers=cfg.workers, **kw)
        mean_t, var_t = mc.moment_targets(cfg.L, **kw)
        mean_ok = abs(est.mean - mean_t) <= 5 * est.std_error_mean + 1e-12
        var_ok = abs(est.variance - var_t) <= 0.05 * var_t + 5 * est.std_error_variance + 1e-12
        ok &= mean_ok and var_ok
        report[name] = {**asdict(est), "mean_target": mean_t, "variance_target": var_t,
                        "mean_ok": mean_ok, "variance_ok": var_ok}
        print(f"{name}: mean {est.mean:.5f} (target {mean_t:.5f}), "
              f"variance {est.variance:.5f} (target {var_t:.5f})")
    _write_json(_out(cfg) / "moments.json", report)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_haar(cfg: ExperimentConfig, trace: bool = False) -> int:
    cfg.validate(oracle=False, stochastic=True)
    N, M = cfg.N, cfg.M
    rng = np.random.default_rng(cfg.seed)
    counts = {"constant": 0, "balanced": 0}
    for _ in range(cfg.trials):
        starts = 2 * rng.choice(N // 2, size=M, replace=False)
        signal = rng.integers(0, 2, size=N)
        signal[starts + 1] = signal[starts]
        if rc.haar_decide(starts, signal, N, M, rng) is rc.HaarDecision.CONSTANT:
            counts["constant"] += 1
        signal[starts + 1] = 1 - signal[starts]
        if rc.haar_decide(starts, signal, N, M, rng) is rc.HaarDecision.BALANCED:
            counts["balanced"] += 1
    bound = 1 - 2 * M / N
    sigma = math.sqrt(bound * (1 - bound) / cfg.trials)
    rates = {k: v / cfg.trials for k, v in counts.items()}
    n, wins = rc.classical_sample_size(N, M)
    ok = all(r >= bound - 4 * sigma for r in rates.values())
    _write_json(_out(cfg) / "haar.json", {"N": N, "M": M, "trials": cfg.trials, "rates": rates,
                                          "bound": bound, "sigma": sigma, "classical_n": n,
                                          "amplified_wins": wins, "pass": ok})
    print(f"correct-decision rates {rates}, bound {bound:.5f}")
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_uncertainty(cfg: ExperimentConfig, trace: bool = False) -> int:
    cfg.validate()
    oracle = _oracle(cfg.override(p=0.0))
    state = sim.grover_no_measure(oracle)
    chk = an.uncertainty_product(state, cfg.M, cfg.P)
    ok = chk.holds and chk.N_y == chk.N_y_exact
    _write_json(_out(cfg) / "uncertainty.json", {**chk._asdict(), "N": cfg.N, "M": cfg.M, "pass": ok})
    print(f"N_y = {chk.N_y} (modular count {chk.N_y_exact}), M*N_y >= N: {chk.holds}")
    return EXIT_OK if ok else EXIT_TOLERANCE


COMMANDS = {
    "simulate": cmd_simulate,
    "recover": cmd_recover,
    "error-stream": cmd_error_stream,
    "minl-sweep": cmd_minl_sweep,
    "moments": cmd_moments,
    "haar": cmd_haar,
    "uncertainty": cmd_uncertainty,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ampqft", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="JSON config; flags override its values")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--n", dest="n_exp", type=int, help="N = 2**n")
    ap.add_argument("--s", type=int)
    ap.add_argument("--period", dest="P", type=int)
    ap.add_argument("--m", dest="M", type=int)
    ap.add_argument("--p", type=float, help="error rate")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--out", dest="output_dir")
    ap.add_argument("--trace", action="store_true", help="write JSON-lines recovery traces")
    ap.add_argument("--alg", dest="algorithms", action="append",
                    choices=[a.value for a in an.AlgKind])
    ap.add_argument("--L", type=int, help="error-set size for the moments command")
    ap.add_argument("--max-retries", type=int)
    ap.add_argument("--workers", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "trace")}
        cfg = cfg.override(**flags)
        return COMMANDS[args.command](cfg, trace=args.trace)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
