import json
import math

import numpy as np
import pytest

from ampqft import analytic as an
from ampqft import montecarlo as mc
from ampqft.analytic import AlgKind
from ampqft.oracle import CompositeOracle, PeriodicSet


def test_single_phase_has_zero_variance():
    e = mc.estimate_random_sum_moments(1024, 1, 500, 3)
    assert abs(e.mean - 1) < 1e-12 and abs(e.variance) < 1e-12


def test_moment_estimate_fields():
    e = mc.MomentEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
    assert e.trials == 4 and e.mean == 2.5
    assert abs(e.std_error_mean - np.std([1, 2, 3, 4], ddof=1) / 2) < 1e-15
    with pytest.raises(ValueError):
        mc.MomentEstimate.from_samples(np.array([1.0]))


def test_rejects_small_trial_counts():
    with pytest.raises(ValueError):
        mc.estimate_random_sum_moments(1024, 3, 99, 1)
    with pytest.raises(ValueError):
        mc.estimate_random_sum_moments(1024, 3, 1000, 1, form="bogus")


@pytest.mark.parametrize("form,kw", [("plain", {}), ("with_offset", dict(a=7 / 13, b=1 / 13)),
                                     ("with_complex", dict(a=0.3, c=-0.4, b=0.2))])
def test_moments_match_closed_form(form, kw):
    e = mc.estimate_random_sum_moments(1024, 6, 100_000, 17, form, **kw)
    mean_t, var_t = mc.moment_targets(6, **kw)
    assert abs(e.mean - mean_t) < 5 * e.std_error_mean
    assert abs(e.variance - var_t) < 0.05 * var_t + 5 * e.std_error_variance


def test_offset_target_is_case_b_mean():
    mean_t, var_t = mc.moment_targets(6, 7 / 13, 1 / 13)
    assert abs(mean_t - 55 / 169) < 1e-15
    assert abs(mean_t - an.moment_formula("B", "mean", 7, 6)) < 1e-15
    assert abs(var_t - an.moment_formula("B", "variance", 7, 6)) < 1e-15


def test_moments_independent_of_workers():
    a = mc.estimate_random_sum_moments(256, 4, 30_000, 99, workers=1)
    b = mc.estimate_random_sum_moments(256, 4, 30_000, 99, workers=4)
    assert a == b


def test_mean_error_shrinks_with_trials():
    # root-mean-square error over repeats should halve when trials quadruple
    def rms(n):
        errs = [mc.estimate_random_sum_moments(512, 5, n, 1000 * n + r).mean - 5 for r in range(40)]
        return math.sqrt(np.mean(np.square(errs)))
    ratio = rms(1000) / rms(4000)
    assert 1.4 < ratio < 2.9


def test_error_stream_p0_reproduces_error_free():
    rec = mc.run_error_stream_experiment(1024, 7, 5, 208, 0.0, 3, 1)
    for t in rec.trials:
        assert t.L == 0
        for alg in AlgKind:
            assert abs(t.analytic_success[alg.value]
                       - an.success_probability(alg, 1024, 7, 5, 208)) < 1e-12


def test_error_stream_experiment_checks():
    rec = mc.run_error_stream_experiment(1024, 7, 5, 208, 6 / 1017, 25, 5)
    assert rec.max_abs_diff < 1e-9
    assert all(all(t.ratio_in_bounds.values()) for t in rec.trials)
    assert all(t.modulus_max <= 1 + 1e-12 for t in rec.trials)
    assert np.mean([t.L for t in rec.trials]) > 0


def test_error_stream_deterministic_and_thread_invariant(tmp_path):
    a = mc.run_error_stream_experiment(256, 3, 4, 10, 0.02, 6, 42, workers=1)
    b = mc.run_error_stream_experiment(256, 3, 4, 10, 0.02, 6, 42, workers=3)
    a.write_trials(tmp_path / "a.jsonl")
    b.write_trials(tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    a.write_aggregate(tmp_path / "agg.csv")
    lines = (tmp_path / "agg.csv").read_text().splitlines()
    assert lines[0] == "param_set,algorithm,empirical_success,analytic_success,ratio_lower,ratio_upper"
    assert len(lines) == 4
    rec = json.loads((tmp_path / "a.jsonl").read_text().splitlines()[0])
    assert {"trial", "L", "max_abs_diff", "recovered"} <= set(rec)


def test_success_rate_falls_with_error_rate():
    lo = mc.run_error_stream_experiment(1024, 7, 5, 208, 0.0, 1, 0).analytic_success(AlgKind.AMPLIFIED_QFT)
    hi = mc.run_error_stream_experiment(1024, 7, 5, 208, 60 / 1017, 20, 0).analytic_success(AlgKind.AMPLIFIED_QFT)
    assert hi < lo


def test_min_l_sweep_validation():
    with pytest.raises(ValueError):
        mc.min_l_sweep(1024, 7, [0, 10], 100, 1)
    with pytest.raises(ValueError):
        mc.min_l_sweep(1024, 7, [0, 10, 2000], 100, 1)
    with pytest.raises(ValueError):
        mc.min_l_sweep(1024, 7, [0, 10, 20], 100, 1, model="other")


def test_min_l_curve_shape(tmp_path):
    c = mc.min_l_sweep(1024, 7, range(0, 801, 40), 4000, 8)
    i0, imin = 0, int(np.argmin(np.abs(c.L_values - round(c.closed_form))))
    assert c.bound_curve[i0] > c.bound_curve[imin]
    assert c.bound_curve[-1] > c.bound_curve[imin]
    c.write_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().startswith("L,bracket_mean")


def test_set_model_differs():
    s = mc.min_l_sweep(256, 5, [0, 60, 120], 2000, 3, model="set", s=1, P=4)
    i = mc.min_l_sweep(256, 5, [0, 60, 120], 2000, 3)
    # distinct labels cancel partially, so the set-model bracket mean is smaller
    assert s.bracket_mean[-1] < i.bracket_mean[-1]


def test_repeat_until_recovered_counts_queries():
    ps = PeriodicSet(1024, 208, 5, 7)
    o = CompositeOracle(ps)
    r = mc.repeat_until_recovered("amplified-qft", o, np.random.default_rng(4))
    assert r.status == "Recovered" and r.P == 5
    assert r.quantum_queries == 9 * r.runs
    assert o.query_count == r.quantum_queries + r.classical_queries


def test_repeat_until_recovered_gives_up():
    ps = PeriodicSet(1024, 208, 5, 7)
    r = mc.repeat_until_recovered("qft", CompositeOracle(ps), np.random.default_rng(1), max_trials=1)
    assert r.runs == 1
    assert r.status in ("Recovered", "Failed")
