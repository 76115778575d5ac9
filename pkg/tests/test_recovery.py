import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ampqft import analytic as an
from ampqft import recovery as rc
from ampqft.oracle import CompositeOracle, PeriodicSet
from ampqft.recovery import HaarDecision, RecoveryStatus

from conftest import periodic_params


def test_recover_examples():
    r = rc.recover_period(205, 1024)
    assert (r.status, r.d, r.P) == (RecoveryStatus.RECOVERED, 1, 5)
    r = rc.recover_period(410, 1024)
    assert (r.status, r.d, r.P) == (RecoveryStatus.RECOVERED, 2, 5)
    assert rc.recover_period(0, 1024).status is RecoveryStatus.FAILED
    with pytest.raises(ValueError):
        rc.recover_period(1024, 1024)


def test_recover_invariants_hold_on_recovered():
    for y in range(1, 1024):
        r = rc.recover_period(y, 1024)
        if r.ok:
            assert math.gcd(r.d, r.P) == 1
            assert 2 * r.P * abs(y * r.P - r.d * 1024) <= 1024


def test_recover_with_verifier_and_rerun():
    # 410/1024 passes at 1/2 and 2/5; a verifier that only accepts 5 skips 1/2
    r = rc.recover_period(410, 1024, verify=lambda q: q == 5)
    assert (r.status, r.P) == (RecoveryStatus.RECOVERED, 5)
    # P = 6 with d = 3 collapses to 1/2: all candidates fail verification
    y = 512
    r = rc.recover_period(y, 1024, verify=lambda q: q == 6)
    assert r.status is RecoveryStatus.NEED_RERUN


def test_recover_trace():
    buf = io.StringIO()
    rc.recover_period(205, 1024, trace=buf)
    rec = json.loads(buf.getvalue())
    assert rec["y"] == 205 and rec["status"] == "Recovered" and [1, 5, True] in rec["convergents"]


@pytest.mark.parametrize("N,P", [(1024, 5), (1024, 32), (4096, 7), (4096, 60), (256, 16), (64, 3)])
def test_success_set_completeness(N, P):
    S = set(an.success_set(N, P))
    for y in range(1, N):
        r = rc.recover_period(y, N, verify=lambda q: q == P)
        if y in S:
            assert r.status is RecoveryStatus.RECOVERED and r.P == P
        else:
            assert not (r.ok and r.P == P)


def test_verify_examples(example_oracle):
    o = example_oracle
    assert rc.verify_period(o, 208, 5, 7)
    assert not rc.verify_period(o, 208, 10, 7)
    assert not rc.verify_period(o, 208, 4, 7)
    assert rc.verify_pair(o, 208, 5, 7)
    assert not rc.verify_pair(o, 213, 5, 7)
    assert not rc.verify_pair(o, 100, 5, 7)
    # probes beyond the label range read as 0 without raising
    assert not rc.verify_pair(o, 1000, 5, 7)


@pytest.mark.parametrize("N", [4, 8, 16, 32])
def test_verification_soundness_exhaustive(N):
    for P in range(1, math.isqrt(N) + 1):
        for M in range(2, (N - 1) // P + 2):
            for s in range(0, N - (M - 1) * P):
                o = CompositeOracle(PeriodicSet(N, s, P, M))
                for P1 in range(1, math.isqrt(N) + 1):
                    assert rc.verify_period(o, s, P1, M) == (P1 == P)
                    for s1 in range(N):
                        if rc.verify_pair(o, s1, P1, M):
                            assert (s1, P1) == (s, P)


@pytest.mark.parametrize("N", [64, 128, 256])
def test_period_verification_soundness_exhaustive(N):
    for P in range(1, math.isqrt(N) + 1):
        for M in range(2, (N - 1) // P + 2):
            for s in range(0, N - (M - 1) * P):
                o = CompositeOracle(PeriodicSet(N, s, P, M))
                hits = [P1 for P1 in range(1, math.isqrt(N) + 1) if rc.verify_period(o, s, P1, M)]
                assert hits == [P]


@given(periodic_params(n_min=6, n_max=10), st.data())
def test_verification_soundness_sampled(params, data):
    N, M, P, s = params
    if M < 2:
        return
    o = CompositeOracle(PeriodicSet(N, s, P, M))
    P1 = data.draw(st.integers(1, math.isqrt(N)))
    s1 = data.draw(st.integers(-N, 2 * N))
    assert rc.verify_period(o, s, P1, M) == (P1 == P)
    if rc.verify_pair(o, s1, P1, M):
        assert (s1, P1) == (s, P)


def test_register_size():
    assert [rc.register_size(m) for m in (1, 2, 3, 7, 8, 9)] == [1, 2, 4, 8, 8, 16]


def test_offset_counting_examples(example_oracle):
    o = example_oracle
    r = rc.find_offset_counting(o, 5, 7, 238)
    assert (r.s, r.R, r.status) == (208, 6, RecoveryStatus.RECOVERED)
    assert r.charged == math.ceil(math.sqrt(7 * 3))
    r = rc.find_offset_counting(o, 5, 7, 208)
    assert (r.s, r.R) == (208, 0)
    before = o.query_count
    rc.find_offset_counting(o, 5, 7, 223)
    assert o.query_count - before >= rc.counting_cost(3, 8)


def test_offset_counting_wrong_period(example_oracle):
    assert rc.find_offset_counting(example_oracle, 10, 7, 238).status is RecoveryStatus.NEED_RERUN


def test_offset_decreasing_example(example_oracle):
    r = rc.find_offset_decreasing(example_oracle, 5, 7, np.random.default_rng(0))
    assert r.s == 208 and r.status is RecoveryStatus.RECOVERED
    assert r.queries > 0


def test_offset_decreasing_rounds_and_monotone():
    ps = PeriodicSet(1024, 208, 5, 7)
    rounds = []
    for seed in range(1000):
        r = rc.find_offset_decreasing(CompositeOracle(ps), 5, 7, np.random.default_rng(seed))
        assert r.s == 208
        assert all(a > b for a, b in zip(r.path, r.path[1:]))
        assert all(ps.contains(x) for x in r.path)
        rounds.append(r.rounds)
    assert np.mean(rounds) <= 3 * math.log2(7)


@given(periodic_params(n_min=5, n_max=10), st.integers(0, 2**31))
def test_offset_decreasing_terminates(params, seed):
    N, M, P, s = params
    if M < 2 or 2 * M >= N:
        return
    r = rc.find_offset_decreasing(CompositeOracle(PeriodicSet(N, s, P, M)), P, M,
                                  np.random.default_rng(seed))
    assert r.s == s and r.status is RecoveryStatus.RECOVERED


def test_offset_decreasing_wrong_period(example_oracle):
    r = rc.find_offset_decreasing(example_oracle, 10, 7, np.random.default_rng(2))
    assert r.status is not RecoveryStatus.RECOVERED


def test_haar_pairs_validated():
    sig = np.zeros(16, int)
    for bad in ([1], [0, 0], [15], []):
        with pytest.raises(ValueError):
            rc.haar_decide(bad, sig, 16, len(bad), np.random.default_rng(0))
    with pytest.raises(ValueError):
        rc.haar_decide([0, 2], sig, 16, 3, np.random.default_rng(0))


def test_haar_four_dim_exact():
    for tail in ([0, 0], [1, 0], [0, 1], [1, 1]):
        p = rc.haar_lower_half_probability([0], [0, 0] + tail, 4)
        assert p >= 1 - 2 * 1 / 4 - 1e-12


def _pairs(rng, N, M):
    return 2 * rng.choice(N // 2, size=M, replace=False)


def test_haar_decision_rates():
    N, M, trials = 1024, 7, 1000
    rng = np.random.default_rng(11)
    bound = 1 - 2 * M / N
    sigma = math.sqrt(bound * (1 - bound) / trials)
    const = bal = 0
    for _ in range(trials):
        starts = _pairs(rng, N, M)
        sig = rng.integers(0, 2, N)
        sig[starts + 1] = sig[starts]
        const += rc.haar_decide(starts, sig, N, M, rng) is HaarDecision.CONSTANT
        sig[starts + 1] = 1 - sig[starts]
        bal += rc.haar_decide(starts, sig, N, M, rng) is HaarDecision.BALANCED
    assert const / trials >= bound - 4 * sigma
    assert bal / trials >= bound - 4 * sigma


@given(st.integers(0, 2**31), st.booleans())
def test_haar_exact_probability_bound(seed, balanced):
    rng = np.random.default_rng(seed)
    N, M = 256, 5
    starts = _pairs(rng, N, M)
    sig = rng.integers(0, 2, N)
    sig[starts + 1] = (1 - sig[starts]) if balanced else sig[starts]
    p_low = rc.haar_lower_half_probability(starts, sig, N)
    p_right = 1 - p_low if balanced else p_low
    assert p_right >= 1 - 2 * M / N - 1e-12
    full = rc.haar_lower_half_probability(starts, sig, N, full=True)
    # the extra levels only mix the lower half among itself
    assert abs(full - p_low) < 1e-12


def test_classical_sample_size():
    n, _ = rc.classical_sample_size(2**30, 5)
    assert abs(n / (36 * 5) - 1) < 1e-6
    n, wins = rc.classical_sample_size(1024, 7)
    assert n == 36 * 7 * (1 - 7 / 1024) / (1 - 14 / 1024) ** 2
    assert wins == (7 > rc.crossover_threshold(1024, 7))
    with pytest.raises(ValueError):
        rc.classical_sample_size(1024, 512)


@given(st.integers(3, 30).map(lambda n: 1 << n), st.data())
def test_crossover_forms_agree(N, data):
    M = data.draw(st.integers(1, N // 2 - 1))
    n, wins = rc.classical_sample_size(N, M)
    assert n > 0
    thr = rc.crossover_threshold(N, M)
    if abs(M - thr) > 1e-9 * max(M, thr):
        assert wins == (M > thr)
