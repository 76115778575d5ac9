"""Classical post-processing: period recovery, offset search and the Haar decision rule."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

import numpy as np

from .numerics import convergents
from .oracle import CompositeOracle
from .simulator import apply_haar, grover_iterate, grover_no_measure, grover_params, measure, uniform_state


class RecoveryStatus(str, enum.Enum):
    RECOVERED = "Recovered"
    NEED_RERUN = "NeedRerun"
    FAILED = "Failed"


@dataclass(frozen=True)
class RecoveryResult:
    status: RecoveryStatus
    d: int = 0
    P: int = 0
    tested: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status is RecoveryStatus.RECOVERED


def passes_distance(y: int, N: int, d: int, q: int) -> bool:
    """|y/N - d/q| <= 1/(2 q^2), with denominators cleared."""
    return 2 * q * abs(y * q - d * N) <= N


def recover_period(y: int, N: int, verify: Callable[[int], bool] | None = None,
                   trace: TextIO | None = None) -> RecoveryResult:
    """Read a period candidate off the convergents of y/N.

    Candidates are convergents d/q with 2 <= q <= isqrt(N) passing the distance
    test. Given `verify`, the smallest verified denominator wins and an
    all-rejected candidate list asks for a rerun (the measured numerator shared
    a factor with the period). Without it the largest candidate is returned,
    since every smaller one is a coarser approximation of the same ratio.
    """
    if not 0 <= y < N:
        raise ValueError(f"label y={y} outside [0, {N})")
    qmax = math.isqrt(N)
    tested, cands = [], []
    if y != 0:
        for c in convergents(y, N):
            q, d = c.denominator, c.numerator
            if q > qmax:
                break
            hit = q >= 2 and passes_distance(y, N, d, q)
            tested.append((d, q, hit))
            if hit:
                cands.append((d, q))

    if not cands:
        res = RecoveryResult(RecoveryStatus.FAILED, tested=tuple(tested))
    elif verify is None:
        d, q = cands[-1]
        res = RecoveryResult(RecoveryStatus.RECOVERED, d, q, tuple(tested))
    else:
        res = None
        for d, q in cands:
            if verify(q):
                res = RecoveryResult(RecoveryStatus.RECOVERED, d, q, tuple(tested))
                break
        if res is None:
            d, q = cands[-1]
            res = RecoveryResult(RecoveryStatus.NEED_RERUN, d, q, tuple(tested))

    if trace is not None:
        trace.write(json.dumps({"y": y, "N": N, "convergents": [list(t) for t in tested],
                                "status": res.status.value, "d": res.d, "P": res.P}) + "\n")
    return res


def _probe(oracle: CompositeOracle, x: int) -> int:
    # labels past either end read as 0 without spending a query
    if not 0 <= x < oracle.N:
        return 0
    return oracle.query(x)


def verify_pair(oracle: CompositeOracle, s1: int, P1: int, M: int) -> bool:
    """Three probes: s1, s1 + P1 and s1 + (M-1) P1 must all be marked."""
    if P1 < 1 or M < 1:
        return False
    for x in (s1, s1 + P1, s1 + (M - 1) * P1):
        if not _probe(oracle, x):
            return False
    return True


def verify_period(oracle: CompositeOracle, s: int, P1: int, M: int) -> bool:
    return verify_pair(oracle, s, P1, M)


def register_size(M: int) -> int:
    """Smallest power of two >= M."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return 1 << (M - 1).bit_length()


def _shift_mask(oracle: CompositeOracle, x1: int, P: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.arange(size)
    g = np.maximum(0, x1 - (xs + 1) * P)
    hit = np.array([oracle.evaluate(int(v)) for v in g], dtype=bool)
    return g, hit


@dataclass
class OffsetResult:
    s: int | None
    rounds: int
    status: RecoveryStatus
    path: list[int] = field(default_factory=list)
    queries: int = 0


def _first_member(oracle: CompositeOracle, M: int, rng, max_attempts: int) -> int | None:
    params = grover_params(oracle.N, oracle.T)
    for _ in range(max_attempts):
        x = measure(grover_no_measure(oracle, params), rng)
        if oracle.query(x):
            return x
    return None


def find_offset_decreasing(oracle: CompositeOracle, P: int, M: int, rng: np.random.Generator,
                           max_rounds: int = 256) -> OffsetResult:
    """Walk down the marked set with small Grover searches until the offset is reached.

    Each round amplifies the register labels x whose image g(x) = max(0, x1 - (x+1)P)
    is marked and measures a strictly smaller member. The iteration count uses
    the true mark count of the register, which the simulation can see.
    """
    start = oracle.query_count
    x = _first_member(oracle, M, rng, max_rounds)
    if x is None:
        return OffsetResult(None, 0, RecoveryStatus.FAILED, [], oracle.query_count - start)
    size = register_size(M)
    path, rounds = [x], 0
    while rounds < max_rounds:
        if x - P < 0 or not oracle.query(x - P):
            ok = verify_pair(oracle, x, P, M)
            status = RecoveryStatus.RECOVERED if ok else RecoveryStatus.NEED_RERUN
            return OffsetResult(x, rounds, status, path, oracle.query_count - start)
        rounds += 1
        g, hit = _shift_mask(oracle, x, P, size)
        R = int(hit.sum())
        if R == size:
            probs = np.full(size, 1.0 / size)
        else:
            k = grover_params(size, R).k
            state = grover_iterate(uniform_state(size) if size > 1 else np.ones(1, complex), hit, k)
            oracle.charge(k)
            probs = np.abs(state) ** 2
        j = int(rng.choice(size, p=probs / probs.sum()))
        if hit[j] and g[j] < x:
            x = int(g[j])
            path.append(x)
    return OffsetResult(None, rounds, RecoveryStatus.FAILED, path, oracle.query_count - start)


@dataclass
class CountingResult:
    s: int
    R: int
    charged: int
    status: RecoveryStatus


def counting_cost(R: int, size: int) -> int:
    return math.ceil(math.sqrt((R + 1) * (size - R + 1)))


def find_offset_counting(oracle: CompositeOracle, P: int, M: int, x1: int) -> CountingResult:
    """Offset from one measured member x1 via an exact count of marked shifts.

    The count is done classically and billed to the oracle at the cost of exact
    quantum counting, ceil(sqrt((R+1)(T-R+1))).
    """
    size = register_size(M)
    _, hit = _shift_mask(oracle, x1, P, size)
    R = int(hit.sum())
    cost = counting_cost(R, size)
    oracle.charge(cost)
    s = x1 - R * P
    ok = s >= 0 and verify_pair(oracle, s, P, M)
    return CountingResult(s, R, cost, RecoveryStatus.RECOVERED if ok else RecoveryStatus.NEED_RERUN)


class HaarDecision(str, enum.Enum):
    CONSTANT = "Constant"
    BALANCED = "Balanced"


def validate_pairs(pair_starts: Iterable[int], N: int) -> list[int]:
    starts = sorted(int(i) for i in pair_starts)
    if not starts:
        raise ValueError("need at least one pair")
    if len(set(starts)) != len(starts):
        raise ValueError("pairs overlap")
    for i in starts:
        if i % 2:
            raise ValueError(f"pair start {i} is not even-aligned")
        if not 0 <= i < N - 1:
            raise ValueError(f"pair {{{i}, {i + 1}}} outside [0, {N})")
    return starts


def _haar_state(pair_starts, signal, N: int, full: bool) -> np.ndarray:
    starts = validate_pairs(pair_starts, N)
    signal = np.asarray(signal, dtype=np.int64)
    if signal.shape != (N,):
        raise ValueError(f"signal must have length {N}")
    mask = np.zeros(N, dtype=bool)
    for i in starts:
        mask[i] = mask[i + 1] = True
    k = grover_params(N, 2 * len(starts)).k
    state = grover_iterate(uniform_state(N), mask, k)
    state = state * np.where(signal % 2 == 1, -1.0, 1.0)
    return apply_haar(state, full=full)


def haar_lower_half_probability(pair_starts, signal, N: int, full: bool = False) -> float:
    """Exact probability that the measured label lies in [0, N/2)."""
    out = _haar_state(pair_starts, signal, N, full)
    return float(np.sum(np.abs(out[: N // 2]) ** 2))


def haar_decide(pair_starts, signal, N: int, M: int, rng: np.random.Generator,
                full: bool = False) -> HaarDecision:
    """Amplify the 2M paired labels, sign-encode the signal, apply W_1 and measure."""
    starts = validate_pairs(pair_starts, N)
    if len(starts) != M:
        raise ValueError(f"expected {M} pairs, got {len(starts)}")
    z = measure(_haar_state(starts, signal, N, full), rng)
    return HaarDecision.CONSTANT if z < N // 2 else HaarDecision.BALANCED


def classical_sample_size(N: int, M: int) -> tuple[float, bool]:
    """Classical sample count for the constant-vs-balanced test and whether amplification wins."""
    if not 0 < 2 * M < N:
        raise ValueError("need 0 < M < N/2")
    r = M / N
    n = 36 * M * (1 - r) / (1 - 2 * r) ** 2
    return n, n > math.sqrt(N / (2 * M))


def crossover_threshold(N: int, M: int) -> float:
    """Right-hand side of the equivalent form M > threshold of the crossover test."""
    r = M / N
    return N ** (1 / 3) * (1 - 2 * r) ** (4 / 3) / (2592 ** (1 / 3) * (1 - r) ** (2 / 3))
