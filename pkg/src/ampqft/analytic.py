"""Closed-form measurement probabilities, ratio bounds, moments and work factors.

Tables are evaluated per label from the case classification; nothing here
touches a statevector except `uncertainty_product`, which inspects one.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .numerics import CaseTag, classify_all, dirichlet_ratio, grover_iterations, roots_table, totient


class AlgKind(str, enum.Enum):
    AMPLIFIED_QFT = "amplified-qft"
    QFT = "qft"
    QHS = "qhs"


def grover_angle(N: int, T: int) -> tuple[float, int]:
    return grover_iterations(N, T)


def amplification_factor(N: int, T: int) -> float:
    """tan^2(theta) sin^2(2 k theta), the common Case-B factor."""
    theta, k = grover_angle(N, T)
    return math.tan(theta) ** 2 * math.sin(2 * k * theta) ** 2


def _validate(N, M, P, s, G):
    from .oracle import PeriodicSet, error_stream_from_labels

    ps = PeriodicSet(N, s, P, M)
    if G is not None:
        G = error_stream_from_labels(ps, G).G
    return G


def _geometric_sums(N: int, M: int, P: int, ys: np.ndarray, roots: np.ndarray) -> np.ndarray:
    py = (P * ys) % N
    mpy = (M * py) % N
    safe = np.where(py == 0, 1, py)
    g = (1.0 - roots[mpy]) / (1.0 - roots[safe])
    g = np.where(mpy == 0, 0.0, g)
    return np.where(py == 0, complex(M), g)


def error_sums(N: int, G: Sequence[int], ys: np.ndarray, roots: np.ndarray | None = None) -> np.ndarray:
    """sum_{z in G} w**(zy) for each label y, by direct summation."""
    if roots is None:
        roots = roots_table(N)
    ys = np.asarray(ys, dtype=np.int64)
    if len(G) == 0:
        return np.zeros(ys.shape, dtype=complex)
    z = np.asarray(G, dtype=np.int64)
    out = np.zeros(ys.shape, dtype=complex)
    # chunk over G to bound memory at O(N * chunk)
    for i in range(0, z.size, 256):
        out += roots[(np.outer(ys, z[i:i + 256])) % N].sum(axis=1)
    return out


@dataclass
class ProbTable:
    alg: AlgKind
    N: int
    M: int
    P: int
    s: int
    G: tuple[int, ...] | None
    probs: np.ndarray
    cases: np.ndarray

    def write_csv(self, path, simulated=None) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        sim = np.full(self.N, np.nan) if simulated is None else np.asarray(simulated)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "case", "analytic_prob", "simulated_prob", "abs_diff"])
            for y in range(self.N):
                a, b = float(self.probs[y]), float(sim[y])
                w.writerow([y, self.cases[y], repr(a), repr(b), repr(abs(a - b))])


def analytic_table(alg: AlgKind | str, N: int, M: int, P: int, s: int,
                   G: Sequence[int] | None = None) -> ProbTable:
    """Per-label Pr(y) for one algorithm.

    G=None selects the error-free tables; any sequence (even empty) selects the
    error-stream tables with T = M + |G| driving the Grover angle.
    """
    alg = AlgKind(alg)
    G = _validate(N, M, P, s, G)
    ys = np.arange(N, dtype=np.int64)
    cases = classify_all(N, M, P)
    probs = np.zeros(N)
    is_b, is_c = cases == "B", cases == "C"

    if G is None:
        R = dirichlet_ratio(N, M, P, ys)
        if alg is AlgKind.AMPLIFIED_QFT:
            theta, k = grover_angle(N, M)
            F = math.tan(theta) ** 2 * math.sin(2 * k * theta) ** 2
            probs[0] = math.cos(2 * k * theta) ** 2
            probs[is_b] = F
            probs[is_c] = F / M**2 * R[is_c]
        elif alg is AlgKind.QFT:
            probs[0] = (1 - 2 * M / N) ** 2
            probs[is_b] = 4 * M**2 / N**2
            probs[is_c] = 4 / N**2 * R[is_c]
        else:
            probs[0] = 1 - 2 * M * (N - M) / N**2
            probs[is_b] = 2 * M**2 / N**2
            probs[is_c] = 2 / N**2 * R[is_c]
        return ProbTable(alg, N, M, P, s, None, probs, cases)

    T = M + len(G)
    roots = roots_table(N)
    phase_s = roots[(s * ys) % N]
    gsum = error_sums(N, G, ys, roots)
    geo = _geometric_sums(N, M, P, ys, roots)
    # the bracketed random-set term, unnormalized by T
    inner = np.where(cases == "D", 0.0, phase_s * geo) + gsum
    mod2 = np.abs(inner) ** 2
    nz = cases != "A"
    if alg is AlgKind.AMPLIFIED_QFT:
        theta, k = grover_angle(N, T)
        F = math.tan(theta) ** 2 * math.sin(2 * k * theta) ** 2
        probs[0] = math.cos(2 * k * theta) ** 2
        probs[nz] = F * mod2[nz] / T**2
    elif alg is AlgKind.QFT:
        probs[0] = (1 - 2 * T / N) ** 2
        probs[nz] = 4 / N**2 * mod2[nz]
    else:
        probs[0] = 1 - 2 * T * (N - T) / N**2
        probs[nz] = 2 / N**2 * mod2[nz]
    return ProbTable(alg, N, M, P, s, tuple(G), probs, cases)


def analytic_prob(alg: AlgKind | str, N: int, M: int, P: int, s: int,
                  G: Sequence[int] | None, y: int) -> float:
    if not 0 <= y < N:
        raise ValueError(f"label y={y} outside [0, {N})")
    return float(analytic_table(alg, N, M, P, s, G).probs[y])


class RatioBounds(NamedTuple):
    lower: float | Fraction
    upper: float | Fraction


def pr_ratio_bounds(alg_pair: AlgKind | str, N: int, T: int, exact: bool = False) -> RatioBounds:
    """Sandwich on Pr_amplified(y) / Pr_alg(y) for alg in {QFT, QHS}.

    With exact=True the bounds are Fractions and their difference is exactly
    1 (QFT) or 2 (QHS).
    """
    alg = AlgKind(alg_pair)
    if alg is AlgKind.AMPLIFIED_QFT:
        raise ValueError("pair must name the non-amplified algorithm (qft or qhs)")
    if not 0 < 2 * T < N:
        raise ValueError(f"need 0 < T < N/2, got T={T}, N={N}")
    num = Fraction if exact else float
    c = num(N, 4 * T) if exact else N / (4 * T)
    if alg is AlgKind.QHS:
        c = 2 * c
    upper = c * (num(N, N - T) if exact else N / (N - T))
    shrink = (1 - num(2 * T, N)) ** 2 if exact else (1 - 2 * T / N) ** 2
    return RatioBounds(upper * shrink, upper)


def success_set(N: int, P: int) -> list[int]:
    """Labels y with |y/N - d/P| <= 1/(2P^2) for some d coprime to P (exact integers)."""
    if P < 2:
        raise ValueError("success set is only defined here for P >= 2")
    if P * P > N:
        raise ValueError(f"P={P} exceeds sqrt(N)")
    out = []
    for y in range(N):
        d0 = (y * P) // N
        for d in (d0, d0 + 1):
            if math.gcd(d, P) == 1 and 2 * P * abs(y * P - d * N) <= N:
                out.append(y)
                break
    return out


def success_probability(alg: AlgKind | str, N: int, M: int, P: int, s: int,
                        G: Sequence[int] | None = None) -> float:
    table = analytic_table(alg, N, M, P, s, G)
    return float(table.probs[success_set(N, P)].sum())


class WorkFactor(NamedTuple):
    expected_lower: float
    variance_lower: float
    work_per_run: int


def expected_trials(alg: AlgKind | str, N: int, M: int) -> WorkFactor:
    """Geometric-trial lower bounds on runs until a successful label.

    For the amplified algorithm the per-run work is ceil(pi / (4 theta)) + 1
    transform applications and the run count is only bounded below by 1.
    """
    alg = AlgKind(alg)
    if not 0 < 2 * M < N:
        raise ValueError("need 0 < M < N/2")
    if alg is AlgKind.QFT:
        e = N / (4 * M)
        v = (N / (N - M)) ** 2 * ((N - 2 * M) / (4 * M)) ** 2
        return WorkFactor(e, v, 1)
    if alg is AlgKind.QHS:
        e = N / (2 * M)
        v = (N / (N - M)) ** 2 * ((N - M) ** 2 + M**2) / (4 * M**2)
        return WorkFactor(e, v, 1)
    theta, _ = grover_angle(N, M)
    return WorkFactor(1.0, 0.0, math.ceil(math.pi / (4 * theta)) + 1)


def moment_formula(case: CaseTag | str, kind: str, M: int, L: int,
                   N: int | None = None, P: int | None = None, y: int | None = None) -> float:
    """Mean or variance of the normalized random-set modulus for Cases B, C, D."""
    case = CaseTag(case)
    if kind not in ("mean", "variance"):
        raise ValueError("kind must be 'mean' or 'variance'")
    if case is CaseTag.A:
        raise ValueError("Case A has no random-set term")
    if L < 0 or M < 1:
        raise ValueError("need L >= 0 and M >= 1")
    T = L + M
    if case is CaseTag.B:
        lead = M * M
    elif case is CaseTag.D:
        lead = 0
    else:
        if N is None or P is None or y is None:
            raise ValueError("Case C needs N, P and y")
        if (P * y) % N == 0:
            raise ValueError("Case C requires Py != 0 mod N")
        lead = dirichlet_ratio(N, M, P, y)
    if kind == "mean":
        return (lead + L) / T**2
    return (L * L - L + 2 * lead * L) / T**4


def min_l(N: int, M: int) -> float:
    """Error-set size minimizing the Case-B expected-probability upper bound."""
    if M < 2:
        raise ValueError("MinL needs M >= 2")
    return -M * M + math.sqrt(M * (M - 1) * (M * (M - 1) + N))


def min_l_objective(N: int, M: int, L):
    """f(L) = (L + M^2) / ((N - L - M)(L + M))."""
    L = np.asarray(L, dtype=float)
    return (L + M * M) / ((N - L - M) * (L + M))


def min_l_partial_fractions(N: int, M: int) -> tuple[float, float]:
    """Constants (A, B) with f(L) = A / (N - L - M) + B / (L + M)."""
    B = M * (M - 1) / N
    return 1 + B, B


def min_l_quadratic(N: int, M: int, L: float) -> float:
    """Numerator of f'(L): L^2 + 2 M^2 L + M (2 M^2 + N - M - N M)."""
    return L * L + 2 * M * M * L + M * (2 * M * M + N - M - N * M)


def general_amplification_bound(alpha: float, M: int, N: int) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    r = M / N
    # expanded square, so the endpoints come out as exactly r and 1 - r
    return alpha * r + (1 - alpha) * (1 - r) + 2 * math.sqrt(alpha * r * (1 - alpha) * (1 - r))


def general_amp_ratio(N: int, T: int) -> float:
    """Amplified over plain amplitude after any U whose row y sums to zero: (N / -2T) tan(theta) sin(2k theta)."""
    theta, k = grover_angle(N, T)
    return N / (-2 * T) * math.tan(theta) * math.sin(2 * k * theta)


SUPPORT_THRESHOLD = 1e-18


class SupportCheck(NamedTuple):
    N_y: int
    holds: bool
    N_y_exact: int | None


def exact_support_count(N: int, M: int, P: int) -> int:
    """Nonzero post-QFT labels for the error-free amplified state, by modular counting."""
    _, k = grover_angle(N, M)
    if k == 0:
        # no amplification: the state is uniform and only y = 0 survives
        return 1
    cases = classify_all(N, M, P)
    count = N - int((cases == "D").sum())
    if 2 * M == N:
        # cos(2 k theta) = 0 exactly only for theta = pi/4, k = 1
        count -= 1
    return count


def uncertainty_product(state_before_qft, M: int, P: int | None = None) -> SupportCheck:
    from .simulator import apply_qft

    state = np.asarray(state_before_qft, dtype=complex)
    N = state.size
    probs = np.abs(apply_qft(state)) ** 2
    n_y = int((probs > SUPPORT_THRESHOLD).sum())
    exact = exact_support_count(N, M, P) if P is not None else None
    return SupportCheck(n_y, M * n_y >= N, exact)


def totient_repeat_estimate(P: int) -> float:
    """phi(P)/P; the expected number of reruns for a coprime numerator is its inverse."""
    return totient(P) / P
