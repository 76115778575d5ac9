"""Explicit statevector dynamics at the amplitude level.

States are plain complex numpy vectors of length N = 2**n. Every transform
returns a new array and leaves its input untouched.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import grover_iterations, is_power_of_two
from .oracle import CompositeOracle

NORM_TOL = 1e-10


def _check_state(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1 or not is_power_of_two(state.size):
        raise ValueError(f"state length {state.size} is not a power of 2")
    return state


def norm(state) -> float:
    return float(np.linalg.norm(state))


def uniform_state(N: int) -> np.ndarray:
    if not is_power_of_two(N):
        raise ValueError(f"N={N} is not a power of 2")
    return np.full(N, 1.0 / math.sqrt(N), dtype=complex)


def basis_state(N: int, z: int) -> np.ndarray:
    v = np.zeros(N, dtype=complex)
    v[z] = 1.0
    return v


def oracle_phase_flip(state, oracle: CompositeOracle) -> np.ndarray:
    """Negate the amplitudes on C; counts as one oracle application."""
    return oracle.phase_query(_check_state(state))


def phase_flip_mask(state, mask) -> np.ndarray:
    out = np.array(state, dtype=complex, copy=True)
    out[np.asarray(mask, dtype=bool)] *= -1
    return out


def grover_diffusion(state) -> np.ndarray:
    """Inversion about the mean, (2|psi><psi| - I) with |psi> uniform."""
    state = np.asarray(state, dtype=complex)
    return 2.0 * state.mean() - state


@dataclass(frozen=True)
class GroverParams:
    N: int
    T: int
    theta: float
    k: int
    a_k: float
    b_k: float

    @property
    def marked_probability(self) -> float:
        return math.sin((2 * self.k + 1) * self.theta) ** 2


def grover_params(N: int, T: int) -> GroverParams:
    """Angle, iteration count and closed-form amplitudes for T marked of N."""
    theta, k = grover_iterations(N, T)
    a_k = math.sin((2 * k + 1) * theta) / math.sqrt(T)
    b_k = math.cos((2 * k + 1) * theta) / math.sqrt(N - T)
    return GroverParams(N, T, theta, k, a_k, b_k)


def grover_iterate(state, mask, k: int) -> np.ndarray:
    """k rounds of (phase flip on mask, diffusion) with an explicit mask."""
    out = np.asarray(state, dtype=complex)
    for _ in range(k):
        out = grover_diffusion(phase_flip_mask(out, mask))
    return out


def grover_no_measure(oracle: CompositeOracle, params: GroverParams | None = None) -> np.ndarray:
    """Amplitude amplification from the uniform state, without the final measurement."""
    if params is None:
        params = grover_params(oracle.N, oracle.T)
    if params.N != oracle.N or params.T != oracle.T:
        raise ValueError("GroverParams do not match the oracle")
    state = uniform_state(oracle.N)
    for _ in range(params.k):
        state = grover_diffusion(oracle_phase_flip(state, oracle))
    return state


def apply_qft(state) -> np.ndarray:
    """out[y] = N**-0.5 * sum_z w**(zy) in[z], w = exp(-2 pi i / N)."""
    # numpy's forward FFT uses exp(-2 pi i zy / N), matching the sign convention
    return np.fft.fft(_check_state(state), norm="ortho")


def dft_matrix(N: int) -> np.ndarray:
    """Dense QFT matrix with exact integer exponent reduction (O(N^2))."""
    idx = np.arange(N, dtype=np.int64)
    e = np.outer(idx, idx) % N
    return np.exp(-2j * np.pi * e / N) / math.sqrt(N)


def _haar_scale(levels: np.ndarray) -> np.ndarray:
    # 2**(-c/2) with one rounding: exact power of two times sqrt(1/2) for odd c
    return np.ldexp(1.0, -(levels // 2)) * np.where(levels % 2 == 1, math.sqrt(0.5), 1.0)


def _haar_levels(state: np.ndarray, levels: int) -> np.ndarray:
    """Unnormalized sums/differences for W_levels ... W_1, scaled once at the end."""
    out = state.copy()
    count = np.zeros(state.size, dtype=np.int64)
    size = state.size
    for _ in range(levels):
        block = out[:size].copy()
        half = size // 2
        out[:half] = block[0::2] + block[1::2]
        out[half:size] = block[0::2] - block[1::2]
        count[:size] += 1
        size = half
    return out * _haar_scale(count)


def haar_step(state, level: int = 1) -> np.ndarray:
    """Apply the single factor W_level.

    W_level acts on the leading N / 2**(level-1) entries, writing pairwise sums
    to the first half of that block and pairwise differences to the second.
    """
    state = _check_state(state)
    n = int(math.log2(state.size))
    if not 1 <= level <= n:
        raise ValueError(f"level must be in [1, {n}]")
    size = state.size >> (level - 1)
    out = state.copy()
    out[:size] = _haar_levels(state[:size], 1)
    return out


def apply_haar(state, full: bool = False) -> np.ndarray:
    """W = W_n ... W_1 when full, otherwise W_1 alone."""
    state = _check_state(state)
    n = int(math.log2(state.size))
    return _haar_levels(state, n if full else 1)


def haar_matrix(N: int, full: bool = True) -> np.ndarray:
    cols = [apply_haar(np.eye(N)[:, j], full=full) for j in range(N)]
    return np.column_stack(cols)


def qhs_distribution(oracle: CompositeOracle) -> np.ndarray:
    """Measurement distribution of the first register in the two-register algorithm.

    Pr(y) = (|sum_{x in C} w**xy|^2 + |sum_{x not in C} w**xy|^2) / N^2.
    """
    N = oracle.N
    ind = oracle.mask().astype(float)
    on = np.fft.fft(ind)
    off = np.fft.fft(1.0 - ind)
    oracle.charge(1)
    return (np.abs(on) ** 2 + np.abs(off) ** 2) / float(N) ** 2


def qhs_joint_distribution(oracle: CompositeOracle) -> np.ndarray:
    """Reference path: build the 2N joint state, QFT the first register, marginalize."""
    N = oracle.N
    joint = np.zeros((N, 2), dtype=complex)
    f = oracle.mask().astype(int)
    joint[np.arange(N), f] = 1.0 / math.sqrt(N)
    F = dft_matrix(N)
    out = F @ joint
    return (np.abs(out) ** 2).sum(axis=1)


def probabilities(state) -> np.ndarray:
    return np.abs(np.asarray(state)) ** 2


def measure(state, rng: np.random.Generator) -> int:
    """Sample a label with probability |amp|^2."""
    p = probabilities(state)
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), p.size - 1))


def sample_labels(probs, rng: np.random.Generator, size: int) -> np.ndarray:
    cdf = np.cumsum(probs)
    u = rng.random(size) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def apply_general_unitary(state, alpha, check: bool = True) -> np.ndarray:
    """out[y] = N**-0.5 * sum_z alpha(y, z) in[z].

    alpha is either the N x N coefficient matrix (so that alpha / sqrt(N) is
    unitary) or a callable returning column alpha(., z) for a label z.
    """
    state = _check_state(state)
    N = state.size
    if callable(alpha):
        out = np.zeros(N, dtype=complex)
        for z in np.flatnonzero(state):
            out += np.asarray(alpha(int(z)), dtype=complex) * state[z]
        return out / math.sqrt(N)
    alpha = np.asarray(alpha, dtype=complex)
    if alpha.shape != (N, N):
        raise ValueError(f"alpha must be {N}x{N}")
    if check:
        U = alpha / math.sqrt(N)
        err = np.abs(U.conj().T @ U - np.eye(N)).max()
        if err > 1e-8:
            raise ValueError(f"alpha/sqrt(N) is not unitary (max deviation {err:.2e})")
    return alpha @ state / math.sqrt(N)


def zero_row_sum_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Random alpha (alpha / sqrt(N) unitary) with sum_z alpha(y, z) = 0 for every y != 0.

    Built as QFT . V where V is a random unitary fixing the uniform vector, so
    U maps the uniform state to the delta at 0 like the QFT does.
    """
    u = np.full(N, 1.0 / math.sqrt(N))
    Z = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    Z[:, 0] = u
    Q, R = np.linalg.qr(Z)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))  # first column is +u again
    W = np.eye(N, dtype=complex)
    X = rng.normal(size=(N - 1, N - 1)) + 1j * rng.normal(size=(N - 1, N - 1))
    W[1:, 1:], _ = np.linalg.qr(X)
    V = Q @ W @ Q.conj().T
    return dft_matrix(N) @ V * math.sqrt(N)


def write_probability_csv(path, probs) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "prob"])
        for y, p in enumerate(probs):
            w.writerow([y, repr(float(p))])
