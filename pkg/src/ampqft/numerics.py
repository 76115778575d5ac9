"""Shared exact and floating-point kernels.

All modular reductions happen on Python/numpy integers before any
trigonometric call, so exponents of arbitrary size lose no precision.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi


class CaseTag(str, enum.Enum):
    """Measurement-label classes for a periodic set."""

    A = "A"  # y = 0
    B = "B"  # Py = 0 mod N, y != 0
    C = "C"  # Py != 0 and MPy != 0 mod N
    D = "D"  # Py != 0 and MPy = 0 mod N


def root_power(N: int, e: int) -> complex:
    """Return w**e with w = exp(-2 pi i / N)."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    r = e % N
    if r == 0:
        return 1.0 + 0.0j
    # exact quarter turns avoid 6e-17 residues in tests comparing against 0
    if (4 * r) % N == 0:
        return (1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j)[4 * r // N]
    ang = -TWO_PI * r / N
    return complex(math.cos(ang), math.sin(ang))


def roots_table(N: int) -> np.ndarray:
    """All N-th roots w**j, j = 0..N-1, for vectorized lookups."""
    j = np.arange(N)
    return np.exp(-1j * TWO_PI * j / N)


def geometric_phase_sum(N: int, M: int, P: int, y: int) -> complex:
    """sum_{r<M} w**(rPy), via the closed form (1 - w**MPy) / (1 - w**Py)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if not 0 <= y < N:
        raise ValueError(f"label y={y} outside [0, {N})")
    py = (P * y) % N
    if py == 0:
        return complex(M, 0.0)
    return (1.0 - root_power(N, M * py)) / (1.0 - root_power(N, py))


def dirichlet_ratio(N: int, M: int, P: int, y) -> float | np.ndarray:
    """sin^2(pi M P y / N) / sin^2(pi P y / N), with limit M^2 at Py = 0 mod N.

    Accepts a scalar label or an integer array of labels.
    """
    y_arr = np.asarray(y, dtype=np.int64)
    py = (P * y_arr) % N
    mpy = (M * py) % N
    num = np.sin(math.pi * mpy / N) ** 2
    den = np.sin(math.pi * py / N) ** 2
    zero = py == 0
    out = np.where(zero, float(M * M), num / np.where(zero, 1.0, den))
    # exact zero when the numerator angle is a multiple of pi
    out = np.where(~zero & (mpy == 0), 0.0, out)
    if np.ndim(y) == 0:
        return float(out)
    return out


def classify_case(N: int, M: int, P: int, y: int) -> CaseTag:
    if not 0 <= y < N:
        raise ValueError(f"label y={y} outside [0, {N})")
    if y == 0:
        return CaseTag.A
    py = (P * y) % N
    if py == 0:
        return CaseTag.B
    if (M * py) % N == 0:
        return CaseTag.D
    return CaseTag.C


def classify_all(N: int, M: int, P: int) -> np.ndarray:
    """Case tags for every label as a numpy array of single-letter strings."""
    y = np.arange(N, dtype=np.int64)
    py = (P * y) % N
    mpy = (M * py) % N
    tags = np.full(N, "C", dtype="<U1")
    tags[(py != 0) & (mpy == 0)] = "D"
    tags[py == 0] = "B"
    tags[0] = "A"
    return tags


def convergents(num: int, den: int) -> list[Fraction]:
    """Continued-fraction convergents of num/den, by increasing denominator."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    if not 0 <= num <= den:
        raise ValueError("expected 0 <= num <= den")
    out: list[Fraction] = []
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    a, b = num, den
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        h_prev, h = h, q * h + h_prev
        k_prev, k = k, q * k + k_prev
        out.append(Fraction(h, k))
    # num/den > 1/2 yields 0/1 then 1/1; keep only the later of equal denominators
    dedup: list[Fraction] = []
    for c in out:
        if not dedup or c.denominator > dedup[-1].denominator:
            dedup.append(c)
        else:
            dedup[-1] = c
    return dedup


def totient(P: int) -> int:
    if P < 1:
        raise ValueError("totient needs P >= 1")
    result, n, p = P, P, 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            result -= result // p
        p += 1
    if n > 1:
        result -= result // n
    return result


def grover_iterations(N: int, T: int) -> tuple[float, int]:
    """theta = asin(sqrt(T/N)) and k = floor(pi / (4 theta)) for 0 < T < N."""
    if not 0 < T < N:
        raise ValueError(f"degenerate Grover angle: need 0 < T < N, got T={T}, N={N}")
    theta = math.asin(math.sqrt(T / N))
    if 2 * T == N:
        # pi/(4 theta) is exactly 1 here but rounds to 0.999...
        return theta, 1
    return theta, math.floor(math.pi / (4.0 * theta))


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0
