"""Periodic marked sets, Bernoulli error streams and the composite oracle."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .numerics import is_power_of_two


@dataclass(frozen=True)
class PeriodicSet:
    """The marked set {s + r P : 0 <= r < M} inside the labels [0, N)."""

    N: int
    s: int
    P: int
    M: int

    def __post_init__(self):
        N, s, P, M = self.N, self.s, self.P, self.M
        if not is_power_of_two(N):
            raise ValueError(f"N={N} is not a power of 2")
        if M < 1:
            raise ValueError(f"M={M} must be >= 1")
        if P < 1:
            raise ValueError(f"P={P} must be >= 1")
        if P * P > N:
            raise ValueError(f"period P={P} exceeds sqrt(N)={math.sqrt(N):g}")
        if s < 0:
            raise ValueError(f"offset s={s} is negative")
        if s + (M - 1) * P > N - 1:
            raise ValueError(
                f"last element s+(M-1)P={s + (M - 1) * P} overflows N-1={N - 1}")

    def contains(self, x):
        """Membership test; works on ints and integer arrays."""
        x = np.asarray(x, dtype=np.int64)
        d = x - self.s
        hit = (d >= 0) & (d % self.P == 0) & (d // self.P < self.M)
        return bool(hit) if hit.ndim == 0 else hit

    def enumerate(self) -> list[int]:
        return [self.s + r * self.P for r in range(self.M)]

    def mask(self) -> np.ndarray:
        m = np.zeros(self.N, dtype=bool)
        m[self.s:self.s + self.M * self.P:self.P] = True
        return m


def make_periodic(N: int, s: int, P: int, M: int) -> PeriodicSet:
    return PeriodicSet(N, s, P, M)


@dataclass(frozen=True)
class ErrorStream:
    """Error labels G (sorted, disjoint from the periodic set) and their rate."""

    G: tuple[int, ...]
    p: float = 0.0

    @property
    def L(self) -> int:
        return len(self.G)


def sample_error_stream(periodic: PeriodicSet, p: float, rng: np.random.Generator) -> ErrorStream:
    """Include each label outside A independently with probability p.

    L is Binomial(N - M, p); labels inside A are never drawn.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"rate p={p} outside [0, 1]")
    draws = rng.random(periodic.N) < p
    draws &= ~periodic.mask()
    return ErrorStream(tuple(int(x) for x in np.flatnonzero(draws)), p)


def error_stream_from_labels(periodic: PeriodicSet, labels, p: float = 0.0) -> ErrorStream:
    """Wrap an explicit label set, checking range and disjointness from A."""
    G = sorted({int(x) for x in labels})
    for x in G:
        if not 0 <= x < periodic.N:
            raise ValueError(f"error label {x} outside [0, {periodic.N})")
        if periodic.contains(x):
            raise ValueError(f"error label {x} lies in the periodic set")
    return ErrorStream(tuple(G), p)


@dataclass
class CompositeOracle:
    """h = f XOR g: 1 on C = A u G. Every oracle application is counted."""

    periodic: PeriodicSet
    errors: ErrorStream | None = None
    query_count: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)
    _gset: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        G = self.errors.G if self.errors is not None else ()
        for x in G:
            if self.periodic.contains(x):
                raise ValueError(f"error label {x} lies in the periodic set")
        self._gset = frozenset(G)

    @property
    def N(self) -> int:
        return self.periodic.N

    @property
    def M(self) -> int:
        return self.periodic.M

    @property
    def G(self) -> tuple[int, ...]:
        return self.errors.G if self.errors is not None else ()

    @property
    def L(self) -> int:
        return len(self.G)

    @property
    def T(self) -> int:
        return self.M + self.L

    def _charge(self, n: int = 1) -> None:
        with self._lock:
            self.query_count += n

    def evaluate(self, x: int) -> int:
        """h(x) without touching the counter (for bookkeeping and tests)."""
        if not 0 <= x < self.N:
            raise ValueError(f"label {x} outside [0, {self.N})")
        return int(self.periodic.contains(x) or x in self._gset)

    def query(self, x: int) -> int:
        """One classical oracle call."""
        bit = self.evaluate(x)
        self._charge()
        return bit

    def mask(self) -> np.ndarray:
        """Indicator of C over all labels (uncounted)."""
        m = self.periodic.mask()
        if self.G:
            m[list(self.G)] = True
        return m

    def phase_query(self, amps: np.ndarray) -> np.ndarray:
        """One superposed oracle application in phase form: negate amplitudes on C."""
        out = np.array(amps, dtype=complex, copy=True)
        out[self.mask()] *= -1
        self._charge()
        return out

    def charge(self, n: int) -> None:
        """Book n oracle applications performed by a routine we do not simulate."""
        if n < 0:
            raise ValueError("cannot charge a negative query count")
        self._charge(n)

    def to_config(self) -> dict:
        ps = self.periodic
        return {"n_exp": int(math.log2(ps.N)), "s": ps.s, "P": ps.P, "M": ps.M,
                "p": self.errors.p if self.errors is not None else 0.0}
