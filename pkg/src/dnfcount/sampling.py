"""Instrumented deterministic randomness and O(1) weighted clause sampling.

The generator is xoshiro256** seeded via splitmix64, a fixed constant of
this build so golden tests stay stable. Every draw is charged to a bit
counter under a declared cost model:

    1 bit   per fair coin (buffered word, consumed most-significant first)
    64 bits per Bernoulli(q != 1/2), uniform variate in (0,1],
            weighted clause sample, or bounded-integer draw
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels

__all__ = ["InstrumentedRng", "AliasTable", "build_alias", "sample_clause", "mix_seed"]

_MASK64 = (1 << 64) - 1


def _splitmix64_py(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, *parts: int) -> int:
    """Derive a sub-seed from a master seed and integer labels (splitmix chain)."""
    h = seed & _MASK64
    for p in parts:
        h = _splitmix64_py(h ^ (p & _MASK64))
    return h


class InstrumentedRng:
    """Seeded single-owner randomness source with exact bit accounting.

    Identical seeds yield identical draw sequences; ``bits_consumed``
    grows by exactly the accounting cost of each draw.
    """

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self.state = np.zeros(7, dtype=np.uint64)
        _kernels.seed_state(self.state, np.uint64(self._seed))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def bits_consumed(self) -> int:
        return int(self.state[6])

    def next_bit(self) -> int:
        """Fair bit from the buffered block; cost 1 bit."""
        return int(_kernels.next_bit(self.state))

    def bernoulli(self, q: float) -> int:
        """1 with probability q; cost 1 bit when q == 1/2 exactly, else 64."""
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"q={q} outside [0, 1]")
        return int(_kernels.bernoulli(self.state, q))

    def uniform_q(self) -> float:
        """Uniform variate (u+1)/2^64 in (0, 1]; cost 64 bits."""
        return float(_kernels.uniform_q(self.state))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n); cost 64 bits."""
        if n < 1:
            raise ValueError("n must be positive")
        return int(_kernels.randbelow(self.state, n))

    def _raw_word(self) -> int:
        # Uncharged generator output; internal and test use only.
        return int(_kernels.raw_word(self.state))


@dataclass(frozen=True)
class AliasTable:
    """Constant-time sampler over fixed nonnegative weights (Vose two-queue build)."""

    thresh: np.ndarray
    alias: np.ndarray
    total_weight: float

    @property
    def m(self) -> int:
        return int(self.thresh.shape[0])

    def sample(self, rng: InstrumentedRng) -> int:
        return sample_clause(self, rng)

    def slot_mass(self) -> np.ndarray:
        """Per-index probability implied by the slot structure (for verification)."""
        m = self.m
        mass = np.zeros(m)
        for j in range(m):
            mass[j] += self.thresh[j] / m
            mass[int(self.alias[j])] += (1.0 - self.thresh[j]) / m
        return mass


def build_alias(weights: Sequence[float] | np.ndarray) -> AliasTable:
    """O(m) alias construction; sampling hits index i with probability w_i / sum(w)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] == 0:
        raise ValueError("need a non-empty weight vector")
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise ValueError("weights must be nonnegative")
    total = math.fsum(w.tolist())
    if total <= 0.0:
        raise ValueError("at least one weight must be positive")
    m = w.shape[0]
    scaled = [wi * m / total for wi in w.tolist()]
    err = [0.0] * m  # Neumaier compensation for the redistribution chain
    thresh = np.empty(m, dtype=np.float64)
    alias = np.arange(m, dtype=np.int64)
    small = [i for i, p in enumerate(scaled) if p < 1.0]
    large = [i for i, p in enumerate(scaled) if p >= 1.0]
    while small and large:
        lo = small.pop()
        hi = large.pop()
        thresh[lo] = min(max(scaled[lo], 0.0), 1.0)
        alias[lo] = hi
        # scaled[hi] += scaled[lo] - 1, compensated
        t = scaled[hi] + (scaled[lo] - 1.0)
        if abs(scaled[hi]) >= abs(scaled[lo] - 1.0):
            err[hi] += (scaled[hi] - t) + (scaled[lo] - 1.0)
        else:
            err[hi] += ((scaled[lo] - 1.0) - t) + scaled[hi]
        scaled[hi] = t
        if scaled[hi] + err[hi] < 1.0:
            scaled[hi] += err[hi]
            err[hi] = 0.0
            small.append(hi)
        else:
            large.append(hi)
    for q in (large, small):
        while q:
            thresh[q.pop()] = 1.0
    return AliasTable(thresh=thresh, alias=alias, total_weight=total)


def sample_clause(table: AliasTable, rng: InstrumentedRng) -> int:
    """Index distributed proportional to the table's weights; cost 64 bits."""
    return int(_kernels.sample_slot(rng.state, table.thresh, table.alias))
