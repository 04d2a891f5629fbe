"""Seeded row selection.

Three laws are needed:

* single row ``i`` with probability ``||A_i||**2 / ||A||_F**2``;
* ordered pair ``(j, i)``, ``j != i``, with probability proportional to
  ``||A_j||**2 ||A_i||**2``;
* row ``i != e`` with probability ``||A_i||**2 / (||A||_F**2 - ||A_e||**2)``.

All of them are driven by one uniform variate per underlying draw, mapped to
a row by binary search over the prefix sums of the squared row norms. The
compiled solver loops consume the same uniforms in the same order, so a seed
fixes the index sequence regardless of which code path runs.

Indices returned here are 0-based.
"""
from __future__ import annotations

import bisect

import numpy as np

from .errors import CoherenceUndefinedError
from .linalg import DenseMatrix

DEFAULT_SEED = 42
MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, index: int) -> int:
    """Independent 64-bit seed for trial ``index`` of a run seeded with ``base``."""
    return (int(base) ^ _mix64(((index + 1) * _GOLDEN) & MASK64)) & MASK64


class RngStream:
    """Deterministic stream of uniforms on ``[0, 1)`` with 53-bit resolution.

    Backed by numpy's PCG64 and read in blocks. :meth:`uniform` hands out one
    variate at a time; :meth:`reserve` and :meth:`commit` let compiled loops
    read the buffer directly. Both views advance the same sequence.
    """

    def __init__(self, seed: int = DEFAULT_SEED, block: int = 4096):
        self.seed = int(seed) & MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self._block = int(block)
        self._buf = np.empty(0)
        self._pos = 0
        self._consumed = 0

    @property
    def consumed(self) -> int:
        """Number of variates handed out so far."""
        return self._consumed

    def _refill(self, need: int) -> None:
        tail = self._buf[self._pos:]
        extra = max(self._block, need - tail.size)
        self._buf = np.concatenate([tail, self._gen.random(extra)])
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= self._buf.size:
            self._refill(1)
        u = self._buf[self._pos]
        self._pos += 1
        self._consumed += 1
        return float(u)

    def reserve(self, n: int) -> tuple[np.ndarray, int]:
        """Make at least ``n`` unread variates available; return ``(buffer, position)``."""
        if self._buf.size - self._pos < n:
            self._refill(n)
        return self._buf, self._pos

    def commit(self, pos: int) -> None:
        """Mark everything before ``pos`` in the reserved buffer as consumed."""
        if not self._pos <= pos <= self._buf.size:
            raise ValueError("commit position outside the reserved buffer")
        self._consumed += pos - self._pos
        self._pos = pos


class RowSampler:
    """Prefix sums of squared row norms, shared read-only across runs."""

    __slots__ = ("weights", "cumulative", "total", "_cum_list", "_total_f")

    def __init__(self, A: DenseMatrix):
        self.weights = A.row_sq_norms
        cum = np.cumsum(self.weights)
        cum.flags.writeable = False
        self.cumulative = cum
        self.total = float(cum[-1])
        self._cum_list = cum.tolist()
        self._total_f = self.total

    @property
    def size(self) -> int:
        return len(self._cum_list)

    def index_for(self, u: float) -> int:
        """Row selected by uniform ``u``: first ``i`` with ``cumulative[i] > u * total``."""
        i = bisect.bisect_right(self._cum_list, u * self._total_f)
        n = len(self._cum_list)
        return i if i < n else n - 1


def sample_row(s: RowSampler, rng: RngStream) -> int:
    """Draw ``i`` with probability ``||A_i||**2 / ||A||_F**2`` using exactly one variate."""
    return s.index_for(rng.uniform())


def sample_pair(s: RowSampler, rng: RngStream) -> tuple[int, int]:
    """Draw an ordered pair ``(j, i)``, ``j != i``, with probability proportional to ``w_j w_i``.

    Both indices are redrawn whenever they coincide, which conditions the
    product law on the off-diagonal set.
    """
    if s.size < 2:
        raise CoherenceUndefinedError("pair sampling needs at least two rows")
    while True:
        j = s.index_for(rng.uniform())
        i = s.index_for(rng.uniform())
        if i != j:
            return j, i


def sample_excluding(s: RowSampler, excluded: int, rng: RngStream) -> int:
    """Draw ``i != excluded`` with probability ``w_i / (total - w_excluded)`` by rejection."""
    if s.size < 2:
        raise CoherenceUndefinedError("exclusion sampling needs at least two rows")
    while True:
        i = s.index_for(rng.uniform())
        if i != excluded:
            return i
