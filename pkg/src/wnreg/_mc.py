"""Seeded, chunked Monte Carlo plumbing shared by the samplers.

Every estimator in the package splits its sample budget into fixed-size
chunks.  Chunk ``j`` draws from its own ``SeedSequence`` stream, keyed by the
user seed and the chunk index, so the set of random numbers does not depend
on how many workers evaluate the chunks.  Partial moments are merged in chunk
order, which makes the final estimate bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import Callable, TypeVar

import numpy as np

DEFAULT_CHUNK = 8192

T = TypeVar("T")


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream addressed by ``(seed, *key)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class Moments:
    """Running count/mean/M2 triple over the finite samples of a stream."""

    count: int
    mean: float
    m2: float
    nonfinite: int = 0

    @classmethod
    def from_values(cls, values) -> "Moments":
        v = np.asarray(values, dtype=float).ravel()
        finite = np.isfinite(v)
        vf = v[finite]
        n = int(vf.size)
        bad = int(v.size - n)
        if n == 0:
            return cls(0, 0.0, 0.0, bad)
        if np.all(vf == vf[0]):
            # keeps deterministic integrands at exactly zero spread
            return cls(n, float(vf[0]), 0.0, bad)
        mean = float(np.mean(vf))
        m2 = float(np.sum((vf - mean) ** 2))
        return cls(n, mean, m2, bad)

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return Moments(self.count, self.mean, self.m2, self.nonfinite + other.nonfinite)
        if self.count == 0:
            return Moments(other.count, other.mean, other.m2, self.nonfinite + other.nonfinite)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return Moments(n, mean, m2, self.nonfinite + other.nonfinite)

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


def chunk_sizes(total: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if total < 1:
        raise ValueError("sample count must be >= 1")
    if chunk < 1:
        raise ValueError("chunk size must be >= 1")
    full, rem = divmod(total, chunk)
    return [chunk] * full + ([rem] if rem else [])


def map_chunks(fn: Callable[[int, int], T], total: int, chunk: int = DEFAULT_CHUNK,
               workers: int = 1) -> list[T]:
    """Evaluate ``fn(chunk_index, chunk_size)`` for every chunk, in chunk order."""
    sizes = chunk_sizes(total, chunk)
    if workers <= 1 or len(sizes) == 1:
        return [fn(j, n) for j, n in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def reduce_moments(parts: list[Moments]) -> Moments:
    acc = Moments(0, 0.0, 0.0, 0)
    for part in parts:
        acc = acc.merge(part)
    return acc
