"""Partitioned flat parameter vectors and the elementwise primitives built on them.

Everything downstream (optimizers, the curvature booster, the MLP) works on a
single flat float64 vector carved into named contiguous per-tensor segments.
Per-tensor statistics (quantiles, scaling coefficients) address exactly one
segment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised for invalid configuration values (bad bounds, bad quantile, ...)."""


@dataclass(frozen=True)
class Partition:
    name: str
    offset: int
    length: int


class PartitionedParams:
    """A flat float64 vector with named, contiguous, disjoint segments.

    Partitions must cover [0, d) exactly, in order. Single-owner: one
    instance per optimizer run.
    """

    def __init__(self, data: np.ndarray, partitions: Sequence[tuple[str, int, int] | Partition]):
        self.data = np.asarray(data, dtype=np.float64)
        if self.data.ndim != 1:
            raise ValueError("parameter vector must be one-dimensional")
        parts = []
        for p in partitions:
            parts.append(p if isinstance(p, Partition) else Partition(*p))
        expected = 0
        names = set()
        for p in parts:
            if p.offset != expected:
                raise ValueError(f"partition {p.name!r} at offset {p.offset}, expected {expected}")
            if p.length < 0:
                raise ValueError(f"partition {p.name!r} has negative length")
            if p.name in names:
                raise ValueError(f"duplicate partition name {p.name!r}")
            names.add(p.name)
            expected += p.length
        if expected != self.data.size:
            raise ValueError(f"partitions cover {expected} entries, vector has {self.data.size}")
        self.partitions: tuple[Partition, ...] = tuple(parts)

    @classmethod
    def from_segments(cls, segments: Iterable[tuple[str, np.ndarray]]) -> "PartitionedParams":
        names, arrays = [], []
        for name, arr in segments:
            names.append(name)
            arrays.append(np.asarray(arr, dtype=np.float64).ravel())
        data = np.concatenate(arrays) if arrays else np.empty(0)
        parts = []
        off = 0
        for name, arr in zip(names, arrays):
            parts.append(Partition(name, off, arr.size))
            off += arr.size
        return cls(data, parts)

    @property
    def dim(self) -> int:
        return self.data.size

    def names(self) -> list[str]:
        return [p.name for p in self.partitions]

    def view(self, name: str) -> np.ndarray:
        for p in self.partitions:
            if p.name == name:
                return self.data[p.offset:p.offset + p.length]
        raise KeyError(name)

    def segment(self, vector: np.ndarray, name: str) -> np.ndarray:
        """Slice an arbitrary d-vector with this layout's named partition."""
        for p in self.partitions:
            if p.name == name:
                return vector[p.offset:p.offset + p.length]
        raise KeyError(name)


def clamp_elementwise(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Project every entry of x into [lo, hi].

    Requires 0 < lo <= hi; curvature estimates must stay positive and bounded.
    """
    if not (0.0 < lo <= hi < np.inf):
        raise ConfigError(f"clamp bounds must satisfy 0 < lo <= hi < inf, got ({lo}, {hi})")
    return np.clip(np.asarray(x, dtype=np.float64), lo, hi)


def low_tail_quantile(x: np.ndarray, omega: float) -> float | None:
    """Nearest-rank-lower omega-quantile: sorted value at index floor(omega*(n-1)).

    Returns None for empty input; the caller decides the fallback.
    """
    if not (0.0 < omega < 1.0):
        raise ConfigError(f"quantile level must lie in (0, 1), got {omega}")
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        return None
    idx = int(np.floor(omega * (x.size - 1)))
    return float(np.sort(x)[idx])


def masked_divide(num: np.ndarray, den: np.ndarray, eps: float) -> np.ndarray:
    """Elementwise num / (den + eps) with a strictly positive stabilizer."""
    if eps <= 0.0:
        raise ConfigError(f"stabilizer must be positive, got {eps}")
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    if num.shape != den.shape:
        raise ValueError(f"shape mismatch: {num.shape} vs {den.shape}")
    return num / (den + eps)
