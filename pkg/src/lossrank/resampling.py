"""Seeded randomness shared by every criterion.

All random draws in the package flow through :class:`SeedSpec`, which maps a
``(master_seed, stream_id, path)`` triple onto an independent Philox stream.
Replications get distinct ``stream_id`` values; sub-tasks inside a replication
use :meth:`SeedSpec.child`. Because each stream is addressed by its key rather
than by draw order, results do not depend on how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "SeedSpec",
    "LossRankEstimate",
    "as_generator",
    "as_seedspec",
    "draw_rademacher",
    "relabel",
    "bootstrap_rows",
    "bootstrap_table",
    "bootstrap_tables",
]


@dataclass(frozen=True)
class SeedSpec:
    """Address of one reproducible random stream.

    Parameters
    ----------
    master_seed : int
        Unsigned 64-bit experiment seed.
    stream_id : int
        Replicate index.
    path : tuple of int
        Optional nested keys for sub-streams within a replicate.
    """

    master_seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.stream_id < 0 or any(p < 0 for p in self.path):
            raise ValueError("stream ids must be nonnegative")

    def child(self, *keys: int) -> "SeedSpec":
        """Return the sub-stream addressed by ``keys`` below this one."""
        return SeedSpec(self.master_seed, self.stream_id, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))


SeedLike = Union[SeedSpec, np.random.Generator, int]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Coerce a SeedSpec, bare integer or existing Generator to a Generator.

    A Generator is passed through untouched so callers can thread one stream
    through several operations.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    if isinstance(seed, (int, np.integer)):
        return SeedSpec(int(seed)).generator()
    raise TypeError(f"cannot build a random generator from {type(seed).__name__}")


def as_seedspec(seed: SeedSpec | int) -> SeedSpec:
    """Coerce to a SeedSpec; needed wherever sub-streams must be addressable."""
    if isinstance(seed, SeedSpec):
        return seed
    if isinstance(seed, (int, np.integer)):
        return SeedSpec(int(seed))
    raise TypeError(f"expected a SeedSpec or integer seed, got {type(seed).__name__}")


@dataclass(frozen=True)
class LossRankEstimate:
    """Monte Carlo loss rank: the fraction of resamples fitting at least as well.

    Attributes
    ----------
    hits : int
        Number of resamples whose fitted loss is <= the actual fitted loss.
    B : int
        Number of resamples.
    """

    hits: int
    B: int

    def __post_init__(self):
        if self.B < 1 or not 0 <= self.hits <= self.B:
            raise ValueError(f"invalid loss rank bookkeeping: hits={self.hits}, B={self.B}")

    @property
    def value(self) -> float:
        return self.hits / self.B

    @property
    def stderr(self) -> float:
        p = self.value
        return float(np.sqrt(p * (1.0 - p) / self.B))

    def __float__(self) -> float:
        return self.value


def _check_count(n, name="n"):
    if int(n) != n or n < 1:
        raise ValueError(f"{name} must be a positive integer, got {n}")
    return int(n)


def draw_rademacher(n: int, seed: SeedLike, size: int | None = None) -> np.ndarray:
    """Draw independent random signs.

    Parameters
    ----------
    n : int
        Sequence length.
    seed : SeedSpec or Generator
    size : int, optional
        If given, draw ``size`` independent sequences as a ``(size, n)`` array.

    Returns
    -------
    ndarray of int8 with entries in {-1, +1}.
    """
    n = _check_count(n)
    rng = as_generator(seed)
    shape = (n,) if size is None else (_check_count(size, "size"), n)
    bits = rng.integers(0, 2, size=shape, dtype=np.int8)
    return (2 * bits - 1).astype(np.int8)


def relabel(labels, r) -> np.ndarray:
    """Flip binary labels where the sign is +1.

    Computes ``(1 + r) / 2 - r * y``: a +1 sign flips the label, a -1 sign keeps
    it. ``r`` may be a single sequence or a ``(B, n)`` stack.
    """
    y = np.asarray(labels)
    r = np.asarray(r)
    if r.shape[-1] != y.shape[-1]:
        raise ValueError(f"length mismatch: {y.shape[-1]} labels, {r.shape[-1]} signs")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("labels must be binary")
    if np.any((r != 1) & (r != -1)):
        raise ValueError("signs must be -1 or +1")
    return np.where(r == 1, 1 - y, y).astype(np.int8)


def bootstrap_rows(n: int, seed: SeedLike, size: int | None = None) -> np.ndarray:
    """Efron bootstrap: ``n`` row indices drawn uniformly with replacement.

    Indices are 0-based. With ``size`` given, returns a ``(size, n)`` array.
    """
    n = _check_count(n)
    rng = as_generator(seed)
    shape = (n,) if size is None else (_check_count(size, "size"), n)
    return rng.integers(0, n, size=shape)


def bootstrap_tables(counts, B: int, seed: SeedLike) -> np.ndarray:
    """Draw ``B`` bootstrap resamples of a table of cell counts.

    Each resample re-draws the ``n`` underlying observations with replacement,
    so it is a multinomial(n, counts / n) table with the same total.

    Returns
    -------
    ndarray of shape ``(B, *counts.shape)``.
    """
    counts = np.asarray(counts)
    if counts.size == 0:
        raise ValueError("empty table")
    if np.any(counts < 0) or np.any(counts != np.floor(counts)):
        raise ValueError("cell counts must be nonnegative integers")
    flat = counts.reshape(-1).astype(np.int64)
    n = int(flat.sum())
    if n < 1:
        raise ValueError("table total must be at least 1")
    B = _check_count(B, "B")
    rng = as_generator(seed)
    rows = rng.integers(0, n, size=(B, n))
    # observation j belongs to the cell whose cumulative count first exceeds j
    cells = np.searchsorted(np.cumsum(flat), rows, side="right")
    offsets = (np.arange(B) * flat.size)[:, None]
    out = np.bincount((cells + offsets).ravel(), minlength=B * flat.size)
    return out.reshape((B,) + counts.shape)


def bootstrap_table(counts, seed: SeedLike) -> np.ndarray:
    """One bootstrap resample of a table of cell counts (total preserved)."""
    return bootstrap_tables(counts, 1, seed)[0]
