"""Loss rank model selection for the dyadic intervals classification problem.

Inputs live on ``{1, ..., 2**N}``. Model ``m`` is the set of binary
classifiers that are constant on each of the ``2**m`` equal-width segments.
Under 0-1 loss the segments decouple, so both the empirical risk minimum and
the Rademacher supremum reduce to per-segment label counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .resampling import LossRankEstimate, SeedLike, as_generator, as_seedspec, draw_rademacher, relabel

__all__ = [
    "IntervalsProblem",
    "LabeledDataset",
    "segment_index",
    "in_true_set",
    "generate_intervals_data",
    "min_empirical_risk",
    "sup_rademacher_term",
    "loss_rank_classification",
    "rc_criterion",
    "criterion_curves",
    "select_model",
    "rademacher_identity_check",
]


@dataclass(frozen=True)
class IntervalsProblem:
    """Synthetic problem: true model ``m0`` on ``2**N`` inputs with margin ``h``."""

    N: int
    m0: int
    h: float
    n: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not 1 <= self.m0 <= self.N:
            raise ValueError(f"m0 must lie in 1..N, got {self.m0}")
        if not 0.0 < self.h < 0.5:
            raise ValueError(f"margin h must lie in (0, 1/2), got {self.h}")
        if self.n < 1:
            raise ValueError("n must be at least 1")


@dataclass(frozen=True)
class LabeledDataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int8)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size and x.min() < 1:
            raise ValueError("inputs are 1-based")
        if np.any((y != 0) & (y != 1)):
            raise ValueError("labels must be binary")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size


def segment_index(x, m: int, N: int) -> np.ndarray:
    """0-based index of the width ``2**(N-m)`` segment containing each input."""
    if not 1 <= m <= N:
        raise ValueError(f"model index must lie in 1..{N}, got {m}")
    x = np.asarray(x, dtype=np.int64)
    if x.size and x.max() > 2**N:
        raise ValueError(f"inputs exceed 2**N = {2**N}")
    return (x - 1) >> (N - m)


def in_true_set(x, m0: int, N: int) -> np.ndarray:
    """Membership in the union of odd-numbered segments of model ``m0``."""
    # odd-numbered in 1-based counting is an even 0-based index
    return segment_index(x, m0, N) % 2 == 0


def generate_intervals_data(problem: IntervalsProblem, seed: SeedLike) -> LabeledDataset:
    rng = as_generator(seed)
    x = rng.integers(1, 2**problem.N + 1, size=problem.n)
    p1 = np.where(in_true_set(x, problem.m0, problem.N), 0.5 + problem.h, 0.5 - problem.h)
    y = (rng.random(problem.n) < p1).astype(np.int8)
    return LabeledDataset(x, y)


def _segment_onehot(data: LabeledDataset, m: int, N: int) -> np.ndarray:
    seg = segment_index(data.x, m, N)
    onehot = np.zeros((len(data), 2**m))
    onehot[np.arange(len(data)), seg] = 1.0
    return onehot


def _min_risk_from_labels(labels, onehot) -> np.ndarray:
    # labels: (..., n); returns (...,) minimum risk
    ones = labels @ onehot
    sizes = onehot.sum(axis=0)
    return np.minimum(ones, sizes - ones).sum(axis=-1) / onehot.shape[0]


def min_empirical_risk(data: LabeledDataset, m: int, N: int) -> float:
    """Smallest training 0-1 error reachable in model ``m``.

    Each segment predicts its majority label, so the minimum is the sum over
    segments of the minority label count, divided by ``n``.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    return float(_min_risk_from_labels(data.y.astype(float), _segment_onehot(data, m, N)))


def sup_rademacher_term(data: LabeledDataset, r, m: int, N: int):
    """Supremum over model ``m`` of ``(1/n) sum_i r_i * [y_i != t(x_i)]``.

    A segment predicting 0 errs on its ``y = 1`` points and vice versa, so each
    segment contributes the larger of the two signed sums. ``r`` may be a single
    sign sequence (float returned) or a ``(B, n)`` stack (array returned).
    """
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != len(data):
        raise ValueError(f"length mismatch: {len(data)} points, {r.shape[-1]} signs")
    onehot = _segment_onehot(data, m, N)
    y = data.y.astype(float)
    err_if_zero = (r * y) @ onehot
    err_if_one = (r * (1.0 - y)) @ onehot
    value = np.maximum(err_if_zero, err_if_one).sum(axis=-1) / len(data)
    return float(value) if np.ndim(value) == 0 else value


def loss_rank_classification(
    data: LabeledDataset, m: int, N: int, B: int = 200, seed: SeedLike = 0
) -> LossRankEstimate:
    """Monte Carlo loss rank of model ``m`` under random label flips.

    Counts the relabelings whose minimum empirical risk is <= the actual one.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    if len(data) == 0:
        raise ValueError("empty dataset")
    onehot = _segment_onehot(data, m, N)
    actual = _min_risk_from_labels(data.y.astype(float), onehot)
    r = draw_rademacher(len(data), seed, size=B)
    fake = _min_risk_from_labels(relabel(data.y, r).astype(float), onehot)
    # risks are multiples of 1/n; compare integer error counts to dodge rounding
    n = len(data)
    hits = int(np.sum(np.rint(fake * n) <= np.rint(actual * n)))
    return LossRankEstimate(hits, B)


def rc_criterion(data: LabeledDataset, m: int, N: int, B: int = 200, seed: SeedLike = 0) -> float:
    """Empirical risk plus a Monte Carlo estimate of the Rademacher penalty."""
    if B < 1:
        raise ValueError("B must be at least 1")
    r = draw_rademacher(len(data), seed, size=B)
    penalty = float(np.mean(sup_rademacher_term(data, r, m, N)))
    return min_empirical_risk(data, m, N) + penalty


_LR_STREAM, _RC_STREAM = 0, 1


def criterion_curves(data: LabeledDataset, N: int, B: int = 200, seed: SeedLike = 0):
    """LR and RC values for every model ``m = 1..N``.

    LR and RC use independent random signs; model ``m`` uses the sub-stream
    ``(criterion, m)`` of ``seed`` so any single curve point is reproducible.

    Returns
    -------
    lr, rc : ndarray of shape (N,)
    """
    base = as_seedspec(seed)
    lr = np.array([loss_rank_classification(data, m, N, B, base.child(_LR_STREAM, m)).value for m in range(1, N + 1)])
    rc = np.array([rc_criterion(data, m, N, B, base.child(_RC_STREAM, m)) for m in range(1, N + 1)])
    return lr, rc


def select_model(data: LabeledDataset, N: int, B: int = 200, seed: SeedLike = 0, criterion: str = "LR") -> int:
    """Model index minimising the chosen criterion (ties go to the smaller m)."""
    base = as_seedspec(seed)
    crit = criterion.upper()
    if crit == "LR":
        values = [loss_rank_classification(data, m, N, B, base.child(_LR_STREAM, m)).hits for m in range(1, N + 1)]
    elif crit == "RC":
        values = [rc_criterion(data, m, N, B, base.child(_RC_STREAM, m)) for m in range(1, N + 1)]
    else:
        raise ValueError(f"unknown criterion {criterion!r}; expected 'LR' or 'RC'")
    return int(np.argmin(values)) + 1


def rademacher_identity_check(y: int, r: int, t_x: int) -> bool:
    """Check ``[y' != t] == [r == 1] - r * [y != t]`` for one point."""
    y_new = (1 + r) // 2 - r * y
    lhs = int(y_new != t_x)
    rhs = int(r == 1) - r * int(y != t_x)
    return lhs == rhs
