"""
Random subsampling of rating matrices.

A sample picks users and items uniformly without replacement, keeps the ratings
inside the selection, then prunes users and items below the minimum rating
counts until nothing changes.  The pruned result is the largest sub-matrix of
the selection meeting both minimums, so it does not depend on pruning order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .ratings import RatingMatrix, RdcProfile, rdc_profile
from .rng import SALT_TARGETS, derive, make_rng, mix64

_log = logging.getLogger(__name__)


class DegenerateSampleError(ValueError):
    def __init__(self, seed: int, reason: str = "pruning emptied the matrix"):
        self.seed = seed
        super().__init__(f"degenerate sample (seed {seed}): {reason}")


class SamplingBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplePlan:
    n_samples: int
    m_range: tuple[int, int]
    n_range: tuple[int, int]
    min_ratings_per_row: int = 1
    min_ratings_per_col: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        for name, (lo, hi) in (("m_range", self.m_range), ("n_range", self.n_range)):
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must satisfy 1 <= min <= max, got {lo}..{hi}")
        if self.min_ratings_per_row < 1 or self.min_ratings_per_col < 1:
            raise ValueError("minimum ratings per row/column must be at least 1")

    def check_parent(self, parent: RatingMatrix):
        if self.m_range[1] > parent.m:
            raise ValueError(f"m_range max {self.m_range[1]} exceeds parent users {parent.m}")
        if self.n_range[1] > parent.n:
            raise ValueError(f"n_range max {self.n_range[1]} exceeds parent items {parent.n}")


@dataclass(frozen=True)
class SampledUrm:
    matrix: RatingMatrix
    requested_m: int
    requested_n: int
    profile: RdcProfile
    sample_seed: int
    index: int = 0
    attempt: int = 0


def prune(users, items, m: int, n: int, min_row: int, min_col: int, users_first: bool = True) -> np.ndarray:
    """
    Boolean keep-mask over triples after fixed-point pruning.

    ``users_first`` only changes the order of the alternation; the fixed point
    is the same either way.
    """
    keep = np.ones(len(users), dtype=bool)
    while True:
        changed = False
        for step in ((0, 1) if users_first else (1, 0)):
            if step == 0:
                counts = np.bincount(users[keep], minlength=m)
                drop = keep & (counts[users] < min_row)
            else:
                counts = np.bincount(items[keep], minlength=n)
                drop = keep & (counts[items] < min_col)
            if drop.any():
                keep &= ~drop
                changed = True
        if not changed:
            return keep


def sample_one(
    parent: RatingMatrix,
    m_target: int,
    n_target: int,
    min_per_row: int = 1,
    min_per_col: int = 1,
    seed: int = 0,
) -> SampledUrm:
    if not (1 <= m_target <= parent.m and 1 <= n_target <= parent.n):
        raise ValueError(f"target {m_target}x{n_target} does not fit parent {parent.m}x{parent.n}")
    rng = make_rng(seed)
    sel_users = np.sort(rng.choice(parent.m, size=m_target, replace=False))
    sel_items = np.sort(rng.choice(parent.n, size=n_target, replace=False))

    user_in = np.zeros(parent.m, dtype=bool)
    user_in[sel_users] = True
    item_in = np.zeros(parent.n, dtype=bool)
    item_in[sel_items] = True
    mask = user_in[parent.users] & item_in[parent.items]
    users, items, values = parent.users[mask], parent.items[mask], parent.values[mask]

    keep = prune(users, items, parent.m, parent.n, min_per_row, min_per_col)
    users, items, values = users[keep], items[keep], values[keep]
    if len(values) == 0:
        raise DegenerateSampleError(seed)

    kept_users, new_u = np.unique(users, return_inverse=True)
    kept_items, new_i = np.unique(items, return_inverse=True)
    matrix = RatingMatrix(
        len(kept_users),
        len(kept_items),
        new_u,
        new_i,
        values,
        parent.scale,
        source_id=f"{parent.source_id}#seed={seed}",
        metadata={"parent_users": kept_users, "parent_items": kept_items, "seed": seed},
    )
    return SampledUrm(matrix, m_target, n_target, rdc_profile(matrix), seed)


def sample_targets(plan: SamplePlan, seed: int) -> tuple[int, int]:
    """Requested (m, n) for the sample with per-sample seed ``seed``."""
    rng = make_rng(derive(seed, SALT_TARGETS))
    m_t = int(rng.integers(plan.m_range[0], plan.m_range[1], endpoint=True))
    n_t = int(rng.integers(plan.n_range[0], plan.n_range[1], endpoint=True))
    return m_t, n_t


def iter_samples(parent: RatingMatrix, plan: SamplePlan) -> Iterator[SampledUrm]:
    """
    Yield successful samples in index order.

    Attempt ``k`` uses seed ``mix64(master_seed, k)``.  Degenerate attempts are
    logged and skipped; at most ``10 * n_samples`` attempts are made.
    """
    plan.check_parent(parent)
    produced = 0
    for attempt in range(10 * plan.n_samples):
        seed = mix64(plan.master_seed, attempt)
        m_t, n_t = sample_targets(plan, seed)
        try:
            s = sample_one(parent, m_t, n_t, plan.min_ratings_per_row, plan.min_ratings_per_col, seed)
        except DegenerateSampleError as e:
            _log.warning("attempt %d skipped: %s", attempt, e)
            continue
        yield SampledUrm(s.matrix, s.requested_m, s.requested_n, s.profile, seed, produced, attempt)
        produced += 1
        if produced == plan.n_samples:
            return
    raise SamplingBudgetError(
        f"only {produced} of {plan.n_samples} samples succeeded in {10 * plan.n_samples} attempts"
    )


def sample_batch(parent: RatingMatrix, plan: SamplePlan) -> list[SampledUrm]:
    return list(iter_samples(parent, plan))
