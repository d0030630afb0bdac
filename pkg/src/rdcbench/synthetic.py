"""
Synthetic MovieLens-like parent matrices for offline runs.

Ratings come from a planted low-rank model with user and item biases,

    r_ui = round(mean + b_u + b_i + p_u . q_i + noise)   clipped to the scale,

and the observed cells are drawn with probability proportional to a lognormal
user activity times a lognormal item popularity.  Since every predictor has to
estimate per-user and per-item structure from the observed ratings, error falls
as ratings per user and per item grow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ratings import ML_1M_SCALE, RatingMatrix, RatingScale
from .rng import make_rng


@dataclass(frozen=True)
class SyntheticSpec:
    n_users: int = 2000
    n_items: int = 2000
    density: float = 0.04
    rank: int = 8
    mean: float = 3.6
    user_bias_std: float = 0.45
    item_bias_std: float = 0.55
    factor_std: float = 0.9
    noise_std: float = 0.6
    activity_sigma: float = 0.5
    seed: int = 0
    scale: RatingScale = ML_1M_SCALE

    def __post_init__(self):
        if self.n_users < 1 or self.n_items < 1 or self.rank < 1:
            raise ValueError("n_users, n_items and rank must be positive")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")


def generate(spec: SyntheticSpec = SyntheticSpec()) -> RatingMatrix:
    rng = make_rng(spec.seed)
    m, n = spec.n_users, spec.n_items
    act = rng.lognormal(0.0, spec.activity_sigma, size=m)
    pop = rng.lognormal(0.0, spec.activity_sigma, size=n)
    prob = np.outer(act / act.mean(), pop / pop.mean()) * spec.density
    observed = rng.random((m, n)) < np.minimum(prob, 1.0)
    # every user and item keeps at least one rating
    for axis, size in ((1, m), (0, n)):
        empty = np.flatnonzero(observed.sum(axis=axis) == 0)
        other = rng.integers(0, n if axis == 1 else m, size=len(empty))
        if axis == 1:
            observed[empty, other] = True
        else:
            observed[other, empty] = True
    users, items = np.nonzero(observed)

    bu = rng.normal(0.0, spec.user_bias_std, size=m)
    bi = rng.normal(0.0, spec.item_bias_std, size=n)
    P = rng.normal(0.0, spec.factor_std / np.sqrt(spec.rank), size=(m, spec.rank))
    Q = rng.normal(0.0, 1.0, size=(n, spec.rank))
    raw = (
        spec.mean
        + bu[users]
        + bi[items]
        + np.einsum("kf,kf->k", P[users], Q[items])
        + rng.normal(0.0, spec.noise_std, size=len(users))
    )
    s = spec.scale
    values = s.min_value + np.round((raw - s.min_value) / s.step) * s.step
    values = np.clip(values, s.min_value, s.max_value)
    return RatingMatrix(m, n, users, items, values, s, source_id=f"synthetic(seed={spec.seed})")
