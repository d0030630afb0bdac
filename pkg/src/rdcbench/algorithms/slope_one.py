"""
Slope One.

``dev[i, j]`` is the mean of ``r_ui - r_uj`` over users who rated both items and
``freq[i, j]`` their number.  A prediction for (u, i) is the user's mean rating
plus the mean of ``dev[i, j]`` over the items ``j`` rated by ``u`` that share at
least one rater with ``i`` (Surprise's ``SlopeOne``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..ratings import RatingMatrix
from .base import TrainedModel
from .params import AlgorithmId, SlopeOneParams


@njit(cache=True)
def _deviations(row_ptr, items, values, n):
    freq = np.zeros((n, n), dtype=np.int64)
    dev = np.zeros((n, n))
    for u in range(len(row_ptr) - 1):
        lo, hi = row_ptr[u], row_ptr[u + 1]
        for a in range(lo, hi):
            i = items[a]
            for b in range(lo, hi):
                j = items[b]
                freq[i, j] += 1
                dev[i, j] += values[a] - values[b]
    for i in range(n):
        for j in range(n):
            if freq[i, j] > 0:
                dev[i, j] /= freq[i, j]
    return dev, freq


@njit(cache=True)
def _predict(users, items, row_ptr, r_items, dev, freq, user_mean, mu):
    out = np.empty(len(users))
    for k in range(len(users)):
        u = users[k]
        i = items[k]
        lo, hi = row_ptr[u], row_ptr[u + 1]
        if hi == lo:
            out[k] = mu
            continue
        s = 0.0
        c = 0
        for a in range(lo, hi):
            j = r_items[a]
            if freq[i, j] > 0:
                s += dev[i, j]
                c += 1
        out[k] = user_mean[u] + (s / c if c > 0 else 0.0)
    return out


@dataclass(eq=False)
class SlopeOneModel(TrainedModel):
    dev: np.ndarray = None
    freq: np.ndarray = None
    user_mean: np.ndarray = None
    row_ptr: np.ndarray = None
    row_items: np.ndarray = None

    def _estimate(self, users, items):
        return _predict(users, items, self.row_ptr, self.row_items, self.dev, self.freq, self.user_mean, self.global_mean)


def fit_slope_one(train: RatingMatrix, params: SlopeOneParams | None = None) -> SlopeOneModel:
    row_ptr = np.ascontiguousarray(train.row_ptr)
    items = np.ascontiguousarray(train.items)
    values = np.ascontiguousarray(train.values)
    dev, freq = _deviations(row_ptr, items, values, train.n)
    counts = np.diff(row_ptr)
    sums = np.bincount(train.users, weights=values, minlength=train.m)
    user_mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return SlopeOneModel(
        algorithm=AlgorithmId.SLOPE_ONE,
        params=params or SlopeOneParams(),
        scale=train.scale,
        m=train.m,
        n=train.n,
        global_mean=train.global_mean(),
        dev=dev,
        freq=freq,
        user_mean=user_mean,
        row_ptr=row_ptr.copy(),
        row_items=items.copy(),
    )
