"""
User- and item-based k-nearest-neighbour prediction (Surprise's ``KNNBasic``).

Similarities are computed over co-rated entries only:

* ``msd``: 1 / (mean squared difference + 1)
* ``cosine``: sum(x*y) / sqrt(sum(x^2) * sum(y^2))
* ``pearson``: correlation of the co-rated values, centred on their own means

Pairs with fewer than ``min_support`` co-ratings, or a zero denominator, get
similarity 0.  The estimate for (u, i) is the similarity-weighted mean of the
ratings given by the ``k`` most similar positive-similarity neighbours that
rated ``i`` (user-based) or were rated by ``u`` (item-based).  Ties in
similarity go to the lower index.  Fewer than ``min_k`` neighbours falls back
to the global mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..ratings import RatingMatrix
from .base import TrainedModel
from .params import AlgorithmId, KnnParams

_KINDS = {"msd": 0, "cosine": 1, "pearson": 2}


@njit(cache=True)
def _similarity_matrix(ptr, idx, vals, kind, min_support):
    nx = len(ptr) - 1
    S = np.zeros((nx, nx))
    max_len = 0
    for a in range(nx):
        max_len = max(max_len, ptr[a + 1] - ptr[a])
    xa = np.empty(max_len)
    xb = np.empty(max_len)
    for a in range(nx):
        S[a, a] = 1.0
        for b in range(a + 1, nx):
            # merge the two sorted index lists
            p, q = ptr[a], ptr[b]
            pe, qe = ptr[a + 1], ptr[b + 1]
            c = 0
            while p < pe and q < qe:
                if idx[p] == idx[q]:
                    xa[c] = vals[p]
                    xb[c] = vals[q]
                    c += 1
                    p += 1
                    q += 1
                elif idx[p] < idx[q]:
                    p += 1
                else:
                    q += 1
            if c == 0 or c < min_support:
                continue
            sim = 0.0
            if kind == 0:
                sq = 0.0
                for t in range(c):
                    d = xa[t] - xb[t]
                    sq += d * d
                sim = 1.0 / (sq / c + 1.0)
            elif kind == 1:
                prod = 0.0
                sa = 0.0
                sb = 0.0
                for t in range(c):
                    prod += xa[t] * xb[t]
                    sa += xa[t] * xa[t]
                    sb += xb[t] * xb[t]
                den = np.sqrt(sa * sb)
                if den > 0.0:
                    sim = prod / den
            else:
                ma = 0.0
                mb = 0.0
                for t in range(c):
                    ma += xa[t]
                    mb += xb[t]
                ma /= c
                mb /= c
                prod = 0.0
                sa = 0.0
                sb = 0.0
                for t in range(c):
                    da = xa[t] - ma
                    db = xb[t] - mb
                    prod += da * db
                    sa += da * da
                    sb += db * db
                den = np.sqrt(sa * sb)
                if den > 0.0:
                    sim = prod / den
            S[a, b] = sim
            S[b, a] = sim
    return S


@njit(cache=True)
def _knn_predict(xs, ys, S, ptr, idx, vals, k, min_k, mu):
    """For each query (x, y): neighbours of x among the entries of list y."""
    out = np.empty(len(xs))
    for t in range(len(xs)):
        x = xs[t]
        y = ys[t]
        lo, hi = ptr[y], ptr[y + 1]
        cand = np.empty(hi - lo, dtype=np.int64)
        sims = np.empty(hi - lo)
        c = 0
        for p in range(lo, hi):
            v = idx[p]
            if v == x:
                continue
            s = S[x, v]
            if s > 0.0:
                cand[c] = p
                sims[c] = -s
                c += 1
        if c < min_k or c == 0:
            out[t] = mu
            continue
        order = np.argsort(sims[:c], kind="mergesort")
        num = 0.0
        den = 0.0
        for r in range(min(k, c)):
            p = cand[order[r]]
            s = -sims[order[r]]
            num += s * vals[p]
            den += s
        out[t] = num / den
    return out


@dataclass(eq=False)
class KnnModel(TrainedModel):
    similarity: np.ndarray = None
    ptr: np.ndarray = None
    idx: np.ndarray = None
    vals: np.ndarray = None
    user_based: bool = True

    def _estimate(self, users, items):
        p = self.params
        if self.user_based:
            # neighbours of u among the raters of i
            xs, ys = users, items
        else:
            # neighbours of i among the items rated by u
            xs, ys = items, users
        return _knn_predict(xs, ys, self.similarity, self.ptr, self.idx, self.vals, p.k, p.min_k, self.global_mean)


def fit_knn(train: RatingMatrix, params: KnnParams) -> KnnModel:
    row_ptr = np.ascontiguousarray(train.row_ptr)
    col_ptr = np.ascontiguousarray(train.col_ptr)
    row_items = np.ascontiguousarray(train.items)
    row_vals = np.ascontiguousarray(train.values)
    col_users = np.ascontiguousarray(train.col_users)
    col_vals = np.ascontiguousarray(train.col_values)
    kind = _KINDS[params.similarity]
    if params.user_based:
        S = _similarity_matrix(row_ptr, row_items, row_vals, kind, params.min_support)
        ptr, idx, vals = col_ptr, col_users, col_vals
    else:
        S = _similarity_matrix(col_ptr, col_users, col_vals, kind, params.min_support)
        ptr, idx, vals = row_ptr, row_items, row_vals
    return KnnModel(
        algorithm=AlgorithmId.UNN if params.user_based else AlgorithmId.INN,
        params=params,
        scale=train.scale,
        m=train.m,
        n=train.n,
        global_mean=train.global_mean(),
        similarity=S,
        ptr=ptr.copy(),
        idx=idx.copy(),
        vals=vals.copy(),
        user_based=params.user_based,
    )
