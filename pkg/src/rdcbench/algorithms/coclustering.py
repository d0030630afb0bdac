"""
Co-clustering (George & Merugu, 2005).

Users and items are each assigned to a cluster.  A known (u, i) pair is
estimated as

    co_mean[cu, ci] + (user_mean[u] - user_cluster_mean[cu])
                    + (item_mean[i] - item_cluster_mean[ci])

Each epoch reassigns every user to the cluster minimising the squared error of
its ratings, then does the same for items.  The cluster means are plain
averages, which are not least-squares optimal for this rule, so a half-epoch
can raise the training error; such a half-epoch is rejected and the previous
assignment kept.  The training SSE is therefore non-increasing over epochs
(recorded in ``history["sse"]``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..ratings import RatingMatrix
from ..rng import make_rng
from .base import TrainedModel
from .params import AlgorithmId, CoClusteringParams


@njit(cache=True)
def _averages(users, items, values, cu, ci, n_cu, n_ci, mu):
    su = np.zeros(n_cu)
    nu = np.zeros(n_cu)
    si = np.zeros(n_ci)
    ni = np.zeros(n_ci)
    sc = np.zeros((n_cu, n_ci))
    nc = np.zeros((n_cu, n_ci))
    for t in range(len(values)):
        a = cu[users[t]]
        b = ci[items[t]]
        r = values[t]
        su[a] += r
        nu[a] += 1
        si[b] += r
        ni[b] += 1
        sc[a, b] += r
        nc[a, b] += 1
    avg_u = np.full(n_cu, mu)
    avg_i = np.full(n_ci, mu)
    avg_c = np.full((n_cu, n_ci), mu)
    for a in range(n_cu):
        if nu[a] > 0:
            avg_u[a] = su[a] / nu[a]
    for b in range(n_ci):
        if ni[b] > 0:
            avg_i[b] = si[b] / ni[b]
    for a in range(n_cu):
        for b in range(n_ci):
            if nc[a, b] > 0:
                avg_c[a, b] = sc[a, b] / nc[a, b]
    return avg_u, avg_i, avg_c


@njit(cache=True)
def _entity_errors(ptr, other, vals, own_cl, other_cl, own_mean, other_mean, avg_own, avg_other, co):
    """Squared error of each entity's ratings under its current cluster."""
    nx = len(ptr) - 1
    err = np.zeros(nx)
    for x in range(nx):
        c = own_cl[x]
        e = 0.0
        for p in range(ptr[x], ptr[x + 1]):
            o = other[p]
            oc = other_cl[o]
            d = vals[p] - (co[c, oc] + own_mean[x] - avg_own[c] + other_mean[o] - avg_other[oc])
            e += d * d
        err[x] = e
    return err


@njit(cache=True)
def _assign(ptr, other, vals, own_cl, other_cl, own_mean, other_mean, avg_own, avg_other, co):
    nx = len(ptr) - 1
    n_clusters = co.shape[0]
    new = own_cl.copy()
    for x in range(nx):
        lo, hi = ptr[x], ptr[x + 1]
        if hi == lo:
            continue
        best = np.inf
        best_c = own_cl[x]
        for c in range(n_clusters):
            e = 0.0
            for p in range(lo, hi):
                o = other[p]
                oc = other_cl[o]
                d = vals[p] - (co[c, oc] + own_mean[x] - avg_own[c] + other_mean[o] - avg_other[oc])
                e += d * d
            if e < best:
                best = e
                best_c = c
        new[x] = best_c
    return new


@dataclass(eq=False)
class CoClusteringModel(TrainedModel):
    user_clusters: np.ndarray = None
    item_clusters: np.ndarray = None
    user_cluster_mean: np.ndarray = None
    item_cluster_mean: np.ndarray = None
    cocluster_mean: np.ndarray = None
    user_mean: np.ndarray = None
    item_mean: np.ndarray = None
    user_known: np.ndarray = None
    item_known: np.ndarray = None

    def _estimate(self, users, items):
        ku = self.user_known[users]
        ki = self.item_known[items]
        out = np.full(len(users), self.global_mean)
        both = ku & ki
        u, i = users[both], items[both]
        cu, ci = self.user_clusters[u], self.item_clusters[i]
        out[both] = (
            self.cocluster_mean[cu, ci]
            + self.user_mean[u] - self.user_cluster_mean[cu]
            + self.item_mean[i] - self.item_cluster_mean[ci]
        )
        only_u = ku & ~ki
        only_i = ~ku & ki
        out[only_u] = self.user_mean[users[only_u]]
        out[only_i] = self.item_mean[items[only_i]]
        return out


class _Problem:
    """Training arrays plus helpers bound to them."""

    def __init__(self, train: RatingMatrix, n_cu: int, n_ci: int):
        self.users = np.ascontiguousarray(train.users)
        self.items = np.ascontiguousarray(train.items)
        self.values = np.ascontiguousarray(train.values)
        self.row_ptr = np.ascontiguousarray(train.row_ptr)
        self.col_ptr = np.ascontiguousarray(train.col_ptr)
        self.col_users = np.ascontiguousarray(train.col_users)
        self.col_values = np.ascontiguousarray(train.col_values)
        self.n_cu, self.n_ci = n_cu, n_ci
        self.mu = train.global_mean()
        ucount = np.diff(train.row_ptr)
        icount = np.diff(train.col_ptr)
        self.user_known = ucount > 0
        self.item_known = icount > 0
        usum = np.bincount(train.users, weights=train.values, minlength=train.m)
        isum = np.bincount(train.items, weights=train.values, minlength=train.n)
        self.user_mean = np.where(self.user_known, usum / np.maximum(ucount, 1), self.mu)
        self.item_mean = np.where(self.item_known, isum / np.maximum(icount, 1), self.mu)

    def averages(self, cu, ci):
        return _averages(self.users, self.items, self.values, cu, ci, self.n_cu, self.n_ci, self.mu)

    def sse(self, cu, ci, stats) -> float:
        avg_u, avg_i, avg_c = stats
        err = _entity_errors(
            self.row_ptr, self.items, self.values, cu, ci, self.user_mean, self.item_mean, avg_u, avg_i, avg_c
        )
        return float(err.sum())

    def user_side(self, cu, ci, stats):
        avg_u, avg_i, avg_c = stats
        return (self.row_ptr, self.items, self.values, cu, ci, self.user_mean, self.item_mean, avg_u, avg_i, avg_c)

    def item_side(self, cu, ci, stats):
        avg_u, avg_i, avg_c = stats
        return (
            self.col_ptr, self.col_users, self.col_values, ci, cu,
            self.item_mean, self.user_mean, avg_i, avg_u, np.ascontiguousarray(avg_c.T),
        )

    def reseed_empty(self, cu, ci, users_side: bool):
        """Move the worst-fitting member of a non-singleton cluster into each empty cluster."""
        labels = cu if users_side else ci
        known = self.user_known if users_side else self.item_known
        n_clusters = self.n_cu if users_side else self.n_ci
        while True:
            counts = np.bincount(labels[known], minlength=n_clusters)
            empty = np.flatnonzero(counts == 0)
            if not len(empty):
                return labels
            stats = self.averages(cu, ci)
            side = self.user_side(cu, ci, stats) if users_side else self.item_side(cu, ci, stats)
            err = _entity_errors(*side)
            eligible = known & (counts[labels] > 1)
            if not eligible.any():
                return labels
            labels[int(np.argmax(np.where(eligible, err, -np.inf)))] = empty[0]


def fit_coclustering(train: RatingMatrix, params: CoClusteringParams) -> CoClusteringModel:
    rng = make_rng(params.rng_seed)
    prob = _Problem(train, params.n_user_clusters, params.n_item_clusters)
    cu = rng.integers(0, params.n_user_clusters, size=train.m).astype(np.int64)
    ci = rng.integers(0, params.n_item_clusters, size=train.n).astype(np.int64)
    prob.reseed_empty(cu, ci, True)
    prob.reseed_empty(cu, ci, False)
    stats = prob.averages(cu, ci)
    sse = prob.sse(cu, ci, stats)
    history = [sse]
    for _ in range(params.n_epochs):
        cand = _assign(*prob.user_side(cu, ci, stats))
        prob.reseed_empty(cand, ci, True)
        cand_stats = prob.averages(cand, ci)
        cand_sse = prob.sse(cand, ci, cand_stats)
        if cand_sse <= sse:
            cu, stats, sse = cand, cand_stats, cand_sse

        cand = _assign(*prob.item_side(cu, ci, stats))
        prob.reseed_empty(cu, cand, False)
        cand_stats = prob.averages(cu, cand)
        cand_sse = prob.sse(cu, cand, cand_stats)
        if cand_sse <= sse:
            ci, stats, sse = cand, cand_stats, cand_sse
        history.append(sse)

    avg_u, avg_i, avg_c = stats
    return CoClusteringModel(
        algorithm=AlgorithmId.CO_CLUSTERING,
        params=params,
        scale=train.scale,
        m=train.m,
        n=train.n,
        global_mean=prob.mu,
        history={"sse": np.array(history)},
        user_clusters=cu,
        item_clusters=ci,
        user_cluster_mean=avg_u,
        item_cluster_mean=avg_i,
        cocluster_mean=avg_c,
        user_mean=prob.user_mean,
        item_mean=prob.item_mean,
        user_known=prob.user_known,
        item_known=prob.item_known,
    )
