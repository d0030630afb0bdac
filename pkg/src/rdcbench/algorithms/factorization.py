"""
Latent-factor models: plain SVD, SVD with biases, and non-negative MF.

SVD and SVD_B minimise, by stochastic gradient descent over shuffled triples,

    sum_ui  1/2 (r_ui - r^_ui)^2 + 1/2 reg (|p_u|^2 + |q_i|^2 [+ b_u^2 + b_i^2])

with r^_ui = p_u . q_i (SVD) or mu + b_u + b_i + p_u . q_i (SVD_B).  Each visit
applies ``theta -= lr * grad`` of that triple's term, the update rule of the
Surprise ``SVD`` algorithm.

NMF uses the regularised multiplicative updates of Luo et al. (2014) as in
Surprise's ``NMF``: every epoch rescales each factor entry by a ratio of
non-negative sums, so factors never leave the positive orthant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..ratings import RatingMatrix
from ..rng import make_rng
from .base import TrainedModel
from .params import AlgorithmId, FactorizationParams


@njit(cache=True)
def _sgd_epoch(users, items, values, order, P, Q, bu, bi, mu, lr, reg, biased):
    n_factors = P.shape[1]
    for t in order:
        u = users[t]
        i = items[t]
        dot = 0.0
        for f in range(n_factors):
            dot += P[u, f] * Q[i, f]
        if biased:
            err = values[t] - (mu + bu[u] + bi[i] + dot)
            bu[u] += lr * (err - reg * bu[u])
            bi[i] += lr * (err - reg * bi[i])
        else:
            err = values[t] - dot
        for f in range(n_factors):
            puf = P[u, f]
            qif = Q[i, f]
            P[u, f] += lr * (err * qif - reg * puf)
            Q[i, f] += lr * (err * puf - reg * qif)


@njit(cache=True)
def _nmf_epoch(users, items, values, P, Q, user_counts, item_counts, reg_p, reg_q):
    n_factors = P.shape[1]
    user_num = np.zeros_like(P)
    user_den = np.zeros_like(P)
    item_num = np.zeros_like(Q)
    item_den = np.zeros_like(Q)
    for t in range(len(values)):
        u = users[t]
        i = items[t]
        r = values[t]
        est = 0.0
        for f in range(n_factors):
            est += P[u, f] * Q[i, f]
        for f in range(n_factors):
            user_num[u, f] += Q[i, f] * r
            user_den[u, f] += Q[i, f] * est
            item_num[i, f] += P[u, f] * r
            item_den[i, f] += P[u, f] * est
    for u in range(P.shape[0]):
        for f in range(n_factors):
            den = user_den[u, f] + user_counts[u] * reg_p * P[u, f]
            if den > 0.0:
                P[u, f] *= user_num[u, f] / den
    for i in range(Q.shape[0]):
        for f in range(n_factors):
            den = item_den[i, f] + item_counts[i] * reg_q * Q[i, f]
            if den > 0.0:
                Q[i, f] *= item_num[i, f] / den


@dataclass(eq=False)
class FactorModel(TrainedModel):
    user_factors: np.ndarray = None
    item_factors: np.ndarray = None
    user_bias: np.ndarray = None
    item_bias: np.ndarray = None
    user_known: np.ndarray = None
    item_known: np.ndarray = None
    biased: bool = False

    def _estimate(self, users, items):
        ku = self.user_known[users]
        ki = self.item_known[items]
        both = ku & ki
        out = np.full(len(users), self.global_mean)
        dots = np.einsum("kf,kf->k", self.user_factors[users[both]], self.item_factors[items[both]])
        if self.biased:
            out[both] += self.user_bias[users[both]] + self.item_bias[items[both]] + dots
            only_i = ~ku & ki
            only_u = ku & ~ki
            out[only_i] += self.item_bias[items[only_i]]
            out[only_u] += self.user_bias[users[only_u]]
        else:
            out[both] = dots
        return out


def _known(train: RatingMatrix):
    return np.diff(train.row_ptr) > 0, np.diff(train.col_ptr) > 0


def fit_sgd(train: RatingMatrix, params: FactorizationParams, biased: bool) -> FactorModel:
    rng = make_rng(params.rng_seed)
    k = params.n_factors
    P = rng.normal(0.0, params.init_std, size=(train.m, k))
    Q = rng.normal(0.0, params.init_std, size=(train.n, k))
    bu = np.zeros(train.m)
    bi = np.zeros(train.n)
    mu = train.global_mean()
    users = np.ascontiguousarray(train.users)
    items = np.ascontiguousarray(train.items)
    values = np.ascontiguousarray(train.values)
    for _ in range(params.n_epochs):
        order = rng.permutation(len(values))
        _sgd_epoch(users, items, values, order, P, Q, bu, bi, mu, params.learning_rate, params.regularization, biased)
    ku, ki = _known(train)
    return FactorModel(
        algorithm=AlgorithmId.SVD_B if biased else AlgorithmId.SVD,
        params=params,
        scale=train.scale,
        m=train.m,
        n=train.n,
        global_mean=mu,
        user_factors=P,
        item_factors=Q,
        user_bias=bu,
        item_bias=bi,
        user_known=ku,
        item_known=ki,
        biased=biased,
    )


def fit_nmf(train: RatingMatrix, params: FactorizationParams) -> FactorModel:
    if train.values.min() < 0:
        raise ValueError("NMF needs non-negative ratings")
    rng = make_rng(params.rng_seed)
    k = params.n_factors
    # uniform on (0, init_high]
    P = params.init_high * (1.0 - rng.random((train.m, k)))
    Q = params.init_high * (1.0 - rng.random((train.n, k)))
    user_counts = np.diff(train.row_ptr).astype(np.float64)
    item_counts = np.diff(train.col_ptr).astype(np.float64)
    users = np.ascontiguousarray(train.users)
    items = np.ascontiguousarray(train.items)
    values = np.ascontiguousarray(train.values)
    min_entry = []
    for _ in range(params.n_epochs):
        _nmf_epoch(users, items, values, P, Q, user_counts, item_counts, params.regularization, params.regularization)
        min_entry.append(min(P.min(), Q.min()))
    ku, ki = _known(train)
    return FactorModel(
        algorithm=AlgorithmId.NMF,
        params=params,
        scale=train.scale,
        m=train.m,
        n=train.n,
        global_mean=train.global_mean(),
        history={"min_factor_entry": np.array(min_entry)},
        user_factors=P,
        item_factors=Q,
        user_bias=np.zeros(train.m),
        item_bias=np.zeros(train.n),
        user_known=ku,
        item_known=ki,
        biased=False,
    )


# --- reference loss and gradient, used to check the SGD update -------------


def sgd_loss(P, Q, bu, bi, mu, users, items, values, reg, biased) -> float:
    total = 0.0
    for u, i, r in zip(users, items, values):
        est = P[u] @ Q[i]
        penalty = P[u] @ P[u] + Q[i] @ Q[i]
        if biased:
            est += mu + bu[u] + bi[i]
            penalty += bu[u] ** 2 + bi[i] ** 2
        total += 0.5 * (r - est) ** 2 + 0.5 * reg * penalty
    return total


def sgd_gradient(P, Q, bu, bi, mu, users, items, values, reg, biased):
    """Analytic gradient of :func:`sgd_loss` as ``(dP, dQ, dbu, dbi)``."""
    dP, dQ = np.zeros_like(P), np.zeros_like(Q)
    dbu, dbi = np.zeros_like(bu), np.zeros_like(bi)
    for u, i, r in zip(users, items, values):
        est = P[u] @ Q[i] + (mu + bu[u] + bi[i] if biased else 0.0)
        err = r - est
        dP[u] += -err * Q[i] + reg * P[u]
        dQ[i] += -err * P[u] + reg * Q[i]
        if biased:
            dbu[u] += -err + reg * bu[u]
            dbi[i] += -err + reg * bi[i]
    return dP, dQ, dbu, dbi


def sgd_step(P, Q, bu, bi, mu, user, item, value, lr, reg, biased) -> None:
    """Apply the training kernel to a single triple, in place."""
    _sgd_epoch(
        np.array([user], dtype=np.int64),
        np.array([item], dtype=np.int64),
        np.array([value], dtype=np.float64),
        np.array([0], dtype=np.int64),
        P, Q, bu, bi, float(mu), float(lr), float(reg), bool(biased),
    )
