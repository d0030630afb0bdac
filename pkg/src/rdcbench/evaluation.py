"""Train/test splitting, RMSE and the performance measure P = 1/RMSE."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .algorithms import AlgorithmId, Hyperparams, TrainedModel, fit
from .ratings import RatingMatrix, Triples
from .rng import make_rng


class _Perfect:
    """Performance of an error-free predictor; kept out of regressions."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "PERFECT"

    def __reduce__(self):
        return (_Perfect, ())


PERFECT = _Perfect()


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")


@dataclass(frozen=True)
class EvalResult:
    algorithm: AlgorithmId
    rmse: float
    performance: float | _Perfect
    n_train: int
    n_test: int
    fit_seconds: float
    split_seed: int

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm.value,
            "rmse": self.rmse,
            "performance": "perfect" if self.performance is PERFECT else self.performance,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "fit_seconds": self.fit_seconds,
        }


def split(matrix: RatingMatrix, spec: SplitSpec) -> tuple[RatingMatrix, Triples]:
    """
    Hold out ``round(test_fraction * N_r)`` random triples (halves round up).

    The train matrix keeps the full ``m x n`` index space, so some users or items
    may have no training ratings.  Test triples come back in row-major order.
    """
    n = matrix.n_ratings
    if n < 2:
        raise ValueError(f"need at least 2 ratings to split, got {n}")
    n_test = int(math.floor(spec.test_fraction * n + 0.5))
    if n_test >= n:
        raise ValueError("empty train: test fraction leaves no training ratings")
    if n_test == 0:
        raise ValueError("empty test: test fraction selects no ratings")
    perm = make_rng(spec.seed).permutation(n)
    is_test = np.zeros(n, dtype=bool)
    is_test[perm[:n_test]] = True
    train = RatingMatrix(
        matrix.m,
        matrix.n,
        matrix.users[~is_test],
        matrix.items[~is_test],
        matrix.values[~is_test],
        matrix.scale,
        source_id=f"{matrix.source_id}[train]",
        allow_empty=True,
    )
    test = Triples(
        matrix.users[is_test].copy(), matrix.items[is_test].copy(), matrix.values[is_test].copy()
    )
    return train, test


def rmse(model: TrainedModel, test, clip: bool = True) -> float:
    test = Triples.from_sequence(test)
    if len(test) == 0:
        raise ValueError("empty test set")
    pred = model.predict_many(test.users, test.items, clip=clip)
    diff = pred - test.values
    # fsum is exactly rounded, so the result does not depend on summation order
    out = math.sqrt(math.fsum((diff**2).tolist()) / len(diff))
    if (out == 0 or math.isinf(out)) and np.any(diff != 0):
        # squares under- or overflowed; rescale so rmse is 0 only for exact predictions
        s = float(np.max(np.abs(diff)))
        out = s * math.sqrt(math.fsum(((diff / s) ** 2).tolist()) / len(diff))
    return out


def performance(rmse_value: float):
    """``1 / rmse``; an RMSE of exactly zero yields :data:`PERFECT`."""
    if rmse_value < 0 or math.isnan(rmse_value):
        raise ValueError(f"RMSE must be non-negative, got {rmse_value}")
    if rmse_value == 0:
        return PERFECT
    return 1.0 / rmse_value


def evaluate(
    algorithm: AlgorithmId,
    params: Hyperparams | None,
    matrix: RatingMatrix,
    spec: SplitSpec,
    clip: bool = True,
) -> EvalResult:
    train, test = split(matrix, spec)
    t0 = time.perf_counter()
    model = fit(algorithm, params, train)
    elapsed = time.perf_counter() - t0
    err = rmse(model, test, clip=clip)
    return EvalResult(
        algorithm=AlgorithmId(algorithm),
        rmse=err,
        performance=performance(err),
        n_train=train.n_ratings,
        n_test=len(test),
        fit_seconds=elapsed,
        split_seed=spec.seed,
    )
