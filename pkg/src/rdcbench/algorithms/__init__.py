"""The seven collaborative-filtering predictors behind one fit/predict interface."""

from __future__ import annotations

import dataclasses

from ..ratings import RatingMatrix
from .base import TrainedModel, dumps_model, loads_model
from .coclustering import CoClusteringModel, fit_coclustering
from .factorization import FactorModel, fit_nmf, fit_sgd
from .knn import KnnModel, fit_knn
from .params import (
    ALL_ALGORITHMS,
    PARAM_TYPES,
    AlgorithmId,
    CoClusteringParams,
    FactorizationParams,
    Hyperparams,
    KnnParams,
    SlopeOneParams,
    default_hyperparams,
    with_overrides,
)
from .slope_one import SlopeOneModel, fit_slope_one

MODEL_CLASSES = {
    cls.__name__: cls for cls in (FactorModel, SlopeOneModel, KnnModel, CoClusteringModel)
}


def fit(algorithm: AlgorithmId, params: Hyperparams | None, train: RatingMatrix) -> TrainedModel:
    algorithm = AlgorithmId(algorithm)
    if params is None:
        params = default_hyperparams(algorithm)
    expected = PARAM_TYPES[algorithm]
    if not isinstance(params, expected):
        raise ValueError(f"{algorithm} needs {expected.__name__}, got {type(params).__name__}")
    if train.n_ratings == 0:
        raise ValueError("cannot fit on an empty training matrix")

    if algorithm == AlgorithmId.SVD:
        return fit_sgd(train, params, biased=False)
    if algorithm == AlgorithmId.SVD_B:
        return fit_sgd(train, params, biased=True)
    if algorithm == AlgorithmId.NMF:
        return fit_nmf(train, params)
    if algorithm == AlgorithmId.SLOPE_ONE:
        return fit_slope_one(train, params)
    if algorithm == AlgorithmId.CO_CLUSTERING:
        return fit_coclustering(train, params)
    user_based = algorithm == AlgorithmId.UNN
    if params.user_based != user_based:
        params = dataclasses.replace(params, user_based=user_based)
    return fit_knn(train, params)


def predict(model: TrainedModel, user: int, item: int, clip: bool = True) -> float:
    return model.predict(user, item, clip)


__all__ = [
    "ALL_ALGORITHMS",
    "AlgorithmId",
    "CoClusteringParams",
    "FactorizationParams",
    "Hyperparams",
    "KnnParams",
    "SlopeOneParams",
    "TrainedModel",
    "default_hyperparams",
    "dumps_model",
    "fit",
    "loads_model",
    "predict",
    "with_overrides",
]
