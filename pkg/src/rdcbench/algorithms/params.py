"""
Algorithm identifiers and hyperparameter bundles.

Defaults follow the Surprise library (``SVD``, ``NMF``, ``SlopeOne``,
``CoClustering``, ``KNNBasic``); see ``docs/hyperparameters.md``.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass


class AlgorithmId(str, enum.Enum):
    SVD = "SVD"
    SVD_B = "SVD_B"
    NMF = "NMF"
    SLOPE_ONE = "SLOPE_ONE"
    CO_CLUSTERING = "CO_CLUSTERING"
    UNN = "UNN"
    INN = "INN"

    @classmethod
    def parse(cls, name: str) -> "AlgorithmId":
        key = name.strip().upper().replace("-", "_")
        aliases = {"SVDB": "SVD_B", "SLOPEONE": "SLOPE_ONE", "COCLUSTERING": "CO_CLUSTERING"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown algorithm {name!r}; expected one of {', '.join(a.value for a in cls)}") from None

    def __str__(self):
        return self.value


ALL_ALGORITHMS = tuple(AlgorithmId)
SIMILARITIES = ("msd", "cosine", "pearson")


def _check_counts(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValueError(f"{name} must be an integer >= 1, got {v!r}")


@dataclass(frozen=True)
class FactorizationParams:
    n_factors: int = 100
    n_epochs: int = 20
    learning_rate: float = 0.005
    regularization: float = 0.02
    init_std: float = 0.1
    init_high: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        _check_counts(self, "n_factors", "n_epochs")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.regularization >= 0:
            raise ValueError("regularization must be non-negative")
        if not self.init_std >= 0 or not self.init_high > 0:
            raise ValueError("init_std must be >= 0 and init_high > 0")


@dataclass(frozen=True)
class SlopeOneParams:
    pass


@dataclass(frozen=True)
class KnnParams:
    k: int = 40
    min_k: int = 1
    similarity: str = "msd"
    user_based: bool = True
    min_support: int = 1

    def __post_init__(self):
        _check_counts(self, "k", "min_k", "min_support")
        if self.similarity not in SIMILARITIES:
            raise ValueError(f"similarity must be one of {SIMILARITIES}, got {self.similarity!r}")


@dataclass(frozen=True)
class CoClusteringParams:
    n_user_clusters: int = 3
    n_item_clusters: int = 3
    n_epochs: int = 20
    rng_seed: int = 0

    def __post_init__(self):
        _check_counts(self, "n_user_clusters", "n_item_clusters", "n_epochs")


Hyperparams = FactorizationParams | SlopeOneParams | KnnParams | CoClusteringParams

PARAM_TYPES = {
    AlgorithmId.SVD: FactorizationParams,
    AlgorithmId.SVD_B: FactorizationParams,
    AlgorithmId.NMF: FactorizationParams,
    AlgorithmId.SLOPE_ONE: SlopeOneParams,
    AlgorithmId.CO_CLUSTERING: CoClusteringParams,
    AlgorithmId.UNN: KnnParams,
    AlgorithmId.INN: KnnParams,
}


def default_hyperparams(algorithm: AlgorithmId) -> Hyperparams:
    algorithm = AlgorithmId(algorithm)
    if algorithm == AlgorithmId.NMF:
        return FactorizationParams(n_factors=15, n_epochs=50, regularization=0.06)
    if algorithm == AlgorithmId.INN:
        return KnnParams(user_based=False)
    return PARAM_TYPES[algorithm]()


def _coerce(value, target_type, name):
    if target_type is bool or isinstance(target_type, bool):
        if isinstance(value, bool):
            return value
        s = str(value).strip().lower()
        if s in ("true", "yes", "1", "on"):
            return True
        if s in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {value!r}")
    try:
        return target_type(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name}: cannot convert {value!r} to {target_type.__name__}") from None


def with_overrides(params: Hyperparams, overrides: dict) -> Hyperparams:
    """Return ``params`` with string or typed overrides applied; unknown keys raise."""
    if not overrides:
        return params
    fields = {f.name: f for f in dataclasses.fields(params)}
    kwargs = {}
    for key, value in overrides.items():
        if key not in fields:
            raise ValueError(f"unknown hyperparameter {key!r} for {type(params).__name__}")
        default = getattr(params, key)
        kwargs[key] = _coerce(value, type(default), key)
    return dataclasses.replace(params, **kwargs)
