from __future__ import annotations

import dataclasses
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..ratings import RatingScale
from .params import AlgorithmId, Hyperparams, PARAM_TYPES

MODEL_FORMAT_VERSION = 1


@dataclass(eq=False)
class TrainedModel:
    """
    Fitted state shared by every algorithm.

    Subclasses implement :meth:`_estimate` for in-range index arrays.  Indices
    outside the training index space get the global mean.
    """

    algorithm: AlgorithmId
    params: Hyperparams
    scale: RatingScale
    m: int
    n: int
    global_mean: float
    history: dict = field(default_factory=dict)

    def _estimate(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def estimate_many(self, users, items) -> np.ndarray:
        """Unclipped estimates."""
        users = np.asarray(users, dtype=np.int64).ravel()
        items = np.asarray(items, dtype=np.int64).ravel()
        out = np.full(len(users), self.global_mean, dtype=np.float64)
        ok = (users >= 0) & (users < self.m) & (items >= 0) & (items < self.n)
        if ok.any():
            out[ok] = self._estimate(users[ok], items[ok])
        return out

    def predict_many(self, users, items, clip: bool = True) -> np.ndarray:
        est = self.estimate_many(users, items)
        return self.scale.clip(est) if clip else est

    def estimate(self, user: int, item: int) -> float:
        return float(self.estimate_many([user], [item])[0])

    def predict(self, user: int, item: int, clip: bool = True) -> float:
        return float(self.predict_many([user], [item], clip)[0])


# --- opaque serialization ----------------------------------------------------
#
# An ``.npz`` archive: array-valued fields stored under their names, everything
# else in a JSON document under ``__meta__``.  Readable only by the same
# MODEL_FORMAT_VERSION.


def dumps_model(model: TrainedModel) -> bytes:
    arrays, scalars = {}, {}
    for f in dataclasses.fields(model):
        if f.name in ("algorithm", "params", "scale", "history"):
            continue
        v = getattr(model, f.name)
        if isinstance(v, np.ndarray):
            arrays[f.name] = v
        else:
            scalars[f.name] = v
    for k, v in model.history.items():
        arrays[f"history.{k}"] = np.asarray(v)
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "class": type(model).__name__,
        "algorithm": model.algorithm.value,
        "params": dataclasses.asdict(model.params),
        "scale": [model.scale.min_value, model.scale.max_value, model.scale.step],
        "scalars": scalars,
    }
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.array(json.dumps(meta)), **arrays)
    return buf.getvalue()


def loads_model(blob: bytes) -> TrainedModel:
    from . import MODEL_CLASSES

    with np.load(io.BytesIO(blob), allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {meta.get('format_version')}")
        arrays = {k: z[k] for k in z.files if k != "__meta__"}
    algorithm = AlgorithmId(meta["algorithm"])
    cls = MODEL_CLASSES[meta["class"]]
    history = {k.split(".", 1)[1]: arrays.pop(k) for k in list(arrays) if k.startswith("history.")}
    return cls(
        algorithm=algorithm,
        params=PARAM_TYPES[algorithm](**meta["params"]),
        scale=RatingScale(*meta["scale"]),
        history=history,
        **meta["scalars"],
        **arrays,
    )
