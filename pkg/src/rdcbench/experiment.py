"""
Experiment pipeline: sample -> evaluate every algorithm -> regress.

Records are appended to ``<output_dir>/records.jsonl``: a header object carrying
the config hash and toolkit version, then one flat JSON object per
(sample, algorithm) pair.  Work is scheduled per pair, but records are written
in (sample, algorithm) order, so the file does not depend on the worker count.
A rerun with ``resume=True`` skips the pairs already on disk.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Literal

import numpy as np
from scipy import stats

from . import __version__
from .algorithms import ALL_ALGORITHMS, AlgorithmId, default_hyperparams, with_overrides
from .evaluation import PERFECT, SplitSpec, evaluate
from .ratings import RatingMatrix, RatingScale, RdcProfile, load_dataset
from .regression import LogBase, RegressionFit, build_design, log_fn, ols_fit
from .rng import SALT_ALGORITHM, SALT_SPLIT, derive
from .sampler import SamplePlan, SampledUrm, iter_samples, sample_one

_log = logging.getLogger(__name__)

RECORD_FILE = "records.jsonl"
RECORD_KEYS = (
    "sample_index", "sample_seed", "m", "n", "n_ratings", "ipu", "ipi", "density",
    "algorithm", "rmse", "performance", "n_train", "n_test", "fit_seconds",
)


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    format: str
    plan: SamplePlan
    algorithms: tuple[AlgorithmId, ...] = ALL_ALGORITHMS
    overrides: dict = field(default_factory=dict)
    test_fraction: float = 0.2
    log_base: LogBase = "natural"
    output_dir: str = "results"
    workers: int = 1
    clip: bool = True
    scale: RatingScale | None = None

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        SplitSpec(self.test_fraction)
        log_fn(self.log_base)
        for alg, ov in self.overrides.items():
            with_overrides(default_hyperparams(alg), ov)

    def hyperparams(self, algorithm: AlgorithmId):
        return with_overrides(default_hyperparams(algorithm), self.overrides.get(algorithm, {}))

    def config_hash(self) -> str:
        """Hash of everything that affects record contents (not workers or output_dir)."""
        doc = {
            "dataset": self.dataset,
            "format": self.format,
            "scale": str(self.scale) if self.scale else None,
            "plan": dataclasses.asdict(self.plan),
            "algorithms": [a.value for a in self.algorithms],
            "params": {a.value: dataclasses.asdict(self.hyperparams(a)) for a in self.algorithms},
            "test_fraction": self.test_fraction,
            "clip": self.clip,
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ExperimentRecord:
    sample_index: int
    sample_seed: int
    profile: RdcProfile
    algorithm: AlgorithmId
    rmse: float
    performance: float | object
    n_train: int
    n_test: int
    fit_seconds: float

    @property
    def ipu(self) -> float:
        return self.profile.ipu

    @property
    def ipi(self) -> float:
        return self.profile.ipi

    def as_dict(self) -> dict:
        p = self.profile
        return {
            "sample_index": self.sample_index,
            "sample_seed": self.sample_seed,
            "m": p.m,
            "n": p.n,
            "n_ratings": p.n_ratings,
            "ipu": p.ipu,
            "ipi": p.ipi,
            "density": p.density,
            "algorithm": self.algorithm.value,
            "rmse": self.rmse,
            "performance": "perfect" if self.performance is PERFECT else self.performance,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "fit_seconds": self.fit_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        missing = set(RECORD_KEYS) - set(d)
        if missing:
            raise ValueError(f"record lacks keys {sorted(missing)}")
        perf = d["performance"]
        return cls(
            sample_index=int(d["sample_index"]),
            sample_seed=int(d["sample_seed"]),
            profile=RdcProfile(int(d["m"]), int(d["n"]), int(d["n_ratings"])),
            algorithm=AlgorithmId(d["algorithm"]),
            rmse=float(d["rmse"]),
            performance=PERFECT if perf == "perfect" else float(perf),
            n_train=int(d["n_train"]),
            n_test=int(d["n_test"]),
            fit_seconds=float(d["fit_seconds"]),
        )

    @property
    def key(self) -> tuple[int, str]:
        return (self.sample_index, self.algorithm.value)


def record_line(record: ExperimentRecord) -> str:
    return json.dumps(record.as_dict())


def split_seed(sample_seed: int) -> int:
    return derive(sample_seed, SALT_SPLIT)


def algorithm_seed(sample_seed: int, algorithm: AlgorithmId, base_seed: int) -> int:
    return derive(sample_seed, SALT_ALGORITHM + ALL_ALGORITHMS.index(algorithm), base_seed)


def evaluate_sample(config: ExperimentConfig, sample: SampledUrm, algorithm: AlgorithmId) -> ExperimentRecord:
    params = config.hyperparams(algorithm)
    if hasattr(params, "rng_seed"):
        params = dataclasses.replace(params, rng_seed=algorithm_seed(sample.sample_seed, algorithm, params.rng_seed))
    res = evaluate(algorithm, params, sample.matrix, SplitSpec(config.test_fraction, split_seed(sample.sample_seed)), config.clip)
    return ExperimentRecord(
        sample_index=sample.index,
        sample_seed=sample.sample_seed,
        profile=sample.profile,
        algorithm=algorithm,
        rmse=res.rmse,
        performance=res.performance,
        n_train=res.n_train,
        n_test=res.n_test,
        fit_seconds=res.fit_seconds,
    )


# --- worker side -----------------------------------------------------------

_worker_state: dict = {}


def _worker_init(config: ExperimentConfig, parent: RatingMatrix):
    _worker_state.clear()
    _worker_state.update(config=config, parent=parent, cache=None)


def _worker_task(task):
    index, seed, m_t, n_t, attempt, algorithm = task
    config = _worker_state["config"]
    cached = _worker_state["cache"]
    if cached is not None and cached.index == index:
        sample = cached
    else:
        plan = config.plan
        s = sample_one(_worker_state["parent"], m_t, n_t, plan.min_ratings_per_row, plan.min_ratings_per_col, seed)
        sample = dataclasses.replace(s, index=index, attempt=attempt)
        _worker_state["cache"] = sample
    try:
        return evaluate_sample(config, sample, algorithm), None
    except Exception as e:  # noqa: BLE001 - reported and skipped by the caller
        return None, f"{type(e).__name__}: {e}"


# --- record files ----------------------------------------------------------


def read_record_file(path) -> tuple[dict | None, list[ExperimentRecord]]:
    """Return ``(header, records)``; a truncated final line is ignored."""
    path = Path(path)
    header, records = None, []
    lines = path.read_text(encoding="utf-8").splitlines()
    for k, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            if k == len(lines) - 1:
                _log.warning("%s: ignoring truncated final line", path)
                continue
            raise ExperimentError(f"{path}: line {k + 1} is not valid JSON") from None
        if "config_hash" in obj:
            header = obj
        else:
            records.append(ExperimentRecord.from_dict(obj))
    return header, records


def load_records(path) -> list[ExperimentRecord]:
    return read_record_file(path)[1]


def _rewrite_without_partial_tail(path: Path):
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        cut = data.rfind(b"\n") + 1
        path.write_bytes(data[:cut])


@dataclass
class RunSummary:
    path: Path
    computed: int = 0
    skipped: int = 0
    failed: int = 0


def run(
    config: ExperimentConfig,
    resume: bool = False,
    progress: Callable[[ExperimentRecord], None] | None = None,
    parent: RatingMatrix | None = None,
) -> RunSummary:
    """Execute the pipeline; see the module docstring for the file contract."""
    if parent is None:
        parent = load_dataset(config.dataset, config.format, config.scale)
    config.plan.check_parent(parent)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RECORD_FILE
    chash = config.config_hash()
    done: set[tuple[int, str]] = set()
    if path.exists() and path.stat().st_size > 0:
        if not resume:
            raise ExperimentError(f"{path} already exists; resume or choose another output directory")
        _rewrite_without_partial_tail(path)
        header, existing = read_record_file(path)
        if header is not None and header.get("config_hash") != chash:
            raise ExperimentError(f"{path} was written by a different config ({header.get('config_hash')} != {chash})")
        done = {r.key for r in existing}
        if header is None:
            raise ExperimentError(f"{path} has no header line")
    else:
        path.write_text(json.dumps({"config_hash": chash, "version": __version__}) + "\n", encoding="utf-8")

    summary = RunSummary(path, skipped=len(done))

    def tasks():
        for sample in iter_samples(parent, config.plan):
            for alg in config.algorithms:
                if (sample.index, alg.value) not in done:
                    yield sample, alg

    with open(path, "a", encoding="utf-8") as f:

        def emit(sample, alg, record, error):
            if error is not None:
                summary.failed += 1
                _log.error(
                    "sample %d (seed %d) %s failed: %s", sample.index, sample.sample_seed, alg.value, error
                )
                return
            f.write(record_line(record) + "\n")
            f.flush()
            summary.computed += 1
            if progress:
                progress(record)

        if config.workers == 1:
            for sample, alg in tasks():
                try:
                    rec, err = evaluate_sample(config, sample, alg), None
                except Exception as e:  # noqa: BLE001
                    rec, err = None, f"{type(e).__name__}: {e}"
                emit(sample, alg, rec, err)
        else:
            window = 4 * config.workers
            with ProcessPoolExecutor(config.workers, initializer=_worker_init, initargs=(config, parent)) as pool:
                pending: deque = deque()
                for sample, alg in tasks():
                    task = (sample.index, sample.sample_seed, sample.requested_m, sample.requested_n, sample.attempt, alg)
                    pending.append((sample, alg, pool.submit(_worker_task, task)))
                    while len(pending) >= window:
                        s, a, fut = pending.popleft()
                        emit(s, a, *fut.result())
                while pending:
                    s, a, fut = pending.popleft()
                    emit(s, a, *fut.result())
    return summary


# --- analysis --------------------------------------------------------------


def usable(records: Iterable[ExperimentRecord]) -> list[ExperimentRecord]:
    return [r for r in records if r.performance is not PERFECT and math.isfinite(r.performance)]


def fit_all(records: Iterable[ExperimentRecord], log_base: LogBase = "natural") -> dict[AlgorithmId, RegressionFit]:
    groups: dict[AlgorithmId, list[ExperimentRecord]] = {}
    for r in usable(records):
        groups.setdefault(r.algorithm, []).append(r)
    fits = {}
    for alg in ALL_ALGORITHMS:
        group = groups.get(alg)
        if not group:
            continue
        if len(group) < 5:
            _log.warning("%s: only %d usable records, need 5; omitted", alg.value, len(group))
            continue
        fits[alg] = ols_fit(build_design([(r.profile, r.performance) for r in group], log_base), log_base)
    return fits


Held = Literal["ipu", "ipi"]


@dataclass(frozen=True)
class ConstantSlice:
    held: Held
    center: float
    tolerance: float
    members: tuple[ExperimentRecord, ...]

    @property
    def varying(self) -> Held:
        return "ipi" if self.held == "ipu" else "ipu"

    def for_algorithm(self, algorithm: AlgorithmId) -> list[ExperimentRecord]:
        return [r for r in self.members if r.algorithm == algorithm]


def slice_constant(records: Iterable[ExperimentRecord], held: Held, center: float, tolerance: float = 0.02) -> ConstantSlice:
    """Records whose held characteristic lies within ``center * (1 +- tolerance)``."""
    held = held.lower()
    if held not in ("ipu", "ipi"):
        raise ValueError(f"held must be 'ipu' or 'ipi', got {held!r}")
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    lo, hi = center * (1 - tolerance), center * (1 + tolerance)
    varying = "ipi" if held == "ipu" else "ipu"
    members = [r for r in records if lo <= getattr(r, held) <= hi]
    members.sort(key=lambda r: (getattr(r, varying), r.sample_index, r.algorithm.value))
    if not members:
        _log.warning("no records with %s within %g +- %g%%", held, center, 100 * tolerance)
    return ConstantSlice(held, center, tolerance, tuple(members))


@dataclass(frozen=True)
class PlotData:
    x: np.ndarray
    performance: np.ndarray
    line: dict | None


def line_fit(x, y) -> dict | None:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 2 or np.ptp(x) == 0:
        return None
    res = stats.linregress(x, y)
    r = float(res.rvalue) if np.ptp(y) > 0 else 0.0
    return {"slope": float(res.slope), "intercept": float(res.intercept), "r": r, "r2": r * r, "n_points": len(x)}


def emit_plot_data(
    slice_: ConstantSlice, algorithm: AlgorithmId, out=None, log_base: LogBase = "natural"
) -> PlotData:
    """
    Performance against the log of the varying characteristic for one algorithm.

    With ``out`` set, writes ``x,performance`` CSV there and the straight-line
    fit to ``<out stem>.fit.json``.
    """
    members = [r for r in usable(slice_.for_algorithm(AlgorithmId(algorithm)))]
    if not members:
        raise ValueError(f"slice has no usable records for {AlgorithmId(algorithm).value}")
    log = log_fn(log_base)
    x = np.array([float(log(getattr(r, slice_.varying))) for r in members])
    y = np.array([r.performance for r in members])
    line = line_fit(x, y)
    if line is None:
        _log.warning("cannot fit a line through %d point(s) with distinct x; line omitted", len(x))
    else:
        line.update(held=slice_.held, center=slice_.center, tolerance=slice_.tolerance, log_base=log_base,
                    algorithm=AlgorithmId(algorithm).value)
    if out is not None:
        out = Path(out)
        write_plot_csv(out, x, y)
        sidecar_path(out).write_text(json.dumps(line, indent=2) + "\n", encoding="utf-8")
    return PlotData(x, y, line)


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".fit.json")


def write_plot_csv(path, x, y):
    with open(path, "w", encoding="utf-8") as f:
        f.write("x,performance\n")
        for a, b in zip(np.asarray(x).tolist(), np.asarray(y).tolist()):
            f.write(f"{a!r},{b!r}\n")


def read_plot_csv(path) -> tuple[np.ndarray, np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "x,performance":
        raise ValueError(f"{path}: expected header 'x,performance'")
    rows = [tuple(float(v) for v in ln.split(",")) for ln in lines[1:] if ln.strip()]
    if not rows:
        return np.empty(0), np.empty(0)
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def densest_center(records: Iterable[ExperimentRecord], held: Held, tolerance: float) -> tuple[float, int]:
    """Center (one of the observed values) whose band holds the most distinct samples."""
    per_sample = {}
    for r in records:
        per_sample[r.sample_index] = getattr(r, held)
    values = np.sort(np.array(list(per_sample.values())))
    best, best_count = float("nan"), 0
    for c in values:
        count = int(np.sum((values >= c * (1 - tolerance)) & (values <= c * (1 + tolerance))))
        if count > best_count:
            best, best_count = float(c), count
    return best, best_count
