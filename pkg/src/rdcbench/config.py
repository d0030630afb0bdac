"""
Experiment config files.

Grammar: one ``key = value`` per line; ``#`` starts a comment; blank lines are
ignored; a key may appear once.  Per-algorithm hyperparameters use dotted keys
such as ``SVD.n_factors = 50``.  Relative dataset and output paths are resolved
against the config file's directory.

Recognised keys::

    dataset, format, scale (min,max,step), n_samples, m_min, m_max, n_min,
    n_max, min_ratings_per_row, min_ratings_per_col, master_seed,
    test_fraction, algorithms (comma list), log_base, output_dir, workers, clip
"""

from __future__ import annotations

from pathlib import Path

from .algorithms import ALL_ALGORITHMS, AlgorithmId
from .experiment import ExperimentConfig
from .ratings import FORMATS, RatingScale
from .sampler import SamplePlan


class ConfigError(ValueError):
    pass


KEYS = {
    "dataset": str,
    "format": str,
    "scale": str,
    "n_samples": int,
    "m_min": int,
    "m_max": int,
    "n_min": int,
    "n_max": int,
    "min_ratings_per_row": int,
    "min_ratings_per_col": int,
    "master_seed": int,
    "test_fraction": float,
    "algorithms": str,
    "log_base": str,
    "output_dir": str,
    "workers": int,
    "clip": str,
}
REQUIRED = ("dataset", "format", "n_samples", "m_min", "m_max", "n_min", "n_max")


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_text(text, str(path))


def _bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def build_config(values: dict[str, str], base_dir=None) -> ExperimentConfig:
    """Turn raw key/value strings into an :class:`ExperimentConfig`; unknown keys raise."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    plain: dict = {}
    overrides: dict[AlgorithmId, dict[str, str]] = {}
    for key, value in values.items():
        if "." in key:
            alg_name, param = key.split(".", 1)
            try:
                alg = AlgorithmId.parse(alg_name)
            except ValueError as e:
                raise ConfigError(str(e)) from None
            overrides.setdefault(alg, {})[param] = value
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            plain[key] = KEYS[key](value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r} as {KEYS[key].__name__}") from None
    missing = [k for k in REQUIRED if k not in plain]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    if plain["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}, got {plain['format']!r}")

    def resolve(p: str) -> str:
        q = Path(p).expanduser()
        return str(q if q.is_absolute() else (base_dir / q))

    try:
        algorithms = (
            tuple(AlgorithmId.parse(a) for a in plain["algorithms"].split(",") if a.strip())
            if "algorithms" in plain
            else ALL_ALGORITHMS
        )
        plan = SamplePlan(
            n_samples=plain["n_samples"],
            m_range=(plain["m_min"], plain["m_max"]),
            n_range=(plain["n_min"], plain["n_max"]),
            min_ratings_per_row=plain.get("min_ratings_per_row", 1),
            min_ratings_per_col=plain.get("min_ratings_per_col", 1),
            master_seed=plain.get("master_seed", 0),
        )
        return ExperimentConfig(
            dataset=resolve(plain["dataset"]),
            format=plain["format"],
            plan=plan,
            algorithms=algorithms,
            overrides=overrides,
            test_fraction=plain.get("test_fraction", 0.2),
            log_base=plain.get("log_base", "natural"),
            output_dir=resolve(plain.get("output_dir", "results")),
            workers=plain.get("workers", 1),
            clip=_bool(plain["clip"], "clip") if "clip" in plain else True,
            scale=RatingScale.parse(plain["scale"]) if "scale" in plain else None,
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read a config file and apply flag overrides (flags win)."""
    values = read_config_file(path)
    values.update(overrides or {})
    return build_config(values, Path(path).resolve().parent)


def dump_config(values: dict[str, object]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())
