"""
Sparse user-item rating matrices, dataset loaders and rating data characteristics.

A :class:`RatingMatrix` keeps its triples twice: sorted by (user, item) for row
sweeps and, through a permutation, sorted by (item, user) for column access.
Both views share the same arrays, so they always hold the same triple set.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

_log = logging.getLogger(__name__)


class RatingDataError(ValueError):
    """Raised for unreadable, malformed or out-of-scale rating data."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RatingScale:
    min_value: float
    max_value: float
    step: float

    def __post_init__(self):
        if not self.min_value < self.max_value:
            raise ValueError(f"scale min {self.min_value} must be below max {self.max_value}")
        if not self.step > 0:
            raise ValueError(f"scale step must be positive, got {self.step}")
        k = (self.max_value - self.min_value) / self.step
        if abs(k - round(k)) > 1e-9:
            raise ValueError(
                f"scale range {self.min_value}..{self.max_value} is not a multiple of step {self.step}"
            )

    def contains(self, value: float) -> bool:
        return self.min_value <= value <= self.max_value

    def clip(self, value):
        return np.clip(value, self.min_value, self.max_value)

    @classmethod
    def parse(cls, text: str) -> "RatingScale":
        """Parse ``"min,max,step"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected 'min,max,step', got {text!r}")
        return cls(*(float(p) for p in parts))

    def __str__(self):
        return f"{self.min_value:g},{self.max_value:g},{self.step:g}"


ML_1M_SCALE = RatingScale(1.0, 5.0, 1.0)
ML_25M_SCALE = RatingScale(0.5, 5.0, 0.5)
YAHOO_SCALE = RatingScale(1.0, 100.0, 1.0)


class RatingTriple(NamedTuple):
    user_index: int
    item_index: int
    value: float


@dataclass(frozen=True)
class Triples:
    """A plain array-backed sequence of triples (used for held-out test sets)."""

    users: np.ndarray
    items: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    def __iter__(self) -> Iterator[RatingTriple]:
        for u, i, r in zip(self.users.tolist(), self.items.tolist(), self.values.tolist()):
            yield RatingTriple(u, i, r)

    @classmethod
    def from_sequence(cls, triples: Iterable) -> "Triples":
        if isinstance(triples, Triples):
            return triples
        rows = list(triples)
        return cls(
            np.array([t[0] for t in rows], dtype=np.int64),
            np.array([t[1] for t in rows], dtype=np.int64),
            np.array([t[2] for t in rows], dtype=np.float64),
        )


class RatingMatrix:
    """
    Immutable sparse rating matrix with row-major and column-major access.

    Parameters
    ----------
    m, n:
        Number of users (rows) and items (columns).
    users, items, values:
        Parallel arrays of triples, in any order.
    scale:
        Declared rating scale; every value must lie within it.
    allow_empty:
        Permit users or items without ratings.  Only train matrices produced
        by a split need this; everything else is kept free of empty rows and
        columns.
    """

    def __init__(
        self,
        m: int,
        n: int,
        users,
        items,
        values,
        scale: RatingScale,
        source_id: str = "",
        metadata: dict | None = None,
        allow_empty: bool = False,
    ):
        users = np.asarray(users, dtype=np.int64).ravel()
        items = np.asarray(items, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if not (len(users) == len(items) == len(values)):
            raise ValueError("users, items and values must have equal length")
        m, n = int(m), int(n)
        if m < 0 or n < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(values):
            if users.min() < 0 or users.max() >= m:
                raise ValueError(f"user index out of range for m={m}")
            if items.min() < 0 or items.max() >= n:
                raise ValueError(f"item index out of range for n={n}")
            bad = (values < scale.min_value) | (values > scale.max_value) | ~np.isfinite(values)
            if bad.any():
                raise ValueError(f"rating {values[bad][0]} outside scale [{scale.min_value}, {scale.max_value}]")

        order = np.lexsort((items, users))
        users, items, values = users[order], items[order], values[order]
        if len(values) > 1:
            dup = (users[1:] == users[:-1]) & (items[1:] == items[:-1])
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate rating for (user {users[k]}, item {items[k]})")

        row_counts = np.bincount(users, minlength=m)
        col_counts = np.bincount(items, minlength=n)
        if not allow_empty and ((row_counts == 0).any() or (col_counts == 0).any()):
            raise ValueError("matrix has users or items without ratings")

        self._m = m
        self._n = n
        self.users = users
        self.items = items
        self.values = values
        self.scale = scale
        self.source_id = source_id
        self.metadata = dict(metadata or {})
        self.row_ptr = np.concatenate([[0], np.cumsum(row_counts)]).astype(np.int64)
        self.col_ptr = np.concatenate([[0], np.cumsum(col_counts)]).astype(np.int64)
        self.col_order = np.lexsort((users, items))
        for arr in (self.users, self.items, self.values, self.row_ptr, self.col_ptr, self.col_order):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return self._m

    @property
    def n(self) -> int:
        return self._n

    @property
    def n_ratings(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return (self._m, self._n)

    def row(self, user: int) -> tuple[np.ndarray, np.ndarray]:
        """Items and ratings of one user, sorted by item."""
        lo, hi = self.row_ptr[user], self.row_ptr[user + 1]
        return self.items[lo:hi], self.values[lo:hi]

    def column(self, item: int) -> tuple[np.ndarray, np.ndarray]:
        """Users and ratings of one item, sorted by user."""
        idx = self.col_order[self.col_ptr[item] : self.col_ptr[item + 1]]
        return self.users[idx], self.values[idx]

    @property
    def col_users(self) -> np.ndarray:
        return self.users[self.col_order]

    @property
    def col_values(self) -> np.ndarray:
        return self.values[self.col_order]

    def triples(self) -> Iterator[RatingTriple]:
        return iter(Triples(self.users, self.items, self.values))

    def triple_set(self) -> set[tuple[int, int, float]]:
        return set(zip(self.users.tolist(), self.items.tolist(), self.values.tolist()))

    def column_major_triples(self) -> list[RatingTriple]:
        o = self.col_order
        return [RatingTriple(*t) for t in zip(self.users[o].tolist(), self.items[o].tolist(), self.values[o].tolist())]

    def to_dense(self, fill: float = np.nan) -> np.ndarray:
        out = np.full((self._m, self._n), fill)
        out[self.users, self.items] = self.values
        return out

    def global_mean(self) -> float:
        return math.fsum(self.values.tolist()) / len(self.values) if len(self.values) else float("nan")

    def __eq__(self, other):
        if not isinstance(other, RatingMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.scale == other.scale
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.items, other.items)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"RatingMatrix(m={self._m}, n={self._n}, n_ratings={self.n_ratings}, source={self.source_id!r})"


@dataclass(frozen=True)
class RdcProfile:
    """Rating data characteristics of one matrix."""

    m: int
    n: int
    n_ratings: int
    ipu: float = field(init=False)
    ipi: float = field(init=False)
    density: float = field(init=False)

    def __post_init__(self):
        if self.m <= 0 or self.n <= 0:
            raise ValueError("rating data characteristics need at least one user and one item")
        if self.n_ratings <= 0:
            raise ValueError("rating data characteristics need at least one rating")
        if self.n_ratings > self.m * self.n:
            raise ValueError(f"{self.n_ratings} ratings cannot fit in a {self.m}x{self.n} matrix")
        object.__setattr__(self, "ipu", self.n_ratings / self.m)
        object.__setattr__(self, "ipi", self.n_ratings / self.n)
        object.__setattr__(self, "density", self.n_ratings / (self.m * self.n))

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "n_ratings": self.n_ratings,
            "ipu": self.ipu,
            "ipi": self.ipi,
            "density": self.density,
        }

    def __str__(self):
        return (
            f"m={self.m} n={self.n} n_ratings={self.n_ratings} "
            f"IpU={self.ipu:.4f} IpI={self.ipi:.4f} density={self.density:.6f}"
        )


def rdc_profile(matrix: RatingMatrix) -> RdcProfile:
    return RdcProfile(matrix.m, matrix.n, matrix.n_ratings)


# --- loaders ---------------------------------------------------------------


def _id_key(raw: str):
    return (0, int(raw), raw) if raw.lstrip("-").isdigit() else (1, 0, raw)


def compact(raw_users, raw_items, values, scale: RatingScale, source_id: str) -> RatingMatrix:
    """
    Map raw user/item ids onto dense 0-based indices.

    Ids are numbered in sorted order (numeric where possible), so the result
    does not depend on line order.  For repeated (user, item) pairs the last
    occurrence in ``values`` wins.
    """
    if not values:
        raise RatingDataError("no ratings")
    user_ids = sorted(set(raw_users), key=_id_key)
    item_ids = sorted(set(raw_items), key=_id_key)
    uidx = {u: k for k, u in enumerate(user_ids)}
    iidx = {i: k for k, i in enumerate(item_ids)}
    cells: dict[tuple[int, int], float] = {}
    for u, i, r in zip(raw_users, raw_items, values):
        cells[uidx[u], iidx[i]] = r
    n_dup = len(values) - len(cells)
    if n_dup:
        _log.info("%s: %d duplicate ratings replaced by their last occurrence", source_id, n_dup)
    keys = np.array(list(cells.keys()), dtype=np.int64).reshape(-1, 2)
    return RatingMatrix(
        len(user_ids),
        len(item_ids),
        keys[:, 0],
        keys[:, 1],
        np.fromiter(cells.values(), dtype=np.float64, count=len(cells)),
        scale,
        source_id=source_id,
        metadata={"user_ids": user_ids, "item_ids": item_ids},
    )


def _read_lines(path) -> list[str]:
    try:
        with open(path, encoding="utf-8", errors="replace") as f:
            return f.read().splitlines()
    except OSError as e:
        raise RatingDataError(f"cannot read {path}: {e}") from e


def _parse_rows(lines, start: int, split, min_fields: int, scale: RatingScale):
    users, items, values = [], [], []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = split(line)
        if len(parts) < min_fields:
            raise RatingDataError(f"expected at least {min_fields} fields, got {len(parts)}: {line!r}", lineno)
        u, i, r = parts[0].strip(), parts[1].strip(), parts[2].strip()
        if not u or not i:
            raise RatingDataError(f"empty user or item id: {line!r}", lineno)
        try:
            value = float(r)
        except ValueError:
            raise RatingDataError(f"rating {r!r} is not a number", lineno) from None
        if not math.isfinite(value) or not scale.contains(value):
            raise RatingDataError(
                f"rating {r} outside scale [{scale.min_value:g}, {scale.max_value:g}]", lineno
            )
        users.append(u)
        items.append(i)
        values.append(value)
    return users, items, values


def load_movielens_delimited(path, delimiter: str = "::", scale: RatingScale = ML_1M_SCALE) -> RatingMatrix:
    """
    Load MovieLens ratings.

    ``"::"`` reads the headerless 1M ``ratings.dat`` layout; ``","`` reads the
    25M ``ratings.csv`` layout and skips its header line.  Timestamps are ignored.
    """
    lines = _read_lines(path)
    start = 1 if delimiter == "," and lines and not _looks_numeric(lines[0].split(",")[0]) else 0
    users, items, values = _parse_rows(lines, start, lambda s: s.split(delimiter), 3, scale)
    return compact(users, items, values, scale, source_id=str(path))


def load_yahoo_ratings(path, scale: RatingScale = YAHOO_SCALE) -> RatingMatrix:
    """Load tab-separated ``user item rating`` lines."""
    lines = _read_lines(path)
    users, items, values = _parse_rows(lines, 0, lambda s: s.split("\t"), 3, scale)
    return compact(users, items, values, scale, source_id=str(path))


def _looks_numeric(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def save_triples(matrix: RatingMatrix, path) -> None:
    """Write the canonical triple file."""
    s = matrix.scale
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{matrix.m} {matrix.n} {matrix.n_ratings} {s.min_value!r} {s.max_value!r} {s.step!r}\n")
        for u, i, r in zip(matrix.users.tolist(), matrix.items.tolist(), matrix.values.tolist()):
            f.write(f"{u} {i} {r!r}\n")


def load_triples(path, scale: RatingScale | None = None) -> RatingMatrix:
    """Read a canonical triple file written by :func:`save_triples`."""
    lines = _read_lines(path)
    if not lines:
        raise RatingDataError("no ratings")
    head = lines[0].split()
    if len(head) != 6:
        raise RatingDataError("header must be 'm n n_ratings scale_min scale_max scale_step'", 1)
    try:
        m, n, nr = int(head[0]), int(head[1]), int(head[2])
        file_scale = RatingScale(float(head[3]), float(head[4]), float(head[5]))
    except ValueError as e:
        raise RatingDataError(f"bad header: {e}", 1) from None
    scale = scale or file_scale
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != nr:
        raise RatingDataError(f"header declares {nr} ratings, file has {len(body)}")
    if nr == 0:
        raise RatingDataError("no ratings")
    try:
        arr = np.loadtxt(body, dtype=np.float64, ndmin=2)
    except ValueError as e:
        # fall back to a line-by-line parse for a precise location
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if line.strip() and (len(parts) != 3 or not all(_looks_numeric(p) for p in parts)):
                raise RatingDataError(f"malformed triple {line!r}", lineno) from None
        raise RatingDataError(str(e)) from None
    if arr.shape[1] != 3:
        raise RatingDataError("each line must hold 'user item rating'")
    try:
        return RatingMatrix(
            m, n, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2], scale, source_id=str(path)
        )
    except ValueError as e:
        raise RatingDataError(str(e)) from None


FORMATS = ("ml-1m", "ml-25m", "yahoo", "triples")
DEFAULT_SCALES = {"ml-1m": ML_1M_SCALE, "ml-25m": ML_25M_SCALE, "yahoo": YAHOO_SCALE}


def load_dataset(path, fmt: str, scale: RatingScale | None = None) -> RatingMatrix:
    """Dispatch on a format name from :data:`FORMATS`."""
    path = Path(path)
    if fmt == "ml-1m":
        return load_movielens_delimited(path, "::", scale or ML_1M_SCALE)
    if fmt == "ml-25m":
        return load_movielens_delimited(path, ",", scale or ML_25M_SCALE)
    if fmt == "yahoo":
        return load_yahoo_ratings(path, scale or YAHOO_SCALE)
    if fmt == "triples":
        return load_triples(path, scale)
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
