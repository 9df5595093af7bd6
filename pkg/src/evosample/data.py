"""Tabular regression datasets: CSV loading, ordinal encoding, splits, synthetic data."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from evosample.errors import (
    DataError,
    DegenerateSplitError,
    EmptyFileError,
    MissingColumnError,
    MissingFileError,
    MissingValueError,
    UnparseableCellError,
)

MISSING_TOKENS = frozenset({"", "?", "na", "nan", "null", "none"})


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dataset:
    """Encoded numeric feature matrix plus target vector.

    Arrays are made read-only on construction so a dataset can be shared
    freely between individuals and worker processes.
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float, copy=True)
        target = np.array(self.target, dtype=float, copy=True)
        if features.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {features.shape}")
        if target.ndim != 1 or target.shape[0] != features.shape[0]:
            raise DataError(
                f"target length {target.shape} does not match {features.shape[0]} rows"
            )
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != features.shape[1]:
            raise DataError(
                f"{len(names)} feature names for {features.shape[1]} columns"
            )
        if not (np.isfinite(features).all() and np.isfinite(target).all()):
            raise DataError("dataset contains non-finite values")
        features.flags.writeable = False
        target.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_cols(self) -> int:
        return self.features.shape[1]

    def subset(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.features[rows], self.target[rows], self.feature_names)


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    test_fraction: float
    train_rows: np.ndarray
    test_rows: np.ndarray


def ordinal_encode(raw_column: Sequence[str]) -> np.ndarray:
    """Map text values to 0, 1, 2, ... following their lexicographic order.

    >>> ordinal_encode(["B", "A", "B", "C"]).tolist()
    [1.0, 0.0, 1.0, 2.0]
    """
    codes = {value: i for i, value in enumerate(sorted(set(raw_column)))}
    return np.array([codes[v] for v in raw_column], dtype=float)


def _parse_number(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(path: str | os.PathLike, target_column: str) -> Dataset:
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    A column whose cells all parse as finite numbers is numeric. A column
    with no parseable cell is categorical and gets ordinal codes. A column
    mixing the two raises :class:`UnparseableCellError`. Empty cells and the
    usual missing-value tokens (``?``, ``NA``, ...) raise
    :class:`MissingValueError`; the target must be numeric.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise EmptyFileError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if target_column not in header:
        raise MissingColumnError(
            f"target column {target_column!r} not in header {header} of {path}"
        )
    if len(body) < 2:
        raise EmptyFileError(f"{path} has {len(body)} data rows; need at least 2")

    columns: list[list[str]] = [[] for _ in header]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise UnparseableCellError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell.lower() in MISSING_TOKENS:
                raise MissingValueError(
                    f"{path}:{lineno}: missing value in column {header[j]!r}"
                )
            columns[j].append(cell)

    encoded: dict[str, np.ndarray] = {}
    for name, cells in zip(header, columns):
        parsed = [_parse_number(c) for c in cells]
        n_bad = sum(p is None for p in parsed)
        if n_bad == 0:
            encoded[name] = np.array(parsed, dtype=float)
        elif n_bad == len(parsed) and name != target_column:
            encoded[name] = ordinal_encode(cells)
        else:
            bad = next(i for i, p in enumerate(parsed) if p is None)
            raise UnparseableCellError(
                f"{path}:{bad + 2}: cannot parse {cells[bad]!r} in numeric "
                f"column {name!r}"
            )

    names = [h for h in header if h != target_column]
    if not names:
        raise DataError(f"{path} has no feature columns besides {target_column!r}")
    features = np.column_stack([encoded[n] for n in names])
    return Dataset(features, encoded[target_column], tuple(names))


def train_test_split(ds: Dataset, test_fraction: float, rng: np.random.Generator) -> SplitPair:
    if not 0.0 < test_fraction < 1.0:
        raise DegenerateSplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = round_half_up(test_fraction * ds.n_rows)
    if n_test < 1 or n_test > ds.n_rows - 1:
        raise DegenerateSplitError(
            f"test_fraction={test_fraction} on {ds.n_rows} rows leaves an empty side"
        )
    order = rng.permutation(ds.n_rows)
    test_rows = np.sort(order[:n_test])
    train_rows = np.sort(order[n_test:])
    return SplitPair(
        train=ds.subset(train_rows),
        test=ds.subset(test_rows),
        test_fraction=test_fraction,
        train_rows=train_rows,
        test_rows=test_rows,
    )


def synthetic_mean(features: np.ndarray) -> np.ndarray:
    """Noise-free target of :func:`make_synthetic`.

    ``f(x) = 2 * [x0 > 0.5] + x1`` when there are two or more columns, and
    ``2 * [x0 > 0.5]`` with a single column.
    """
    features = np.asarray(features, dtype=float)
    mean = 2.0 * (features[:, 0] > 0.5)
    if features.shape[1] > 1:
        mean = mean + features[:, 1]
    return mean


def make_synthetic(n_rows: int, n_cols: int, noise: float, rng: np.random.Generator) -> Dataset:
    """Uniform features in [0, 1] and target ``synthetic_mean(x) + noise * N(0, 1)``.

    The Bayes-optimal MSE is therefore ``noise ** 2``.
    """
    if n_rows < 2 or n_cols < 1:
        raise DataError(f"need n_rows >= 2 and n_cols >= 1, got {n_rows}, {n_cols}")
    if noise < 0:
        raise DataError(f"noise must be >= 0, got {noise}")
    features = rng.random((n_rows, n_cols))
    target = synthetic_mean(features) + noise * rng.standard_normal(n_rows)
    return Dataset(features, target, tuple(f"x{j}" for j in range(n_cols)))


def write_csv(ds: Dataset, path: str | os.PathLike, target_name: str = "y") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.feature_names, target_name])
        for row, y in zip(ds.features, ds.target):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])
