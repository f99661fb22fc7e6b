"""Data model: covariate layout, data matrices, bipartitions and subset views.

A data matrix stores ``n`` data rows by ``p`` covariates, where every covariate
is a block of ``d`` uniformly spaced grid samples (``d = 1`` for scalar data).
Covariate ``i`` occupies stored columns ``[i*d, (i+1)*d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

Axis = Literal["rows", "cols"]


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


class DegenerateError(ArithmeticError):
    """Raised when a numerical quantity is degenerate (e.g. zero bandwidth)."""


@dataclass(frozen=True)
class CovariateLayout:
    """Block layout of the stored columns.

    Attributes:
        p: Number of covariates.
        d: Grid width, the number of samples per covariate.
    """

    p: int
    d: int = 1

    def __post_init__(self):
        if self.p < 1 or self.d < 1:
            raise DataError(f"layout needs p >= 1 and d >= 1, got p={self.p}, d={self.d}")

    @property
    def grid_weight(self) -> float:
        """Quadrature weight of one grid sample, ``1/d``."""
        return 1.0 / self.d

    @property
    def n_columns(self) -> int:
        return self.p * self.d

    def columns(self, covariates) -> np.ndarray:
        """Stored column indices for a set of covariates, in block order."""
        covariates = np.asarray(covariates, dtype=np.intp)
        return (covariates[:, None] * self.d + np.arange(self.d)).ravel()


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Validated ``n x (p*d)`` matrix of grid-sampled covariates.

    The value array is stored read-only; use :func:`build_matrix` to construct.
    """

    values: np.ndarray
    layout: CovariateLayout
    row_ids: tuple = field(default=())
    covariate_ids: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.layout.p

    @property
    def d(self) -> int:
        return self.layout.d

    def blocks(self) -> np.ndarray:
        """The values as an ``(n, p, d)`` array (a view)."""
        return self.values.reshape(self.n, self.p, self.d)

    def n_items(self, axis: Axis) -> int:
        return self.n if axis == "rows" else self.p

    def as_data(self, axis: Axis) -> "DataMatrix":
        """The matrix with ``axis`` playing the role of data."""
        if axis == "rows":
            return self
        if axis == "cols":
            return transpose_roles(self)
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")


def build_matrix(values, layout: CovariateLayout | None = None, row_ids=None,
                 covariate_ids=None, min_items: int = 2) -> DataMatrix:
    """Validate a value grid against a layout and wrap it in a DataMatrix.

    Args:
        values: Two-dimensional array-like of shape ``(n, p*d)``.
        layout: Covariate layout. Defaults to scalar covariates, one per column.
        row_ids, covariate_ids: Optional identifiers used in reports.
        min_items: Minimum number of rows and of covariates.

    Raises:
        DataError: on shape mismatch, too few items or a non-finite entry. The
            message for a non-finite entry names its (row, column) position.
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"expected a 2-D value grid, got {arr.ndim} dimension(s)")
    if layout is None:
        layout = CovariateLayout(p=arr.shape[1], d=1)
    if arr.shape[1] != layout.n_columns:
        raise DataError(
            f"layout p={layout.p}, d={layout.d} needs {layout.n_columns} columns, "
            f"got {arr.shape[1]}")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        r, c = bad[0]
        raise DataError(f"non-finite entry {arr[r, c]!r} at position ({r}, {c})")
    if arr.shape[0] < min_items or layout.p < min_items:
        raise DataError(
            f"need at least {min_items} rows and covariates, got n={arr.shape[0]}, p={layout.p}")
    n = arr.shape[0]
    row_ids = tuple(range(n)) if row_ids is None else tuple(row_ids)
    covariate_ids = tuple(range(layout.p)) if covariate_ids is None else tuple(covariate_ids)
    if len(row_ids) != n or len(covariate_ids) != layout.p:
        raise DataError("identifier count does not match the matrix shape")
    arr.setflags(write=False)
    return DataMatrix(arr, layout, row_ids, covariate_ids)


def transpose_roles(m: DataMatrix) -> DataMatrix:
    """Swap the roles of data rows and covariates.

    Datum ``i`` of the result is original covariate ``i``; its covariate ``j``
    block is the original datum ``j``'s covariate ``i`` block. Applying the
    function twice returns bit-identical values.
    """
    t = np.ascontiguousarray(m.blocks().transpose(1, 0, 2)).reshape(m.p, m.n * m.d)
    t.setflags(write=False)
    return DataMatrix(t, CovariateLayout(p=m.n, d=m.d), m.covariate_ids, m.row_ids)


def _check_labels(labels, m: int, what: str) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or not np.issubdtype(labels.dtype, np.integer):
        raise DataError(f"{what} must be a 1-D integer sequence")
    if labels.size and (labels.min() < 0 or labels.max() >= m):
        raise DataError(f"{what} must lie in [0, {m})")
    return labels.astype(np.intp)


@dataclass(frozen=True, eq=False)
class Bipartition:
    """Paired row and covariate partitions sharing one cluster count ``m``.

    Row cluster ``l`` is paired with covariate cluster ``l``.
    """

    row_labels: np.ndarray
    col_labels: np.ndarray
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise DataError("cluster count must be positive")
        object.__setattr__(self, "row_labels", _check_labels(self.row_labels, self.m, "row labels"))
        object.__setattr__(self, "col_labels", _check_labels(self.col_labels, self.m, "column labels"))

    def labels(self, axis: Axis) -> np.ndarray:
        return self.row_labels if axis == "rows" else self.col_labels

    def is_complete(self) -> bool:
        """True when every cluster is nonempty on both axes."""
        return all(np.bincount(lab, minlength=self.m).min() > 0
                   for lab in (self.row_labels, self.col_labels))

    def members(self, axis: Axis, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels(axis) == cluster)

    def __eq__(self, other):
        if not isinstance(other, Bipartition):
            return NotImplemented
        return (self.m == other.m and np.array_equal(self.row_labels, other.row_labels)
                and np.array_equal(self.col_labels, other.col_labels))


def normalize_subset(subset: Sequence[int] | np.ndarray, size: int) -> np.ndarray:
    """Sorted unique index array; raises on empty, duplicated or out-of-range input."""
    idx = np.asarray(subset, dtype=np.intp).ravel()
    if idx.size == 0:
        raise DataError("feature subset must be nonempty")
    if idx.min() < 0 or idx.max() >= size:
        raise DataError(f"feature subset indices must lie in [0, {size})")
    uniq = np.unique(idx)
    if uniq.size != idx.size:
        raise DataError("feature subset contains duplicate indices")
    return uniq


class SubsetView:
    """Data items along ``axis`` restricted to a subset of the opposite axis.

    The view keeps a reference to the matrix; :attr:`values` gathers the
    active columns on demand and never modifies the source.
    """

    def __init__(self, matrix: DataMatrix, axis: Axis, features=None):
        self.matrix = matrix
        self.axis = axis
        self._data = matrix.as_data(axis)
        if features is None:
            features = np.arange(self._data.p)
        self.features = normalize_subset(features, self._data.p)

    @property
    def n_items(self) -> int:
        return self._data.n

    @property
    def grid_width(self) -> int:
        return self._data.d

    @property
    def values(self) -> np.ndarray:
        """``(n_items, |features|*d)`` array of the active blocks."""
        return self._data.values[:, self._data.layout.columns(self.features)]

    def __repr__(self):
        return (f"SubsetView(axis={self.axis!r}, items={self.n_items}, "
                f"features={self.features.size}, d={self.grid_width})")
