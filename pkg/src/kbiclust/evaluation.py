"""Clustering accuracy and the bandwidth-sensitivity sweep."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .akkb import AkkbConfig, akkb_fit
from .data import Bipartition, DataError, DataMatrix
from .kernels import KernelSpec, median_heuristic

EXACT_SEARCH_MAX = 8


@dataclass(frozen=True)
class AccuracyReport:
    row_accuracy: float
    col_accuracy: float
    row_permutation: tuple
    col_permutation: tuple

    @property
    def mean_accuracy(self) -> float:
        return (self.row_accuracy + self.col_accuracy) / 2

    def to_dict(self) -> dict:
        return {"row_accuracy": self.row_accuracy, "col_accuracy": self.col_accuracy,
                "mean_accuracy": self.mean_accuracy,
                "row_permutation": list(self.row_permutation),
                "col_permutation": list(self.col_permutation)}


def _confusion(pred, truth, k: int) -> np.ndarray:
    c = np.zeros((k, k), dtype=np.int64)
    np.add.at(c, (pred, truth), 1)
    return c


def clustering_accuracy(pred, truth) -> tuple[float, tuple]:
    """Best fraction of agreement over relabelings of ``pred``.

    Returns the accuracy and the permutation as a tuple ``perm`` with
    ``perm[pred_label] = truth_label``. Up to eight labels are searched
    exhaustively; larger label sets use an assignment solver.
    """
    pred = np.asarray(pred, dtype=np.intp)
    truth = np.asarray(truth, dtype=np.intp)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise DataError(f"label length mismatch: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise DataError("empty label vectors")
    if pred.min() < 0 or truth.min() < 0:
        raise DataError("labels must be non-negative")
    k = int(max(pred.max(), truth.max())) + 1
    conf = _confusion(pred, truth, k)
    if k <= EXACT_SEARCH_MAX:
        best, best_perm = -1, None
        for perm in itertools.permutations(range(k)):
            hits = conf[np.arange(k), perm].sum()
            if hits > best:
                best, best_perm = hits, perm
    else:
        rows, cols = linear_sum_assignment(-conf)
        best_perm = tuple(int(c) for c in cols[np.argsort(rows)])
        best = conf[rows, cols].sum()
    return float(best) / pred.size, tuple(int(v) for v in best_perm)


def bicluster_accuracy(pred: Bipartition, truth_rows, truth_cols) -> AccuracyReport:
    row_acc, row_perm = clustering_accuracy(pred.row_labels, truth_rows)
    col_acc, col_perm = clustering_accuracy(pred.col_labels, truth_cols)
    return AccuracyReport(row_acc, col_acc, row_perm, col_perm)


@dataclass
class SweepResult:
    multipliers_data: list
    multipliers_vars: list
    accuracy: np.ndarray
    sigma_data_ref: float
    sigma_vars_ref: float

    @property
    def spread(self) -> float:
        return float(self.accuracy.max() - self.accuracy.min())


def _sweep_cell(args):
    matrix, truth_rows, truth_cols, cfg = args
    res = akkb_fit(matrix, cfg)
    return bicluster_accuracy(res.bipartition, truth_rows, truth_cols).mean_accuracy


def bandwidth_sweep(matrix: DataMatrix, truth_rows, truth_cols, cfg: AkkbConfig,
                    multipliers_data, multipliers_vars, workers: int = 1) -> SweepResult:
    """Mean accuracy on a grid of bandwidths scaled from the median heuristic.

    Cell ``(i, j)`` fits with ``sigma_data = multipliers_data[i] * h_rows`` and
    ``sigma_variables = multipliers_vars[j] * h_cols`` using ``cfg.seed``, so
    each cell depends only on its two multipliers.
    """
    md = [float(a) for a in multipliers_data]
    mv = [float(b) for b in multipliers_vars]
    if not md or not mv:
        raise DataError("multiplier lists must be nonempty")
    if min(md) <= 0 or min(mv) <= 0:
        raise DataError("multipliers must be positive")
    h_rows = median_heuristic(matrix, "rows")
    h_cols = median_heuristic(matrix, "cols")
    jobs = []
    for a in md:
        for b in mv:
            cell = replace(cfg, kernel="gaussian",
                           sigma_data=KernelSpec("gaussian", a * h_rows, "median", a),
                           sigma_variables=KernelSpec("gaussian", b * h_cols, "median", b))
            jobs.append((matrix, truth_rows, truth_cols, cell))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_sweep_cell, jobs))
    else:
        values = [_sweep_cell(job) for job in jobs]
    grid = np.array(values).reshape(len(md), len(mv))
    return SweepResult(md, mv, grid, h_rows, h_cols)
