"""Subset-normalized distances, local kernels, Gram matrices and energy statistics.

The squared distance between two data items on a feature subset ``S`` is

    (1 / |S|) * sum_{i in S} ||x^i - y^i||^2,

where each block norm is the grid-weighted sum ``(1/d) * sum_t (x^i_t - y^i_t)^2``.
Gaussian kernels use ``exp(-dist^2 / sigma^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import Axis, DataError, DataMatrix, DegenerateError, SubsetView, normalize_subset

Family = Literal["gaussian", "linear"]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth.

    ``provenance`` is ``"explicit"`` or ``"median"``; for the latter
    ``multiplier`` records the factor applied to the heuristic value.
    The linear family ignores ``sigma``.
    """

    family: Family = "gaussian"
    sigma: float = 1.0
    provenance: str = "explicit"
    multiplier: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "linear"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "gaussian" and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"bandwidth must be positive, got {self.sigma}")

    def to_dict(self) -> dict:
        return {"family": self.family, "sigma": float(self.sigma),
                "provenance": self.provenance, "multiplier": float(self.multiplier)}


@dataclass(frozen=True, eq=False)
class GramMatrix:
    k: np.ndarray
    spec: KernelSpec
    subset: np.ndarray


def normalized_sq_distance(x, y, subset, grid_width: int = 1) -> float:
    """Subset-normalized squared distance between two stored data rows.

    Args:
        x, y: 1-D arrays of length ``p * grid_width``.
        subset: Covariate indices defining the norm's domain.
        grid_width: Samples per covariate.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = x.size // grid_width
    sub = normalize_subset(subset, p)
    diff = (x - y).reshape(p, grid_width)[sub]
    return float(np.sum(diff * diff) / (grid_width * sub.size))


def gaussian_kernel(x, y, subset, sigma: float, grid_width: int = 1) -> float:
    if not sigma > 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    return float(np.exp(-normalized_sq_distance(x, y, subset, grid_width) / sigma**2))


def linear_kernel(x, y, subset, grid_width: int = 1) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = x.size // grid_width
    sub = normalize_subset(subset, p)
    xs = x.reshape(p, grid_width)[sub]
    ys = y.reshape(p, grid_width)[sub]
    return float(np.sum(xs * ys) / (grid_width * sub.size))


def pairwise_sq_distances(view: SubsetView) -> np.ndarray:
    """Full symmetric matrix of normalized squared distances, zero diagonal."""
    vals = view.values
    scale = 1.0 / (view.grid_width * view.features.size)
    if view.n_items == 1:
        return np.zeros((1, 1))
    return squareform(pdist(vals, "sqeuclidean") * scale)


def median_heuristic(m: DataMatrix, axis: Axis = "rows", subset=None) -> float:
    """Bandwidth from the median pairwise squared distance.

    Returns ``sqrt(median)`` over all unordered pairs of distinct items on
    ``axis``, with distances taken over ``subset`` of the opposite axis
    (all of it by default). An even pair count averages the middle two.

    Raises:
        DegenerateError: if the median is zero, in which case an explicit
            bandwidth must be supplied.
    """
    view = SubsetView(m, axis, subset)
    if view.n_items < 2:
        raise DataError("median heuristic needs at least two items")
    d2 = pdist(view.values, "sqeuclidean") / (view.grid_width * view.features.size)
    med = float(np.median(d2))
    if not med > 0:
        raise DegenerateError(
            f"median heuristic on {axis} is zero; supply an explicit bandwidth")
    return float(np.sqrt(med))


def _symmetrize(g: np.ndarray) -> np.ndarray:
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def kernel_from_view(view: SubsetView, spec: KernelSpec) -> np.ndarray:
    if spec.family == "gaussian":
        return np.exp(-pairwise_sq_distances(view) / spec.sigma**2)
    vals = view.values
    g = vals @ vals.T / (view.grid_width * view.features.size)
    return _symmetrize(g)


def gram_matrix(m: DataMatrix, axis: Axis, subset, spec: KernelSpec) -> GramMatrix:
    """Kernel evaluations between all items on ``axis`` over ``subset``."""
    view = SubsetView(m, axis, subset)
    return GramMatrix(kernel_from_view(view, spec), spec, view.features)


def mmd_squared(gxx, gyy, gxy) -> float:
    """Biased (V-statistic) squared MMD from the three kernel blocks."""
    gxx, gyy, gxy = (np.asarray(g, dtype=np.float64) for g in (gxx, gyy, gxy))
    n1, n2 = gxx.shape[0], gyy.shape[0]
    if n1 == 0 or n2 == 0:
        raise DataError("MMD needs two nonempty samples")
    if gxx.shape != (n1, n1) or gyy.shape != (n2, n2) or gxy.shape != (n1, n2):
        raise DataError("inconsistent kernel block shapes")
    return float(gxx.sum() / n1**2 + gyy.sum() / n2**2 - 2.0 * gxy.sum() / (n1 * n2))


def kernel_distance(k: np.ndarray) -> np.ndarray:
    """Negative-type semimetric ``rho(x, y) = k(x,x) + k(y,y) - 2 k(x,y)``."""
    diag = np.diag(k)
    return diag[:, None] + diag[None, :] - 2.0 * k


def multisample_energy(gram, labels, m: int | None = None) -> float:
    """Between-sample energy statistic of a partition.

    Sums, over unordered cluster pairs ``a < b``, the energy distance between
    the two samples under ``rho`` weighted by ``2 n_a n_b / n``. When ``m`` is
    given every cluster ``0..m-1`` must be nonempty.
    """
    k = gram.k if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=np.float64)
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if m is not None and (clusters.size != m or np.any(clusters != np.arange(m))):
        raise DataError("every cluster must be nonempty")
    if clusters.size < 2:
        raise DataError("energy statistic needs at least two clusters")
    rho = kernel_distance(k)
    n = labels.size
    idx = [np.flatnonzero(labels == c) for c in clusters]
    within = [rho[np.ix_(i, i)].sum() / i.size**2 for i in idx]
    total = 0.0
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            na, nb = idx[a].size, idx[b].size
            between = 2.0 * rho[np.ix_(idx[a], idx[b])].sum() / (na * nb)
            total += 2.0 * na * nb / n * (between - within[a] - within[b])
    return float(total)
