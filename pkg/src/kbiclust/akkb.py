"""Alternating kernel biclustering (AKKB).

Both axes are first clustered independently with kernel k-groups under a
global kernel. The fit then alternates a row half-step, in which row cluster
``l`` is scored with the local kernel over covariate cluster ``l``, and the
mirror column half-step on the transposed matrix, until neither label vector
changes over a full round or the round budget is spent.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Bipartition, DataError, DataMatrix, DegenerateError, SubsetView, transpose_roles
from .kernels import KernelSpec, kernel_from_view, median_heuristic
from .kgroups import ClusterState, KGroupsResult, kernel_kgroups

logger = logging.getLogger(__name__)

# Substream keys: (phase,) for the initial clusterings, (phase, round) later.
INIT_ROWS, INIT_COLS, ROW_STEP, COL_STEP = 0, 1, 2, 3


@dataclass(frozen=True)
class AkkbConfig:
    """Fit settings.

    ``sigma_data`` and ``sigma_variables`` are explicit kernel specs; when left
    as ``None`` the median heuristic on the full matrix, scaled by
    ``data_multiplier`` / ``vars_multiplier``, is used. ``phase_restarts``
    adds ``restarts - 1`` random starts to every half-step besides the warm
    start from the incumbent partition.
    """

    m: int = 2
    rounds: int = 20
    restarts: int = 100
    kernel: str = "gaussian"
    sigma_data: KernelSpec | None = None
    sigma_variables: KernelSpec | None = None
    data_multiplier: float = 1.0
    vars_multiplier: float = 1.0
    seed: int = 0
    phase_restarts: bool = True
    max_sweeps: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.m < 2:
            raise DataError("need at least two clusters")
        if self.rounds < 1:
            raise DataError("need at least one alternation round")
        if self.restarts < 1:
            raise DataError("need at least one restart")
        if self.kernel not in ("gaussian", "linear"):
            raise DataError(f"unknown kernel {self.kernel!r}")
        if self.data_multiplier <= 0 or self.vars_multiplier <= 0:
            raise DataError("bandwidth multipliers must be positive")


@dataclass
class HalfStep:
    phase: str
    round: int
    objective_before: float
    objective_after: float
    score_before: float
    score_after: float
    moves: int
    changed: bool
    clusters_nonempty: bool
    elapsed: float


@dataclass
class BiclusterResult:
    bipartition: Bipartition
    history: list = field(default_factory=list)
    converged: bool = False
    rounds_run: int = 0
    kernel_data: KernelSpec | None = None
    kernel_variables: KernelSpec | None = None
    elapsed: dict = field(default_factory=dict)

    @property
    def row_labels(self) -> np.ndarray:
        return self.bipartition.row_labels

    @property
    def col_labels(self) -> np.ndarray:
        return self.bipartition.col_labels


def resolve_kernels(m: DataMatrix, cfg: AkkbConfig) -> tuple[KernelSpec, KernelSpec]:
    """Kernel specs for the data and variable levels, frozen for the fit."""
    if cfg.kernel == "linear":
        lin = KernelSpec("linear", provenance="none")
        return cfg.sigma_data or lin, cfg.sigma_variables or lin
    specs = []
    for given, axis, mult in ((cfg.sigma_data, "rows", cfg.data_multiplier),
                              (cfg.sigma_variables, "cols", cfg.vars_multiplier)):
        if given is not None:
            specs.append(given)
        else:
            sigma = mult * median_heuristic(m, axis)
            specs.append(KernelSpec(cfg.kernel, sigma, "median", mult))
    return specs[0], specs[1]


def local_grams(data: DataMatrix, feature_labels, m: int, spec: KernelSpec) -> np.ndarray:
    """``(m, n, n)`` stack, entry ``l`` the kernel over feature cluster ``l``."""
    feature_labels = np.asarray(feature_labels)
    grams = []
    for l in range(m):
        feats = np.flatnonzero(feature_labels == l)
        if feats.size == 0:
            raise DegenerateError(f"feature cluster {l} is empty; cannot build its local kernel")
        grams.append(kernel_from_view(SubsetView(data, "rows", feats), spec))
    return np.stack(grams)


def _local_update(data: DataMatrix, feature_labels, labels, m: int, spec: KernelSpec,
                  cfg: AkkbConfig, key: tuple) -> tuple[KGroupsResult, ClusterState]:
    grams = local_grams(data, feature_labels, m, spec)
    incumbent = ClusterState(grams, labels, m)
    restarts = cfg.restarts if cfg.phase_restarts else 1
    res = kernel_kgroups(grams, m, restarts, seed=cfg.seed, key=key, warm_start=labels,
                         max_sweeps=cfg.max_sweeps, workers=cfg.workers)
    return res, incumbent


def row_update(m: DataMatrix, col_labels, row_labels, cfg: AkkbConfig,
               spec: KernelSpec | None = None, key: tuple = (ROW_STEP, 0)) -> KGroupsResult:
    """Re-cluster rows under the covariate-local kernels, warm-started from ``row_labels``."""
    spec = spec if spec is not None else resolve_kernels(m, cfg)[0]
    return _local_update(m, col_labels, row_labels, cfg.m, spec, cfg, key)[0]


def col_update(m: DataMatrix, col_labels, row_labels, cfg: AkkbConfig,
               spec: KernelSpec | None = None, key: tuple = (COL_STEP, 0)) -> KGroupsResult:
    """Re-cluster covariates under the row-local kernels, warm-started from ``col_labels``."""
    spec = spec if spec is not None else resolve_kernels(m, cfg)[1]
    return _local_update(transpose_roles(m), row_labels, col_labels, cfg.m, spec, cfg, key)[0]


def _flat_gram(data: DataMatrix, spec: KernelSpec) -> np.ndarray:
    return kernel_from_view(SubsetView(data, "rows"), spec)


def akkb_init(m: DataMatrix, cfg: AkkbConfig, specs=None) -> tuple[Bipartition, list]:
    """Independent kernel k-groups clusterings of rows and of covariates."""
    if m.n < cfg.m or m.p < cfg.m:
        raise DataError(f"cannot form {cfg.m} clusters on a {m.n} x {m.p} matrix")
    spec_rows, spec_cols = specs if specs is not None else resolve_kernels(m, cfg)
    steps = []
    labels = []
    for phase, data, spec, key in (("init-rows", m, spec_rows, (INIT_ROWS,)),
                                   ("init-cols", transpose_roles(m), spec_cols, (INIT_COLS,))):
        t0 = time.perf_counter()
        res = kernel_kgroups(_flat_gram(data, spec), cfg.m, cfg.restarts, seed=cfg.seed,
                             key=key, max_sweeps=cfg.max_sweeps, workers=cfg.workers)
        best = res.log[res.best_restart]
        shift = res.objective - res.score
        steps.append(HalfStep(phase, 0, best.objective_start, res.objective,
                              best.objective_start - shift, res.score, best.moves, True,
                              bool(np.bincount(res.labels, minlength=cfg.m).min() > 0),
                              time.perf_counter() - t0))
        labels.append(res.labels)
    return Bipartition(labels[0], labels[1], cfg.m), steps


def _record(phase, t, res, incumbent, current, m, t0) -> HalfStep:
    moved = int(np.count_nonzero(res.labels != current))
    return HalfStep(phase, t, incumbent.objective(), res.objective, incumbent.score(),
                    res.score, moved, moved > 0,
                    bool(np.bincount(res.labels, minlength=m).min() > 0),
                    time.perf_counter() - t0)


def akkb_fit(m: DataMatrix, cfg: AkkbConfig) -> BiclusterResult:
    """Fit the alternating kernel biclustering.

    Runs the two initial clusterings, then up to ``cfg.rounds`` rounds of
    (row half-step, column half-step). Stops early once a full round leaves
    both label vectors unchanged.
    """
    t_start = time.perf_counter()
    spec_rows, spec_cols = resolve_kernels(m, cfg)
    bip, history = akkb_init(m, cfg, (spec_rows, spec_cols))
    mt = transpose_roles(m)
    rows, cols = bip.row_labels.copy(), bip.col_labels.copy()
    converged = False
    rounds_run = 0
    for t in range(1, cfg.rounds + 1):
        rounds_run = t
        t0 = time.perf_counter()
        res, incumbent = _local_update(m, cols, rows, cfg.m, spec_rows, cfg, (ROW_STEP, t))
        history.append(_record("rows", t, res, incumbent, rows, cfg.m, t0))
        rows = res.labels
        t0 = time.perf_counter()
        res, incumbent = _local_update(mt, rows, cols, cfg.m, spec_cols, cfg, (COL_STEP, t))
        history.append(_record("cols", t, res, incumbent, cols, cfg.m, t0))
        cols = res.labels
        logger.debug("round %d: rows %.6g cols %.6g", t, history[-2].score_after,
                     history[-1].score_after)
        if not (history[-2].changed or history[-1].changed):
            converged = True
            break

    elapsed = {}
    for step in history:
        elapsed[step.phase] = elapsed.get(step.phase, 0.0) + step.elapsed
    elapsed["total"] = time.perf_counter() - t_start
    return BiclusterResult(Bipartition(rows, cols, cfg.m), history, converged, rounds_run,
                           spec_rows, spec_cols, elapsed)


def empirical_risk(m: DataMatrix, bipartition: Bipartition, spec: KernelSpec) -> float:
    """Mean feature-space scatter of rows about their local cluster embeddings.

    Equals ``(1/n) * (sum_x k_{l(x)}(x, x) - sum_l Q_l / n_l)`` with cluster
    ``l`` scored by the kernel over covariate cluster ``l``.
    """
    grams = local_grams(m, bipartition.col_labels, bipartition.m, spec)
    state = ClusterState(grams, bipartition.row_labels, bipartition.m)
    return -state.score() / m.n


def with_kernels(cfg: AkkbConfig, spec_rows: KernelSpec, spec_cols: KernelSpec) -> AkkbConfig:
    return replace(cfg, sigma_data=spec_rows, sigma_variables=spec_cols)
