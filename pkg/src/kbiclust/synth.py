"""Seeded generators for the three 2x2 block benchmark scenarios.

Rows ``0..n/2-1`` and columns ``0..p/2-1`` form the first cluster on each
axis. Each block draws from its own substream ``SeedSequence(seed,
spawn_key=(scenario, block))`` of a Philox generator, block index ``2*a + b``
for block ``A_{a+1, b+1}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, DataMatrix, build_matrix
from .kgroups import make_rng

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class ScenarioSpec:
    """Scenario id, matrix size and seed.

    ``variance_convention`` decides how ``N(0, 2)`` in scenario 1 is read:
    ``"sd"`` (standard deviation 2, the default) or ``"variance"`` (variance 2).
    """

    id: int
    n: int = 200
    p: int = 200
    seed: int = 0
    variance_convention: str = "sd"

    def __post_init__(self):
        if self.id not in (1, 2, 3):
            raise DataError(f"scenario must be one of 1, 2, 3, got {self.id}")
        if self.n < 2 or self.p < 2 or self.n % 2 or self.p % 2:
            raise DataError(f"n and p must be even and >= 2, got n={self.n}, p={self.p}")
        if self.variance_convention not in ("sd", "variance"):
            raise DataError("variance_convention must be 'sd' or 'variance'")


def sample_truncated_normal(mu: float, sigma: float, lo: float, hi: float,
                            rng: np.random.Generator, size=None):
    """Draw from ``N(mu, sigma^2)`` conditioned on ``[lo, hi]`` by rejection."""
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise DataError("truncation bounds must be finite")
    if not lo < hi:
        raise DataError("need lo < hi")
    if not sigma > 0:
        raise DataError("sigma must be positive")
    count = 1 if size is None else int(np.prod(size))
    out = np.empty(count)
    filled = 0
    while filled < count:
        draw = rng.normal(mu, sigma, size=max(count - filled, 16))
        draw = draw[(draw >= lo) & (draw <= hi)][:count - filled]
        out[filled:filled + draw.size] = draw
        filled += draw.size
    return float(out[0]) if size is None else out.reshape(size)


def truncated_normal_variance(mu: float, sigma: float, lo: float, hi: float) -> float:
    """Closed-form variance of a doubly truncated normal."""
    from scipy.stats import norm

    a, b = (lo - mu) / sigma, (hi - mu) / sigma
    z = norm.cdf(b) - norm.cdf(a)
    pa, pb = norm.pdf(a), norm.pdf(b)
    return sigma**2 * (1 + (a * pa - b * pb) / z - ((pa - pb) / z) ** 2)


def _block(spec: ScenarioSpec, a: int, b: int, shape) -> np.ndarray:
    rng = make_rng(spec.seed, (spec.id, 2 * a + b))
    if spec.id == 1:
        if (a, b) == (0, 0):
            scale = 2.0 if spec.variance_convention == "sd" else np.sqrt(2.0)
        else:
            scale = 1.0
        return rng.normal(0.0, scale, size=shape)
    if spec.id == 2:
        lo, hi = (0.3, 0.7) if (a, b) == (0, 0) else (0.0, 1.0)
        return rng.uniform(lo, hi, size=shape)
    if (a, b) == (0, 0):
        return rng.uniform(-SQRT3, SQRT3, size=shape)
    if (a, b) == (1, 1):
        return rng.normal(0.0, 1.0, size=shape)
    return (sample_truncated_normal(0.0, 1.0, -1.8, 1.8, rng, size=shape)
            + rng.uniform(-0.5, 0.5, size=shape))


def gen_scenario(spec: ScenarioSpec) -> tuple[DataMatrix, np.ndarray, np.ndarray]:
    """Generate a scenario matrix with its true row and column labels."""
    hn, hp = spec.n // 2, spec.p // 2
    values = np.block([[_block(spec, a, b, (hn, hp)) for b in range(2)] for a in range(2)])
    rows = np.repeat([0, 1], hn)
    cols = np.repeat([0, 1], hp)
    return build_matrix(values), rows, cols
