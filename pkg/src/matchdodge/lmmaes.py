"""Limited-memory matrix adaptation evolution strategy.

Minimizes an arbitrary objective over R^p using rank-one memory vectors in
place of a full covariance matrix, following the published update rules
(weights, learning rates, cumulative step-size adaptation). Learning rates
are capped at 1 so the recursion stays valid when the population is large
relative to the dimension; at large p the caps are inactive and the standard
schedule applies.

With sphere_projection enabled, every sampled individual is L2-normalized
before evaluation and the best evaluated (unit-norm) individual is returned;
the internal adaptation state stays in ambient coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OptimizerError


def default_memory_size(dimension: int) -> int:
    return 4 + int(math.floor(3.0 * math.log(dimension)))


@dataclass
class EsConfig:
    dimension: int
    population: int = 100
    generations: int = 1000
    sigma0: float = 0.3
    memory_size: int | None = None  # default 4 + floor(3 ln p)
    seed: int = 0
    sphere_projection: bool = False
    snapshot_interval: int = 0  # 0 = no snapshots

    def __post_init__(self):
        if self.dimension < 2:
            raise ConfigError(f"dimension must be >= 2, got {self.dimension}")
        if self.population < 2:
            raise ConfigError(f"population must be >= 2, got {self.population}")
        if self.generations < 1:
            raise ConfigError(f"generations must be >= 1, got {self.generations}")
        if self.sigma0 <= 0:
            raise ConfigError(f"sigma0 must be > 0, got {self.sigma0}")


@dataclass
class EsTrace:
    best_fitness: list[float] = field(default_factory=list)   # best-so-far, non-increasing
    gen_best: list[float] = field(default_factory=list)       # per-generation best
    mean_fitness: list[float] = field(default_factory=list)
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)


def _evaluate(objective, X: np.ndarray) -> np.ndarray:
    batch = getattr(objective, "batch", None)
    if batch is not None:
        values = np.asarray(batch(X), dtype=np.float64)
    else:
        values = np.array([float(objective(x)) for x in X], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise OptimizerError(
            f"objective returned non-finite value {values[bad]} for individual {bad}")
    return values


def minimize(objective, init_mean, config: EsConfig) -> tuple[np.ndarray, EsTrace]:
    """Run the strategy and return (best evaluated individual, trace)."""
    n = config.dimension
    mean = np.asarray(init_mean, dtype=np.float64).copy()
    if mean.shape != (n,):
        raise ConfigError(f"init_mean has shape {mean.shape}, expected ({n},)")

    lam = config.population
    mu = lam // 2
    raw_w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw_w / raw_w.sum()
    mu_w = 1.0 / np.sum(weights ** 2)

    m_vecs = config.memory_size if config.memory_size is not None else default_memory_size(n)
    m_vecs = max(1, min(m_vecs, n))

    c_sigma = min(1.0, 2.0 * lam / n)
    d_sigma = 2.0
    c_d = np.minimum(1.0, 1.0 / (1.5 ** np.arange(m_vecs) * n))
    c_c = np.minimum(1.0, lam / (4.0 ** np.arange(m_vecs) * n))

    sigma = config.sigma0
    p_sigma = np.zeros(n)
    M = np.zeros((m_vecs, n))

    rng = np.random.default_rng(config.seed)
    trace = EsTrace()
    best_value = math.inf
    best_individual = mean.copy()

    for gen in range(config.generations):
        Z = rng.standard_normal((lam, n))
        D = Z.copy()
        active = min(gen, m_vecs)
        for j in range(active):
            D = (1.0 - c_d[j]) * D + c_d[j] * np.outer(D @ M[j], M[j])
        X = mean + sigma * D

        if config.sphere_projection:
            norms = np.linalg.norm(X, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            evaluated = X / norms
        else:
            evaluated = X

        values = _evaluate(objective, evaluated)

        # stable sort by (fitness, sample index) for deterministic selection
        order = np.argsort(values, kind="stable")
        gen_best_idx = order[0]
        if values[gen_best_idx] < best_value:
            best_value = float(values[gen_best_idx])
            best_individual = evaluated[gen_best_idx].copy()

        sel = order[:mu]
        z_w = weights @ Z[sel]
        d_w = weights @ D[sel]

        mean = mean + sigma * d_w
        p_sigma = (1.0 - c_sigma) * p_sigma + math.sqrt(
            mu_w * c_sigma * (2.0 - c_sigma)) * z_w
        for j in range(m_vecs):
            M[j] = (1.0 - c_c[j]) * M[j] + math.sqrt(
                mu_w * c_c[j] * (2.0 - c_c[j])) * z_w
        sigma *= math.exp((c_sigma / d_sigma) * (np.sum(p_sigma ** 2) / n - 1.0))
        if not math.isfinite(sigma) or sigma <= 0:
            raise OptimizerError(f"step size diverged at generation {gen}: {sigma}")

        trace.gen_best.append(float(values[gen_best_idx]))
        trace.best_fitness.append(best_value)
        trace.mean_fitness.append(float(values.mean()))
        if config.snapshot_interval and (gen + 1) % config.snapshot_interval == 0:
            trace.snapshots.append((gen, best_individual.copy()))

    return best_individual, trace
