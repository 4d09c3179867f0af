"""Embedding-space search: one sphere-constrained ES run per match cluster.

The match set is partitioned into C clusters; each cluster search starts at
the normalized cluster centroid and minimizes the combined fitness against
that cluster and the whole dodge set. Cluster searches are independent and
may run in parallel; each has its own derived seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import kmeans
from .embedding import (
    CoverageResult,
    EmbeddingSet,
    check_disjoint,
    coverage,
    l2_normalize,
)
from .errors import ConfigError, ScenarioError
from .fitness import ClusterObjective, FitnessParams
from .lmmaes import EsConfig, EsTrace, minimize


def derive_seed(master: int, index: int) -> int:
    """Deterministic per-subtask seed stream."""
    return int(np.random.SeedSequence(entropy=master, spawn_key=(index,))
               .generate_state(1)[0])


@dataclass
class SearchConfig:
    clusters: int
    fitness: FitnessParams = field(default_factory=FitnessParams)
    es: EsConfig | None = None  # dimension filled from the match set if None
    seed: int = 0

    def __post_init__(self):
        if self.clusters < 1:
            raise ConfigError(f"cluster count must be >= 1, got {self.clusters}")


@dataclass
class SearchResult:
    best_embeddings: np.ndarray          # (effective_C, p) unit vectors
    per_cluster_trace: list[EsTrace]
    effective_clusters: int
    match_coverage: CoverageResult
    dodge_coverage: CoverageResult | None  # None when the dodge set is empty


def _search_cluster(cluster_members: np.ndarray, dodge_matrix: np.ndarray,
                    centroid: np.ndarray, fitness: FitnessParams,
                    es: EsConfig) -> tuple[np.ndarray, EsTrace]:
    objective = ClusterObjective(cluster_members, dodge_matrix, fitness)
    init = l2_normalize(centroid)
    return minimize(objective, init, es)


def search(match: EmbeddingSet, dodge: EmbeddingSet, config: SearchConfig,
           threads: int = 1, allow_overlap: bool = False) -> SearchResult:
    """Run the per-cluster searches and score coverage of the best points."""
    if len(match) == 0:
        raise ScenarioError(
            "match set is empty; use the pure-dodging scenario runner instead")
    check_disjoint(match, dodge, allow_overlap=allow_overlap)

    p = match.dimension
    if len(dodge) > 0 and dodge.dimension != p:
        raise ConfigError(
            f"match dimension {p} != dodge dimension {dodge.dimension}")

    es = config.es or EsConfig(dimension=p)
    if es.dimension != p:
        raise ConfigError(f"es dimension {es.dimension} != set dimension {p}")

    clustering = kmeans(match, config.clusters, seed=config.seed)
    match_matrix = match.matrix()
    dodge_matrix = dodge.matrix()

    jobs = []
    for c in range(clustering.C):
        members = match_matrix[clustering.assignments == c]
        # sphere projection is part of the phase-1 contract, not a choice
        cluster_es = replace(es, seed=derive_seed(config.seed, c),
                             sphere_projection=True)
        jobs.append((members, clustering.centroids[c], cluster_es))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda j: _search_cluster(j[0], dodge_matrix, j[1],
                                          config.fitness, j[2]), jobs))
    else:
        results = [_search_cluster(members, dodge_matrix, centroid,
                                   config.fitness, cluster_es)
                   for members, centroid, cluster_es in jobs]

    best = np.stack([r[0] for r in results])
    traces = [r[1] for r in results]

    match_cov = coverage(best, match, config.fitness.th1)
    dodge_cov = coverage(best, dodge, config.fitness.th2) if len(dodge) > 0 else None

    return SearchResult(
        best_embeddings=best,
        per_cluster_trace=traces,
        effective_clusters=clustering.C,
        match_coverage=match_cov,
        dodge_coverage=dodge_cov,
    )
