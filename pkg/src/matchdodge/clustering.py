"""Deterministic k-means over embedding points.

Seeds the per-cluster searches: centroids of the match-set partition become
the search starting points (after unit normalization, which happens in the
search layer, not here).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingSet
from .errors import ConfigError

MAX_SWEEPS = 300
RESTARTS = 16  # independent k-means++ inits; best inertia wins


@dataclass
class Clustering:
    C: int                      # effective cluster count (<= requested)
    assignments: np.ndarray     # (n,) cluster index per point
    centroids: np.ndarray       # (C, p) means of members, not unit-norm
    sweeps: int
    inertia: float              # within-cluster sum of squared distances


def _points_matrix(points) -> np.ndarray:
    if isinstance(points, EmbeddingSet):
        return points.matrix()
    return np.asarray(points, dtype=np.float64)


def _plusplus_init(X: np.ndarray, C: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((C, X.shape[1]))
    idx = int(rng.integers(n))
    centers[0] = X[idx]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, C):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with chosen centers
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _assign(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1)  # ties break to the lowest index


def _repair_empty(X: np.ndarray, assignments: np.ndarray,
                  centers: np.ndarray, C: int) -> None:
    """Move the farthest point from a multi-member cluster into each empty one."""
    for c in range(C):
        if np.any(assignments == c):
            continue
        dist_to_own = np.sqrt(np.sum((X - centers[assignments]) ** 2, axis=1))
        counts = np.bincount(assignments, minlength=C)
        movable = counts[assignments] > 1
        candidates = np.where(movable, dist_to_own, -np.inf)
        farthest = int(np.argmax(candidates))
        assignments[farthest] = c
        centers[c] = X[farthest]


def kmeans(points, C: int, seed: int) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding, deterministic per seed.

    Runs RESTARTS independent inits and keeps the lowest-inertia result,
    since a single Lloyd's run lands in poor local optima too often on
    small sphere-distributed sets. Empty clusters are repaired by
    reassigning the point farthest from its centroid. When C exceeds the
    number of points, the excess clusters are dropped and the effective C
    is reported.
    """
    if C < 1:
        raise ConfigError(f"cluster count must be >= 1, got {C}")
    X = _points_matrix(points)
    n = X.shape[0]
    if n == 0:
        raise ConfigError("cannot cluster an empty point set")
    C = min(C, n)

    best: Clustering | None = None
    seeds = np.random.SeedSequence(seed).spawn(RESTARTS)
    for sub in seeds:
        result = _lloyd_once(X, C, np.random.default_rng(sub))
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def _lloyd_once(X: np.ndarray, C: int, rng: np.random.Generator) -> Clustering:
    centers = _plusplus_init(X, C, rng)
    assignments = _assign(X, centers)
    sweeps = 0
    for sweeps in range(1, MAX_SWEEPS + 1):
        # update step
        for c in range(C):
            members = X[assignments == c]
            if members.shape[0] > 0:
                centers[c] = members.mean(axis=0)
        # repair empty clusters before the next assignment
        _repair_empty(X, assignments, centers, C)
        new_assignments = _assign(X, centers)
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments

    # final centroids must equal member means exactly
    _repair_empty(X, assignments, centers, C)
    for c in range(C):
        centers[c] = X[assignments == c].mean(axis=0)

    inertia = float(np.sum((X - centers[assignments]) ** 2))
    return Clustering(C=C, assignments=assignments, centroids=centers,
                      sweeps=sweeps, inertia=inertia)
