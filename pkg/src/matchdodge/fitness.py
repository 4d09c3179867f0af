"""Scalar loss driving the embedding-space search.

set_loss measures how badly a candidate point fails to match a set: a
weighted, size-normalized sum of (i) how many set members lie beyond the
threshold and (ii) the total distance to all members. The combined fitness
weighs the match-side loss against the negated dodge-side loss; lower is
better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingSet, Threshold
from .errors import ConfigError, NumericError

DEFAULT_THRESHOLD = 1.055  # verification threshold at FAR 0.001 on 512-d embeddings


@dataclass(frozen=True)
class FitnessParams:
    th1: Threshold = Threshold(DEFAULT_THRESHOLD)  # match side
    th2: Threshold = Threshold(DEFAULT_THRESHOLD)  # dodge side
    alpha: float = 0.99
    beta: float = 0.99
    gamma: float = 0.9

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            w = getattr(self, name)
            if not (0.0 <= w <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {w}")


def _member_matrix(members) -> np.ndarray:
    if isinstance(members, EmbeddingSet):
        return members.matrix()
    mat = np.asarray(members, dtype=np.float64)
    if mat.size == 0:
        return np.zeros((0, 0))
    return mat


def set_loss(a, members, th: Threshold, m: float) -> float:
    """Size-normalized miss-count / distance-sum combination.

    Returns [m * #{s : dist(a,s) > th} + (1-m) * sum_s dist(a,s)] / |S|,
    and 0 for an empty set (graceful reduction for pure-impersonation /
    pure-dodging problems).
    """
    if not (0.0 <= m <= 1.0):
        raise ConfigError(f"weight m must lie in [0, 1], got {m}")
    mat = _member_matrix(members)
    if mat.shape[0] == 0:
        return 0.0
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(mat)):
        raise NumericError("non-finite input to set_loss")
    dists = np.sqrt(np.sum((mat - a) ** 2, axis=1))
    beyond = np.count_nonzero(dists > th.value)
    return float((m * beyond + (1.0 - m) * dists.sum()) / mat.shape[0])


def match_dodge_fitness(x, match_cluster, dodge_set, params: FitnessParams) -> float:
    """gamma-weighted match-side loss minus dodge-side loss; lower is better."""
    pos = set_loss(x, match_cluster, params.th1, params.alpha)
    neg = set_loss(x, dodge_set, params.th2, params.beta)
    return params.gamma * pos + (1.0 - params.gamma) * (-neg)


class ClusterObjective:
    """Callable fitness for one match cluster against the full dodge set.

    Exposes a vectorized batch() used by the search engine to score a whole
    population with two matrix products' worth of work.
    """

    def __init__(self, match_members, dodge_members, params: FitnessParams):
        self.match = _member_matrix(match_members)
        self.dodge = _member_matrix(dodge_members)
        self.params = params

    def __call__(self, x) -> float:
        return match_dodge_fitness(x, self.match, self.dodge, self.params)

    def _batch_set_loss(self, X: np.ndarray, mat: np.ndarray,
                        th: Threshold, m: float) -> np.ndarray:
        if mat.shape[0] == 0:
            return np.zeros(X.shape[0])
        # (pop, members) pairwise distances
        diff = X[:, None, :] - mat[None, :, :]
        dists = np.sqrt(np.sum(diff ** 2, axis=2))
        beyond = np.count_nonzero(dists > th.value, axis=1)
        return (m * beyond + (1.0 - m) * dists.sum(axis=1)) / mat.shape[0]

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if not np.all(np.isfinite(X)):
            raise NumericError("non-finite population passed to fitness")
        p = self.params
        pos = self._batch_set_loss(X, self.match, p.th1, p.alpha)
        neg = self._batch_set_loss(X, self.dodge, p.th2, p.beta)
        return p.gamma * pos - (1.0 - p.gamma) * neg
