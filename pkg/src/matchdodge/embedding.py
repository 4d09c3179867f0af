"""Embedding-space primitives: unit vectors, distance, match/dodge predicates,
and the coverage metric.

All vectors are float64 numpy arrays. A verification system accepts a pair
when the Euclidean distance between their embeddings is at most the decision
threshold; otherwise the pair "dodges".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    ConfigError,
    CoverageError,
    DimensionError,
    NormalizationError,
)

DEFAULT_DIMENSION = 512


class Role(str, Enum):
    MATCH = "match"
    DODGE = "dodge"
    UNSEEN = "unseen"
    POPULATION = "population"


@dataclass(frozen=True)
class Threshold:
    """Decision threshold on Euclidean distance between unit vectors."""

    value: float

    def __post_init__(self):
        if not np.isfinite(self.value) or not (0.0 < self.value <= 2.0):
            raise ConfigError(f"threshold must lie in (0, 2], got {self.value}")


def l2_normalize(v) -> np.ndarray:
    """Scale v to unit L2 norm, preserving direction."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NormalizationError("vector has non-finite components")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise NormalizationError("zero vector has no direction")
    return v / norm


def distance(a, b) -> float:
    """Euclidean distance; lies in [0, 2] for unit vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def matches(a, b, th: Threshold) -> bool:
    """True iff a impersonates b at threshold th; False means a dodges b."""
    return distance(a, b) <= th.value


@dataclass(frozen=True)
class EmbeddingRecord:
    id: str
    identity_label: str
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "vector", np.asarray(self.vector, dtype=np.float64)
        )


@dataclass
class EmbeddingSet:
    """Labeled collection of embedding vectors with a role."""

    role: Role
    records: list[EmbeddingRecord] = field(default_factory=list)

    def __post_init__(self):
        self.role = Role(self.role)
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ConfigError("record ids must be unique within a set")
        dims = {r.vector.shape[0] for r in self.records}
        if len(dims) > 1:
            raise DimensionError(f"mixed vector dimensions in set: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def dimension(self) -> int | None:
        return self.records[0].vector.shape[0] if self.records else None

    def matrix(self) -> np.ndarray:
        """(n, p) stacked vectors; shape (0, 0) when empty."""
        if not self.records:
            return np.zeros((0, 0))
        return np.stack([r.vector for r in self.records])

    def labels(self) -> set[str]:
        return {r.identity_label for r in self.records}


def check_disjoint(match_set: EmbeddingSet, dodge_set: EmbeddingSet,
                   allow_overlap: bool = False) -> None:
    """Enforce identity disjointness between a match set and a dodge set.

    allow_overlap skips the check for synthetic data without meaningful labels.
    """
    if allow_overlap:
        return
    common = match_set.labels() & dodge_set.labels()
    if common:
        raise ConfigError(
            f"match and dodge sets share identities: {sorted(common)[:5]}"
        )


@dataclass
class CoverageResult:
    """Coverage percentage plus per-target match provenance."""

    percentage: float
    matched: list[bool]
    matched_by: list[int | None]  # lowest-index attack vector that matched

    @property
    def matched_count(self) -> int:
        return sum(self.matched)


def coverage(attack, targets: EmbeddingSet, th: Threshold) -> CoverageResult:
    """Percentage of target records matched by at least one attack vector."""
    if len(targets) == 0:
        raise CoverageError("coverage is undefined for an empty target set")
    target_mat = targets.matrix()
    n = target_mat.shape[0]
    matched = [False] * n
    matched_by: list[int | None] = [None] * n
    for idx, a in enumerate(attack):
        a = np.asarray(a, dtype=np.float64)
        if a.shape[0] != target_mat.shape[1]:
            raise DimensionError(
                f"attack vector {idx} has dimension {a.shape[0]}, "
                f"targets have {target_mat.shape[1]}"
            )
        dists = np.sqrt(np.sum((target_mat - a) ** 2, axis=1))
        for j in np.nonzero(dists <= th.value)[0]:
            if not matched[j]:
                matched[j] = True
                matched_by[j] = idx
    pct = 100.0 * sum(matched) / n
    return CoverageResult(percentage=pct, matched=matched, matched_by=matched_by)
