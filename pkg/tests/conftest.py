"""Shared fixtures and strategies for the test suite."""

import numpy as np
import pytest
from hypothesis import strategies as st

from matchdodge import EmbeddingRecord, EmbeddingSet, Role, l2_normalize


def unit_vector(rng: np.random.Generator, p: int) -> np.ndarray:
    return l2_normalize(rng.standard_normal(p))


def make_set(rng: np.random.Generator, n: int, p: int,
             role: Role = Role.MATCH, prefix: str = "id") -> EmbeddingSet:
    records = [
        EmbeddingRecord(id=f"{prefix}{i}", identity_label=f"{prefix}{i}",
                        vector=unit_vector(rng, p))
        for i in range(n)
    ]
    return EmbeddingSet(role=role, records=records)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


# hypothesis strategy: small unit vectors as lists (converted in tests)
def unit_vector_strategy(dim: int):
    return (
        st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=dim, max_size=dim)
        .filter(lambda xs: sum(x * x for x in xs) > 1e-6)
        .map(lambda xs: l2_normalize(np.asarray(xs)))
    )
