"""Core embedding-space types, the match predicate, and coverage.

Coverage is checked against an independent brute-force double loop; the
monotonicity property (adding attack vectors never lowers coverage) is
checked both with hypothesis and randomized trials.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchdodge import (
    CoverageResult,
    EmbeddingRecord,
    EmbeddingSet,
    Role,
    Threshold,
    coverage,
    distance,
    l2_normalize,
    matches,
)
from matchdodge.embedding import check_disjoint
from matchdodge.errors import (
    ConfigError,
    DimensionError,
    NormalizationError,
    NumericError,
)

from conftest import make_set, unit_vector, unit_vector_strategy


# ---------------------------------------------------------------------------
# primitives


def test_l2_normalize_unit_norm(rng):
    for _ in range(50):
        v = rng.standard_normal(8) * rng.uniform(0.1, 100)
        assert abs(np.linalg.norm(l2_normalize(v)) - 1.0) <= 1e-12


def test_l2_normalize_zero_vector_rejected():
    with pytest.raises(NormalizationError):
        l2_normalize(np.zeros(4))


def test_l2_normalize_non_finite_rejected():
    with pytest.raises((NumericError, NormalizationError)):
        l2_normalize(np.array([1.0, np.nan]))


def test_distance_known_value():
    # 3-4-5 triangle scaled onto unit vectors: (1,0) vs (0.6,0.8)
    a = np.array([1.0, 0.0])
    b = l2_normalize(np.array([3.0, 4.0]))
    assert np.allclose(b, [0.6, 0.8])
    # distance = sqrt(0.4^2 + 0.8^2) = sqrt(0.8)
    assert abs(distance(a, b) - np.sqrt(0.8)) <= 1e-15


@settings(max_examples=100)
@given(unit_vector_strategy(6), unit_vector_strategy(6))
def test_distance_symmetric_and_bounded(a, b):
    d_ab = distance(a, b)
    d_ba = distance(b, a)
    assert d_ab == d_ba
    assert 0.0 <= d_ab <= 2.0 + 1e-12


@settings(max_examples=50)
@given(unit_vector_strategy(5),
       st.floats(1e-6, 2.0, allow_nan=False))
def test_matches_reflexive(a, th):
    assert matches(a, a, Threshold(th))


def test_matches_uses_leq_predicate():
    # distance exactly at the threshold counts as a match
    a = np.array([1.0, 0.0])
    b = np.array([0.0, 1.0])
    d = distance(a, b)
    assert matches(a, b, Threshold(d))
    assert not matches(a, b, Threshold(np.nextafter(d, 0.0)))


def test_threshold_validation():
    with pytest.raises(ConfigError):
        Threshold(0.0)
    with pytest.raises(ConfigError):
        Threshold(2.5)
    with pytest.raises(ConfigError):
        Threshold(-1.0)


# ---------------------------------------------------------------------------
# embedding sets


def test_embedding_set_dimension_consistency(rng):
    bad = [
        EmbeddingRecord("a", "a", unit_vector(rng, 4)),
        EmbeddingRecord("b", "b", unit_vector(rng, 5)),
    ]
    with pytest.raises(DimensionError):
        EmbeddingSet(role=Role.MATCH, records=bad)


def test_embedding_set_matrix_roundtrip(rng):
    es = make_set(rng, 7, 6)
    mat = es.matrix()
    assert mat.shape == (7, 6)
    for i, rec in enumerate(es.records):
        assert np.array_equal(mat[i], rec.vector)


def test_empty_set_len_and_dimension():
    es = EmbeddingSet(role=Role.DODGE, records=[])
    assert len(es) == 0
    assert es.dimension is None


def test_check_disjoint_rejects_shared_labels(rng):
    m = make_set(rng, 3, 4, Role.MATCH, prefix="x")
    d = make_set(rng, 3, 4, Role.DODGE, prefix="x")
    with pytest.raises(ConfigError):
        check_disjoint(m, d)
    check_disjoint(m, d, allow_overlap=True)  # override for synthetic data


def test_check_disjoint_accepts_distinct_labels(rng):
    m = make_set(rng, 3, 4, Role.MATCH, prefix="m")
    d = make_set(rng, 3, 4, Role.DODGE, prefix="d")
    check_disjoint(m, d)


# ---------------------------------------------------------------------------
# coverage: brute-force oracle


def brute_force_coverage(attack: np.ndarray, targets: EmbeddingSet,
                         th: Threshold) -> CoverageResult:
    """Independent double loop; the lowest attack index claims each target."""
    matched = []
    matched_by = []
    for rec in targets.records:
        hit = None
        for a_idx in range(attack.shape[0]):
            d = float(np.sqrt(np.sum((rec.vector - attack[a_idx]) ** 2)))
            if d <= th.value:
                hit = a_idx
                break
        matched.append(hit is not None)
        matched_by.append(hit)
    pct = 100.0 * sum(matched) / len(matched)
    return CoverageResult(percentage=pct, matched=matched, matched_by=matched_by)


def test_coverage_empty_attack(rng):
    targets = make_set(rng, 5, 4)
    res = coverage(np.zeros((0, 4)), targets, Threshold(1.055))
    assert res.percentage == 0.0
    assert res.matched_count == 0


def test_coverage_known_distances():
    # one attack point, three targets at planted distances {0.5, 1.0, 1.5}
    p = 8
    rng = np.random.default_rng(0)
    a = unit_vector(rng, p)
    targets = []
    for i, d in enumerate([0.5, 1.0, 1.5]):
        v = rng.standard_normal(p)
        t = l2_normalize(v - (v @ a) * a)
        # point at chord distance d from a on the sphere
        phi = 2.0 * np.arcsin(d / 2.0)
        vec = a * np.cos(phi) + t * np.sin(phi)
        assert abs(distance(a, vec) - d) < 1e-12
        targets.append(EmbeddingRecord(f"t{i}", f"t{i}", vec))
    es = EmbeddingSet(role=Role.MATCH, records=targets)
    res = coverage(a[None, :], es, Threshold(1.055))
    assert res.percentage == pytest.approx(200.0 / 3.0, abs=1e-9)
    assert res.matched == [True, True, False]


def test_coverage_self_copy_is_full(rng):
    targets = make_set(rng, 6, 5)
    res = coverage(targets.matrix(), targets, Threshold(0.5))
    assert res.percentage == 100.0


def test_coverage_matches_brute_force_oracle(rng):
    th = Threshold(1.055)
    for trial in range(30):
        n_a = int(rng.integers(1, 8))
        n_t = int(rng.integers(1, 20))
        p = int(rng.integers(2, 10))
        attack = np.stack([unit_vector(rng, p) for _ in range(n_a)])
        targets = make_set(rng, n_t, p)
        got = coverage(attack, targets, th)
        want = brute_force_coverage(attack, targets, th)
        assert got.percentage == want.percentage
        assert got.matched == want.matched
        assert got.matched_by == want.matched_by


def test_coverage_monotone_in_attack_list(rng):
    th = Threshold(1.0)
    for trial in range(200):
        p = int(rng.integers(2, 8))
        targets = make_set(rng, int(rng.integers(1, 15)), p)
        base = np.stack([unit_vector(rng, p) for _ in range(int(rng.integers(1, 5)))])
        extra = np.vstack([base, unit_vector(rng, p)[None, :]])
        assert (coverage(extra, targets, th).percentage
                >= coverage(base, targets, th).percentage)


def test_coverage_matched_by_lowest_attack_index(rng):
    # two identical attack points: the first one must claim the target
    p = 4
    a = unit_vector(rng, p)
    attack = np.stack([a, a])
    es = EmbeddingSet(role=Role.MATCH, records=[EmbeddingRecord("t", "t", a)])
    res = coverage(attack, es, Threshold(1.0))
    assert res.matched_by == [0]


def test_coverage_rejects_empty_target_set():
    from matchdodge.errors import CoverageError
    empty = EmbeddingSet(role=Role.MATCH, records=[])
    with pytest.raises(CoverageError):
        coverage(np.zeros((1, 4)), empty, Threshold(1.0))
