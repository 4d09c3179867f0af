"""Acceptance suite: one test per release criterion, each with its stated
tolerance and runtime budget. Oracles here are deliberately independent of the
library internals (explicit loops, central finite differences).
"""

import math
import time

import numpy as np
import pytest

from matchdodge import (
    EmbeddingRecord,
    EmbeddingSet,
    EsConfig,
    FitnessParams,
    ImageTensor,
    InversionConfig,
    Role,
    SearchConfig,
    SynthSpec,
    Threshold,
    ToyMapper,
    coverage,
    generate_attack_face,
    l2_normalize,
    search,
    set_loss,
    synth_dataset,
)
from matchdodge.cli import main
from matchdodge.fitness import ClusterObjective
from matchdodge.lmmaes import minimize
from matchdodge.phase1 import derive_seed

from conftest import unit_vector


BASE_TH = 1.055


# ---------------------------------------------------------------------------
# criterion 1: set-loss oracle equivalence, 10k instances, <= 1e-12, < 10 s


def oracle_set_loss(a, members, th, m):
    if len(members) == 0:
        return 0.0
    total = 0.0
    for s in members:
        d = math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, s)))
        total += m * (1.0 if d > th else 0.0) + (1.0 - m) * d
    return total / len(members)


def test_set_loss_matches_oracle_10k_instances():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10_000):
        p = int(rng.integers(2, 7))
        n = int(rng.integers(0, 8))
        a = unit_vector(rng, p)
        members = np.stack([unit_vector(rng, p) for _ in range(n)]) \
            if n else np.zeros((0, p))
        th = Threshold(float(rng.uniform(0.1, 1.9)))
        m = float(rng.uniform(0.0, 1.0))
        worst = max(worst, abs(set_loss(a, members, th, m)
                               - oracle_set_loss(a, members, th.value, m)))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-12
    assert elapsed < 10.0


# ---------------------------------------------------------------------------
# criterion 2: fitness degenerate cases, exact


def test_fitness_degenerate_cases_exact():
    rng = np.random.default_rng(1)
    p = 8
    match = np.stack([unit_vector(rng, p) for _ in range(5)])
    dodge_a = np.stack([unit_vector(rng, p) for _ in range(4)])
    dodge_b = np.stack([unit_vector(rng, p) for _ in range(4)])
    match_b = np.stack([unit_vector(rng, p) for _ in range(5)])
    a = unit_vector(rng, p)
    empty = np.zeros((0, p))

    # gamma = 1: any dodge-set perturbation is invisible, bit-exact
    g1 = FitnessParams(gamma=1.0)
    assert (ClusterObjective(match, dodge_a, g1)(a)
            == ClusterObjective(match, dodge_b, g1)(a))
    # gamma = 0: any match-set perturbation is invisible, bit-exact
    g0 = FitnessParams(gamma=0.0)
    assert (ClusterObjective(match, dodge_a, g0)(a)
            == ClusterObjective(match_b, dodge_a, g0)(a))
    # empty-set reductions: the empty side contributes exactly zero
    params = FitnessParams()
    assert (ClusterObjective(match, empty, params)(a)
            == params.gamma * set_loss(a, match, params.th1, params.alpha))
    assert (ClusterObjective(empty, dodge_a, params)(a)
            == -(1.0 - params.gamma)
            * set_loss(a, dodge_a, params.th2, params.beta))


# ---------------------------------------------------------------------------
# criterion 3: coverage oracle equivalence + monotonicity


def oracle_coverage(attack, targets, th):
    matched = 0
    for t in targets:
        dists = np.linalg.norm(attack - t, axis=1)
        if np.any(dists <= th):
            matched += 1
    return 100.0 * matched / len(targets)


def as_set(matrix):
    return EmbeddingSet(role=Role.MATCH, records=[
        EmbeddingRecord(f"t{i}", f"t{i}", v) for i, v in enumerate(matrix)])


def test_coverage_matches_oracle_up_to_1000x1000():
    rng = np.random.default_rng(2)
    p = 16
    for trial in range(100):
        n_attack = 1000 if trial == 0 else int(rng.integers(1, 1001))
        n_target = 1000 if trial == 0 else int(rng.integers(1, 1001))
        attack = rng.standard_normal((n_attack, p))
        attack /= np.linalg.norm(attack, axis=1, keepdims=True)
        targets = rng.standard_normal((n_target, p))
        targets /= np.linalg.norm(targets, axis=1, keepdims=True)
        th = Threshold(float(rng.uniform(0.5, 1.8)))
        got = coverage(attack, as_set(targets), th).percentage
        assert got == oracle_coverage(attack, targets, th.value)


def test_coverage_monotone_in_attack_set():
    rng = np.random.default_rng(3)
    p = 8
    for _ in range(1000):
        n = int(rng.integers(1, 10))
        k = int(rng.integers(1, 6))
        attack = np.stack([unit_vector(rng, p) for _ in range(n)])
        extra = np.stack([unit_vector(rng, p) for _ in range(k)])
        targets = as_set(np.stack([unit_vector(rng, p)
                                   for _ in range(int(rng.integers(1, 10)))]))
        th = Threshold(float(rng.uniform(0.3, 1.9)))
        assert (coverage(np.vstack([attack, extra]), targets, th).percentage
                >= coverage(attack, targets, th).percentage)


# ---------------------------------------------------------------------------
# criterion 4: ES reaches 1e-6 on the sphere function, 9/10 seeds, < 30 s


def test_es_sphere_function_convergence():
    start = time.perf_counter()
    successes = 0
    for seed in range(10):
        cfg = EsConfig(dimension=16, population=100, generations=300,
                       seed=seed)
        init = np.random.default_rng(seed).standard_normal(16)
        best, _ = minimize(lambda x: float(x @ x), init, cfg)
        if float(best @ best) <= 1e-6:
            successes += 1
    elapsed = time.perf_counter() - start
    assert successes >= 9
    assert elapsed < 30.0


# ---------------------------------------------------------------------------
# criterion 5: planted impersonation, p = 64, 100% coverage in 9/10 seeds


def planted_set(center, n, radius, seed, prefix="m", role=Role.MATCH):
    return synth_dataset(SynthSpec(clusters=1, count=n, radius=radius,
                                   dimension=center.shape[0], seed=seed,
                                   label_prefix=prefix,
                                   centers=center[None, :]), role=role)


def test_planted_impersonation_recovery():
    p = 64
    successes = 0
    for seed in range(10):
        center = l2_normalize(np.random.default_rng(300 + seed)
                              .standard_normal(p))
        match = planted_set(center, 10, 0.3, seed)
        cfg = SearchConfig(clusters=1, fitness=FitnessParams(),
                           es=EsConfig(dimension=p, population=50,
                                       generations=150), seed=seed)
        result = search(match, EmbeddingSet(role=Role.DODGE, records=[]), cfg)
        if result.match_coverage.percentage == 100.0:
            successes += 1
    assert successes >= 9


# ---------------------------------------------------------------------------
# criterion 6: dodging effectiveness as the dodge margin grows
#
# Construction: one planted match cap (radius 0.4) with 5 dodge points at
# chord 0.95 from its center, i.e. inside the cap's matching reach. Phase 1
# hugs the dodge boundary; phase 2 inversion scatter pushes some attack
# embeddings back under the base threshold when the margin is 0%, but not
# once the search margin th2 grows by 3% or 5%. Verification always happens
# at the base threshold. The direction is checked per seed and must hold in
# at least 4 of 5 seeds; the +5% run must fully evade while staying within
# 15 coverage points of a no-dodge baseline.


def _attack_embeddings(match, dodge, params, seed, mapper):
    cfg = SearchConfig(clusters=2, fitness=params,
                       es=EsConfig(dimension=16, population=40,
                                   generations=100), seed=seed)
    result = search(match, dodge, cfg)
    adv = []
    for c, point in enumerate(result.best_embeddings):
        src_rng = np.random.default_rng(derive_seed(seed, 1000 + c))
        source = ImageTensor(src_rng.uniform(-0.9, 0.9, (3, 12, 12)))
        inv = InversionConfig(epsilon=0.2, iterations=60, seed=seed)
        res = generate_attack_face(source, point, mapper, config=inv)
        adv.append(mapper.forward(res.image.values))
    return np.stack(adv)


def test_dodging_effectiveness_direction():
    p = 16
    mapper = ToyMapper(side=12, embed_dim=p, hidden=128, seed=0)
    th_eval = Threshold(BASE_TH)
    passing = 0
    for seed in range(3, 8):
        center = l2_normalize(np.random.default_rng(500 + seed)
                              .standard_normal(p))
        match = planted_set(center, 15, 0.4, 100 + seed)
        d_rng = np.random.default_rng(200 + seed)
        records = []
        for i in range(5):
            v = d_rng.standard_normal(p)
            t = l2_normalize(v - (v @ center) * center)
            phi = 2.0 * math.asin(0.95 / 2.0)
            records.append(EmbeddingRecord(
                f"d{i}", f"d{i}", center * math.cos(phi) + t * math.sin(phi)))
        dodge = EmbeddingSet(role=Role.DODGE, records=records)

        cov = {}
        for pct in (0.0, 3.0, 5.0):
            params = FitnessParams(th2=Threshold(BASE_TH * (1 + pct / 100)))
            adv = _attack_embeddings(match, dodge, params, seed, mapper)
            cov[pct] = (coverage(adv, dodge, th_eval).percentage,
                        coverage(adv, match, th_eval).percentage)
        baseline = _attack_embeddings(match,
                                      EmbeddingSet(role=Role.DODGE, records=[]),
                                      FitnessParams(), seed, mapper)
        base_match = coverage(baseline, match, th_eval).percentage

        d0, d3, d5 = cov[0.0][0], cov[3.0][0], cov[5.0][0]
        ok = (d0 >= d3 >= d5 and d0 > d5 and d5 == 0.0
              and abs(cov[5.0][1] - base_match) <= 15.0)
        passing += ok
    assert passing >= 4


# ---------------------------------------------------------------------------
# criterion 7: gamma sweep shape


def test_gamma_sweep_shape():
    p = 16
    th = Threshold(BASE_TH)
    rng = np.random.default_rng(42)
    center = l2_normalize(rng.standard_normal(p))
    match = planted_set(center, 10, 0.4, 7)
    dodge = planted_set(center, 3, 0.1, 8, prefix="d", role=Role.DODGE)

    def run(gamma):
        cfg = SearchConfig(clusters=1, fitness=FitnessParams(gamma=gamma),
                           es=EsConfig(dimension=p, population=40,
                                       generations=100), seed=0)
        result = search(match, dodge, cfg)
        return (coverage(result.best_embeddings, match, th).percentage,
                coverage(result.best_embeddings, dodge, th).percentage)

    match1, dodge1 = run(1.0)
    match0, dodge0 = run(0.0)
    assert match1 - match0 >= 50.0
    assert dodge0 <= dodge1


# ---------------------------------------------------------------------------
# criterion 8: cluster-count monotonicity on a 500-point set, < 5 min


def test_cluster_count_monotonicity_500_points():
    start = time.perf_counter()
    match = synth_dataset(SynthSpec(clusters=10, count=500, radius=0.7,
                                    dimension=64, seed=11,
                                    min_center_distance=1.0))
    empty = EmbeddingSet(role=Role.DODGE, records=[])
    covs = []
    for C in (1, 2, 5, 10, 20):
        cfg = SearchConfig(clusters=C, fitness=FitnessParams(),
                           es=EsConfig(dimension=64, population=50,
                                       generations=120), seed=2)
        covs.append(search(match, empty, cfg).match_coverage.percentage)
    elapsed = time.perf_counter() - start
    assert all(b >= a - 2.0 for a, b in zip(covs, covs[1:])), covs
    assert covs[-1] >= 90.0, covs
    assert elapsed < 300.0


# ---------------------------------------------------------------------------
# criterion 9: analytic gradient vs central differences, <= 1e-4, < 60 s


def test_gradient_against_finite_differences():
    start = time.perf_counter()
    step = 1e-6
    worst = 0.0
    for seed in range(10):
        gen = np.random.default_rng(seed)
        mapper = ToyMapper(side=8, embed_dim=16, hidden=32, seed=seed)
        x = gen.uniform(-0.9, 0.9, size=(3, 8, 8))
        target = l2_normalize(gen.standard_normal(16))
        analytic = mapper.input_gradient(x, target).ravel()
        for idx in gen.choice(x.size, size=10, replace=False):
            plus, minus = x.ravel().copy(), x.ravel().copy()
            plus[idx] += step
            minus[idx] -= step
            fd = (np.linalg.norm(mapper.forward(plus.reshape(x.shape)) - target)
                  - np.linalg.norm(mapper.forward(minus.reshape(x.shape))
                                   - target)) / (2 * step)
            denom = max(abs(fd), abs(analytic[idx]), 1e-8)
            worst = max(worst, abs(analytic[idx] - fd) / denom)
    elapsed = time.perf_counter() - start
    assert worst <= 1e-4
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# criterion 10: reachable-target inversion, 9/10 seeds, exact epsilon, < 2 min


def test_phase2_reachable_target_inversion():
    start = time.perf_counter()
    successes = 0
    for seed in range(10):
        gen = np.random.default_rng(seed)
        mapper = ToyMapper(side=8, embed_dim=16, hidden=32, seed=seed)
        base = gen.uniform(-0.5, 0.5, size=(3, 8, 8))
        delta = gen.uniform(-0.05, 0.05, size=base.shape)
        target = mapper.forward(np.clip(base + delta, -1.0, 1.0))

        eps = 0.1
        seen = []
        real_forward = mapper.forward

        def spy(x, _seen=seen, _fwd=real_forward):
            arr = x.values if isinstance(x, ImageTensor) else np.asarray(x)
            _seen.append(arr.copy())
            return _fwd(arr)

        mapper.forward = spy
        res = generate_attack_face(
            ImageTensor(base), target, mapper,
            config=InversionConfig(epsilon=eps, iterations=200, seed=seed))
        mapper.forward = real_forward
        for arr in seen:
            assert np.max(np.abs(arr - base)) <= eps + 1e-15
        if res.final_distance <= BASE_TH:
            successes += 1
    elapsed = time.perf_counter() - start
    assert successes >= 9
    assert elapsed < 120.0


# ---------------------------------------------------------------------------
# criterion 11: scenario reruns are byte-identical


def test_scenario_rerun_byte_identical(tmp_path):
    args = ["scenario", "--kind", "multi_impersonation", "--match-size", "8",
            "--dodge-size", "0", "--dim", "16", "--seed", "13",
            "--repetitions", "2", "--population", "30",
            "--generations", "60"]
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main([*args, "--report", str(r1)]) == 0
    assert main([*args, "--report", str(r2)]) == 0
    assert r1.read_bytes() == r2.read_bytes()
