"""End-to-end experiment driver: synthetic planted datasets, threshold
calibration, the nine-cell attack taxonomy, unseen-set generalization, and
parameter sweeps.

Synthetic sets are planted spherical caps on the unit sphere, so optimal
attack points are known by construction and coverage trends can be checked
at desk scale. Real embedding files exported by the bridge drop into the
same machinery via file paths.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, is_dataclass, replace

import numpy as np

from .embedding import (
    EmbeddingRecord,
    EmbeddingSet,
    Role,
    Threshold,
    coverage,
    l2_normalize,
)
from .errors import (
    CalibrationError,
    ConfigError,
    GenerationError,
    ScenarioError,
)
from .fitness import ClusterObjective, FitnessParams
from .io_formats import MetricRow, RunReport, read_embedding_set
from .lmmaes import EsConfig, minimize
from .mapper import ImageTensor, ToyMapper
from .phase1 import SearchConfig, derive_seed, search
from .phase2 import InversionConfig, generate_attack_face, identity_cropper

# taxonomy cells: kind -> (match arity, dodge arity); arity is 0, 1, or "many"
SCENARIO_KINDS = {
    "null": (0, 0),
    "single_dodging": (0, 1),
    "multi_dodging": (0, "many"),
    "single_impersonation": (1, 0),
    "multi_impersonation": ("many", 0),
    "single_impersonation_single_dodging": (1, 1),
    "single_impersonation_multi_dodging": (1, "many"),
    "multi_impersonation_single_dodging": ("many", 1),
    "multi_impersonation_multi_dodging": ("many", "many"),
}

SWEEP_AXES = ("th2_percent", "gamma", "cluster_count", "match_size")


# ---------------------------------------------------------------------------
# Synthetic planted datasets


@dataclass
class SynthSpec:
    """Planted spherical-cap clusters of unit vectors."""

    clusters: int
    count: int            # total points, spread round-robin over clusters
    radius: float         # max chord distance from a point to its center
    dimension: int
    seed: int
    label_prefix: str = "id"
    centers: np.ndarray | None = None      # explicit (clusters, dimension)
    min_center_distance: float | None = None

    def __post_init__(self):
        if self.clusters < 1 or self.count < 1:
            raise GenerationError("clusters and count must be >= 1")
        if not (0.0 < self.radius < 2.0):
            raise GenerationError(f"radius must lie in (0, 2), got {self.radius}")
        if self.dimension < 2:
            raise GenerationError(f"dimension must be >= 2, got {self.dimension}")


def _sample_centers(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.centers is not None:
        centers = np.asarray(spec.centers, dtype=np.float64)
        if centers.shape != (spec.clusters, spec.dimension):
            raise GenerationError(
                f"explicit centers have shape {centers.shape}, expected "
                f"({spec.clusters}, {spec.dimension})")
        return np.stack([l2_normalize(c) for c in centers])
    centers = []
    for _ in range(spec.clusters):
        for _attempt in range(1000):
            c = l2_normalize(rng.standard_normal(spec.dimension))
            if spec.min_center_distance is None or all(
                    np.linalg.norm(c - prev) >= spec.min_center_distance
                    for prev in centers):
                centers.append(c)
                break
        else:
            raise GenerationError(
                f"could not place {spec.clusters} centers at pairwise distance "
                f">= {spec.min_center_distance} in dimension {spec.dimension}")
    return np.stack(centers)


def _sample_in_cap(center: np.ndarray, radius: float,
                   rng: np.random.Generator) -> np.ndarray:
    # chord radius r corresponds to a polar angle of 2*arcsin(r/2)
    theta_max = 2.0 * math.asin(radius / 2.0)
    phi = rng.uniform(0.0, theta_max)
    v = rng.standard_normal(center.shape[0])
    tangent = v - (v @ center) * center
    norm = np.linalg.norm(tangent)
    if norm == 0.0:
        return center.copy()
    tangent /= norm
    return center * math.cos(phi) + tangent * math.sin(phi)


def synth_dataset(spec: SynthSpec, role: Role = Role.MATCH) -> EmbeddingSet:
    """Deterministic planted-cluster embedding set; labels encode the cluster."""
    rng = np.random.default_rng(spec.seed)
    centers = _sample_centers(spec, rng)
    records = []
    for i in range(spec.count):
        cluster = i % spec.clusters
        vec = _sample_in_cap(centers[cluster], spec.radius, rng)
        label = f"{spec.label_prefix}-{spec.seed}-c{cluster}-p{i}"
        records.append(EmbeddingRecord(id=label, identity_label=label, vector=vec))
    return EmbeddingSet(role=role, records=records)


# ---------------------------------------------------------------------------
# Threshold calibration


def calibrate_threshold(pairs: list[tuple[str, str, str]],
                        embeddings: EmbeddingSet, far: float) -> Threshold:
    """Largest threshold whose empirical false acceptance rate is <= far.

    With N mismatch pairs and q = floor(far * N): the q-th smallest mismatch
    distance when q >= 1 (accepting exactly q mismatches under the <=
    predicate), otherwise just below the smallest mismatch distance.
    """
    if not (0.0 < far < 1.0):
        raise ConfigError(f"far must lie in (0, 1), got {far}")
    by_id = {r.id: r.vector for r in embeddings.records}
    mismatch = []
    for id_a, id_b, label in pairs:
        if id_a not in by_id or id_b not in by_id:
            raise ConfigError(f"pair ({id_a}, {id_b}) has unresolvable ids")
        if label == "mismatch":
            mismatch.append(float(np.linalg.norm(by_id[id_a] - by_id[id_b])))
    if not mismatch:
        raise CalibrationError("no mismatch pairs; threshold calibration impossible")
    mismatch.sort()
    q = int(math.floor(far * len(mismatch)))
    if q >= 1:
        return Threshold(mismatch[q - 1])
    return Threshold(mismatch[0] * (1.0 - 1e-9))


# ---------------------------------------------------------------------------
# Scenario configuration


@dataclass
class ScenarioConfig:
    kind: str
    match_size: int
    dodge_size: int
    dimension: int = 64
    repetitions: int = 1
    seed: int = 0
    search: SearchConfig = field(default_factory=lambda: SearchConfig(clusters=1))
    inversion: InversionConfig = field(default_factory=InversionConfig)
    run_phase2: bool = False
    # synthetic dataset shape
    planted_clusters: int = 1
    radius: float = 0.3
    dodge_inside_match: bool = False  # draw dodge points from the match centers
    min_center_distance: float | None = None
    # file-backed datasets override the synthetic ones
    match_path: str | None = None
    dodge_path: str | None = None
    # phase 2 plumbing
    mapper_side: int = 16
    mapper_hidden: int = 256
    mapper_seed: int = 0
    mapper_path: str | None = None
    source_image_path: str | None = None
    # fixed evaluation threshold for cross-run comparability (sweeps); when
    # None, coverage uses the fitness thresholds th1/th2
    eval_threshold: Threshold | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.match_size < 0 or self.dodge_size < 0:
            raise ScenarioError("set sizes must be >= 0")
        _check_arity(self.kind, self.match_size, self.dodge_size)
        if self.repetitions < 1:
            raise ScenarioError("repetitions must be >= 1")


def _check_arity(kind: str, k: int, l: int) -> None:
    def ok(arity, size):
        if arity == "many":
            return size > 1
        return size == arity

    m_arity, d_arity = SCENARIO_KINDS[kind]
    if not ok(m_arity, k) or not ok(d_arity, l):
        raise ScenarioError(
            f"scenario {kind!r} is inconsistent with match_size={k}, dodge_size={l}")


def config_echo(config) -> dict:
    """Dataclass tree -> JSON-serializable dict."""
    def convert(obj):
        if is_dataclass(obj) and not isinstance(obj, type):
            return {k: convert(v) for k, v in asdict(obj).items()}
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, dict):
            return {k: convert(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [convert(v) for v in obj]
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        return obj
    return convert(config)


# ---------------------------------------------------------------------------
# Scenario execution


def _build_sets(config: ScenarioConfig, rep_seed: int
                ) -> tuple[EmbeddingSet, EmbeddingSet]:
    if config.match_path is not None:
        match = read_embedding_set(config.match_path)
    elif config.match_size > 0:
        match_spec = SynthSpec(
            clusters=min(config.planted_clusters, config.match_size),
            count=config.match_size, radius=config.radius,
            dimension=config.dimension, seed=derive_seed(rep_seed, 1),
            label_prefix="m", min_center_distance=config.min_center_distance)
        match = synth_dataset(match_spec, role=Role.MATCH)
    else:
        match = EmbeddingSet(role=Role.MATCH, records=[])

    if config.dodge_path is not None:
        dodge = read_embedding_set(config.dodge_path)
    elif config.dodge_size > 0:
        if config.dodge_inside_match and config.match_size > 0:
            # reuse the match centers so dodge points sit inside the match caps
            rng = np.random.default_rng(derive_seed(rep_seed, 1))
            centers = _sample_centers(SynthSpec(
                clusters=min(config.planted_clusters, config.match_size),
                count=config.match_size, radius=config.radius,
                dimension=config.dimension, seed=derive_seed(rep_seed, 1),
                min_center_distance=config.min_center_distance), rng)
            dodge_spec = SynthSpec(
                clusters=centers.shape[0], count=config.dodge_size,
                radius=config.radius, dimension=config.dimension,
                seed=derive_seed(rep_seed, 2), label_prefix="d",
                centers=centers)
        else:
            dodge_spec = SynthSpec(
                clusters=min(config.planted_clusters, config.dodge_size),
                count=config.dodge_size, radius=config.radius,
                dimension=config.dimension, seed=derive_seed(rep_seed, 2),
                label_prefix="d")
        dodge = synth_dataset(dodge_spec, role=Role.DODGE)
    else:
        dodge = EmbeddingSet(role=Role.DODGE, records=[])
    return match, dodge


def _dodge_only_search(dodge: EmbeddingSet, config: ScenarioConfig,
                       rep_seed: int) -> np.ndarray:
    """Pure-dodging attack: one sphere-constrained search away from the set."""
    params = config.search.fitness
    objective = ClusterObjective(np.zeros((0, 0)), dodge.matrix(), params)
    es = config.search.es or EsConfig(dimension=config.dimension)
    es = replace(es, seed=derive_seed(rep_seed, 3), sphere_projection=True,
                 dimension=dodge.dimension)
    rng = np.random.default_rng(derive_seed(rep_seed, 4))
    init = l2_normalize(rng.standard_normal(dodge.dimension))
    best, _trace = minimize(objective, init, es)
    return best[None, :]


def _load_mapper(config: ScenarioConfig, dimension: int) -> ToyMapper:
    if config.mapper_path is not None:
        mapper = ToyMapper.load(config.mapper_path)
    else:
        mapper = ToyMapper(side=config.mapper_side, embed_dim=dimension,
                           hidden=config.mapper_hidden, seed=config.mapper_seed)
    if mapper.embed_dim != dimension:
        raise ConfigError(
            f"mapper embedding dimension {mapper.embed_dim} != set dimension {dimension}")
    return mapper


def _source_image(config: ScenarioConfig, mapper: ToyMapper) -> ImageTensor:
    if config.source_image_path is not None:
        from .io_formats import read_image_tensor
        return ImageTensor(read_image_tensor(config.source_image_path))
    rng = np.random.default_rng(derive_seed(config.seed, 99))
    return ImageTensor(rng.uniform(-0.9, 0.9, size=(3, mapper.side, mapper.side)))


def run_scenario(config: ScenarioConfig, threads: int = 1) -> RunReport:
    """Run one taxonomy cell end to end, averaged over repetitions."""
    params = config.search.fitness
    th_match = config.eval_threshold or params.th1
    th_dodge = config.eval_threshold or params.th2
    metrics: list[MetricRow] = []
    histories: dict[str, list[float]] = {}

    for rep in range(config.repetitions):
        rep_seed = derive_seed(config.seed, rep)
        match, dodge = _build_sets(config, rep_seed)
        detail = f"rep{rep}"

        if config.kind == "null":
            # any valid input is a solution; nothing to search
            metrics.append(MetricRow("phase1", "match", 0.0, 0, 0,
                                     detail + " trivial-success"))
            continue

        if config.match_size == 0:
            attack = _dodge_only_search(dodge, config, rep_seed)
        else:
            rep_search = replace(config.search, seed=rep_seed)
            if rep_search.es is None:
                rep_search = replace(rep_search, es=EsConfig(dimension=config.dimension))
            result = search(match, dodge, rep_search, threads=threads)
            attack = result.best_embeddings
            for c, trace in enumerate(result.per_cluster_trace):
                histories[f"{detail}/cluster{c}"] = trace.best_fitness

        if len(match) > 0:
            cov = coverage(attack, match, th_match)
            metrics.append(MetricRow("phase1", "match", cov.percentage,
                                     cov.matched_count, len(match), detail))
        if len(dodge) > 0:
            cov = coverage(attack, dodge, th_dodge)
            metrics.append(MetricRow("phase1", "dodge", cov.percentage,
                                     cov.matched_count, len(dodge), detail))

        if config.run_phase2:
            mapper = _load_mapper(config, config.dimension)
            source = _source_image(config, mapper)
            adv_embeddings = []
            for i, point in enumerate(attack):
                inv = replace(config.inversion, seed=derive_seed(rep_seed, 100 + i))
                res = generate_attack_face(source, point, mapper,
                                           identity_cropper, inv)
                adv_embeddings.append(mapper.forward(res.image))
                histories[f"{detail}/invert{i}"] = res.loss_trace
            if len(match) > 0:
                cov = coverage(adv_embeddings, match, th_match)
                metrics.append(MetricRow("phase2", "match", cov.percentage,
                                         cov.matched_count, len(match), detail))
            if len(dodge) > 0:
                cov = coverage(adv_embeddings, dodge, th_dodge)
                metrics.append(MetricRow("phase2", "dodge", cov.percentage,
                                         cov.matched_count, len(dodge), detail))

    _append_mean_rows(metrics)
    return RunReport(seed=config.seed, config=config_echo(config),
                     metrics=metrics, histories=histories)


def _append_mean_rows(metrics: list[MetricRow]) -> None:
    groups: dict[tuple[str, str], list[MetricRow]] = {}
    for row in metrics:
        if row.detail.startswith("rep"):
            groups.setdefault((row.phase, row.role), []).append(row)
    for (phase, role), rows in groups.items():
        mean_cov = sum(r.coverage for r in rows) / len(rows)
        metrics.append(MetricRow(phase, role, mean_cov,
                                 sum(r.matched for r in rows),
                                 sum(r.total for r in rows), "mean"))


# ---------------------------------------------------------------------------
# Unseen-set generalization


def run_unseen_generalization(config: ScenarioConfig, unseen_size: int,
                              unseen_path: str | None = None,
                              same_distribution: bool = True,
                              allow_overlap: bool = False,
                              threads: int = 1) -> RunReport:
    """Phase 1 against the match set, coverage additionally on an unseen set."""
    if config.match_size == 0 and config.match_path is None:
        raise ScenarioError("unseen generalization needs a non-empty match set")
    metrics: list[MetricRow] = []
    histories: dict[str, list[float]] = {}
    params = config.search.fitness

    for rep in range(config.repetitions):
        rep_seed = derive_seed(config.seed, rep)
        match, dodge = _build_sets(config, rep_seed)
        if unseen_path is not None:
            unseen = read_embedding_set(unseen_path)
        else:
            rng = np.random.default_rng(derive_seed(rep_seed, 1))
            spec = SynthSpec(
                clusters=min(config.planted_clusters, config.match_size),
                count=config.match_size, radius=config.radius,
                dimension=config.dimension, seed=derive_seed(rep_seed, 1),
                min_center_distance=config.min_center_distance)
            centers = _sample_centers(spec, rng) if same_distribution else None
            unseen_spec = SynthSpec(
                clusters=centers.shape[0] if centers is not None
                else min(config.planted_clusters, unseen_size),
                count=unseen_size, radius=config.radius,
                dimension=config.dimension, seed=derive_seed(rep_seed, 5),
                label_prefix="u", centers=centers)
            unseen = synth_dataset(unseen_spec, role=Role.UNSEEN)

        if not allow_overlap and (match.labels() & unseen.labels()):
            raise ScenarioError("match and unseen identity pools overlap")

        rep_search = replace(config.search, seed=rep_seed)
        if rep_search.es is None:
            rep_search = replace(rep_search, es=EsConfig(dimension=config.dimension))
        result = search(match, dodge, rep_search, threads=threads)
        detail = f"rep{rep}"
        for c, trace in enumerate(result.per_cluster_trace):
            histories[f"{detail}/cluster{c}"] = trace.best_fitness

        cov_m = coverage(result.best_embeddings, match, params.th1)
        cov_u = coverage(result.best_embeddings, unseen, params.th1)
        metrics.append(MetricRow("phase1", "match", cov_m.percentage,
                                 cov_m.matched_count, len(match), detail))
        metrics.append(MetricRow("phase1", "unseen", cov_u.percentage,
                                 cov_u.matched_count, len(unseen), detail))

    _append_mean_rows(metrics)
    return RunReport(seed=config.seed, config=config_echo(config),
                     metrics=metrics, histories=histories)


# ---------------------------------------------------------------------------
# Sweeps


@dataclass
class SweepSpec:
    axis: str
    values: list[float]
    repetitions: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; "
                              f"expected one of {SWEEP_AXES}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.axis == "gamma" and any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ConfigError("gamma values must lie in [0, 1]")
        if self.axis in ("cluster_count", "match_size") and any(
                v < 1 or v != int(v) for v in self.values):
            raise ConfigError(f"{self.axis} values must be positive integers")


def _apply_axis(base: ScenarioConfig, axis: str, value: float) -> tuple[ScenarioConfig, str]:
    params = base.search.fitness
    if axis == "th2_percent":
        th2 = Threshold(params.th1.value * (1.0 + value / 100.0))
        fitness = replace(params, th2=th2)
        cfg = replace(base, search=replace(base.search, fitness=fitness),
                      eval_threshold=base.eval_threshold or params.th1)
        label = f"th2={th2.value:.4f} increase={value:g}%"
    elif axis == "gamma":
        fitness = replace(params, gamma=float(value))
        cfg = replace(base, search=replace(base.search, fitness=fitness))
        label = f"gamma={value:g}"
    elif axis == "cluster_count":
        cfg = replace(base, search=replace(base.search, clusters=int(value)))
        label = f"clusters={int(value)}"
    elif axis == "match_size":
        cfg = replace(base, match_size=int(value))
        label = f"match_size={int(value)}"
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return cfg, label


def run_sweep(spec: SweepSpec, base: ScenarioConfig, threads: int = 1) -> RunReport:
    """One full scenario per axis value with shared seeds for paired runs.

    For the th2 axis the coverage rows are evaluated at the base verification
    threshold so rows stay comparable while the fitness margin grows.
    """
    metrics: list[MetricRow] = []
    histories: dict[str, list[float]] = {}
    for value in spec.values:
        cfg, label = _apply_axis(base, spec.axis, value)
        cfg = replace(cfg, repetitions=spec.repetitions, seed=base.seed)
        report = run_scenario(cfg, threads=threads)
        for row in report.metrics:
            metrics.append(MetricRow(row.phase, row.role, row.coverage,
                                     row.matched, row.total,
                                     f"{label} {row.detail}"))
        for key, hist in report.histories.items():
            histories[f"{label}/{key}"] = hist
    return RunReport(seed=base.seed,
                     config={"sweep": config_echo(spec), "base": config_echo(base)},
                     metrics=metrics, histories=histories)
