"""Embedding-space match/dodge attack pipeline.

Phase 1 searches the unit sphere for points that match one labeled set of
embeddings while dodging another; Phase 2 inverts those points into bounded
perturbations of a source image through a differentiable mapper.
"""

from .clustering import Clustering, kmeans
from .embedding import (
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
from .fitness import (
    DEFAULT_THRESHOLD,
    ClusterObjective,
    FitnessParams,
    match_dodge_fitness,
    set_loss,
)
from .io_formats import (
    MetricRow,
    RunReport,
    read_embedding_set,
    read_image_tensor,
    read_pair_list,
    read_report,
    write_embedding_set,
    write_image_tensor,
    write_pair_list,
    write_report,
)
from .lmmaes import EsConfig, EsTrace, minimize
from .mapper import ImageTensor, ToyMapper
from .phase1 import SearchConfig, SearchResult, search
from .phase2 import (
    InversionConfig,
    InversionResult,
    crop_stabilize,
    generate_attack_face,
    identity_cropper,
)
from .scenarios import (
    ScenarioConfig,
    SweepSpec,
    SynthSpec,
    calibrate_threshold,
    run_scenario,
    run_sweep,
    run_unseen_generalization,
    synth_dataset,
)

__all__ = [
    "Clustering",
    "ClusterObjective",
    "CoverageResult",
    "DEFAULT_THRESHOLD",
    "EmbeddingRecord",
    "EmbeddingSet",
    "EsConfig",
    "EsTrace",
    "FitnessParams",
    "ImageTensor",
    "InversionConfig",
    "InversionResult",
    "MetricRow",
    "Role",
    "RunReport",
    "ScenarioConfig",
    "SearchConfig",
    "SearchResult",
    "SweepSpec",
    "SynthSpec",
    "Threshold",
    "ToyMapper",
    "calibrate_threshold",
    "coverage",
    "crop_stabilize",
    "distance",
    "generate_attack_face",
    "identity_cropper",
    "kmeans",
    "l2_normalize",
    "match_dodge_fitness",
    "matches",
    "minimize",
    "read_embedding_set",
    "read_image_tensor",
    "read_pair_list",
    "read_report",
    "run_scenario",
    "run_sweep",
    "run_unseen_generalization",
    "search",
    "set_loss",
    "synth_dataset",
    "write_embedding_set",
    "write_image_tensor",
    "write_pair_list",
    "write_report",
]
