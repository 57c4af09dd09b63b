"""Open-vocabulary region classification with reference features and
relation-aware ranking-distribution matching.

The package is organized as a library first: ``core`` holds the shared
immutable types, ``interchange`` the tensor file format and manifest,
``reference`` the reference-feature builder, ``matching`` the ranking
classifier, ``evaluation`` the segmentation scorer, ``synth`` the
synthetic-world harness, and ``pipeline`` the manifest-driven glue. The
``rim`` console script in ``cli`` fronts the same functions.
"""

from .core import (
    IGNORE_LABEL,
    AttentionStack,
    CategoryReference,
    LabelMap,
    NumericError,
    RankingDistribution,
    ReferenceSet,
    Region,
    RegionSet,
    RimError,
    SoftMask,
    Tensor,
    ValidationError,
)
from .evaluation import EvalReport, compute_miou, emit_report, load_report, render_label_map
from .interchange import (
    Manifest,
    ManifestError,
    TensorFormatError,
    load_manifest,
    read_array,
    read_tensor,
    write_tensor,
)
from .matching import (
    MAX_AGENTS,
    AgentSet,
    MatchConfig,
    calibrate_scores,
    classify_naive,
    classify_region,
    cosine_scores,
    distribution_similarity,
    permutation_probability,
    permutation_table,
    ranking_distribution,
    select_agents,
)
from .pipeline import (
    ImagePrediction,
    ReferenceBuildResult,
    build_reference_set,
    classify_manifest,
    evaluate_predictions,
    load_ground_truth,
    save_predictions,
)
from .reference import (
    DEFAULT_ATTENTION_THRESHOLD,
    EmptyForegroundError,
    aggregate_attention,
    binarize_attention,
    build_background_reference,
    build_category_reference,
    cluster_subcategories,
    foreground_from_attention,
    kmeans,
    load_reference_set,
    mask_average_pool,
    sample_prompt_points,
    save_reference_set,
)
from .synth import AblationArm, WorldSpec, default_arms, generate_world, run_ablation

__version__ = "0.1.0"

__all__ = [
    "IGNORE_LABEL",
    "MAX_AGENTS",
    "DEFAULT_ATTENTION_THRESHOLD",
    "AgentSet",
    "AblationArm",
    "AttentionStack",
    "CategoryReference",
    "EvalReport",
    "EmptyForegroundError",
    "ImagePrediction",
    "LabelMap",
    "Manifest",
    "ManifestError",
    "MatchConfig",
    "NumericError",
    "RankingDistribution",
    "ReferenceBuildResult",
    "ReferenceSet",
    "Region",
    "RegionSet",
    "RimError",
    "SoftMask",
    "Tensor",
    "TensorFormatError",
    "ValidationError",
    "WorldSpec",
    "aggregate_attention",
    "binarize_attention",
    "build_background_reference",
    "build_category_reference",
    "build_reference_set",
    "calibrate_scores",
    "classify_manifest",
    "classify_naive",
    "classify_region",
    "cluster_subcategories",
    "compute_miou",
    "cosine_scores",
    "default_arms",
    "distribution_similarity",
    "emit_report",
    "evaluate_predictions",
    "foreground_from_attention",
    "generate_world",
    "kmeans",
    "load_ground_truth",
    "load_manifest",
    "load_reference_set",
    "load_report",
    "mask_average_pool",
    "permutation_probability",
    "permutation_table",
    "ranking_distribution",
    "read_array",
    "read_tensor",
    "render_label_map",
    "run_ablation",
    "sample_prompt_points",
    "save_predictions",
    "save_reference_set",
    "select_agents",
    "write_tensor",
]
