"""Spurious-aware prototype refinement for post-hoc OOD detection."""

__version__ = "0.1.0"

from .data import EmbeddingSet, ScoreVector, load_embeddings, normalize, save_embeddings
from .metrics import MetricsSummary, aupr, auroc, fpr_at_tpr, summarize
from .prototypes import (
    GroupAssignment,
    PrototypeBank,
    classify,
    fit_converged,
    fit_kmeans,
    fit_stage1,
    fit_stage2,
    fit_stage3,
    score_distance,
    score_softmax,
)
from .synth import SyntheticSpec, generate, subsample_lowshot

__all__ = [
    "EmbeddingSet",
    "ScoreVector",
    "MetricsSummary",
    "PrototypeBank",
    "GroupAssignment",
    "SyntheticSpec",
    "normalize",
    "load_embeddings",
    "save_embeddings",
    "auroc",
    "fpr_at_tpr",
    "aupr",
    "summarize",
    "classify",
    "fit_stage1",
    "fit_stage2",
    "fit_stage3",
    "fit_converged",
    "fit_kmeans",
    "score_distance",
    "score_softmax",
    "generate",
    "subsample_lowshot",
]
