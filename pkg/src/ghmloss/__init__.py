"""Hybrid geometric/probabilistic metric learning on small numpy models."""

from ghmloss.embedding import (
    Batch,
    DegenerateEmbeddingError,
    Embedding,
    IndexSets,
    build_index_sets,
    l2_normalize,
)
from ghmloss.geometric import ProximityMatrix, cosine_matrix, cosine_proximity, proximity_matrix
from ghmloss.probabilistic import (
    DensityGrid,
    EMSettings,
    GMMParams,
    discretize,
    entropy,
    fit_gmm,
    gaussian_kl_closed_form,
    gmm_density,
    js_proximity,
    js_via_entropy,
    kl_divergence,
)
from ghmloss.loss import (
    Gradients,
    LossBreakdown,
    LossConfig,
    cross_entropy_loss,
    general_metric_loss,
    ghm_loss,
    loss_gradients,
    pair_probability,
    total_loss,
)
from ghmloss.metrics import ConfusionCounts, MetricsReport, auc, confusion, metrics

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "ConfusionCounts",
    "DegenerateEmbeddingError",
    "DensityGrid",
    "EMSettings",
    "Embedding",
    "GMMParams",
    "Gradients",
    "IndexSets",
    "LossBreakdown",
    "LossConfig",
    "MetricsReport",
    "ProximityMatrix",
    "auc",
    "build_index_sets",
    "confusion",
    "cosine_matrix",
    "cosine_proximity",
    "cross_entropy_loss",
    "discretize",
    "entropy",
    "fit_gmm",
    "gaussian_kl_closed_form",
    "general_metric_loss",
    "ghm_loss",
    "gmm_density",
    "js_proximity",
    "js_via_entropy",
    "kl_divergence",
    "l2_normalize",
    "loss_gradients",
    "metrics",
    "pair_probability",
    "proximity_matrix",
    "total_loss",
]
