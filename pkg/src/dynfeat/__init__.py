"""Learn DMPs from 3D demonstrations and extract their dynamic features."""

from .dmp import (
    BasisConfig,
    DmpModel,
    DynamicFeatures,
    ForcingSeries,
    basis_activations,
    canonical_x,
    damping_ratio,
    fit_weights,
    rollout,
)
from .extraction import (
    ExtractionConfig,
    ObjectiveSurface,
    distance_error,
    evaluate_metrics,
    evaluate_surface,
    extract_features,
    similarity,
    standardize_forcing,
    target_forcing,
)
from .trajectory import (
    KinematicTrajectory,
    TimedTrajectory,
    load_trajectory,
    normalize_demo,
    smooth_and_differentiate,
)

__all__ = [
    "BasisConfig",
    "DmpModel",
    "DynamicFeatures",
    "ExtractionConfig",
    "ForcingSeries",
    "KinematicTrajectory",
    "ObjectiveSurface",
    "TimedTrajectory",
    "basis_activations",
    "canonical_x",
    "damping_ratio",
    "distance_error",
    "evaluate_metrics",
    "evaluate_surface",
    "extract_features",
    "fit_weights",
    "load_trajectory",
    "normalize_demo",
    "rollout",
    "similarity",
    "smooth_and_differentiate",
    "standardize_forcing",
    "target_forcing",
]
