"""Hand-tuned feature sets used as comparison baselines, and the comparison table."""

from __future__ import annotations

from .dmp import BasisConfig, DynamicFeatures, rollout
from .extraction import evaluate_metrics, fit_model
from .trajectory import KinematicTrajectory

HEURISTICS = {
    "Hrstc1": DynamicFeatures(25.0, 156.25),
    "Hrstc2": DynamicFeatures(10.0, 200.0),
    "Hrstc3": DynamicFeatures(100.0, 20.0),
    "Hrstc4": DynamicFeatures(4.0, 4.0),
}


def regenerate(demo: KinematicTrajectory, features: DynamicFeatures, basis: BasisConfig, goal=None):
    """Fit ``demo`` under ``features`` and roll it out on the demo's own grid."""
    model = fit_model(demo, features, basis)
    return rollout(model, steps=len(demo) - 1, goal_override=goal)


def comparison_table(demo: KinematicTrajectory, ours: DynamicFeatures, basis: BasisConfig) -> list[dict]:
    """One row per method: ratios, damping ratio and regeneration metrics on ``demo``."""
    rows = []
    for name, features in [("Ours", ours), *HEURISTICS.items()]:
        m = evaluate_metrics(regenerate(demo, features, basis), demo)
        rows.append({
            "method": name,
            "D_M": features.D_M,
            "K_M": features.K_M,
            "zeta": features.zeta,
            **m.as_dict(),
        })
    return rows
