"""Synthetic point-to-point demonstrations with known dynamic features.

Every demo is a rollout of the attractor under the ground-truth features. All
demos share one absolute forcing term (a minimum-jerk reach learned at the
reference goal); goals and durations are scattered around the reference, and
each demo's weights carry small multiplicative noise. With all three spreads
at zero the demos are identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .dmp import BasisConfig, DmpModel, DynamicFeatures, rollout
from .errors import InvalidSpec
from .extraction import fit_model
from .trajectory import KinematicTrajectory, TimedTrajectory, save_trajectory, unit_grid


@dataclass(frozen=True)
class SynthSpec:
    D_M: float = 10.73
    K_M: float = 20.71
    n_demos: int = 10
    weight_noise: float = 0.01
    goal_spread: float = 0.25
    start: tuple[float, float, float] = (0.10, -0.20, 0.90)
    reach: tuple[float, float, float] = (0.30, 0.35, 0.20)
    duration: float = 1.1
    duration_spread: float = 0.15
    rate_hz: float = 500.0
    basis_count: int = 100
    steps: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        problems = []
        if not (self.D_M >= 0 and self.K_M > 0):
            problems.append("D_M must be >= 0 and K_M > 0")
        if self.n_demos < 1:
            problems.append("n_demos must be >= 1")
        if self.weight_noise < 0 or self.goal_spread < 0:
            problems.append("noise levels must be non-negative")
        if not 0 <= self.duration_spread < 1 or self.duration <= 0:
            problems.append("duration must be positive and duration_spread in [0, 1)")
        if self.rate_hz <= 0 or self.steps < 2 or self.basis_count < 2:
            problems.append("rate_hz, steps and basis_count must be positive")
        if len(self.start) != 3 or len(self.reach) != 3:
            problems.append("start and reach must be 3-vectors")
        if problems:
            raise InvalidSpec("; ".join(problems))

    @classmethod
    def from_dict(cls, doc: dict) -> SynthSpec:
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise InvalidSpec(f"unknown synth fields: {sorted(unknown)}")
        doc = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**doc)

    @property
    def features(self) -> DynamicFeatures:
        return DynamicFeatures(self.D_M, self.K_M)


def minimum_jerk(start, goal, steps: int) -> KinematicTrajectory:
    """Analytic minimum-jerk reach over unit time."""
    t = unit_grid(steps)[:, None]
    delta = np.asarray(goal, float) - np.asarray(start, float)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    sd = 30 * t**2 - 60 * t**3 + 30 * t**4
    sdd = 60 * t - 180 * t**2 + 120 * t**3
    return KinematicTrajectory(start + s * delta, sd * delta, sdd * delta, 1.0 / steps)


def reference_model(spec: SynthSpec) -> DmpModel:
    """DMP reproducing a minimum-jerk reach under the ground-truth features."""
    start = np.asarray(spec.start, float)
    demo = minimum_jerk(start, start + np.asarray(spec.reach, float), spec.steps)
    return fit_model(demo, spec.features, BasisConfig.evenly_timed(spec.basis_count))


def synth_models(spec: SynthSpec) -> list[DmpModel]:
    rng = np.random.default_rng(spec.seed)
    base = reference_model(spec)
    reach = np.asarray(spec.reach, float)
    models = []
    for _ in range(spec.n_demos):
        reach_i = reach * (1.0 + spec.goal_spread * rng.uniform(-1.0, 1.0, size=3))
        # keep the absolute forcing shared: weights scale inversely with the reach
        weights = base.weights * (reach / reach_i)[:, None]
        weights = weights * (1.0 + spec.weight_noise * rng.standard_normal(weights.shape))
        models.append(DmpModel(spec.features, base.basis, weights, base.start, base.start + reach_i))
    return models


def synth_demos(spec: SynthSpec) -> list[TimedTrajectory]:
    """Raw demonstrations sampled at ``rate_hz`` over randomly drawn durations."""
    rng = np.random.default_rng([spec.seed, 1])
    demos = []
    for model in synth_models(spec):
        unit = rollout(model, steps=spec.steps)
        duration = spec.duration * (1.0 + spec.duration_spread * rng.uniform(-1.0, 1.0))
        n = max(4, int(round(duration * spec.rate_hz)) + 1)
        spline = CubicSpline(unit_grid(spec.steps), unit.position, axis=0)
        demos.append(TimedTrajectory(spline(np.linspace(0.0, 1.0, n)), duration / (n - 1)))
    return demos


def write_synth(spec: SynthSpec, out_dir) -> list[Path]:
    """Write ``demo_XX.csv`` files plus ``truth.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, demo in enumerate(synth_demos(spec)):
        path = out / f"demo_{i:02d}.csv"
        save_trajectory(path, demo.positions, demo.dt)
        paths.append(path)
    truth = {"D_M": spec.D_M, "K_M": spec.K_M, "zeta": spec.features.zeta, "spec": asdict(spec)}
    (out / "truth.json").write_text(json.dumps(truth, indent=2))
    return paths
