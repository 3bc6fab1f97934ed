"""Discrete DMP point attractor: canonical phase, Gaussian bases, LWR and rollout.

The attractor is written with mass-normalised gains::

    ydd = -D_M * yd - K_M * (y - g) + f / M

and integrated over unit time with semi-implicit Euler. The forcing term is
``sum(psi_i w_i) / sum(psi_i) * x * (y0 - g)`` per axis.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateScaleWarning,
    NumericalBlowup,
    UndefinedForZeroStiffness,
)
from .trajectory import KinematicTrajectory, unit_grid

DEFAULT_DECAY = 4.6
DEFAULT_BASIS_COUNT = 100
WIDTH_FACTOR = 0.65
SCALE_EPS = 1e-9
BLOWUP_LIMIT = 1e6


@dataclass(frozen=True)
class DynamicFeatures:
    """Inertia ``M`` with damping and stiffness expressed as ratios to it."""

    D_M: float
    K_M: float
    M: float = 1.0

    def __post_init__(self) -> None:
        if not (self.M > 0 and self.D_M >= 0 and self.K_M >= 0):
            raise ValueError(f"invalid dynamic features {self}")

    @property
    def zeta(self) -> float:
        return damping_ratio(self)

    def as_dict(self) -> dict:
        return {"M": self.M, "D_M": self.D_M, "K_M": self.K_M}


def damping_ratio(features: DynamicFeatures) -> float:
    """``D_M / (2 sqrt(K_M))``; 1 is critical damping."""
    if features.K_M <= 0:
        raise UndefinedForZeroStiffness("damping ratio needs K_M > 0")
    return features.D_M / (2.0 * math.sqrt(features.K_M))


def canonical_x(t, decay: float = DEFAULT_DECAY):
    """Phase variable ``exp(-decay * t)``, going from 1 at t=0 towards 0."""
    return np.exp(-decay * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class BasisConfig:
    centers: np.ndarray
    widths: np.ndarray
    decay: float = DEFAULT_DECAY

    def __post_init__(self) -> None:
        c = np.array(self.centers, dtype=float)
        w = np.array(self.widths, dtype=float)
        if c.ndim != 1 or c.shape != w.shape or len(c) < 2:
            raise ValueError("centers and widths must be equal-length vectors of length >= 2")
        if np.any(w <= 0) or np.any(np.diff(c) >= 0) or c[0] > 1 or c[-1] <= 0:
            raise ValueError("centers must be strictly decreasing in (0, 1], widths positive")
        if not self.decay > 0:
            raise ValueError("decay must be positive")
        c.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)

    @property
    def count(self) -> int:
        return len(self.centers)

    @classmethod
    def evenly_timed(cls, count: int = DEFAULT_BASIS_COUNT, decay: float = DEFAULT_DECAY) -> BasisConfig:
        """Centers at equal time intervals, widths proportional to neighbour spacing."""
        if count < 2:
            raise ValueError("need at least two basis functions")
        centers = canonical_x(np.linspace(0.0, 1.0, count), decay)
        widths = np.empty(count)
        widths[:-1] = np.abs(np.diff(centers)) * WIDTH_FACTOR
        widths[-1] = widths[-2]
        return cls(centers, widths, decay)

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "decay": self.decay,
            "centers": self.centers.tolist(),
            "widths": self.widths.tolist(),
        }


def basis_activations(x, basis: BasisConfig) -> np.ndarray:
    """Gaussian activations ``exp(-(x - c)^2 / (2 sigma^2))``.

    A scalar ``x`` gives a vector of length ``basis.count``; an array of phases
    gives one row per phase.
    """
    x = np.asarray(x, dtype=float)
    diff = x[..., None] - basis.centers
    return np.exp(-(diff**2) / (2.0 * basis.widths**2))


@dataclass(frozen=True)
class ForcingSeries:
    """Per-axis forcing samples on the unit grid, shape ``(steps + 1, 3)``."""

    values: np.ndarray
    kind: str = "target"
    constant_axes: tuple = (False, False, False)

    def __post_init__(self) -> None:
        if self.kind not in ("target", "standardized"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "constant_axes", tuple(bool(c) for c in self.constant_axes))


@dataclass(frozen=True)
class ForcingDesign:
    """Precomputed regression matrices for one basis on one unit grid.

    ``fit`` maps a phase-scaled target (rows = time) to weights, ``evaluate``
    maps weights back to the normalised basis mixture at each grid time.
    """

    phase: np.ndarray
    evaluate: np.ndarray
    fit: np.ndarray

    @classmethod
    def build(cls, basis: BasisConfig, steps: int) -> ForcingDesign:
        x = canonical_x(unit_grid(steps), basis.decay)
        psi = basis_activations(x, basis)  # (T, B)
        evaluate = psi / psi.sum(axis=1, keepdims=True)
        # per-basis weighted least squares of f_t against x_t:
        #   w_i = sum_t psi_it x_t f_t / sum_t psi_it x_t^2
        fit = (psi * x[:, None]).T / (psi.T @ (x**2))[:, None]
        return cls(x, evaluate, fit)

    def reproduce(self, f_target: np.ndarray) -> np.ndarray:
        """LWR approximation of ``f_target`` (time on axis 0), in forcing units."""
        w = np.tensordot(self.fit, f_target, axes=(1, 0))
        mix = np.tensordot(self.evaluate, w, axes=(1, 0))
        return mix * self.phase.reshape((-1,) + (1,) * (f_target.ndim - 1))


def fit_weights(f_target, basis: BasisConfig, spatial_scale, steps: int | None = None) -> np.ndarray:
    """Locally weighted regression of forcing weights, one scalar fit per basis.

    ``spatial_scale`` is ``y0 - g`` per axis. Axes whose scale is below
    ``SCALE_EPS`` in magnitude get zero weights and raise a
    :class:`DegenerateScaleWarning`. Returns an array of shape ``(3, count)``.
    """
    values = f_target.values if isinstance(f_target, ForcingSeries) else np.asarray(f_target, float)
    steps = len(values) - 1 if steps is None else steps
    design = ForcingDesign.build(basis, steps)
    scale = np.asarray(spatial_scale, dtype=float)
    degenerate = np.abs(scale) < SCALE_EPS
    if degenerate.any():
        warnings.warn(
            f"zero spatial scale on axes {np.flatnonzero(degenerate).tolist()}; weights set to 0",
            DegenerateScaleWarning,
            stacklevel=2,
        )
    safe = np.where(degenerate, 1.0, scale)
    weights = (design.fit @ values) / safe
    weights[:, degenerate] = 0.0
    return weights.T.copy()


@dataclass(frozen=True)
class DmpModel:
    features: DynamicFeatures
    basis: BasisConfig
    weights: np.ndarray
    start: np.ndarray
    goal: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        if w.shape != (3, self.basis.count):
            raise ValueError(f"weights must have shape (3, {self.basis.count}), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        for name in ("start", "goal"):
            v = np.array(getattr(self, name), dtype=float).reshape(3)
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    def forcing(self, steps: int, goal=None) -> np.ndarray:
        """Scaled forcing term on the unit grid, shape ``(steps + 1, 3)``."""
        design = self._cache.get(steps)
        if design is None:
            design = self._cache[steps] = ForcingDesign.build(self.basis, steps)
        goal = self.goal if goal is None else np.asarray(goal, dtype=float)
        scale = self.start - goal
        mix = design.evaluate @ self.weights.T
        return mix * design.phase[:, None] * scale

    def as_dict(self) -> dict:
        return {
            "features": self.features.as_dict(),
            "basis": self.basis.as_dict(),
            "weights": {axis: row.tolist() for axis, row in zip("xyz", self.weights)},
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> DmpModel:
        f, b, w = doc["features"], doc["basis"], doc["weights"]
        basis = BasisConfig(b["centers"], b["widths"], b["decay"])
        if basis.count != b["count"]:
            raise ValueError("basis count does not match centers")
        return cls(
            DynamicFeatures(D_M=f["D_M"], K_M=f["K_M"], M=f["M"]),
            basis,
            np.array([w["x"], w["y"], w["z"]]),
            doc["start"],
            doc["goal"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2))

    @classmethod
    def load(cls, path) -> DmpModel:
        return cls.from_dict(json.loads(Path(path).read_text()))


def attractor_accel(y, yd, goal, f, D_M, K_M, M=1.0):
    return -D_M * yd - K_M * (y - goal) + f / M


def euler_update(y, yd, ydd, dt):
    """Semi-implicit Euler: velocity first, then position with the new velocity."""
    yd = yd + ydd * dt
    y = y + yd * dt
    return y, yd


def integrate(start, goal, forcing, features: DynamicFeatures, check: bool = True):
    """Integrate the attractor over unit time driven by a sampled forcing term.

    ``forcing`` has time on axis 0 (``steps + 1`` samples); any trailing shape
    broadcasts against ``start``/``goal``, so many rollouts can share one loop.
    Returns position, velocity and acceleration arrays shaped like ``forcing``.
    """
    forcing = np.asarray(forcing, dtype=float)
    steps = len(forcing) - 1
    dt = 1.0 / steps
    shape = np.broadcast_shapes(forcing.shape[1:], np.shape(start), np.shape(goal))
    pos = np.empty((steps + 1,) + shape)
    vel = np.empty_like(pos)
    acc = np.empty_like(pos)
    y = np.broadcast_to(np.asarray(start, dtype=float), shape).copy()
    yd = np.zeros(shape)
    D, K, M = features.D_M, features.K_M, features.M
    for k in range(steps + 1):
        ydd = attractor_accel(y, yd, goal, forcing[k], D, K, M)
        pos[k], vel[k], acc[k] = y, yd, ydd
        if check and not np.all(np.abs(y) < BLOWUP_LIMIT):
            raise NumericalBlowup(f"state exceeded {BLOWUP_LIMIT:g} at step {k} with {features}")
        if k < steps:
            y, yd = euler_update(y, yd, ydd, dt)
    return pos, vel, acc


def rollout(
    model: DmpModel,
    features: DynamicFeatures | None = None,
    steps: int = 1000,
    goal_override=None,
) -> KinematicTrajectory:
    """Regenerate a trajectory over unit time from rest at ``model.start``."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    features = model.features if features is None else features
    goal = model.goal if goal_override is None else np.asarray(goal_override, dtype=float)
    forcing = model.forcing(steps, goal)
    pos, vel, acc = integrate(model.start, goal, forcing, features)
    return KinematicTrajectory(pos, vel, acc, 1.0 / steps)
