"""Dynamic feature extraction over the (D_M, K_M) plane.

Two terms are traded off: the accumulated distance between each demonstration
and its own fitted-then-regenerated DMP, and the spread across demonstrations
of their standardized target forcing terms. The combined objective is

    J = S + k_gain * sum_i d_i

evaluated on a log-spaced grid and then refined with Nelder-Mead.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .dmp import (
    BLOWUP_LIMIT,
    SCALE_EPS,
    BasisConfig,
    DmpModel,
    DynamicFeatures,
    ForcingDesign,
    ForcingSeries,
    attractor_accel,
    euler_update,
    fit_weights,
    rollout,
)
from .errors import GridMismatch, InsufficientDemos, NoFiniteCell, NumericalBlowup
from .trajectory import KinematicTrajectory

logger = logging.getLogger(__name__)

CONSTANT_SD = 1e-12


def target_forcing(demo: KinematicTrajectory, D_M: float, K_M: float) -> ForcingSeries:
    """Forcing needed for the attractor to reproduce ``demo`` exactly (per unit mass)."""
    f = demo.acceleration + D_M * demo.velocity + K_M * (demo.position - demo.goal)
    return ForcingSeries(f, "target")


def _standardize(f: np.ndarray, time_axis: int):
    mean = f.mean(axis=time_axis, keepdims=True)
    sd = f.std(axis=time_axis, keepdims=True)
    constant = sd < CONSTANT_SD
    out = np.where(constant, 0.0, (f - mean) / np.where(constant, 1.0, sd))
    return out, np.squeeze(constant, axis=time_axis)


def standardize_forcing(f: ForcingSeries) -> ForcingSeries:
    """Zero-mean, unit-SD version of each axis over time.

    Axes with SD below 1e-12 become all zeros and are flagged in
    ``constant_axes``.
    """
    if f.kind != "target":
        raise ValueError("standardize_forcing expects a target forcing series")
    out, constant = _standardize(f.values, 0)
    return ForcingSeries(out, "standardized", tuple(constant))


def _check_grids(demos) -> None:
    n = len(demos[0])
    for d in demos:
        if len(d) != n or not math.isclose(d.dt, demos[0].dt, rel_tol=1e-12):
            raise GridMismatch("demonstrations must share one normalized time grid")


@dataclass(frozen=True)
class DemoStack:
    """Normalized demonstrations stacked as ``(N, T, 3)`` arrays."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    goal: np.ndarray
    dt: float

    @classmethod
    def from_demos(cls, demos) -> DemoStack:
        demos = list(demos)
        if not demos:
            raise InsufficientDemos("no demonstrations given")
        _check_grids(demos)
        return cls(
            np.stack([d.position for d in demos]),
            np.stack([d.velocity for d in demos]),
            np.stack([d.acceleration for d in demos]),
            np.stack([d.goal for d in demos]),
            demos[0].dt,
        )

    def __len__(self) -> int:
        return len(self.position)

    @property
    def steps(self) -> int:
        return self.position.shape[1] - 1

    def forcing(self, D_M: np.ndarray, K_M: np.ndarray) -> np.ndarray:
        """Target forcing for every (D_M[c], K_M[c]) pair, shape ``(C, N, T, 3)``."""
        D = np.asarray(D_M, dtype=float)[:, None, None, None]
        K = np.asarray(K_M, dtype=float)[:, None, None, None]
        return self.acceleration + D * self.velocity + K * (self.position - self.goal[:, None, :])


def _similarity_batch(f: np.ndarray, dt: float) -> np.ndarray:
    """Topological similarity from target forcings shaped ``(C, N, T, 3)``."""
    stand, constant = _standardize(f, time_axis=2)  # constant: (C, N, 3)
    informative = ~constant.any(axis=1)  # (C, 3)
    spread = stand.std(axis=1, ddof=1)  # (C, T, 3)
    spread = spread * informative[:, None, :]
    norm = np.sqrt((spread**2).sum(axis=-1))
    return np.trapezoid(norm, dx=dt, axis=-1)


def _distance_batch(
    stack: DemoStack, D_M: np.ndarray, K_M: np.ndarray, f: np.ndarray, design: ForcingDesign
) -> np.ndarray:
    """Accumulated distance of fit-and-regenerate per (cell, demo), shape ``(C, N)``.

    Each demo restarts from rest at its first sample and is attracted to its
    own final position. Cells that blow up come back as ``inf``.
    """
    steps = stack.steps
    dt = 1.0 / steps
    start = stack.position[:, 0]
    goal = stack.goal[None]  # (1, N, 3)
    live = np.abs(start - stack.goal) >= SCALE_EPS
    # time-major (T, C, N, 3) so the loop indexes the leading axis
    fhat = design.reproduce(np.moveaxis(f, 2, 0)) * live
    demo_pos = np.moveaxis(stack.position, 1, 0)[:, None]

    C, N = f.shape[:2]
    D = np.asarray(D_M, dtype=float)[:, None, None]
    K = np.asarray(K_M, dtype=float)[:, None, None]
    y = np.broadcast_to(start, (C, N, 3)).copy()
    yd = np.zeros((C, N, 3))
    dist = np.empty((steps + 1, C, N))
    peak = np.zeros((C, N))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps + 1):
            dist[k] = np.sqrt(((y - demo_pos[k]) ** 2).sum(axis=-1))
            peak = np.maximum(peak, np.abs(y).max(axis=-1))
            if k < steps:
                ydd = attractor_accel(y, yd, goal, fhat[k], D, K)
                y, yd = euler_update(y, yd, ydd, dt)
        total = np.trapezoid(dist, dx=dt, axis=0)
    bad = ~np.isfinite(total) | ~(peak < BLOWUP_LIMIT)
    return np.where(bad, np.inf, total)


def similarity(demos, D_M: float, K_M: float) -> float:
    """Time integral of the cross-demo SD of standardized target forcings.

    Per time step the sample SD (N - 1 denominator) is taken across demos on
    each axis, and the Euclidean norm over axes is integrated by the
    trapezoidal rule. Axes that are constant for any demo are left out.
    """
    if len(demos) < 2:
        raise InsufficientDemos(f"similarity needs at least 2 demos, got {len(demos)}")
    stack = DemoStack.from_demos(demos)
    return float(_similarity_batch(stack.forcing([D_M], [K_M]), stack.dt)[0])


def fit_model(demo: KinematicTrajectory, features: DynamicFeatures, basis: BasisConfig) -> DmpModel:
    """Learn forcing weights for ``demo`` under fixed dynamic features."""
    f = target_forcing(demo, features.D_M, features.K_M).values * features.M
    weights = fit_weights(f, basis, demo.start - demo.goal)
    return DmpModel(features, basis, weights, demo.start, demo.goal)


def path_length(demo: KinematicTrajectory) -> float:
    return float(np.linalg.norm(np.diff(demo.position, axis=0), axis=1).sum())


def accumulated_distance(a: KinematicTrajectory, b: KinematicTrajectory) -> float:
    """Trapezoidal integral over time of the Euclidean distance between positions."""
    if len(a) != len(b) or not math.isclose(a.dt, b.dt, rel_tol=1e-12):
        raise GridMismatch("trajectories are not on the same time grid")
    gap = np.linalg.norm(a.position - b.position, axis=1)
    return float(np.trapezoid(gap, dx=a.dt))


def distance_error(
    demo: KinematicTrajectory, D_M: float, K_M: float, basis: BasisConfig | None = None
) -> float:
    """Human-likeness term: how far the fitted DMP's regeneration strays from ``demo``.

    Returns ``inf`` when the rollout blows up.
    """
    basis = BasisConfig.evenly_timed() if basis is None else basis
    features = DynamicFeatures(D_M, K_M)
    model = fit_model(demo, features, basis)
    try:
        regen = rollout(model, steps=len(demo) - 1)
    except NumericalBlowup:
        return math.inf
    return accumulated_distance(regen, demo)


@dataclass
class ObjectiveSurface:
    """Objective terms over a ``(D_M, K_M)`` grid; matrices are indexed ``[i_d, i_k]``."""

    d_m_grid: np.ndarray
    k_m_grid: np.ndarray
    sum_d: np.ndarray
    similarity: np.ndarray
    k_gain: float
    n_demos: int = 0
    objective: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.d_m_grid = np.asarray(self.d_m_grid, dtype=float)
        self.k_m_grid = np.asarray(self.k_m_grid, dtype=float)
        self.objective = self.similarity + self.k_gain * self.sum_d

    @property
    def argmin_index(self) -> tuple[int, int]:
        """Cell with the smallest finite objective, ties going to smaller K_M then D_M."""
        J = self.objective
        finite = np.isfinite(J)
        if not finite.any():
            raise NoFiniteCell("every cell of the objective surface is infinite")
        dd, kk = np.meshgrid(self.d_m_grid, self.k_m_grid, indexing="ij")
        best = J[finite].min()
        tied = finite & (J == best)
        order = np.lexsort((dd[tied], kk[tied]))
        rows, cols = np.nonzero(tied)
        return int(rows[order[0]]), int(cols[order[0]])

    @property
    def argmin(self) -> tuple[float, float]:
        i, j = self.argmin_index
        return float(self.d_m_grid[i]), float(self.k_m_grid[j])

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("d_m,k_m,sum_d,similarity,objective\n")
            for i, d in enumerate(self.d_m_grid):
                for j, k in enumerate(self.k_m_grid):
                    fh.write(
                        f"{d:.17g},{k:.17g},{self.sum_d[i, j]:.17g},"
                        f"{self.similarity[i, j]:.17g},{self.objective[i, j]:.17g}\n"
                    )

    def summary(self, features: DynamicFeatures | None = None) -> dict:
        d_m, k_m = (features.D_M, features.K_M) if features else self.argmin
        return {
            "argmin": {"d_m": d_m, "k_m": k_m},
            "zeta": d_m / (2.0 * math.sqrt(k_m)),
            "k_gain": self.k_gain,
            "n_demos": self.n_demos,
        }

    def write_summary(self, path, features: DynamicFeatures | None = None) -> None:
        Path(path).write_text(json.dumps(self.summary(features), indent=2))


class _Evaluator:
    """Batched objective evaluation for one demo set and basis."""

    def __init__(self, demos, basis: BasisConfig, chunk: int = 2000):
        if len(demos) < 2:
            raise InsufficientDemos(f"feature extraction needs at least 2 demos, got {len(demos)}")
        self.stack = DemoStack.from_demos(demos)
        self.design = ForcingDesign.build(basis, self.stack.steps)
        # bound on cells x demos per batch, keeps memory near 100 MB at 1000 steps
        self.cells_per_batch = max(1, chunk // len(self.stack))

    def terms(self, D_M, K_M) -> tuple[np.ndarray, np.ndarray]:
        D_M = np.atleast_1d(np.asarray(D_M, dtype=float))
        K_M = np.atleast_1d(np.asarray(K_M, dtype=float))
        sum_d = np.empty(len(D_M))
        sim = np.empty(len(D_M))
        for lo in range(0, len(D_M), self.cells_per_batch):
            sl = slice(lo, lo + self.cells_per_batch)
            f = self.stack.forcing(D_M[sl], K_M[sl])
            sim[sl] = _similarity_batch(f, self.stack.dt)
            sum_d[sl] = _distance_batch(self.stack, D_M[sl], K_M[sl], f, self.design).sum(axis=1)
        return sum_d, sim


def evaluate_surface(
    demos,
    d_m_grid,
    k_m_grid,
    k_gain: float = 20.0,
    basis: BasisConfig | None = None,
) -> ObjectiveSurface:
    """Fill the distance, similarity and objective matrices over a grid."""
    d_m_grid = np.asarray(d_m_grid, dtype=float)
    k_m_grid = np.asarray(k_m_grid, dtype=float)
    if d_m_grid.size == 0 or k_m_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(d_m_grid <= 0) or np.any(k_m_grid <= 0):
        raise ValueError("grid values must be positive")
    basis = BasisConfig.evenly_timed() if basis is None else basis
    ev = _Evaluator(demos, basis)
    dd, kk = np.meshgrid(d_m_grid, k_m_grid, indexing="ij")
    sum_d, sim = ev.terms(dd.ravel(), kk.ravel())
    shape = dd.shape
    return ObjectiveSurface(d_m_grid, k_m_grid, sum_d.reshape(shape), sim.reshape(shape), k_gain, len(demos))


@dataclass(frozen=True)
class ExtractionConfig:
    d_m_range: tuple[float, float] = (0.1, 120.0)
    k_m_range: tuple[float, float] = (0.1, 250.0)
    grid_size: tuple[int, int] = (60, 60)
    k_gain: float = 20.0
    basis_count: int = 100
    refine: bool = True
    max_iter: int = 200
    xtol: float = 1e-3

    def grids(self) -> tuple[np.ndarray, np.ndarray]:
        d = np.geomspace(*self.d_m_range, self.grid_size[0])
        k = np.geomspace(*self.k_m_range, self.grid_size[1])
        return d, k


def extract_features(demos, config: ExtractionConfig | None = None):
    """Coarse grid search followed by Nelder-Mead in log space.

    Returns the extracted :class:`DynamicFeatures` (``M = 1``) and the
    :class:`ObjectiveSurface` of the coarse grid.
    """
    config = ExtractionConfig() if config is None else config
    basis = BasisConfig.evenly_timed(config.basis_count)
    d_grid, k_grid = config.grids()
    surface = evaluate_surface(demos, d_grid, k_grid, config.k_gain, basis)
    d0, k0 = surface.argmin
    logger.info("grid argmin D_M=%.4g K_M=%.4g J=%.6g", d0, k0, np.nanmin(surface.objective))
    if not config.refine:
        return DynamicFeatures(d0, k0), surface

    ev = _Evaluator(demos, basis)

    def objective(z: np.ndarray) -> float:
        sum_d, sim = ev.terms(np.exp(z[0]), np.exp(z[1]))
        value = sim[0] + config.k_gain * sum_d[0]
        return float(value) if np.isfinite(value) else np.inf

    start = np.log([d0, k0])
    # initial simplex spans about one grid cell in each direction
    step = np.log([d_grid[1] / d_grid[0] if len(d_grid) > 1 else 1.1,
                   k_grid[1] / k_grid[0] if len(k_grid) > 1 else 1.1])
    simplex = np.array([start, start + [step[0], 0.0], start + [0.0, step[1]]])
    res = minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": config.xtol,
            "fatol": 0.0,
            "maxiter": config.max_iter,
        },
    )
    best = res.x if res.fun <= surface.objective[surface.argmin_index] else start
    d_m, k_m = (float(v) for v in np.exp(best))
    logger.info("refined D_M=%.4g K_M=%.4g after %d iterations", d_m, k_m, res.nit)
    return DynamicFeatures(d_m, k_m), surface


@dataclass(frozen=True)
class Metrics:
    d_mean: float
    a_peak: float
    goal_error: float

    def as_dict(self) -> dict:
        return {
            "d_mean_m": self.d_mean,
            "d_mean_mm": self.d_mean * 1e3,
            "a_peak": self.a_peak,
            "goal_error_m": self.goal_error,
            "goal_error_mm": self.goal_error * 1e3,
        }


def evaluate_metrics(regen: KinematicTrajectory, demo: KinematicTrajectory) -> Metrics:
    """Mean distance error, peak acceleration magnitude and final goal error."""
    d = accumulated_distance(regen, demo)
    a_peak = float(np.linalg.norm(regen.acceleration, axis=1).max())
    goal_error = float(np.linalg.norm(regen.position[-1] - demo.goal))
    return Metrics(d / demo.duration, a_peak, goal_error)
