"""Point-attractor environment where the action replaces the DMP forcing term.

Rewards are penalties: per step ``-1e-3 |ydd|_1 - 1e-7 |A|_1`` and at the end
``-10 |y - g|_2``. Policies are either explicit action sequences or weight
vectors over the DMP Gaussian bases (actions are the normalized basis mixture,
not gated by the phase), the latter searched with a cross-entropy method.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dmp import BasisConfig, DynamicFeatures, ForcingDesign, attractor_accel, euler_update

ACCEL_PENALTY = 1e-3
ACTION_PENALTY = 1e-7
TERMINAL_GAIN = 10.0


@dataclass(frozen=True)
class EnvConfig:
    features: DynamicFeatures
    goal: np.ndarray
    start: np.ndarray
    steps: int = 1000
    action_limit: float = 100.0

    def __post_init__(self) -> None:
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if not self.action_limit > 0:
            raise ValueError("action_limit must be positive")
        for name in ("goal", "start"):
            v = np.array(getattr(self, name), dtype=float).reshape(3)
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def dt(self) -> float:
        return 1.0 / self.steps


def _advance(y, yd, action, config: EnvConfig):
    a = np.clip(action, -config.action_limit, config.action_limit)
    f = config.features
    ydd = attractor_accel(y, yd, config.goal, a, f.D_M, f.K_M, f.M)
    reward = -ACCEL_PENALTY * np.abs(ydd).sum(axis=-1) - ACTION_PENALTY * np.abs(a).sum(axis=-1)
    y, yd = euler_update(y, yd, ydd, config.dt)
    return y, yd, ydd, a, reward


def step(state, action, config: EnvConfig):
    """Advance one step; returns ``((y, yd), reward)``. Actions are clamped per axis."""
    y, yd = (np.asarray(s, dtype=float) for s in state)
    y, yd, _, _, reward = _advance(y, yd, np.asarray(action, dtype=float), config)
    return (y, yd), float(reward)


def terminal_reward(y_final, config: EnvConfig) -> float:
    return -TERMINAL_GAIN * float(np.linalg.norm(np.asarray(y_final, float) - config.goal))


@dataclass(frozen=True)
class WeightPolicy:
    """Per-axis actions ``sum(psi_i w_i) / sum(psi_i)`` over the DMP bases, in m/s^2 times M."""

    weights: np.ndarray
    basis: BasisConfig

    def actions(self, config: EnvConfig) -> np.ndarray:
        design = ForcingDesign.build(self.basis, config.steps)
        return _weight_actions(np.asarray(self.weights, float)[None], design)[:, 0]


def _weight_actions(weights: np.ndarray, design: ForcingDesign) -> np.ndarray:
    """Action sequences for a population of weights ``(P, 3, B)`` -> ``(steps, P, 3)``."""
    # no phase gating: gated actions need weights growing like 1/x to act late
    return np.einsum("tb,pab->tpa", design.evaluate[:-1], weights)


@dataclass
class Episode:
    positions: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    clipped: np.ndarray
    terminal_reward: float
    total_return: float = field(init=False)

    def __post_init__(self) -> None:
        self.total_return = float(self.rewards.sum() + self.terminal_reward)

    @property
    def states(self) -> list:
        return list(zip(self.positions, self.velocities))

    def goal_error(self, goal) -> float:
        return float(np.linalg.norm(self.positions[-1] - np.asarray(goal, float)))

    def write_jsonl(self, path, dt: float) -> None:
        """One record per step, then a final record with the terminal reward."""
        lines = []
        for k in range(len(self.actions)):
            lines.append(json.dumps({
                "t": k * dt,
                "y": self.positions[k].tolist(),
                "yd": self.velocities[k].tolist(),
                "ydd": self.accelerations[k].tolist(),
                "a": self.actions[k].tolist(),
                "r": float(self.rewards[k]),
            }))
        n = len(self.actions)
        lines.append(json.dumps({
            "t": n * dt,
            "y": self.positions[n].tolist(),
            "yd": self.velocities[n].tolist(),
            "terminal_reward": self.terminal_reward,
            "total_return": self.total_return,
        }))
        Path(path).write_text("\n".join(lines) + "\n")


def rollout_policy(policy, config: EnvConfig) -> Episode:
    """Run one deterministic episode of ``config.steps`` steps from rest at ``config.start``.

    ``policy`` is a ``(steps, 3)`` action array (extra trailing rows are
    ignored) or a :class:`WeightPolicy`.
    """
    if isinstance(policy, WeightPolicy):
        actions = policy.actions(config)
    else:
        actions = np.asarray(policy, dtype=float)
        if actions.ndim != 2 or actions.shape[1] != 3 or len(actions) < config.steps:
            raise ValueError(f"need at least {config.steps} actions of shape (3,)")
        actions = actions[: config.steps]
    n = config.steps
    pos = np.empty((n + 1, 3))
    vel = np.empty((n + 1, 3))
    acc = np.empty((n, 3))
    applied = np.empty((n, 3))
    rewards = np.empty(n)
    y = config.start.copy()
    yd = np.zeros(3)
    pos[0], vel[0] = y, yd
    for k in range(n):
        y, yd, acc[k], applied[k], rewards[k] = _advance(y, yd, actions[k], config)
        pos[k + 1], vel[k + 1] = y, yd
    clipped = np.any(applied != actions, axis=1)
    return Episode(pos, vel, acc, applied, rewards, clipped, terminal_reward(y, config))


def population_returns(weights: np.ndarray, basis: BasisConfig, config: EnvConfig, design=None) -> np.ndarray:
    """Total returns of many weight policies at once, ``(P, 3, B)`` -> ``(P,)``."""
    design = ForcingDesign.build(basis, config.steps) if design is None else design
    actions = _weight_actions(weights, design)
    P = len(weights)
    y = np.broadcast_to(config.start, (P, 3)).copy()
    yd = np.zeros((P, 3))
    total = np.zeros(P)
    for k in range(config.steps):
        y, yd, _, _, reward = _advance(y, yd, actions[k], config)
        total += reward
    total -= TERMINAL_GAIN * np.linalg.norm(y - config.goal, axis=1)
    return np.where(np.isfinite(total), total, -np.inf)


@dataclass
class SearchResult:
    policy: WeightPolicy
    episode: Episode
    best_returns: list


def search_policy(
    config: EnvConfig,
    basis: BasisConfig,
    iterations: int = 100,
    population: int = 64,
    seed: int = 0,
    elite_frac: float = 0.125,
    init_sd: float = 1.0,
    sd_floor: float = 1e-3,
) -> SearchResult:
    """Cross-entropy search over basis weights, starting from the zero policy.

    Elites of the previous iteration compete with each new population, so the
    best return is non-decreasing. Deterministic for a fixed ``seed``.
    """
    if iterations < 1 or population < 1:
        raise ValueError("iterations and population must be >= 1")
    rng = np.random.default_rng(seed)
    design = ForcingDesign.build(basis, config.steps)
    shape = (3, basis.count)
    n_elite = max(1, math.ceil(elite_frac * population))
    mean = np.zeros(shape)
    sd = np.full(shape, init_sd)

    elites = np.zeros((1,) + shape)
    elite_returns = population_returns(elites, basis, config, design)
    history = []
    for _ in range(iterations):
        samples = mean + sd * rng.standard_normal((population,) + shape)
        returns = population_returns(samples, basis, config, design)
        pool = np.concatenate([elites, samples])
        pool_returns = np.concatenate([elite_returns, returns])
        # stable sort keeps earlier (retained) candidates first on ties
        order = np.argsort(-pool_returns, kind="stable")[:n_elite]
        elites, elite_returns = pool[order], pool_returns[order]
        mean = elites.mean(axis=0)
        sd = np.maximum(elites.std(axis=0), sd_floor) if len(elites) > 1 else np.maximum(sd * 0.5, sd_floor)
        history.append(float(elite_returns[0]))

    policy = WeightPolicy(elites[0], basis)
    return SearchResult(policy, rollout_policy(policy, config), history)
