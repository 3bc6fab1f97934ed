import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TRUTH
from dynfeat.dmp import BasisConfig, DynamicFeatures, rollout
from dynfeat.extraction import fit_model
from dynfeat.rl_env import (
    EnvConfig,
    WeightPolicy,
    population_returns,
    rollout_policy,
    search_policy,
    step,
    terminal_reward,
)

OURS = DynamicFeatures(*TRUTH)
START = np.array([0.1, -0.2, 0.9])
GOAL = START + [0.3, 0.35, 0.2]


def env(features=OURS, start=START, goal=GOAL, **kw):
    return EnvConfig(features, goal, start, **kw)


class TestStep:
    def test_equilibrium(self):
        (y, yd), r = step((GOAL, np.zeros(3)), np.zeros(3), env())
        np.testing.assert_array_equal(y, GOAL)
        assert not yd.any() and r == 0.0

    def test_unit_acceleration_penalty(self):
        # action (1, 0, 0) at rest on the goal gives |ydd|_1 = 1
        (_, yd), r = step((GOAL, np.zeros(3)), [1.0, 0.0, 0.0], env(action_limit=10.0))
        assert r == pytest.approx(-1e-3 - 1e-7, rel=1e-12)
        np.testing.assert_allclose(yd, [1e-3, 0, 0])

    def test_action_penalty(self):
        config = env(action_limit=1e8)
        ydd_part = 1e-3 * 1e7
        _, r = step((GOAL, np.zeros(3)), [1e7, 0.0, 0.0], config)
        assert r + ydd_part == pytest.approx(-1.0, rel=1e-9)

    def test_clamped(self):
        _, r = step((GOAL, np.zeros(3)), [500.0, -500.0, 0.0], env(action_limit=10.0))
        assert r == pytest.approx(-1e-3 * 20 - 1e-7 * 20)

    @settings(max_examples=50)
    @given(
        y=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
        yd=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
        a=st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
    )
    def test_rewards_non_positive(self, y, yd, a):
        _, r = step((y, yd), a, env())
        assert r <= 0.0


@pytest.mark.parametrize("offset, expected", [(0.0, 0.0), (0.01, -0.1), (1.0, -10.0)])
def test_terminal_reward(offset, expected):
    assert terminal_reward(GOAL + [0.0, offset, 0.0], env()) == pytest.approx(expected, abs=1e-12)


class TestRollout:
    def test_zero_policy_at_goal(self):
        ep = rollout_policy(np.zeros((1000, 3)), env(start=GOAL))
        assert ep.total_return == 0.0
        assert len(ep.actions) == len(ep.rewards) == len(ep.states) - 1

    def test_zero_policy_step_response(self):
        ep = rollout_policy(np.zeros((1000, 3)), env())
        # the unforced attractor closes about 88% of the gap by t = 1
        reach = np.linalg.norm(GOAL - START)
        assert ep.goal_error(GOAL) == pytest.approx(0.116 * reach, rel=0.05)
        assert ep.total_return == pytest.approx(ep.rewards.sum() + ep.terminal_reward)

    def test_dmp_forcing_reproduces_rollout(self, synth_set):
        demo = synth_set[0]
        model = fit_model(demo, OURS, BasisConfig.evenly_timed())
        reference = rollout(model)
        forcing = model.forcing(1000)
        config = env(start=model.start, goal=model.goal, action_limit=1e6)
        ep = rollout_policy(forcing, config)
        assert not ep.clipped.any()
        assert np.max(np.abs(ep.positions - reference.position)) <= 1e-12
        assert np.max(np.abs(ep.velocities - reference.velocity)) <= 1e-12
        assert np.max(np.abs(ep.accelerations - reference.acceleration[:-1])) <= 1e-12

    def test_weight_policy_matches_batched_returns(self):
        basis = BasisConfig.evenly_timed(10)
        weights = np.random.default_rng(0).normal(size=(4, 3, 10))
        config = env()
        batched = population_returns(weights, basis, config)
        single = [rollout_policy(WeightPolicy(w, basis), config).total_return for w in weights]
        np.testing.assert_allclose(batched, single, rtol=1e-12)

    def test_short_policy_rejected(self):
        with pytest.raises(ValueError):
            rollout_policy(np.zeros((10, 3)), env())

    def test_jsonl(self, tmp_path):
        ep = rollout_policy(np.zeros((10, 3)), env(steps=10))
        ep.write_jsonl(tmp_path / "e.jsonl", 0.1)
        records = [json.loads(line) for line in (tmp_path / "e.jsonl").read_text().splitlines()]
        assert len(records) == 11
        assert set(records[0]) == {"t", "y", "yd", "ydd", "a", "r"}
        assert records[-1]["total_return"] == ep.total_return
        assert records[-1]["terminal_reward"] == ep.terminal_reward


@pytest.mark.parametrize("bad", [dict(steps=1), dict(action_limit=0.0)])
def test_invalid_config(bad):
    with pytest.raises(ValueError):
        env(**bad)


class TestSearch:
    basis = BasisConfig.evenly_timed(10)

    def test_goal_equals_start(self):
        config = env(start=GOAL)
        zero = rollout_policy(np.zeros((1000, 3)), config).total_return
        result = search_policy(config, self.basis, iterations=5, population=16, seed=0)
        assert result.episode.total_return >= zero - 1e-6

    def test_deterministic(self):
        a = search_policy(env(), self.basis, iterations=4, population=16, seed=7)
        b = search_policy(env(), self.basis, iterations=4, population=16, seed=7)
        assert a.best_returns == b.best_returns
        np.testing.assert_array_equal(a.policy.weights, b.policy.weights)
        np.testing.assert_array_equal(a.episode.positions, b.episode.positions)

    def test_monotone_history(self):
        result = search_policy(env(), self.basis, iterations=10, population=16, seed=1)
        assert np.all(np.diff(result.best_returns) >= 0)
        assert result.episode.total_return == pytest.approx(result.best_returns[-1], rel=1e-12)
        assert np.all(result.episode.rewards <= 0) and result.episode.terminal_reward <= 0

    def test_invalid_budget(self):
        with pytest.raises(ValueError):
            search_policy(env(), self.basis, iterations=0)
