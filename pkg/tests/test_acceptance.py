"""Acceptance criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import TRUTH, scaled
from dynfeat.baselines import HEURISTICS
from dynfeat.cli import main
from dynfeat.dmp import BasisConfig, DynamicFeatures, damping_ratio, rollout
from dynfeat.extraction import (
    ExtractionConfig,
    accumulated_distance,
    distance_error,
    extract_features,
    fit_model,
    path_length,
    similarity,
)
from dynfeat.rl_env import EnvConfig, rollout_policy
from dynfeat.synth import SynthSpec, synth_demos
from dynfeat.trajectory import TimedTrajectory, prepare_demo, smooth_and_differentiate

criterion = pytest.mark.criterion
SEEDS = (0, 1, 2)
RECOVERY_BUDGET_S = 300.0
RL_BUDGET_S = 120.0


@pytest.fixture(scope="module")
def recovered():
    """Extraction on ten noisy synthetic demos per seed: {seed: (features, demos, seconds)}."""
    out = {}
    for seed in SEEDS:
        t0 = time.perf_counter()
        demos = [prepare_demo(d) for d in synth_demos(SynthSpec(seed=seed, weight_noise=0.01))]
        features, _ = extract_features(demos, ExtractionConfig())
        out[seed] = (features, demos, time.perf_counter() - t0)
    return out


@criterion("damping ratio reproduces the five heuristic/extracted table rows within 0.005")
@pytest.mark.parametrize("D, K, zeta", [
    (25.0, 156.25, 1.00), (10.0, 200.0, 0.35), (100.0, 20.0, 11.18), (4.0, 4.0, 1.00), (10.73, 20.71, 1.18),
])
def test_damping_ratio_rows(D, K, zeta):
    assert abs(damping_ratio(DynamicFeatures(D, K)) - zeta) <= 0.005


@pytest.mark.slow
@criterion("synthetic recovery: both ratios within 15% of (10.73, 20.71), seeds 0/1/2, < 5 min each")
@pytest.mark.parametrize("seed", SEEDS)
def test_synthetic_recovery(recovered, seed):
    features, _, seconds = recovered[seed]
    print(f"seed {seed}: D_M={features.D_M:.4f} K_M={features.K_M:.4f} in {seconds:.1f}s")
    assert abs(features.D_M / TRUTH[0] - 1) <= 0.15
    assert abs(features.K_M / TRUTH[1] - 1) <= 0.15
    assert seconds < RECOVERY_BUDGET_S


@criterion("similarity null case: identical demos S=0 (1e-9), positive scalings S=0 (1e-6)")
def test_similarity_null(exact_set):
    demo = exact_set[0]
    assert abs(similarity([demo] * 10, *TRUTH)) <= 1e-9
    scalings = [scaled(demo, c) for c in (0.1, 0.5, 1.0, 2.0, 7.5, 40.0)]
    assert abs(similarity(scalings, *TRUTH)) <= 1e-6


@pytest.mark.slow
@criterion("surface shape: sum d at (0.1, 0.1) > 5x optimum, S at (D*, K*/20) > S at (D*, K*)")
def test_surface_shape(recovered):
    features, demos, _ = recovered[0]
    D, K = features.D_M, features.K_M
    basis = BasisConfig.evenly_timed()
    soft = sum(distance_error(d, 0.1, 0.1, basis) for d in demos)
    best = sum(distance_error(d, D, K, basis) for d in demos)
    s_soft, s_best = similarity(demos, D, K / 20), similarity(demos, D, K)
    print(f"sum d: (0.1, 0.1) {soft:.5g} = {soft / best:.2f}x optimum {best:.5g}; "
          f"S: K*/20 {s_soft:.5g}, optimum {s_best:.5g}")
    assert s_soft > s_best
    assert soft > 5 * best


@criterion("LfD round trip: d_mean <= 2% of path length for zeta in [0.35, 11.18]")
@pytest.mark.parametrize("features", [
    DynamicFeatures(10.0, 200.0),        # zeta 0.35
    DynamicFeatures(25.0, 156.25),       # 1.00
    DynamicFeatures(*TRUTH),             # 1.18
    DynamicFeatures(2 * 3.0 * math.sqrt(50.0), 50.0),
    DynamicFeatures(100.0, 20.0),        # 11.18
], ids=lambda f: f"zeta={f.zeta:.2f}")
def test_lfd_round_trip(features, synth_set):
    basis = BasisConfig.evenly_timed()
    worst = 0.0
    for demo in synth_set:
        regen = rollout(fit_model(demo, features, basis), steps=len(demo) - 1)
        ratio = accumulated_distance(regen, demo) / demo.duration / path_length(demo)
        worst = max(worst, ratio)
    print(f"zeta {features.zeta:.2f}: worst d_mean / path length = {worst:.4%}")
    assert worst <= 0.02


@criterion("Savitzky-Golay: cubic reproduced with interior acceleration error <= 1e-6 (window 21, order 3)")
def test_sg_exactness():
    dt = 0.002
    t = np.arange(501) * dt
    cubic = 2.0 * t**3 - 1.5 * t**2 + 0.3 * t + 0.1
    kin = smooth_and_differentiate(TimedTrajectory(np.column_stack([cubic, -cubic, 0.5 * cubic]), dt), 21, 3)
    exact = 12.0 * t - 3.0
    inner = slice(10, -10)
    err = np.abs(kin.acceleration[inner] - np.column_stack([exact, -exact, 0.5 * exact])[inner])
    assert err.max() <= 1e-6


@criterion("dynamics equivalence: environment rollout of DMP forcing matches DMP rollout <= 1e-12")
def test_dynamics_equivalence(synth_set):
    features = DynamicFeatures(*TRUTH)
    worst = 0.0
    for demo in synth_set:
        model = fit_model(demo, features, BasisConfig.evenly_timed())
        ref = rollout(model)
        ep = rollout_policy(model.forcing(1000), EnvConfig(features, model.goal, model.start, 1000, 1e9))
        worst = max(worst, np.abs(ep.positions - ref.position).max(), np.abs(ep.velocities - ref.velocity).max())
    assert worst <= 1e-12


def run_cli(*args):
    return main([str(a) for a in args])


def numeric_outputs(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def pipeline(root):
    """Default synth -> extract -> regen -> rl run; returns seconds spent in rl."""
    demos, ext, reg, rl = (root / n for n in ("demos", "extract", "regen", "rl"))
    assert run_cli("synth", "--seed", 0, "--out", demos) == 0
    assert run_cli("extract", demos, "--seed", 0, "--out", ext) == 0
    demo = demos / "demo_00.csv"
    assert run_cli("regen", "--demo", demo, "--features", ext / "features.json", "--table", "--out", reg) == 0
    t0 = time.perf_counter()
    assert run_cli("rl", "--features", ext / "features.json", "--demo", demo, "--seed", 0, "--out", rl) == 0
    return time.perf_counter() - t0


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline_a")
    return root, pipeline(root)


@pytest.mark.slow
@criterion("RL: search with extracted features ends within 10 mm of the goal, < 2 min")
def test_rl_reaches_goal(pipeline_run):
    root, seconds = pipeline_run
    summary = json.loads((root / "rl" / "rl_summary.json").read_text())
    print(f"goal error {summary['goal_error_m'] * 1e3:.3f} mm, return {summary['best_return']:.4f}, {seconds:.1f}s")
    assert summary["goal_error_m"] < 0.010
    assert seconds < RL_BUDGET_S


@pytest.mark.slow
@criterion("RL: Hrstc4 (4, 4) with the same budget has a strictly worse best return, < 2 min")
def test_rl_heuristic_is_worse(pipeline_run, tmp_path):
    root, _ = pipeline_run
    ours = json.loads((root / "rl" / "rl_summary.json").read_text())
    feats = tmp_path / "hrstc4.json"
    feats.write_text(json.dumps(HEURISTICS["Hrstc4"].as_dict()))
    t0 = time.perf_counter()
    demo = root / "demos" / "demo_00.csv"
    assert run_cli("rl", "--features", feats, "--demo", demo, "--seed", 0, "--out", tmp_path) == 0
    seconds = time.perf_counter() - t0
    theirs = json.loads((tmp_path / "rl_summary.json").read_text())
    print(f"best return: extracted {ours['best_return']:.4f}, Hrstc4 {theirs['best_return']:.4f}")
    assert seconds < RL_BUDGET_S
    assert theirs["best_return"] < ours["best_return"]


@pytest.mark.slow
@criterion("determinism: full pipeline rerun with the same seed gives byte-identical outputs")
def test_pipeline_determinism(pipeline_run, tmp_path_factory):
    first, _ = pipeline_run
    second = tmp_path_factory.mktemp("pipeline_b")
    pipeline(second)
    a, b = numeric_outputs(first), numeric_outputs(second)
    assert a.keys() == b.keys() and len(a) > 10
    assert a == b
