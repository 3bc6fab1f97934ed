"""Command-line pipeline: synth -> extract -> regen -> rl, plus standalone metrics.

Every command takes ``--config`` (a JSON document whose keys match the long
flag names with dashes replaced by underscores), ``--out`` and ``--seed``.
Explicit flags override config values. Exit codes: 0 success, 1 IO/parse
error, 2 numeric failure, 3 violated precondition.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import comparison_table, regenerate
from .dmp import BasisConfig, DynamicFeatures
from .errors import DynfeatError, InsufficientDemos
from .extraction import ExtractionConfig, evaluate_metrics, extract_features, fit_model
from .rl_env import EnvConfig, search_policy
from .synth import SynthSpec, write_synth
from .trajectory import load_trajectory, prepare_demo, save_trajectory

log = logging.getLogger("dynfeat")

DEFAULTS = {
    "seed": 0,
    "out": ".",
    "sg_window": 21,
    "sg_order": 3,
    "bf_count": 100,
    "k_gain": 20.0,
    "grid": 60,
    "d_m_min": 0.1,
    "d_m_max": 120.0,
    "k_m_min": 0.1,
    "k_m_max": 250.0,
    "steps": 1000,
    "refine": True,
    # synth
    "n": 10,
    "noise": 0.01,
    "goal_spread": 0.25,
    "rate": 500.0,
    "duration_spread": 0.15,
    "true_d_m": 10.73,
    "true_k_m": 20.71,
    # rl
    "iterations": 100,
    "population": 64,
    "rl_bf_count": 10,
    "action_limit": None,
}


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _settings(args: argparse.Namespace) -> dict:
    merged = dict(DEFAULTS)
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        if not isinstance(doc, dict):
            raise ValueError("config must be a JSON object")
        merged.update(doc)
    merged.update({k: v for k, v in vars(args).items() if v is not None and k not in ("func", "config")})
    return merged


def _load_demos(paths, cfg: dict):
    return [
        prepare_demo(load_trajectory(p), cfg["sg_window"], cfg["sg_order"], cfg["steps"])
        for p in paths
    ]


def _demo_paths(cfg: dict) -> list[Path]:
    paths = []
    for entry in cfg.get("demos") or []:
        p = Path(entry)
        paths.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    return paths


def _load_features(path) -> DynamicFeatures:
    doc = json.loads(Path(path).read_text())
    return DynamicFeatures(doc["D_M"], doc["K_M"], doc.get("M", 1.0))


def cmd_synth(cfg: dict) -> int:
    spec = SynthSpec(
        D_M=cfg["true_d_m"],
        K_M=cfg["true_k_m"],
        n_demos=cfg["n"],
        weight_noise=cfg["noise"],
        goal_spread=cfg["goal_spread"],
        rate_hz=cfg["rate"],
        duration_spread=cfg["duration_spread"],
        basis_count=cfg["bf_count"],
        steps=cfg["steps"],
        seed=cfg["seed"],
    )
    paths = write_synth(spec, cfg["out"])
    log.info("wrote %d demos to %s", len(paths), cfg["out"])
    return 0


def cmd_extract(cfg: dict) -> int:
    paths = _demo_paths(cfg)
    if len(paths) < 2:
        raise InsufficientDemos(f"extract needs at least 2 demo files, got {len(paths)}")
    demos = _load_demos(paths, cfg)
    config = ExtractionConfig(
        d_m_range=(cfg["d_m_min"], cfg["d_m_max"]),
        k_m_range=(cfg["k_m_min"], cfg["k_m_max"]),
        grid_size=(cfg["grid"], cfg["grid"]),
        k_gain=cfg["k_gain"],
        basis_count=cfg["bf_count"],
        refine=cfg["refine"],
    )
    features, surface = extract_features(demos, config)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "features.json", {**features.as_dict(), "zeta": features.zeta})
    surface.write_csv(out / "surface.csv")
    _write_json(out / "surface_summary.json", surface.summary(features))
    log.info("extracted D_M=%.4f K_M=%.4f zeta=%.4f", features.D_M, features.K_M, features.zeta)
    return 0


def _write_table(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        keys = list(rows[0])
        writer.writerow(keys)
        for row in rows:
            writer.writerow([row[k] if isinstance(row[k], str) else f"{row[k]:.17g}" for k in keys])


def cmd_regen(cfg: dict) -> int:
    raw = load_trajectory(cfg["demo"])
    demo = prepare_demo(raw, cfg["sg_window"], cfg["sg_order"], cfg["steps"])
    features = _load_features(cfg["features"])
    basis = BasisConfig.evenly_timed(cfg["bf_count"])
    origin = raw.positions[0]
    goal = None if cfg.get("goal") is None else np.asarray(cfg["goal"], float) - origin
    regen = regenerate(demo, features, basis, goal)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    # back to the demo's own frame and clock
    save_trajectory(out / "regen.csv", regen.position + origin, regen.dt * raw.duration)
    metrics = evaluate_metrics(regen, demo)
    _write_json(out / "metrics.json", {
        "method": "Ours",
        **features.as_dict(),
        "zeta": features.zeta,
        **metrics.as_dict(),
    })
    if cfg.get("table"):
        _write_table(out / "table.csv", comparison_table(demo, features, basis))
    return 0


def cmd_metrics(cfg: dict) -> int:
    demo, regen = _load_demos([cfg["demo"], cfg["regen"]], cfg)
    m = evaluate_metrics(regen, demo)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "metrics.json", m.as_dict())
    return 0


def cmd_rl(cfg: dict) -> int:
    features = _load_features(cfg["features"])
    limit = cfg["action_limit"]
    if cfg.get("demo"):
        raw = load_trajectory(cfg["demo"])
        demo = prepare_demo(raw, cfg["sg_window"], cfg["sg_order"], cfg["steps"])
        start, goal = raw.positions[0], raw.positions[-1]
        if limit is None:
            model = fit_model(demo, features, BasisConfig.evenly_timed(cfg["bf_count"]))
            limit = 10.0 * float(np.abs(model.forcing(cfg["steps"])).max())
    else:
        start = np.asarray(cfg.get("start", [0.1, -0.2, 0.9]), float)
        goal = np.asarray(cfg.get("goal") or (start + [0.3, 0.35, 0.2]), float)
    env = EnvConfig(features, goal, start, cfg["steps"], 100.0 if limit is None else limit)
    result = search_policy(
        env,
        BasisConfig.evenly_timed(cfg["rl_bf_count"]),
        cfg["iterations"],
        cfg["population"],
        cfg["seed"],
    )
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    result.episode.write_jsonl(out / "episode.jsonl", env.dt)
    with open(out / "learning_curve.csv", "w", encoding="utf-8") as fh:
        fh.write("iteration,best_return\n")
        for i, r in enumerate(result.best_returns):
            fh.write(f"{i},{r:.17g}\n")
    _write_json(out / "rl_summary.json", {
        **features.as_dict(),
        "best_return": result.episode.total_return,
        "goal_error_m": result.episode.goal_error(goal),
        "action_limit": env.action_limit,
        "clipped_steps": int(result.episode.clipped.sum()),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynfeat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON settings file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    prep = argparse.ArgumentParser(add_help=False)
    prep.add_argument("--sg-window", type=int)
    prep.add_argument("--sg-order", type=int)
    prep.add_argument("--bf-count", type=int)
    prep.add_argument("--steps", type=int)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common, prep], help="write synthetic demonstrations")
    p.add_argument("--n", type=int, help="number of demos")
    p.add_argument("--noise", type=float, help="relative weight noise")
    p.add_argument("--goal-spread", type=float)
    p.add_argument("--duration-spread", type=float)
    p.add_argument("--rate", type=float, help="sampling rate in Hz")
    p.add_argument("--true-d-m", type=float)
    p.add_argument("--true-k-m", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", parents=[common, prep], help="extract dynamic features")
    p.add_argument("demos", nargs="*", default=None, help="demo CSV files or directories")
    p.add_argument("--k-gain", type=float)
    p.add_argument("--grid", type=int, help="cells per axis")
    p.add_argument("--d-m-min", type=float)
    p.add_argument("--d-m-max", type=float)
    p.add_argument("--k-m-min", type=float)
    p.add_argument("--k-m-max", type=float)
    p.add_argument("--no-refine", dest="refine", action="store_false", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("regen", parents=[common, prep], help="regenerate a demo with given features")
    p.add_argument("--demo")
    p.add_argument("--features")
    p.add_argument("--goal", type=float, nargs=3)
    p.add_argument("--table", action="store_true", default=None, help="also compare heuristics")
    p.set_defaults(func=cmd_regen)

    p = sub.add_parser("rl", parents=[common, prep], help="cross-entropy policy search")
    p.add_argument("--features")
    p.add_argument("--demo", help="take start, goal and action limit from this demo")
    p.add_argument("--iterations", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--rl-bf-count", type=int)
    p.add_argument("--action-limit", type=float)
    p.set_defaults(func=cmd_rl)

    p = sub.add_parser("metrics", parents=[common, prep], help="compare a trajectory to a demo")
    p.add_argument("--demo")
    p.add_argument("--regen")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    func = args.func
    del args.verbose, args.command
    if getattr(args, "demos", None) == []:
        args.demos = None
    try:
        return func(_settings(args))
    except DynfeatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
