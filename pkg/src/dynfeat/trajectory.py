"""Demonstration ingestion, Savitzky-Golay smoothing and temporal normalization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import savgol_filter

from .errors import (
    InvalidWindow,
    MalformedFile,
    NonMonotonicTime,
    TooShort,
    WindowTooLarge,
)

MIN_SAMPLES = 4
CSV_HEADER = ("t", "x", "y", "z")


def _frozen(a, shape_tail=(3,)) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 1 + len(shape_tail) or arr.shape[1:] != shape_tail:
        raise ValueError(f"expected array of shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("trajectory contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimedTrajectory:
    """Uniformly sampled 3D positions, shape ``(n, 3)``, spaced ``dt`` seconds apart."""

    positions: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", _frozen(self.positions))
        if len(self.positions) < MIN_SAMPLES:
            raise TooShort(f"need at least {MIN_SAMPLES} samples, got {len(self.positions)}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def duration(self) -> float:
        return (len(self.positions) - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.positions)) * self.dt


@dataclass(frozen=True)
class KinematicTrajectory:
    """Positions with matching velocities and accelerations on a uniform grid."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        for name in ("position", "velocity", "acceleration"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = len(self.position)
        if not (len(self.velocity) == n and len(self.acceleration) == n):
            raise ValueError("position, velocity and acceleration lengths differ")
        if n < MIN_SAMPLES:
            raise TooShort(f"need at least {MIN_SAMPLES} samples, got {n}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def __len__(self) -> int:
        return len(self.position)

    @property
    def start(self) -> np.ndarray:
        return self.position[0]

    @property
    def goal(self) -> np.ndarray:
        return self.position[-1]

    @property
    def duration(self) -> float:
        return (len(self.position) - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.position)) * self.dt


def _parse_rows(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise MalformedFile(f"{path}: expected header 't,x,y,z', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedFile(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise MalformedFile(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(values)):
                raise MalformedFile(f"{path}:{lineno}: non-finite value")
            rows.append(values)
    return np.array(rows, dtype=float).reshape(-1, 4)


def load_trajectory(path, format: str = "csv") -> TimedTrajectory:
    """Read a ``t,x,y,z`` CSV and resample it onto a uniform time grid.

    The grid spacing is the median source spacing, nudged so that the grid
    spans exactly ``t_last - t_first``. Positions are linearly interpolated.
    """
    if format != "csv":
        raise ValueError(f"unsupported format {format!r}")
    data = _parse_rows(Path(path))
    if len(data) < MIN_SAMPLES:
        raise TooShort(f"{path}: need at least {MIN_SAMPLES} samples, got {len(data)}")
    t, xyz = data[:, 0], data[:, 1:]
    if np.any(np.diff(t) <= 0):
        raise NonMonotonicTime(f"{path}: timestamps must be strictly increasing")

    duration = t[-1] - t[0]
    n = max(MIN_SAMPLES, int(round(duration / np.median(np.diff(t)))) + 1)
    grid = np.linspace(t[0], t[-1], n)
    positions = np.column_stack([np.interp(grid, t, xyz[:, k]) for k in range(3)])
    return TimedTrajectory(positions, duration / (n - 1))


def save_trajectory(path, positions, dt: float, t0: float = 0.0) -> None:
    """Write positions as a ``t,x,y,z`` CSV with 17 significant digits."""
    positions = np.asarray(positions, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for i, p in enumerate(positions):
            fh.write(f"{t0 + i * dt:.17g},{p[0]:.17g},{p[1]:.17g},{p[2]:.17g}\n")


def smooth_and_differentiate(
    traj: TimedTrajectory, window: int = 21, polyorder: int = 3, edge: str = "interp"
) -> KinematicTrajectory:
    """Savitzky-Golay smoothed positions plus first and second derivatives.

    Outputs keep the input length. By default the edge samples come from a
    polynomial fitted to the first/last window (``edge="interp"``); mirror
    padding (``edge="mirror"``) forces zero velocity at the ends, which biases
    demonstrations that start or stop in motion.
    """
    if window % 2 == 0 or window <= polyorder:
        raise InvalidWindow(f"window must be odd and > polyorder ({window=}, {polyorder=})")
    if len(traj) < window:
        raise WindowTooLarge(f"trajectory has {len(traj)} samples, window is {window}")
    kw = dict(window_length=window, polyorder=polyorder, axis=0, mode=edge)
    pos = savgol_filter(traj.positions, deriv=0, **kw)
    vel = savgol_filter(traj.positions, deriv=1, delta=traj.dt, **kw)
    acc = savgol_filter(traj.positions, deriv=2, delta=traj.dt, **kw)
    return KinematicTrajectory(pos, vel, acc, traj.dt)


def unit_grid(steps: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, steps + 1)


def normalize_demo(traj: KinematicTrajectory, steps: int = 1000) -> KinematicTrajectory:
    """Rescale to unit duration on ``steps + 1`` samples, starting at the origin.

    Velocities scale by the source duration and accelerations by its square.
    """
    T = traj.duration
    src = np.linspace(0.0, 1.0, len(traj))
    dst = unit_grid(steps)

    def resample(values: np.ndarray) -> np.ndarray:
        return CubicSpline(src, values, axis=0)(dst)

    pos = resample(traj.position)
    # spline evaluation at the end knots is exact, so the spatial extent is preserved
    pos = pos - traj.position[0]
    vel = resample(traj.velocity) * T
    acc = resample(traj.acceleration) * T**2
    return KinematicTrajectory(pos, vel, acc, 1.0 / steps)


def prepare_demo(
    traj: TimedTrajectory, window: int = 21, polyorder: int = 3, steps: int = 1000
) -> KinematicTrajectory:
    """Smooth, differentiate and normalize a raw demonstration in one go."""
    return normalize_demo(smooth_and_differentiate(traj, window, polyorder), steps)
