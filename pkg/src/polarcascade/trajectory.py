"""Time series of population states plus their CSV/JSON file format.

A trajectory file is a CSV with header ``t,theta_b,theta_r`` and a JSON
sidecar with the same stem holding metadata. ``meta["kind"]`` is either
``"stochastic"`` (piecewise-constant between samples) or ``"mean-field"``
(linear between samples).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import PopulationState

CSV_HEADER = ("t", "theta_b", "theta_r")
STOCHASTIC = "stochastic"
MEAN_FIELD = "mean-field"


class TrajectoryFormatError(ValueError):
    def __init__(self, path, line, message):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


@dataclass
class Trajectory:
    t: np.ndarray
    theta: np.ndarray  # shape (K, 2): columns theta_b, theta_r
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1, 2)
        if len(self.t) != len(self.theta):
            raise ValueError("t and theta lengths differ")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.t)

    @property
    def kind(self) -> str:
        return self.meta.get("kind", MEAN_FIELD)

    @property
    def final(self) -> PopulationState:
        return PopulationState.clamped(*self.theta[-1])

    @property
    def initial(self) -> PopulationState:
        return PopulationState.clamped(*self.theta[0])

    def at(self, times) -> np.ndarray:
        """States at ``times`` using this trajectory's interpolation rule."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.kind == STOCHASTIC or len(self.t) == 1:
            idx = np.searchsorted(self.t, times, side="right") - 1
            return self.theta[np.clip(idx, 0, len(self.t) - 1)]
        return np.column_stack([
            np.interp(times, self.t, self.theta[:, 0]),
            np.interp(times, self.t, self.theta[:, 1]),
        ])

    def left_limits(self, times) -> np.ndarray:
        """States just before ``times`` (differs from ``at`` only at jumps)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.kind != STOCHASTIC:
            return self.at(times)
        idx = np.searchsorted(self.t, times, side="left") - 1
        return self.theta[np.clip(idx, 0, len(self.t) - 1)]


def format_float(x: float) -> str:
    return repr(float(x))


def write_csv(traj: Trajectory, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, (b, r) in zip(traj.t, traj.theta):
            w.writerow((format_float(t), format_float(b), format_float(r)))


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def save_trajectory(traj: Trajectory, csv_path) -> None:
    write_csv(traj, csv_path)
    sidecar_path(csv_path).write_text(
        json.dumps(traj.meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_trajectory(csv_path) -> Trajectory:
    csv_path = Path(csv_path)
    try:
        text = csv_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TrajectoryFormatError(csv_path, None, f"cannot read file ({exc.strerror})")
    rows = list(csv.reader(text.splitlines()))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise TrajectoryFormatError(csv_path, 1, "expected header t,theta_b,theta_r")
    ts, th = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise TrajectoryFormatError(csv_path, lineno, f"expected 3 fields, got {len(row)}")
        try:
            t, b, r = (float(x) for x in row)
        except ValueError:
            raise TrajectoryFormatError(csv_path, lineno, "non-numeric field")
        if ts and t <= ts[-1]:
            raise TrajectoryFormatError(csv_path, lineno, "time not strictly increasing")
        ts.append(t)
        th.append((b, r))
    if not ts:
        raise TrajectoryFormatError(csv_path, None, "no samples")
    meta = {}
    side = sidecar_path(csv_path)
    if side.exists():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise TrajectoryFormatError(side, exc.lineno, f"invalid JSON ({exc.msg})")
    return Trajectory(np.array(ts), np.array(th), meta)
