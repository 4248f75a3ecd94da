"""Integration of the limit mean ODE, stationary points and stability.

The drift is piecewise: on each side of the two switching lines a group's
fraction relaxes toward 1, toward 0, or stays put. Forward Euler is used
with one refinement. A step that would carry a group's signal across its
firing threshold is cut short so the state lands on the switching line.
On the line that group's drift is zero, the same closed-band convention
``drift`` uses. Transversal crossings pass through after one extra step;
the Case 4 diagonal run stops exactly at (0.5, 0.5), which is the Filippov
stationary solution there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ModelParams, PopulationState, drift, effective_couplings
from .trajectory import MEAN_FIELD, STOCHASTIC, Trajectory


@dataclass(frozen=True)
class IntegrationConfig:
    step_h: float = 1e-3
    horizon_t: float = 30.0
    stationary_tol: float = 1e-9
    clamp: bool = True
    record_stride: int = 10
    # signals within this distance of a threshold count as on the line
    snap_tol: float = 1e-12

    def __post_init__(self):
        if not self.step_h > 0:
            raise ValueError("step_h must be positive")
        if not self.horizon_t >= self.step_h:
            raise ValueError("horizon_t must be at least step_h")
        if self.stationary_tol < 0:
            raise ValueError("stationary_tol must be non-negative")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def max_steps(self) -> int:
        # room for one landing step per regular step
        return 2 * math.ceil(self.horizon_t / self.step_h) + 16


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class StationaryReport:
    point: PopulationState
    reached_at: float | None  # None: not reached within the horizon
    stability: Stability | None = None


def _path(theta0: PopulationState, params: ModelParams, cfg: IntegrationConfig,
          record_every: int):
    c = effective_couplings(params)
    return _kernels.euler_path(
        float(theta0.theta_b), float(theta0.theta_r), c.alpha_eff, c.beta_eff,
        params.red_fraction, params.delta, cfg.step_h, cfg.horizon_t, cfg.snap_tol,
        cfg.clamp, record_every, cfg.max_steps)


def integrate(theta0: PopulationState, params: ModelParams,
              cfg: IntegrationConfig = IntegrationConfig()) -> Trajectory:
    t, b, r, steps = _path(theta0, params, cfg, cfg.record_stride)
    meta = {
        "kind": MEAN_FIELD,
        "params": params.to_dict(),
        "theta0": [theta0.theta_b, theta0.theta_r],
        "step_h": cfg.step_h,
        "horizon_t": cfg.horizon_t,
        "record_stride": cfg.record_stride,
        "steps": int(steps),
    }
    return Trajectory(t, np.column_stack([b, r]), meta)


def integrate_endpoint(theta0: PopulationState, params: ModelParams,
                       cfg: IntegrationConfig = IntegrationConfig()) -> PopulationState:
    """Terminal state only (skips recording the path)."""
    _, b, r, _ = _path(theta0, params, cfg, cfg.max_steps + 1)
    return PopulationState.clamped(b[-1], r[-1])


def _speeds(traj: Trajectory, params: ModelParams | None) -> np.ndarray:
    if params is not None:
        return np.array([np.linalg.norm(drift(PopulationState.clamped(*th), params))
                         for th in traj.theta])
    if len(traj) < 2:
        return np.zeros(len(traj))
    fd = np.linalg.norm(np.diff(traj.theta, axis=0), axis=1) / np.diff(traj.t)
    return np.append(fd, fd[-1])


def find_stationary(traj: Trajectory, cfg: IntegrationConfig = IntegrationConfig(),
                    params: ModelParams | None = None) -> StationaryReport:
    """First time the drift stays below ``stationary_tol`` for one unit of t.

    Uses the exact drift when parameters are known (passed in, or stored in
    a mean-field trajectory's metadata), finite differences otherwise.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if params is None and traj.kind == MEAN_FIELD and "params" in traj.meta:
        params = ModelParams.from_dict(traj.meta["params"])
    speed = _speeds(traj, params)
    bad = np.concatenate([[0], np.cumsum(speed >= cfg.stationary_tol)])
    t = traj.t
    reached = None
    for i in range(len(t)):
        if t[i] + 1.0 > t[-1] + 1e-12:
            break
        j = np.searchsorted(t, t[i] + 1.0, side="right")
        if bad[j] - bad[i] == 0:
            reached = float(t[i])
            break
    return StationaryReport(traj.final, reached)


def stability_probe(point: PopulationState, params: ModelParams, eps: float = 1e-3,
                    t_probe: float = 5.0, return_frac: float = 0.5,
                    diverge_factor: float = 10.0, drift_tol: float = 1e-9,
                    cfg: IntegrationConfig = IntegrationConfig()) -> Stability:
    """Classify a stationary point from four axis-aligned perturbations.

    Stable iff every perturbed run is back within ``return_frac * eps`` at
    ``t_probe``; unstable iff any run ends farther than
    ``diverge_factor * eps`` away; indeterminate otherwise.
    """
    if np.linalg.norm(drift(point, params)) > drift_tol:
        raise ValueError(f"point ({point.theta_b}, {point.theta_r}) is not stationary")
    probe_cfg = IntegrationConfig(step_h=min(cfg.step_h, eps / 10), horizon_t=t_probe,
                                  clamp=True, snap_tol=cfg.snap_tol)
    here = point.as_array()
    distances = []
    for axis in (0, 1):
        for sign in (1.0, -1.0):
            start = here.copy()
            start[axis] += sign * eps
            start = PopulationState.clamped(*start)
            end = integrate_endpoint(start, params, probe_cfg)
            distances.append(float(np.linalg.norm(end.as_array() - here)))
    if all(d <= return_frac * eps for d in distances):
        return Stability.STABLE
    if any(d > diverge_factor * eps for d in distances):
        return Stability.UNSTABLE
    return Stability.INDETERMINATE


def sup_distance(a: Trajectory, b: Trajectory) -> float:
    """Largest Euclidean gap between two trajectories over their common time span.

    Evaluated on the union of both sample grids; stochastic paths are
    piecewise constant, so their left limits at jumps are checked too.
    """
    lo = max(a.t[0], b.t[0])
    hi = min(a.t[-1], b.t[-1])
    if lo > hi:
        raise ValueError("trajectories have disjoint time ranges")
    grid = np.union1d(a.t, b.t)
    grid = grid[(grid >= lo) & (grid <= hi)]
    if len(grid) == 0:
        grid = np.array([lo])
    gap = np.linalg.norm(a.at(grid) - b.at(grid), axis=1).max()
    if STOCHASTIC in (a.kind, b.kind):
        inner = grid[grid > lo]
        if len(inner):
            left = np.linalg.norm(a.left_limits(inner) - b.left_limits(inner), axis=1)
            gap = max(gap, left.max())
    return float(gap)
