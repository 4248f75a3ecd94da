"""Parameter sweeps, homophily scans and named scenario suites."""

from __future__ import annotations

import enum
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from itertools import product

import numpy as np
from scipy import ndimage

from .agents import EnsembleConfig, simulate_once
from .meanfield import IntegrationConfig, integrate, integrate_endpoint
from .model import (ModelParams, PopulationState, Regime, Topology, classify_regime,
                    DEFAULT_TOL)
from .seeds import derive_seed
from .trajectory import Trajectory

PARAM_AXES = ("alpha", "beta", "delta", "red_fraction", "homophily")
STATE_AXES = ("theta0_b", "theta0_r")
AXIS_NAMES = PARAM_AXES + STATE_AXES
_OPEN_AXES = ("red_fraction", "homophily")

DEFAULT_FIXED = {
    "alpha": 0.8, "beta": 0.7, "delta": 0.0, "red_fraction": 0.5, "homophily": 0.5,
    "topology": "complete", "theta0_b": 0.7, "theta0_r": 0.7,
}


class SweepMode(str, enum.Enum):
    CLASSIFY = "classify"
    INTEGRATE = "integrate"
    SIMULATE = "simulate"


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValueError(f"unknown sweep axis {self.name!r}; choose from {AXIS_NAMES}")
        # one step is allowed only as an explicit degenerate axis (lo == hi)
        if self.steps < 1 or (self.steps == 1 and self.lo != self.hi):
            raise ValueError(f"axis {self.name}: steps must be >= 2 (or 1 with lo == hi)")
        lo, hi = min(self.lo, self.hi), max(self.lo, self.hi)
        if self.name in _OPEN_AXES:
            if not (0.0 < lo and hi < 1.0):
                raise ValueError(f"axis {self.name}: range must lie inside (0, 1)")
        elif not (0.0 <= lo and hi <= 1.0):
            raise ValueError(f"axis {self.name}: range must lie inside [0, 1]")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """Parse ``name:lo:hi:steps``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"axis {text!r} is not name:lo:hi:steps")
        return cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple
    fixed: dict = field(default_factory=dict)
    mode: SweepMode = SweepMode.CLASSIFY
    n: int = 10_000
    seed: int = 0
    horizon_t: float = 30.0
    sim_horizon_t: float = 15.0
    step_h: float = 1e-3
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        axes = tuple(a if isinstance(a, Axis) else Axis(**a) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mode", SweepMode(self.mode))
        if not 1 <= len(axes) <= 2:
            raise ValueError("a sweep has one or two axes")
        if len({a.name for a in axes}) != len(axes):
            raise ValueError("sweep axes must be distinct")
        unknown = set(self.fixed) - set(DEFAULT_FIXED)
        if unknown:
            raise ValueError(f"unknown fixed parameter(s): {sorted(unknown)}")
        merged = {**DEFAULT_FIXED, **self.fixed}
        object.__setattr__(self, "fixed", merged)
        # validate the fixed point itself
        self.cell_params({})
        if self.mode is SweepMode.SIMULATE and self.n < 2:
            raise ValueError("simulate mode needs n >= 2")

    @property
    def shape(self) -> tuple:
        return tuple(a.steps for a in self.axes)

    def cell_values(self, index: tuple) -> dict:
        return {a.name: float(a.values[i]) for a, i in zip(self.axes, index)}

    def cell_params(self, values: dict) -> tuple[ModelParams, PopulationState]:
        v = {**self.fixed, **values}
        params = ModelParams(v["alpha"], v["beta"], v["delta"], v["red_fraction"],
                             v["homophily"], Topology(v["topology"]))
        return params, PopulationState(v["theta0_b"], v["theta0_r"])

    def to_dict(self) -> dict:
        return {
            "axes": [vars(a) for a in self.axes], "fixed": self.fixed,
            "mode": self.mode.value, "n": self.n, "seed": self.seed,
            "horizon_t": self.horizon_t, "sim_horizon_t": self.sim_horizon_t,
            "step_h": self.step_h, "tol": self.tol,
        }


@dataclass
class Cell:
    index: tuple
    values: dict
    regime: str | None = None
    endpoint: tuple | None = None
    seed: int | None = None
    runtime: float = 0.0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: list

    @property
    def shape(self):
        return self.spec.shape

    def regime_grid(self) -> np.ndarray:
        grid = np.empty(self.shape, dtype=object)
        for c in self.cells:
            grid[c.index] = c.regime
        return grid

    def endpoint_grid(self) -> np.ndarray:
        grid = np.full(self.shape + (2,), np.nan)
        for c in self.cells:
            if c.endpoint is not None:
                grid[c.index] = c.endpoint
        return grid

    def failures(self) -> list:
        return [c for c in self.cells if c.failed]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def group_sizes(n: int, red_fraction: float) -> tuple[int, int]:
    """(n_blue, n_red) with n_red = round-half-up(r * n)."""
    n_red = min(n - 1, max(1, _round_half_up(red_fraction * n)))
    return n - n_red, n_red


def evaluate_cell(spec: SweepSpec, index: tuple) -> Cell:
    flat = int(np.ravel_multi_index(index, spec.shape))
    values = spec.cell_values(index)
    cell = Cell(index=tuple(int(i) for i in index), values=values)
    start = time.perf_counter()
    try:
        params, theta0 = spec.cell_params(values)
        if params.delta == 0.0:
            cell.regime = classify_regime(params, spec.tol).value
        elif spec.mode is SweepMode.CLASSIFY:
            raise ValueError("classify mode requires delta=0")
        if spec.mode is SweepMode.INTEGRATE:
            cfg = IntegrationConfig(step_h=spec.step_h, horizon_t=spec.horizon_t)
            end = integrate_endpoint(theta0, params, cfg)
            cell.endpoint = (end.theta_b, end.theta_r)
        elif spec.mode is SweepMode.SIMULATE:
            n_blue, n_red = group_sizes(spec.n, params.red_fraction)
            cell.seed = derive_seed(spec.seed, "sweep-cell", flat)
            cfg = EnsembleConfig(params, n_blue, n_red, theta0, spec.sim_horizon_t,
                                 topology=params.topology.value,
                                 graph_seed=derive_seed(spec.seed, "sweep-graph", flat))
            traj = simulate_once(cfg, cell.seed)
            cell.endpoint = tuple(float(x) for x in traj.theta[-1])
    except Exception as exc:  # failures are data
        cell.error = f"{type(exc).__name__}: {exc}"
    cell.runtime = time.perf_counter() - start
    return cell


def _evaluate_many(spec, indices):
    return [evaluate_cell(spec, ix) for ix in indices]


def phase_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Evaluate every grid cell; results are ordered by cell index."""
    indices = list(product(*(range(s) for s in spec.shape)))
    if jobs > 1 and len(indices) > 1:
        chunks = [indices[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_evaluate_many, [spec] * jobs, chunks))
        cells = sorted((c for part in parts for c in part), key=lambda c: c.index)
    else:
        cells = _evaluate_many(spec, indices)
    return SweepResult(spec, cells)


def region_components(regimes: np.ndarray) -> dict:
    """Number of 4-connected components per regime label (Boundary cells excluded)."""
    out = {}
    for label in sorted({x for x in regimes.ravel() if x is not None}):
        if label == Regime.BOUNDARY.value:
            continue
        _, count = ndimage.label(regimes == label)
        out[label] = int(count)
    return out


# -- homophily scans ------------------------------------------------------

@dataclass
class ScanPoint:
    rho: float
    regime: str | None
    endpoint: tuple | None
    error: str | None = None


def homophily_scan(params: ModelParams, rho_values, theta0: PopulationState,
                   mode: SweepMode | str = SweepMode.INTEGRATE, n: int = 10_000,
                   seed: int = 0, cfg: IntegrationConfig = IntegrationConfig(),
                   sim_horizon_t: float = 15.0) -> list:
    """Regime and endpoint at each homophily value, in the given order."""
    mode = SweepMode(mode)
    out = []
    for i, rho in enumerate(rho_values):
        point = ScanPoint(float(rho), None, None)
        try:
            p = params.replace(homophily=float(rho), topology=Topology.STOCHASTIC_BLOCK)
            if p.delta == 0.0:
                point.regime = classify_regime(p).value
            if mode is SweepMode.INTEGRATE:
                end = integrate_endpoint(theta0, p, cfg)
                point.endpoint = (end.theta_b, end.theta_r)
            elif mode is SweepMode.SIMULATE:
                n_blue, n_red = group_sizes(n, p.red_fraction)
                ecfg = EnsembleConfig(p, n_blue, n_red, theta0, sim_horizon_t,
                                      topology="sbm",
                                      graph_seed=derive_seed(seed, "scan-graph", i))
                traj = simulate_once(ecfg, derive_seed(seed, "scan", i))
                point.endpoint = tuple(float(x) for x in traj.theta[-1])
        except Exception as exc:
            point.error = f"{type(exc).__name__}: {exc}"
        out.append(point)
    return out


def regime_transitions(points: list) -> list:
    """(rho_before, rho_after, regime_before, regime_after) where the regime changes."""
    out = []
    for p, q in zip(points, points[1:]):
        if p.regime != q.regime:
            out.append((p.rho, q.rho, p.regime, q.regime))
    return out


# -- scenarios ------------------------------------------------------------

@dataclass
class ScenarioRun:
    label: str
    params: ModelParams
    theta0: PopulationState
    mean_field: Trajectory
    stochastic: Trajectory | None = None


@dataclass
class ScenarioBundle:
    name: str
    definition: dict
    runs: list

    def run(self, label: str) -> ScenarioRun:
        for r in self.runs:
            if r.label == label:
                return r
        raise KeyError(label)


def list_scenarios() -> list[str]:
    files = resources.files("polarcascade").joinpath("scenarios").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def load_scenario(name: str) -> dict:
    if name not in list_scenarios():
        raise ValueError(f"unknown scenario {name!r}; known: {', '.join(list_scenarios())}")
    path = resources.files("polarcascade").joinpath("scenarios", f"{name}.json")
    return json.loads(path.read_text(encoding="utf-8"))


def scenario_suite(name: str, stochastic: bool = True, n: int | None = None,
                   seed: int | None = None) -> ScenarioBundle:
    """Run a named scenario: mean-field path plus (optionally) one agent run per entry."""
    spec = load_scenario(name)
    mf = spec.get("mean_field", {})
    cfg = IntegrationConfig(step_h=mf.get("step_h", 1e-3),
                            horizon_t=mf.get("horizon_t", 30.0),
                            record_stride=mf.get("record_stride", 10))
    st = spec.get("stochastic", {})
    n = n if n is not None else st.get("n", 10_000)
    seed = seed if seed is not None else st.get("seed", 0)
    runs = []
    for i, entry in enumerate(spec["runs"]):
        params = ModelParams.from_dict({**spec.get("params", {}), **entry.get("params", {})})
        theta0 = PopulationState(*entry.get("theta0", spec.get("theta0")))
        run = ScenarioRun(entry["label"], params, theta0, integrate(theta0, params, cfg))
        if stochastic:
            n_blue, n_red = group_sizes(n, params.red_fraction)
            ecfg = EnsembleConfig(params, n_blue, n_red, theta0, st.get("horizon_t", 15.0),
                                  record_stride=st.get("record_stride"),
                                  topology=params.topology.value,
                                  graph_seed=derive_seed(seed, "scenario-graph", i))
            run.stochastic = simulate_once(ecfg, derive_seed(seed, "scenario", i))
        runs.append(run)
    return ScenarioBundle(name, spec, runs)
