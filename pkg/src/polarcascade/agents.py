"""Discrete-time stochastic agent engine.

At each step one node, drawn uniformly with replacement, looks at its
neighbors' choices and adopts choice 1, choice 0, or keeps its current
choice depending on whether the net in-group / out-group signal is above
``+delta``, below ``-delta`` or inside the band. Discrete step ``k`` maps
to time ``t = k / N``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .graphs import Network, build_network
from .model import ModelParams, PopulationState
from .seeds import derive_seed
from .trajectory import STOCHASTIC, Trajectory

# node draws are made in fixed-size blocks so the node sequence depends only
# on the seed, never on how the caller interleaves step() and run()
_NODE_BLOCK = 1 << 16


class InitMode(str, enum.Enum):
    QUOTA = "quota"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class NeighborStats:
    """Degree-normalised counts of in/out-group neighbors by choice."""

    d_in0: float
    d_in1: float
    d_out0: float
    d_out1: float


def apply_update_rule(stats: NeighborStats, params: ModelParams, current: int) -> int:
    # raw alpha and beta: the topology acts through which neighbors exist
    arg = (params.alpha * (stats.d_in1 - stats.d_in0)
           - params.beta * (stats.d_out1 - stats.d_out0))
    if arg < -params.delta:
        return 0
    if arg > params.delta:
        return 1
    return current


class SimulationState:
    """Mutable state of one agent-based run.

    ``ones`` caches the number of choice-1 nodes per party (blue, red).
    Explicit graphs additionally cache, per node, how many same-party and
    other-party neighbors hold choice 1, so a step costs O(1) unless the
    node flips (then O(degree)).
    """

    def __init__(self, net: Network, choices, params: ModelParams, seed: int,
                 step_rng: np.random.Generator | None = None, debug: bool = False):
        self.net = net
        self.params = params
        self.seed = seed
        self.choices = np.ascontiguousarray(choices, dtype=np.int8).copy()
        if self.choices.shape != (net.n,):
            raise ValueError("choices must have one entry per node")
        self.clock = 0
        self.debug = debug
        self.rng = step_rng if step_rng is not None else _step_rng(seed)
        self._block = np.empty(0, dtype=np.int64)
        self._pos = 0
        party = net.party
        self._n_grp = np.array([net.n_blue, net.n_red], dtype=np.int64)
        self.ones = np.array([
            int(self.choices[party == 0].sum()), int(self.choices[party == 1].sum())
        ], dtype=np.int64)
        if not net.complete:
            self._same1, self._other1, self._same_deg = _kernels.graph_counts(
                self.choices, party, net.indptr, net.indices)

    # -- views ----------------------------------------------------------

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def t(self) -> float:
        return self.clock / self.net.n

    @property
    def state(self) -> PopulationState:
        return PopulationState(self.ones[0] / self._n_grp[0] if self._n_grp[0] else 0.0,
                               self.ones[1] / self._n_grp[1] if self._n_grp[1] else 0.0)

    def copy(self) -> "SimulationState":
        other = SimulationState.__new__(SimulationState)
        other.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v)
                               for k, v in self.__dict__.items()})
        other.rng = np.random.Generator(type(self.rng.bit_generator)())
        other.rng.bit_generator.state = self.rng.bit_generator.state
        return other

    def with_choices(self, choices) -> "SimulationState":
        """Same graph, parameters, clock and node stream; new choices."""
        other = SimulationState(self.net, choices, self.params, self.seed, debug=self.debug)
        other.rng.bit_generator.state = self.rng.bit_generator.state
        other._block, other._pos, other.clock = self._block.copy(), self._pos, self.clock
        return other

    def check_consistency(self) -> None:
        party = self.net.party
        recount = [int(self.choices[party == g].sum()) for g in (0, 1)]
        assert list(self.ones) == recount, f"tallies {list(self.ones)} != recount {recount}"
        if not self.net.complete:
            s1, o1, _ = _kernels.graph_counts(self.choices, party, self.net.indptr,
                                              self.net.indices)
            assert np.array_equal(s1, self._same1) and np.array_equal(o1, self._other1)

    # -- node stream ----------------------------------------------------

    def draw_nodes(self, k: int) -> np.ndarray:
        out = []
        while k > 0:
            if self._pos >= len(self._block):
                self._block = self.rng.integers(0, self.net.n, size=_NODE_BLOCK)
                self._pos = 0
            take = min(k, len(self._block) - self._pos)
            out.append(self._block[self._pos:self._pos + take])
            self._pos += take
            k -= take
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)

    # -- dynamics -------------------------------------------------------

    def _advance(self, nodes: np.ndarray):
        k = len(nodes)
        trace_b = np.empty(k, dtype=np.int64)
        trace_r = np.empty(k, dtype=np.int64)
        p = self.params
        if self.net.complete:
            _kernels.complete_advance(nodes, self.choices, self.net.party, self.ones,
                                      self._n_grp, p.alpha, p.beta, p.delta,
                                      trace_b, trace_r)
        else:
            _kernels.graph_advance(nodes, self.choices, self.net.party, self.ones,
                                   self.net.indptr, self.net.indices, self.net.degree,
                                   self._same_deg, self._same1, self._other1,
                                   p.alpha, p.beta, p.delta, trace_b, trace_r)
        self.clock += k
        if self.debug:
            self.check_consistency()
        return trace_b, trace_r

    def neighbor_counts(self, v: int) -> tuple[int, int, int, int, int]:
        """(in1, in0, out1, out0, degree) for node ``v``."""
        g = int(self.net.party[v])
        if self.net.complete:
            own = int(self.choices[v])
            in1 = int(self.ones[g]) - own
            in0 = int(self._n_grp[g]) - 1 - in1
            out1 = int(self.ones[1 - g])
            out0 = int(self._n_grp[1 - g]) - out1
            return in1, in0, out1, out0, self.net.n - 1
        d = int(self.net.degree[v])
        in1 = int(self._same1[v])
        in0 = int(self._same_deg[v]) - in1
        out1 = int(self._other1[v])
        return in1, in0, out1, d - int(self._same_deg[v]) - out1, d


def _step_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, "node-sampling"))


def init_choices(net: Network, theta0: PopulationState, params: ModelParams,
                 mode: InitMode | str = InitMode.QUOTA, seed: int = 0,
                 debug: bool = False) -> SimulationState:
    """Assign initial choices so that each group matches ``theta0``.

    Quota mode sets exactly round-half-up(theta * group size) choice-1
    nodes per group; Bernoulli mode draws each node independently.
    """
    mode = InitMode(mode)
    rng = np.random.default_rng(derive_seed(seed, "init"))
    choices = np.zeros(net.n, dtype=np.int8)
    for g, theta in ((0, theta0.theta_b), (1, theta0.theta_r)):
        members = np.flatnonzero(net.party == g)
        if mode is InitMode.QUOTA:
            k = int(math.floor(theta * len(members) + 0.5))
            chosen = rng.permutation(members)[:k]
            choices[chosen] = 1
        else:
            choices[members] = rng.random(len(members)) < theta
    return SimulationState(net, choices, params, seed, debug=debug)


def neighbor_stats(sim: SimulationState, node: int) -> NeighborStats:
    in1, in0, out1, out0, d = sim.neighbor_counts(node)
    if d == 0:
        return NeighborStats(0.0, 0.0, 0.0, 0.0)
    return NeighborStats(in0 / d, in1 / d, out0 / d, out1 / d)


def step(sim: SimulationState) -> bool:
    """Update one uniformly drawn node; True if its choice changed."""
    before = int(sim.ones.sum())
    sim._advance(sim.draw_nodes(1))
    return int(sim.ones.sum()) != before


def run(sim: SimulationState, horizon_t: float, record_stride: int | None = None) -> Trajectory:
    """Advance ``ceil(horizon_t * N)`` steps, sampling every ``record_stride`` steps."""
    if horizon_t <= 0:
        raise ValueError("horizon_t must be positive")
    n = sim.net.n
    stride = record_stride or max(1, n // 100)
    if stride < 1:
        raise ValueError("record_stride must be >= 1")
    total = math.ceil(horizon_t * n - 1e-9)
    nb, nr = sim._n_grp
    k0 = sim.clock
    ks = [k0]
    tallies = [tuple(sim.ones)]
    done = 0
    while done < total:
        chunk = min(_NODE_BLOCK, total - done)
        trace_b, trace_r = sim._advance(sim.draw_nodes(chunk))
        ks_chunk = np.arange(k0 + done + 1, k0 + done + chunk + 1)
        keep = ks_chunk % stride == 0
        if done + chunk == total:
            keep[-1] = True
        ks.extend(ks_chunk[keep].tolist())
        tallies.extend(zip(trace_b[keep].tolist(), trace_r[keep].tolist()))
        done += chunk
    ks = np.array(ks)
    first = np.concatenate([[True], np.diff(ks) > 0])
    tallies = np.array(tallies, dtype=float)[first]
    theta = np.column_stack([tallies[:, 0] / max(nb, 1), tallies[:, 1] / max(nr, 1)])
    meta = {
        "kind": STOCHASTIC,
        "params": sim.params.to_dict(),
        "seed": sim.seed,
        "n": n,
        "n_blue": int(nb),
        "n_red": int(nr),
        "topology": "complete" if sim.net.complete else "graph",
        "record_stride": stride,
    }
    return Trajectory(ks[first] / n, theta, meta)


@dataclass(frozen=True)
class ExpectedStep:
    mean: np.ndarray
    stderr: np.ndarray
    reps: int


def expected_step(sim: SimulationState, reps: int = 100_000, seed: int = 0) -> ExpectedStep:
    """Monte Carlo mean of theta_{k+1} - theta_k over independent single steps.

    The simulation is not advanced; every rep starts from the same frozen
    state and differs only in which node is drawn.
    """
    rng = np.random.default_rng(derive_seed(seed, "expected-step"))
    nodes = rng.integers(0, sim.net.n, size=reps)
    party = sim.net.party[nodes].astype(np.int64)
    own = sim.choices[nodes].astype(np.int64)
    p = sim.params
    if sim.net.complete:
        in1 = sim.ones[party] - own
        in0 = sim._n_grp[party] - 1 - in1
        out1 = sim.ones[1 - party]
        out0 = sim._n_grp[1 - party] - out1
        deg = np.full(reps, sim.net.n - 1)
    else:
        deg = sim.net.degree[nodes]
        in1 = sim._same1[nodes]
        in0 = sim._same_deg[nodes] - in1
        out1 = sim._other1[nodes]
        out0 = deg - sim._same_deg[nodes] - out1
    with np.errstate(invalid="ignore", divide="ignore"):
        safe = np.where(deg > 0, deg, 1)
        arg = p.alpha * (in1 / safe - in0 / safe) - p.beta * (out1 / safe - out0 / safe)
    new = np.where(arg < -p.delta, 0, np.where(arg > p.delta, 1, own))
    change = (new - own).astype(float)
    deltas = np.zeros((reps, 2))
    blue = party == 0
    deltas[blue, 0] = change[blue] / sim._n_grp[0]
    deltas[~blue, 1] = change[~blue] / sim._n_grp[1]
    mean = deltas.mean(axis=0)
    stderr = deltas.std(axis=0, ddof=1) / math.sqrt(reps)
    return ExpectedStep(mean, stderr, reps)


def exact_expected_step(sim: SimulationState) -> np.ndarray:
    """E[theta_{k+1} - theta_k] by enumerating every node once.

    Per-group changes are summed as integers before dividing, so a state
    whose flips cancel gives exactly zero.
    """
    p = sim.params
    change = np.zeros(2, dtype=np.int64)
    for v in range(sim.net.n):
        s = neighbor_stats(sim, v)
        own = int(sim.choices[v])
        change[int(sim.net.party[v])] += apply_update_rule(s, p, own) - own
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(sim._n_grp > 0, change / np.maximum(sim._n_grp, 1), 0.0)
    return out / sim.net.n


# -- ensembles ------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleConfig:
    params: ModelParams
    n_blue: int
    n_red: int
    theta0: PopulationState
    horizon_t: float
    record_stride: int | None = None
    init_mode: str = "quota"
    topology: str = "complete"
    graph_seed: int = 0


@dataclass
class Envelope:
    t: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    seeds: list
    endpoints: np.ndarray
    trajectories: list = field(default_factory=list, repr=False)


@lru_cache(maxsize=2)
def _cached_network(topology, n_blue, n_red, rho, seed):
    return build_network(topology, n_blue, n_red, rho, seed)


def config_network(cfg: EnsembleConfig) -> Network:
    return _cached_network(cfg.topology, cfg.n_blue, cfg.n_red,
                           cfg.params.homophily, cfg.graph_seed)


def simulate_once(cfg: EnsembleConfig, seed: int) -> Trajectory:
    net = config_network(cfg)
    sim = init_choices(net, cfg.theta0, cfg.params, cfg.init_mode, seed)
    traj = run(sim, cfg.horizon_t, cfg.record_stride)
    traj.meta.update({"topology": cfg.topology, "graph_seed": cfg.graph_seed,
                      "init_mode": str(InitMode(cfg.init_mode).value),
                      "theta0": [cfg.theta0.theta_b, cfg.theta0.theta_r]})
    return traj


def ensemble_seeds(seed_base: int, n_reps: int) -> list[int]:
    return [derive_seed(seed_base, "ensemble", i) for i in range(n_reps)]


def run_ensemble(config: EnsembleConfig, n_reps: int, seed_base: int = 0,
                 seeds: list[int] | None = None, jobs: int = 1,
                 keep_trajectories: bool = False) -> Envelope:
    """Pointwise mean/std of theta over independent seeded runs.

    All runs share N, horizon and stride, hence one time grid. Results are
    reduced in seed order whatever the number of workers.
    """
    if seeds is None:
        if n_reps < 2:
            raise ValueError("an ensemble needs n_reps >= 2")
        seeds = ensemble_seeds(seed_base, n_reps)
    seeds = list(seeds)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trajs = list(pool.map(simulate_once, [config] * len(seeds), seeds))
    else:
        trajs = [simulate_once(config, s) for s in seeds]
    stack = np.stack([tr.theta for tr in trajs])
    return Envelope(
        t=trajs[0].t,
        mean=stack.mean(axis=0),
        std=stack.std(axis=0, ddof=1),
        seeds=seeds,
        endpoints=stack[:, -1, :],
        trajectories=trajs if keep_trajectories else [],
    )
