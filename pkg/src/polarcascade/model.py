"""Deterministic core of the cascade model.

Parameters, effective couplings, the discontinuous drift field of the
two-group population state, regime classification for party-independent
starts, endpoint prediction, consensus reachability, and the switching
lines along which a group reverses its trend.

All ratio comparisons are written as cross-multiplications so that a zero
coupling never causes a division by zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

DEFAULT_TOL = 1e-12


class ParamError(ValueError):
    """Invalid model parameter; ``field`` names the offending parameter."""

    def __init__(self, field: str, value, legal: str):
        self.field = field
        self.value = value
        self.legal = legal
        super().__init__(f"{field}={value!r} outside legal range {legal}")


class Topology(str, enum.Enum):
    FULLY_CONNECTED = "complete"
    STOCHASTIC_BLOCK = "sbm"


class Regime(str, enum.Enum):
    CASE1_CONSENSUS = "Case1"
    CASE2_RED_MAJORITY = "Case2"
    CASE3_BLUE_MAJORITY = "Case3"
    CASE4_NON_PARTISAN = "Case4"
    BOUNDARY = "Boundary"


def _check_closed(name, x):
    if not (isinstance(x, (int, float)) and 0.0 <= x <= 1.0):
        raise ParamError(name, x, "[0, 1]")


def _check_open(name, x):
    if not (isinstance(x, (int, float)) and 0.0 < x < 1.0):
        raise ParamError(name, x, "(0, 1)")


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    beta: float
    delta: float = 0.0
    red_fraction: float = 0.5
    homophily: float = 0.5
    topology: Topology = Topology.FULLY_CONNECTED

    def __post_init__(self):
        _check_closed("alpha", self.alpha)
        _check_closed("beta", self.beta)
        _check_closed("delta", self.delta)
        _check_open("red_fraction", self.red_fraction)
        _check_open("homophily", self.homophily)
        object.__setattr__(self, "topology", Topology(self.topology))

    def replace(self, **changes) -> "ModelParams":
        d = self.to_dict()
        d.update(changes)
        return ModelParams.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["topology"] = self.topology.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(**d)


@dataclass(frozen=True)
class EffectiveCouplings:
    alpha_eff: float
    beta_eff: float


@dataclass(frozen=True)
class PopulationState:
    """Fraction of each group holding choice 1."""

    theta_b: float
    theta_r: float

    def __post_init__(self):
        for name in ("theta_b", "theta_r"):
            x = getattr(self, name)
            if not (0.0 <= x <= 1.0):
                raise ParamError(name, x, "[0, 1]")
        object.__setattr__(self, "theta_b", float(self.theta_b))
        object.__setattr__(self, "theta_r", float(self.theta_r))

    @classmethod
    def clamped(cls, theta_b: float, theta_r: float) -> "PopulationState":
        return cls(min(1.0, max(0.0, theta_b)), min(1.0, max(0.0, theta_r)))

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_b, self.theta_r])

    def __iter__(self):
        yield self.theta_b
        yield self.theta_r


def effective_couplings(params: ModelParams) -> EffectiveCouplings:
    if params.topology is Topology.STOCHASTIC_BLOCK:
        rho = params.homophily
        return EffectiveCouplings(params.alpha * rho, params.beta * (1.0 - rho))
    return EffectiveCouplings(params.alpha, params.beta)


def drift_arguments(theta_b: float, theta_r: float, params: ModelParams) -> tuple[float, float]:
    """Net social signal seen by each group (the indicator arguments)."""
    c = effective_couplings(params)
    r = params.red_fraction
    u = 2.0 * theta_b - 1.0
    v = 2.0 * theta_r - 1.0
    arg_b = c.alpha_eff * (1.0 - r) * u - c.beta_eff * r * v
    arg_r = c.alpha_eff * r * v - c.beta_eff * (1.0 - r) * u
    return arg_b, arg_r


def _group_drift(theta: float, arg: float, delta: float) -> float:
    # closed band [-delta, delta]: neither indicator fires
    if arg > delta:
        return 1.0 - theta
    if arg < -delta:
        return -theta
    return 0.0


def drift(state: PopulationState, params: ModelParams) -> np.ndarray:
    """Right-hand side of the limit mean ODE at ``state``."""
    tb, tr = state.theta_b, state.theta_r
    arg_b, arg_r = drift_arguments(tb, tr, params)
    return np.array([
        _group_drift(tb, arg_b, params.delta),
        _group_drift(tr, arg_r, params.delta),
    ])


def _regime_margins(params: ModelParams) -> tuple[float, float] | None:
    """Scale-free margins (m_low, m_high) of the Case 1 inequalities.

    ``m_low > 0``  iff  r/(1-r) > beta/alpha
    ``m_high > 0`` iff  r/(1-r) < alpha/beta
    Returns None when both couplings vanish.
    """
    c = effective_couplings(params)
    a, b = c.alpha_eff, c.beta_eff
    r = params.red_fraction
    scale = a + b
    if scale == 0.0:
        return None
    m_low = (a * r - b * (1.0 - r)) / scale
    m_high = (a * (1.0 - r) - b * r) / scale
    return m_low, m_high


def classify_regime(params: ModelParams, tol: float = DEFAULT_TOL) -> Regime:
    if params.delta != 0.0:
        raise ValueError("classifier requires zero inertia (delta=0)")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    margins = _regime_margins(params)
    if margins is None:
        return Regime.BOUNDARY
    m_low, m_high = margins
    if abs(m_low) <= tol or abs(m_high) <= tol:
        return Regime.BOUNDARY
    if m_low > 0 and m_high > 0:
        return Regime.CASE1_CONSENSUS
    if m_low > 0:
        return Regime.CASE2_RED_MAJORITY
    if m_high > 0:
        return Regime.CASE3_BLUE_MAJORITY
    return Regime.CASE4_NON_PARTISAN


def regime_margin(params: ModelParams) -> float:
    """Distance (in normalised margin units) to the nearest regime boundary."""
    margins = _regime_margins(params)
    if margins is None:
        return 0.0
    return min(abs(margins[0]), abs(margins[1]))


def predict_limit_symmetric(theta0: float, params: ModelParams,
                            tol: float = DEFAULT_TOL) -> PopulationState:
    """Limit state reached from the party-independent start (theta0, theta0)."""
    if theta0 == 0.5:
        raise ValueError("prediction is ambiguous at theta0=0.5")
    regime = classify_regime(params, tol)
    up = theta0 > 0.5
    popular, other = (1.0, 0.0) if up else (0.0, 1.0)
    if regime is Regime.BOUNDARY:
        raise ValueError("boundary regime: no limit prediction")
    if regime is Regime.CASE1_CONSENSUS:
        return PopulationState(popular, popular)
    if regime is Regime.CASE2_RED_MAJORITY:
        # red majority keeps the initially popular choice, blue takes the other
        return PopulationState(other, popular)
    if regime is Regime.CASE3_BLUE_MAJORITY:
        return PopulationState(popular, other)
    return PopulationState(0.5, 0.5)


def consensus_reachable(theta0: PopulationState, params: ModelParams,
                        tol: float = DEFAULT_TOL) -> bool:
    """Whether the mean-field flow from ``theta0`` ends at a consensus corner.

    Requires Case 1 parameters and an initial ratio
    (2 theta_b - 1) / (2 theta_r - 1) strictly between
    beta r / (alpha (1-r)) and alpha r / (beta (1-r)).
    """
    if params.delta != 0.0:
        raise ValueError("classifier requires zero inertia (delta=0)")
    if theta0.theta_b == 0.5 or theta0.theta_r == 0.5:
        raise ValueError("degenerate initial state: a component equals 0.5")
    regime = classify_regime(params, tol)
    if regime is Regime.BOUNDARY:
        raise ValueError("boundary regime: no consensus verdict")
    if regime is not Regime.CASE1_CONSENSUS:
        return False
    c = effective_couplings(params)
    a, b, r = c.alpha_eff, c.beta_eff, params.red_fraction
    u = 2.0 * theta0.theta_b - 1.0
    v = 2.0 * theta0.theta_r - 1.0
    # multiply both bounds through by v; a negative v flips each inequality
    s = 1.0 if v > 0 else -1.0
    lower_ok = s * (b * r * v) < s * (a * (1.0 - r) * u)
    upper_ok = s * (b * (1.0 - r) * u) < s * (a * r * v)
    return lower_ok and upper_ok


@dataclass(frozen=True)
class AffineLocus:
    """The line ``coef_b * theta_b + coef_r * theta_r + const = 0``."""

    coef_b: float
    coef_r: float
    const: float

    def value(self, theta_b: float, theta_r: float) -> float:
        return self.coef_b * theta_b + self.coef_r * theta_r + self.const

    def contains(self, theta_b: float, theta_r: float, tol: float = 1e-12) -> bool:
        return abs(self.value(theta_b, theta_r)) <= tol

    @property
    def slope(self) -> float:
        """d theta_r / d theta_b along the line (inf for a vertical line)."""
        if self.coef_r == 0.0:
            return math.inf
        return -self.coef_b / self.coef_r

    def theta_r_at(self, theta_b: float) -> float:
        if self.coef_r == 0.0:
            raise ValueError("vertical locus")
        return -(self.coef_b * theta_b + self.const) / self.coef_r


@dataclass(frozen=True)
class TippingLines:
    blue_flip: tuple[AffineLocus, AffineLocus]
    red_flip: tuple[AffineLocus, AffineLocus]


def tipping_boundaries(params: ModelParams) -> TippingLines:
    """Lines where each group's signal equals +delta and -delta (in that order)."""
    c = effective_couplings(params)
    a, b, r, d = c.alpha_eff, c.beta_eff, params.red_fraction, params.delta
    # arg_b = 2a(1-r) tb - 2br tr - a(1-r) + br
    kb, kr, k0 = 2 * a * (1 - r), -2 * b * r, -a * (1 - r) + b * r
    blue = (AffineLocus(kb, kr, k0 - d), AffineLocus(kb, kr, k0 + d))
    # arg_r = 2ar tr - 2b(1-r) tb - ar + b(1-r)
    jb, jr, j0 = -2 * b * (1 - r), 2 * a * r, -a * r + b * (1 - r)
    red = (AffineLocus(jb, jr, j0 - d), AffineLocus(jb, jr, j0 + d))
    return TippingLines(blue, red)
