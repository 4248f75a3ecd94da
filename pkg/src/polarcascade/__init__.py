"""Cascades of binary choices in an affectively polarized two-party population."""

from .model import (
    AffineLocus,
    EffectiveCouplings,
    ModelParams,
    ParamError,
    PopulationState,
    Regime,
    TippingLines,
    Topology,
    classify_regime,
    consensus_reachable,
    drift,
    drift_arguments,
    effective_couplings,
    predict_limit_symmetric,
    tipping_boundaries,
)
from .trajectory import Trajectory

__version__ = "0.1.0"
