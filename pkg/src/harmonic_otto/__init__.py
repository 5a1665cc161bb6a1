"""Quantum harmonic Otto engine: observable propagation, limit cycles and a Fock-space oracle."""
from .cycle import EngineSpec, TimeAllocation, cycle_metrics, limit_cycle
from .propagators import AdiabatSchedule, AffineBranchMap
from .state import BathSpec, GaussianParams, StateVector

__all__ = [
    "AdiabatSchedule",
    "AffineBranchMap",
    "BathSpec",
    "EngineSpec",
    "GaussianParams",
    "StateVector",
    "TimeAllocation",
    "cycle_metrics",
    "limit_cycle",
]
