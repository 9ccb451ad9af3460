"""Four-class channel reservation simulator for multi-cell cellular networks."""

from .core import CallClass, CostWeights, NetworkConfig, ReservationVector, load_config, validate_config, validate_reservation
from .network import NetworkSimulator, SimResult, simulate

__all__ = [
    "CallClass",
    "CostWeights",
    "NetworkConfig",
    "ReservationVector",
    "load_config",
    "validate_config",
    "validate_reservation",
    "NetworkSimulator",
    "SimResult",
    "simulate",
]
__version__ = "0.1.0"
