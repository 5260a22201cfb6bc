"""Meta distribution, local delay, and power-allocation analysis for
uplink/downlink NOMA in Poisson cellular networks, with a Monte Carlo
stochastic-geometry simulator for validation."""

from .geometry import DOWNLINK, UPLINK, InterfererModel, NetworkParams
from .downlink import Classification, MomentValue, PowerAllocation

__version__ = "0.1.0"

__all__ = [
    "UPLINK",
    "DOWNLINK",
    "NetworkParams",
    "InterfererModel",
    "PowerAllocation",
    "MomentValue",
    "Classification",
    "__version__",
]
