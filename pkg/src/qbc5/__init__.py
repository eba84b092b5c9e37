"""Simulation and security analysis of a teleportation-based quantum bit commitment."""

from .protocol import (
    DEFAULT_FAMILY,
    IDENTITY_FAMILY,
    ProtocolParams,
    UnitaryFamily,
    run_honest,
    run_protocol,
)
from .teleport import OUTCOMES, sigma_of, teleport, teleport_formula

__all__ = [
    "DEFAULT_FAMILY",
    "IDENTITY_FAMILY",
    "OUTCOMES",
    "ProtocolParams",
    "UnitaryFamily",
    "run_honest",
    "run_protocol",
    "sigma_of",
    "teleport",
    "teleport_formula",
]
__version__ = "0.1.0"
