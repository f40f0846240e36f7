"""Classical and quantum dynamics of a PT-symmetric pair with gain, loss and an inverse-square coupling."""

from .model import (
    DomainError,
    MisuseError,
    ModelParams,
    PhaseStateXY,
    PhaseStateZ,
    PTPhase,
    energy_xy,
    energy_z,
    from_normal,
    pi_invariant,
    pt_phase_of,
    pt_transform,
    to_normal,
)
from .dynamics import IntegrationError, IntegratorOptions, Trajectory, conservation_report, integrate

__all__ = [
    "DomainError",
    "IntegrationError",
    "IntegratorOptions",
    "MisuseError",
    "ModelParams",
    "PTPhase",
    "PhaseStateXY",
    "PhaseStateZ",
    "Trajectory",
    "conservation_report",
    "energy_xy",
    "energy_z",
    "from_normal",
    "integrate",
    "pi_invariant",
    "pt_phase_of",
    "pt_transform",
    "to_normal",
]
