"""Parameters, coordinates, momenta, energies and the PT map of the two-body model.

The Lagrangian is

    L = x'y' + gamma (x y' - y x') - omega^2 x y - (epsilon/2)(x^2 + y^2) - g / (2 (x - y)^2)

with ``x`` the lossy and ``y`` the gaining oscillator.  ``epsilon = -omega^2`` is
the Calogero limit, ``epsilon = 0`` the Sutherland limit.

States carry velocities; canonical momenta are derived on demand.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """A formula was evaluated where it is singular or undefined."""


class MisuseError(ValueError):
    """An operation was called outside the parameter regime it is defined for."""


class PTPhase(enum.Enum):
    UNBROKEN = "unbroken"
    BOUNDARY = "boundary"
    BROKEN = "broken"


# relative tolerance used to decide epsilon == -omega^2 and Omega^2 == 0
LIMIT_RTOL = 1e-12


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class ModelParams:
    omega: float
    gamma: float
    g: float
    epsilon: float

    def __post_init__(self):
        if not _finite(self.omega, self.gamma, self.g, self.epsilon):
            raise ValueError(f"parameters must be finite: {self}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")

    @classmethod
    def calogero(cls, omega: float, gamma: float, g: float) -> ModelParams:
        return cls(omega, gamma, g, -omega * omega)

    @classmethod
    def sutherland(cls, omega: float, gamma: float, g: float) -> ModelParams:
        return cls(omega, gamma, g, 0.0)

    @property
    def is_calogero(self) -> bool:
        w2 = self.omega * self.omega
        return abs(self.epsilon + w2) <= LIMIT_RTOL * w2

    @property
    def is_sutherland(self) -> bool:
        return self.epsilon == 0.0

    @property
    def omega_sq_eff(self) -> float:
        """Omega^2 = 2(omega^2 - 2 gamma^2), meaningful in the Calogero limit."""
        return 2.0 * (self.omega ** 2 - 2.0 * self.gamma ** 2)

    def require_calogero(self, what: str) -> None:
        if not self.is_calogero:
            raise MisuseError(
                f"{what} is only defined for epsilon = -omega^2 "
                f"(got epsilon={self.epsilon}, omega={self.omega})"
            )


def pt_phase_of(omega: float, gamma: float) -> PTPhase:
    """Classify the PT phase from the sign of 2(omega^2 - 2 gamma^2)."""
    w2 = 2.0 * (omega ** 2 - 2.0 * gamma ** 2)
    if abs(w2) <= LIMIT_RTOL * 2.0 * omega ** 2:
        return PTPhase.BOUNDARY
    return PTPhase.UNBROKEN if w2 > 0 else PTPhase.BROKEN


@dataclass(frozen=True)
class PhaseStateXY:
    x: float
    y: float
    vx: float
    vy: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy])


@dataclass(frozen=True)
class PhaseStateZ:
    z1: float
    z2: float
    v1: float
    v2: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.v1, self.v2])


@dataclass(frozen=True)
class CanonicalMomenta:
    px: float
    py: float
    pz1: float
    pz2: float


def to_normal(state: PhaseStateXY) -> PhaseStateZ:
    """Map (x, y) to z1 = x + y, z2 = x - y.

    Raises DomainError at the coincidence point x = y, where the
    inverse-square potential is singular.
    """
    if not _finite(state.x, state.y, state.vx, state.vy, state.t):
        raise ValueError(f"state must be finite: {state}")
    z2 = state.x - state.y
    if z2 == 0.0:
        raise DomainError(f"coincidence point x = y = {state.x}: z2 = 0")
    return PhaseStateZ(state.x + state.y, z2, state.vx + state.vy, state.vx - state.vy, state.t)


def from_normal(state: PhaseStateZ) -> PhaseStateXY:
    if not _finite(state.z1, state.z2, state.v1, state.v2, state.t):
        raise ValueError(f"state must be finite: {state}")
    return PhaseStateXY(
        0.5 * (state.z1 + state.z2),
        0.5 * (state.z1 - state.z2),
        0.5 * (state.v1 + state.v2),
        0.5 * (state.v1 - state.v2),
        state.t,
    )


def canonical_momenta(state: PhaseStateXY, p: ModelParams) -> CanonicalMomenta:
    # Px = y' - gamma y, Py = x' + gamma x; the z-frame pair comes from the
    # z-frame Lagrangian, whose kinetic term is (z1'^2 - z2'^2)/4.
    x, y, vx, vy = state.x, state.y, state.vx, state.vy
    z1, z2, v1, v2 = x + y, x - y, vx + vy, vx - vy
    return CanonicalMomenta(
        px=vy - p.gamma * y,
        py=vx + p.gamma * x,
        pz1=0.5 * (v1 + p.gamma * z2),
        pz2=-0.5 * (v2 + p.gamma * z1),
    )


def energy_xy_arrays(x, y, vx, vy, p: ModelParams):
    """Vectorised Hamiltonian in the (x, y) frame, written through the momenta."""
    d = x - y
    if np.any(d == 0):
        raise DomainError("energy is singular at x = y")
    px = vy - p.gamma * y
    py = vx + p.gamma * x
    return (
        px * py
        + p.gamma * (y * py - x * px)
        + (p.omega ** 2 - p.gamma ** 2) * x * y
        + p.g / (2.0 * d * d)
        + 0.5 * p.epsilon * (x * x + y * y)
    )


def energy_xy(state: PhaseStateXY, p: ModelParams) -> float:
    return float(energy_xy_arrays(state.x, state.y, state.vx, state.vy, p))


def energy_lagrangian_form(state: PhaseStateXY, p: ModelParams) -> float:
    """x'y' + omega^2 x y + g/(2(x-y)^2) + (epsilon/2)(x^2+y^2)."""
    x, y = state.x, state.y
    if x == y:
        raise DomainError("energy is singular at x = y")
    return (
        state.vx * state.vy
        + p.omega ** 2 * x * y
        + p.g / (2.0 * (x - y) ** 2)
        + 0.5 * p.epsilon * (x * x + y * y)
    )


def energy_z_arrays(z1, z2, v1, v2, p: ModelParams):
    if np.any(z2 == 0):
        raise DomainError("energy is singular at z2 = 0")
    pz1 = 0.5 * (v1 + p.gamma * z2)
    pz2 = -0.5 * (v2 + p.gamma * z1)
    return (
        (pz1 * pz1 - pz2 * pz2)
        - p.gamma * (z1 * pz2 + z2 * pz1)
        - 0.5 * p.omega ** 2 * z2 * z2
        - 0.25 * p.gamma ** 2 * (z1 * z1 - z2 * z2)
        + p.g / (2.0 * z2 * z2)
    )


def energy_z(state: PhaseStateZ, p: ModelParams) -> float:
    """Calogero-limit Hamiltonian in normal coordinates.

    With P_z1 = (z1' + gamma z2)/2 and P_z2 = -(z2' + gamma z1)/2 this is
    identically equal to :func:`energy_xy` of the same state; no rescaling
    between the two frames is needed.
    """
    p.require_calogero("energy_z")
    return float(energy_z_arrays(state.z1, state.z2, state.v1, state.v2, p))


def pi_invariant_arrays(z2, v1, p: ModelParams):
    return v1 + 2.0 * p.gamma * z2


def pi_invariant(state: PhaseStateZ, p: ModelParams) -> float:
    """Pi = z1' + 2 gamma z2, conserved only when epsilon = -omega^2."""
    p.require_calogero("pi_invariant")
    return float(pi_invariant_arrays(state.z2, state.v1, p))


def pt_transform(state: PhaseStateXY) -> PhaseStateXY:
    """Combined parity and time reversal.

    P swaps and negates the oscillators, T flips t and the momenta.  At the
    velocity level a solution (x(t), y(t)) is sent to (-y(-t), -x(-t)).
    """
    return PhaseStateXY(-state.y, -state.x, state.vy, state.vx, -state.t)
