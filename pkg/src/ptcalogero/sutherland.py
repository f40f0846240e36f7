"""The epsilon = 0 system: equilibrium, linear stability and first-order perturbation theory."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dynamics import IntegratorOptions, _rhs_z, integrate
from .model import DomainError, MisuseError, ModelParams, PhaseStateZ

STABILITY_TOL = 1e-10
DISCREPANCY_TOL = 1e-8

# quoted stability interval |gamma| < sqrt(5/4) omega; reported next to
# the eigenvalue-based classification, never used to decide it
CLAIMED_GAMMA_MAX_FACTOR = math.sqrt(5.0 / 4.0)

PERTURBATIVE_INITIAL = PhaseStateZ(z1=0.5, z2=1.0, v1=0.0, v2=0.0)


class Stability(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


def _require_sutherland(p: ModelParams, what: str) -> None:
    if not p.is_sutherland:
        raise MisuseError(f"{what} is only defined for epsilon = 0 (got {p.epsilon})")


@dataclass(frozen=True)
class Equilibrium:
    p: float
    q: float
    z1: float
    z2: float


def equilibrium(p: ModelParams) -> Equilibrium:
    """Stationary point (p, q, z1, z2) = (0, 0, 0, (-2g/omega^2)^(1/4))."""
    _require_sutherland(p, "equilibrium")
    if p.g >= 0:
        raise DomainError(f"no real equilibrium for g = {p.g} >= 0; the coupling must be negative")
    return Equilibrium(0.0, 0.0, 0.0, (-2.0 * p.g / p.omega ** 2) ** 0.25)


def jacobian(p: ModelParams) -> np.ndarray:
    """Linearisation in (dp, dq, dz1, dz2) about the equilibrium.

    The (2, 4) entry is -(omega^2 - 6g / z2_eq^4) = -4 omega^2 independently of g.
    """
    equilibrium(p)
    w2, gm = p.omega ** 2, p.gamma
    return np.array(
        [
            [0.0, -2.0 * gm, -w2, 0.0],
            [-2.0 * gm, 0.0, 0.0, -4.0 * w2],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ]
    )


def fd_jacobian(p: ModelParams, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the z-frame vector field at the equilibrium, in (p, q, z1, z2) order."""
    eq = equilibrium(p)
    # _rhs_z works on (z1, z2, v1, v2); reorder to (p, q, z1, z2) = (v1, v2, z1, z2)
    perm = [2, 3, 0, 1]
    u0 = np.array([eq.p, eq.q, eq.z1, eq.z2])

    def field(u):
        s = np.empty(4)
        s[perm] = u
        return _rhs_z(0.0, s, p)[perm]

    J = np.empty((4, 4))
    for j in range(4):
        du = np.zeros(4)
        du[j] = h
        J[:, j] = (field(u0 + du) - field(u0 - du)) / (2.0 * h)
    return J


def _p_coeff(p: ModelParams) -> float:
    return 5.0 * p.omega ** 2 - 4.0 * p.gamma ** 2


def eigenvalues_paper(p: ModelParams) -> np.ndarray:
    """lambda = +-[(P +- sqrt(P^2 - 16 omega^4)) / 2]^(1/2), P = 5 omega^2 - 4 gamma^2, as quoted.

    This expression drops a sign relative to the characteristic equation of
    :func:`jacobian`; see :func:`eigenvalues_characteristic`.
    """
    P = _p_coeff(p)
    root = cmath.sqrt(P * P - 16.0 * p.omega ** 4)
    out = []
    for s in ((P + root) / 2.0, (P - root) / 2.0):
        lam = cmath.sqrt(s)
        out += [lam, -lam]
    return np.array(out, dtype=complex)


def eigenvalues_characteristic(p: ModelParams) -> np.ndarray:
    """Roots of (lambda^2 + omega^2)(lambda^2 + 4 omega^2) = 4 gamma^2 lambda^2.

    With s = lambda^2 this is s^2 + P s + 4 omega^4 = 0.
    """
    P = _p_coeff(p)
    root = cmath.sqrt(P * P - 16.0 * p.omega ** 4)
    out = []
    for s in ((-P + root) / 2.0, (-P - root) / 2.0):
        lam = cmath.sqrt(s)
        out += [lam, -lam]
    return np.array(out, dtype=complex)


def multiset_distance(a, b) -> float:
    """Largest pairwise gap under the optimal one-to-one matching of two equal-size sets."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("multisets must have equal size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass(frozen=True)
class StabilityReport:
    params: ModelParams
    equilibrium: Equilibrium
    jacobian: np.ndarray
    eigs_paper: np.ndarray
    eigs_char: np.ndarray
    eigs_numeric: np.ndarray
    P: float
    classification: Stability
    marginal: bool
    discrepancy_flag: bool

    @property
    def claimed_gamma_range(self) -> tuple[float, float]:
        g = CLAIMED_GAMMA_MAX_FACTOR * self.params.omega
        return (-g, g)

    def as_dict(self) -> dict:
        def cl(z):
            return [[float(v.real), float(v.imag)] for v in z]

        return {
            "omega": self.params.omega,
            "gamma": self.params.gamma,
            "g": self.params.g,
            "z2_eq": self.equilibrium.z2,
            "P": self.P,
            "jacobian": self.jacobian.tolist(),
            "eigs_paper": cl(self.eigs_paper),
            "eigs_char": cl(self.eigs_char),
            "eigs_numeric": cl(self.eigs_numeric),
            "classification": self.classification.value,
            "marginal": self.marginal,
            "discrepancy_flag": self.discrepancy_flag,
            "claimed_gamma_range": list(self.claimed_gamma_range),
        }


def classify_stability(report: StabilityReport) -> tuple[Stability, bool, bool]:
    """Return (classification, marginal, discrepancy_flag) from the numerical eigenvalues.

    Stable iff max Re(lambda) < 1e-10.  A stable spectrum with every real part
    below the tolerance is marginal: the linearisation cannot decide nonlinear
    stability.  The flag records whether the quoted eigenvalue formula
    disagrees with the eigensolver by more than 1e-8.
    """
    eigs = report.eigs_numeric
    stable = bool(np.max(eigs.real) < STABILITY_TOL)
    marginal = stable and bool(np.all(np.abs(eigs.real) < STABILITY_TOL))
    flag = multiset_distance(report.eigs_paper, eigs) > DISCREPANCY_TOL
    return (Stability.STABLE if stable else Stability.UNSTABLE), marginal, flag


def stability_report(p: ModelParams) -> StabilityReport:
    eq = equilibrium(p)
    J = jacobian(p)
    draft = StabilityReport(
        params=p,
        equilibrium=eq,
        jacobian=J,
        eigs_paper=eigenvalues_paper(p),
        eigs_char=eigenvalues_characteristic(p),
        eigs_numeric=np.linalg.eigvals(J).astype(complex),
        P=_p_coeff(p),
        classification=Stability.STABLE,
        marginal=False,
        discrepancy_flag=False,
    )
    cls, marginal, flag = classify_stability(draft)
    return replace(draft, classification=cls, marginal=marginal, discrepancy_flag=flag)


def nonlinear_deviation(
    p: ModelParams,
    perturbation: float = 1e-3,
    t_max: float = 200.0,
    opts: IntegratorOptions = IntegratorOptions(max_samples=4001),
) -> float:
    """Largest distance from equilibrium in (p, q, z1, z2) over [0, t_max].

    Four runs start at distance ``perturbation`` along each coordinate axis;
    the maximum over all runs is returned.  A run that ends early by
    singularity or blow-up counts as infinitely far.
    """
    eq = equilibrium(p)
    worst = 0.0
    for axis in range(4):
        d = np.zeros(4)
        d[axis] = perturbation
        # d is ordered (p, q, z1, z2)
        start = PhaseStateZ(eq.z1 + d[2], eq.z2 + d[3], eq.p + d[0], eq.q + d[1])
        tr = integrate(start, p, (0.0, t_max), opts)
        if tr.termination != "completed":
            return math.inf
        dev = np.sqrt(tr.v1 ** 2 + tr.v2 ** 2 + tr.z1 ** 2 + (tr.z2 - eq.z2) ** 2)
        worst = max(worst, float(dev.max()))
    return worst


def nonlinear_classification(p: ModelParams, threshold: float = 0.1, **kwargs) -> Stability:
    """Stable iff a 1e-3 kick never carries the state 0.1 away from equilibrium by t = 200."""
    return Stability.STABLE if nonlinear_deviation(p, **kwargs) <= threshold else Stability.UNSTABLE


@dataclass(frozen=True)
class PerturbativeSolution:
    """First-order-in-gamma solution from z1(0)=0.5, z2(0)=1, z1'(0)=z2'(0)=0."""

    params: ModelParams
    z1: Callable
    z2: Callable


def perturbative_solution(p: ModelParams) -> PerturbativeSolution:
    """z1 = 0.5 cos(omega t); z2 = -2g/omega^2 + gamma * [bracket], term for term as quoted.

    The zeroth-order z2 term is -2g/omega^2, which equals the equilibrium
    (-2g/omega^2)^(1/4) and the initial z2(0) = 1 only when -2g/omega^2 = 1,
    as at g = -0.5, omega = 1.
    """
    _require_sutherland(p, "perturbative_solution")
    w, gm, g = p.omega, p.gamma, p.g
    amp = PERTURBATIVE_INITIAL.z1
    c = amp / (3.0 * w)

    def z1(t):
        return amp * np.cos(w * np.asarray(t, dtype=float))

    def z2(t):
        wt = w * np.asarray(t, dtype=float)
        s2 = np.sin(2.0 * wt)
        c2 = np.cos(2.0 * wt)
        bracket = -c * c2 + c * (2.0 * np.sin(wt) ** 3 * s2 + (1.0 + s2) * np.cos(wt) * c2)
        return -2.0 * g / w ** 2 + gm * bracket

    return PerturbativeSolution(p, z1, z2)


@dataclass(frozen=True)
class PerturbativeComparison:
    t: np.ndarray
    x_num: np.ndarray
    y_num: np.ndarray
    x_pert: np.ndarray
    y_pert: np.ndarray
    termination: str

    @property
    def dx(self) -> np.ndarray:
        return np.abs(self.x_num - self.x_pert)

    @property
    def dy(self) -> np.ndarray:
        return np.abs(self.y_num - self.y_pert)

    def max_deviation(self, t_upto: float = math.inf) -> float:
        mask = self.t <= t_upto
        return float(max(self.dx[mask].max(), self.dy[mask].max()))


def compare_perturbative_numeric(
    p: ModelParams,
    t_max: float,
    opts: IntegratorOptions = IntegratorOptions(),
) -> PerturbativeComparison:
    """Numerical vs first-order x(t), y(t) on a common grid, with x = (z1+z2)/2, y = (z1-z2)/2."""
    sol = perturbative_solution(p)
    tr = integrate(PERTURBATIVE_INITIAL, p, (0.0, t_max), opts)
    z1p, z2p = sol.z1(tr.t), sol.z2(tr.t)
    return PerturbativeComparison(
        t=tr.t,
        x_num=tr.x,
        y_num=tr.y,
        x_pert=0.5 * (z1p + z2p),
        y_pert=0.5 * (z1p - z2p),
        termination=tr.termination,
    )
