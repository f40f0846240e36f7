"""Quantum spectrum of the Calogero limit in the Pi = 0 (k = 0) sector.

The relative-coordinate equation is

    phi'' - (Omega^2 / 4) z^2 phi + g / (2 z^2) phi = E phi

on the half line z > 0.  Writing phi = z^lam exp(-C z^2) P(z) with
lam (lam - 1) = -g/2 and C = +-Omega/4 gives the recursion

    a_{n+2} = [(E + 2C + 4 lam C) + 4 C n] / [(n + 2)(n + 1 + 2 lam)] a_n,

which terminates at even n exactly on the ladder E = -2C(2n + 1 + 2 lam).
C = +Omega/4 is normalisable on the real line but unbounded below;
C = -Omega/4 is bounded below and normalisable only inside a Stokes wedge.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from numbers import Number
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.polynomial import polyval
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .calogero_exact import effective_frequency
from .model import DomainError, ModelParams, PTPhase, pt_phase_of


@dataclass(frozen=True)
class LambdaRoots:
    plus: float
    minus: float

    @property
    def selected(self) -> float:
        return self.plus


def lambda_from_g(g: float) -> LambdaRoots:
    """Roots (1 +- sqrt(1 - 2g)) / 2 of lam (lam - 1) = -g/2.

    The larger root is selected so z^lam vanishes at the origin.
    """
    disc = 1.0 - 2.0 * g
    if disc < 0:
        raise DomainError(f"g = {g} > 1/2 gives complex exponents, which are out of scope")
    r = math.sqrt(disc)
    return LambdaRoots(0.5 * (1.0 + r), 0.5 * (1.0 - r))


def quantum_phase(p: ModelParams) -> PTPhase:
    """Unbroken iff C = +-Omega/4 is real; identical boundary to the classical one."""
    return pt_phase_of(p.omega, p.gamma)


@dataclass(frozen=True)
class QuantumParams:
    g: float
    lambda_plus: float
    lambda_minus: float
    lam: float
    omega_eff: complex
    gauss_scale: complex
    branch: str
    phase: PTPhase
    k: float = 0.0

    @property
    def C(self) -> complex:
        return self.gauss_scale


def quantum_params(p: ModelParams, branch: str = "minus") -> QuantumParams:
    """Exponent and Gaussian scale for the Calogero-limit model.

    ``branch="minus"`` takes C = -Omega/4 (bounded below); ``"plus"`` takes
    C = +Omega/4.  In the broken phase Omega, and hence C, is imaginary.
    """
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    freq = effective_frequency(p)
    roots = lambda_from_g(p.g)
    if freq.phase is PTPhase.BOUNDARY:
        W: complex = 0.0
    else:
        W = cmath.sqrt(freq.omega_sq_eff)
        if freq.phase is PTPhase.UNBROKEN:
            W = W.real
    sign = 1.0 if branch == "plus" else -1.0
    return QuantumParams(
        g=p.g,
        lambda_plus=roots.plus,
        lambda_minus=roots.minus,
        lam=roots.selected,
        omega_eff=W,
        gauss_scale=sign * W / 4.0,
        branch=branch,
        phase=freq.phase,
    )


def ladder_energy(m: int, C, lam):
    """E for the degree-2m polynomial, -2C(4m + 1 + 2 lam)."""
    return -2 * C * (4 * m + 1 + 2 * lam)


@dataclass(frozen=True)
class QuantumSpectrum:
    energies: list
    phase: PTPhase
    branch: str
    gauss_scale: complex

    @property
    def spacing(self):
        return -8 * self.gauss_scale


def energy_ladder(qp: QuantumParams, M: int) -> QuantumSpectrum:
    """Energies E_m = -2C(4m + 1 + 2 lam) for m = 0 .. M-1 (complex in the broken phase)."""
    if M < 0:
        raise ValueError("M must be non-negative")
    return QuantumSpectrum(
        energies=[ladder_energy(m, qp.C, qp.lam) for m in range(M)],
        phase=qp.phase,
        branch=qp.branch,
        gauss_scale=qp.C,
    )


@dataclass(frozen=True)
class SeriesSolution:
    coefficients: list
    terminated: bool
    degree: Optional[int] = None

    def __call__(self, z):
        return polyval(z, self.coefficients)


def _is_zero(x, scale) -> bool:
    if x == 0:
        return True
    if isinstance(x, (float, complex, np.floating, np.complexfloating)):
        return abs(x) <= 1e-12 * max(abs(scale), 1.0)
    # symbolic input (e.g. sympy) only cancels after expansion
    expand = getattr(x, "expand", None)
    return expand is not None and expand() == 0


def recursion_coefficients(E, C, lam, N: int, a0=1):
    """Coefficients a_0 .. a_N of the power series; works for float, complex, Fraction or sympy input.

    Returns (coefficients, degree) where degree is the even n at which the
    numerator vanished, or None.  After termination every later coefficient
    is exactly zero.
    """
    coeffs = [a0] + [0 * a0] * N
    base = E + 2 * C + 4 * lam * C
    degree = None
    for n in range(0, N - 1, 2):
        denom = (n + 2) * ((n + 1) + 2 * lam)
        if denom == 0:
            raise DomainError(f"vanishing denominator at n = {n} (2 lam = {2 * lam})")
        numer = base + 4 * C * n
        scale = abs(E) + abs(C) * (n + 1) if isinstance(numer, Number) else 1
        if _is_zero(numer, scale):
            degree = n
            break
        coeffs[n + 2] = numer / denom * coeffs[n]
    return coeffs, degree


def series_coefficients(E, qp: QuantumParams, N: int) -> SeriesSolution:
    coeffs, degree = recursion_coefficients(E, qp.C, qp.lam, N)
    return SeriesSolution(coeffs, degree is not None, degree)


def termination_scan(
    qp: QuantumParams,
    E_range: tuple[float, float],
    samples: int = 2001,
    n_max: int = 200,
) -> list[float]:
    """Energies in ``E_range`` at which the series terminates, found without the ladder formula.

    For each even n the numerator (E + 2C + 4 lam C) + 4 C n is sampled on a
    grid of ``samples`` energies; every sign change is refined with Brent's
    method.  C = 0 is degenerate (no discrete ladder) and returns [].
    """
    if qp.phase is PTPhase.BROKEN:
        raise DomainError("termination scan needs real C (unbroken phase)")
    C, lam = float(np.real(qp.C)), qp.lam
    if C == 0.0:
        return []
    lo, hi = E_range
    grid = np.linspace(lo, hi, samples)
    found = []
    for n in range(0, n_max + 1, 2):
        numer = lambda E: (E + 2 * C + 4 * lam * C) + 4 * C * n  # noqa: E731
        vals = numer(grid)
        for i in np.flatnonzero(vals == 0):
            found.append(float(grid[i]))
        for i in np.flatnonzero(vals[:-1] * vals[1:] < 0):
            found.append(brentq(numer, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return sorted(found)


def eigenfunction(m: int, qp: QuantumParams, a0: float = 1.0):
    """phi~(z) = |z|^lam exp(-C z^2) P_2m(z) on the ladder; even extension to z < 0."""
    E = ladder_energy(m, qp.C, qp.lam)
    poly = series_coefficients(E, qp, 2 * m + 2)
    if poly.degree != 2 * m:
        raise DomainError(f"series did not terminate at degree {2 * m}")

    def f(z):
        z = np.asarray(z, dtype=float)
        return np.abs(z) ** qp.lam * np.exp(-qp.C * z * z) * poly(z) * a0

    return f, E


def _second_derivative(f, z, h):
    # sixth-order central stencil
    return (
        2 * f(z - 3 * h) - 27 * f(z - 2 * h) + 270 * f(z - h) - 490 * f(z)
        + 270 * f(z + h) - 27 * f(z + 2 * h) + 2 * f(z + 3 * h)
    ) / (180 * h * h)


def eigenfunction_residual(
    m: int,
    qp: QuantumParams,
    z2_samples: Sequence[float],
    energy_shift: float = 0.0,
    h: float = 2e-3,
) -> float:
    """max |phi~'' - (Omega^2/4) z^2 phi~ + g/(2 z^2) phi~ - E phi~| / max |phi~| over the samples.

    ``energy_shift`` perturbs E away from the ladder, as a negative control.
    """
    if qp.phase is PTPhase.BROKEN:
        raise DomainError("eigenfunction residual needs the unbroken phase")
    z = np.asarray(z2_samples, dtype=float)
    if np.any(np.abs(z) <= 6 * h):
        raise DomainError("samples must stay away from z2 = 0")
    f, E = eigenfunction(m, qp)
    W2 = float(np.real(qp.omega_eff)) ** 2
    phi = f(z)
    res = _second_derivative(f, z, h) - 0.25 * W2 * z * z * phi + qp.g / (2 * z * z) * phi - (np.real(E) + energy_shift) * phi
    return float(np.max(np.abs(res)) / np.max(np.abs(phi)))


@dataclass(frozen=True)
class FDSpectrum:
    energies: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray
    converged: bool


class ConvergenceError(RuntimeError):
    pass


def fd_spectrum_oracle(
    qp: QuantumParams,
    levels: int = 3,
    n_grid: int = 4000,
    L: Optional[float] = None,
    rtol: float = 1e-3,
) -> FDSpectrum:
    """Lowest ``levels`` energies of the C = +Omega/4 branch from a finite-difference eigensolve.

    The operator -d^2/dz^2 + (Omega^2/4) z^2 - g/(2 z^2) on (0, L] with
    Dirichlet ends is discretised with second-order differences on ``n_grid``
    and ``2 n_grid`` interior points; its eigenvalues eps give E = -eps.  The
    two resolutions are Richardson-combined and their difference must stay
    below ``rtol`` (relative) or ConvergenceError is raised.
    """
    if qp.phase is not PTPhase.UNBROKEN:
        raise DomainError("finite-difference oracle needs a real, non-zero Omega")
    if qp.g > 0.5:
        raise DomainError("g > 1/2 is out of scope")
    W = float(np.real(qp.omega_eff))
    if L is None:
        L = 12.0 / math.sqrt(W)

    def solve(n):
        h = L / (n + 1)
        z = h * np.arange(1, n + 1)
        diag = 2.0 / h ** 2 + 0.25 * W * W * z * z - qp.g / (2.0 * z * z)
        off = np.full(n - 1, -1.0 / h ** 2)
        return eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, levels - 1))

    coarse, fine = solve(n_grid), solve(2 * n_grid)
    rich = (4.0 * fine - coarse) / 3.0
    converged = bool(np.all(np.abs(fine - coarse) <= rtol * np.abs(fine)))
    if not converged:
        raise ConvergenceError(
            f"finite-difference levels not converged: {coarse} vs {fine} (rtol {rtol})"
        )
    return FDSpectrum(energies=-rich, coarse=-coarse, fine=-fine, converged=converged)


@dataclass(frozen=True)
class StokesWedge:
    center_angle: float
    opening_angle: float = math.pi / 2

    def contains(self, angle: float) -> bool:
        d = (angle - self.center_angle + math.pi) % (2 * math.pi) - math.pi
        return abs(d) < self.opening_angle / 2


def stokes_wedges(coefficient: float) -> tuple[StokesWedge, ...]:
    """Wedges where psi_0 = z^lam exp[(Omega/4) z^2 - i c z] decays, c = (gamma/2) z1.

    The Gaussian factor decays in the quarter-plane sectors about +-i.  The
    linear factor selects the upper one for c < 0 and the lower one for c > 0;
    at c = 0 both remain.
    """
    if coefficient < 0:
        return (StokesWedge(math.pi / 2),)
    if coefficient > 0:
        return (StokesWedge(-math.pi / 2),)
    return (StokesWedge(math.pi / 2), StokesWedge(-math.pi / 2))


def ground_state_minus_branch(z2, z1: float, qp: QuantumParams, gamma: float):
    """psi_0 = z2^lam exp[(Omega/4) z2^2 - (i gamma / 2) z1 z2] at complex z2 (principal power)."""
    z2 = np.asarray(z2, dtype=complex)
    W = float(np.real(qp.omega_eff))
    return z2 ** qp.lam * np.exp(0.25 * W * z2 * z2 - 0.5j * gamma * z1 * z2)
