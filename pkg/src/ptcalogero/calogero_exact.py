"""Closed-form solution of the Calogero limit (epsilon = -omega^2) in the Pi = 0 sector.

With Pi = z1' + 2 gamma z2 = 0 the relative coordinate obeys the
Ermakov-Pinney equation

    z2'' + Omega^2 z2 + 2 g / z2^3 = 0,    Omega^2 = 2 (omega^2 - 2 gamma^2),

whose solution for z2(0) = b, z2'(0) = a is

    z2(t)^2 = A sin^2(Omega t) + 2 B sin(Omega t) cos(Omega t) + C cos^2(Omega t)

with A = (a^2 b^2 - 2g)/(b^2 Omega^2), B = a b / Omega, C = b^2.  The centre of
mass then follows from z1' = -2 gamma z2.

Writing z2^2 = (C + A + D)/2 - D sin^2(phi) reduces the z1 integral to an
incomplete elliptic integral of the second kind.  Matching the cross term
2 B sin cos requires the amplitude D = sqrt((C - A)^2 + (2B)^2); with it,
phi(t) = Omega t + phi0 is exactly linear in t and

    z1(t) = I - 2 gamma sqrt(C + A + D) / (sqrt(2) Omega) * E(phi(t) | k^2),
    k^2 = 2 D / (C + A + D).

The minus sign follows from z1' = -2 gamma z2 with phi increasing.
:func:`z1_quadrature` evaluates the same integral by adaptive quadrature and
is the reference the elliptic form is checked against.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import elliprd, elliprf

from .model import DomainError, ModelParams, PhaseStateZ, PTPhase, pt_phase_of

RADICAND_CLAMP = 1e-12


@dataclass(frozen=True)
class EffectiveFrequency:
    omega_sq_eff: float
    phase: PTPhase

    @property
    def omega(self) -> float:
        if self.phase is not PTPhase.UNBROKEN:
            raise DomainError(f"Omega is not real and positive in the {self.phase.value} phase")
        return math.sqrt(self.omega_sq_eff)


def effective_frequency(p: ModelParams) -> EffectiveFrequency:
    p.require_calogero("effective_frequency")
    return EffectiveFrequency(p.omega_sq_eff, pt_phase_of(p.omega, p.gamma))


@dataclass(frozen=True)
class EPConstants:
    """Constants of the closed-form solution.

    ``B`` is a b / Omega; the cross term of z2^2 is 2 B sin cos and ``D`` is
    the half peak-to-peak swing of z2^2, sqrt((C - A)^2 + 4 B^2).  ``I`` is the
    additive constant of the elliptic form, fixed by z1(0) = ``z1_0``.
    """

    a: float
    b: float
    A: float
    B: float
    C: float
    D: float
    k_sq: float
    I: float
    z1_0: float
    Omega: float
    gamma: float
    g: float

    @property
    def phi0(self) -> float:
        # sin^2(phi0) = (D + A - C) / (2D) with the sign of phi0 set by z2'(0)
        return 0.5 * math.atan2(-2.0 * self.B, self.C - self.A)

    @property
    def prefactor(self) -> float:
        """sqrt(C + A + D) / (sqrt(2) Omega): scale from E(phi|k^2) to the integral of z2."""
        return math.sqrt(self.C + self.A + self.D) / (math.sqrt(2.0) * self.Omega)

    @property
    def period(self) -> float:
        """Period of z2(t), pi / Omega (z2^2 oscillates at 2 Omega)."""
        return math.pi / self.Omega

    @property
    def is_degenerate(self) -> bool:
        return self.D <= 1e-14 * (abs(self.A) + abs(self.C))


def ep_constants(a: float, b: float, p: ModelParams, z1_0: float = 0.0) -> EPConstants:
    """Constants for z2(0) = b, z2'(0) = a, z1(0) = z1_0 and z1'(0) = -2 gamma b."""
    freq = effective_frequency(p)
    if freq.phase is not PTPhase.UNBROKEN:
        raise DomainError(f"closed form needs Omega^2 > 0, got {freq.omega_sq_eff}")
    if b == 0:
        raise DomainError("b = z2(0) must be non-zero")
    if p.g >= 0:
        warnings.warn(
            f"g = {p.g} >= 0: the inverse-square core is not attractive and z2 may reach 0",
            stacklevel=2,
        )
    W = freq.omega
    A = (a * a * b * b - 2.0 * p.g) / (b * b * W * W)
    B = a * b / W
    C = b * b
    D = math.hypot(C - A, 2.0 * B)
    k_sq = 2.0 * D / (C + A + D)
    c = EPConstants(a, b, A, B, C, D, k_sq, 0.0, z1_0, W, p.gamma, p.g)
    if c.is_degenerate:
        return c
    sgn = math.copysign(1.0, b)
    I = z1_0 + 2.0 * p.gamma * sgn * c.prefactor * float(incomplete_elliptic_e(c.phi0, k_sq))
    return EPConstants(a, b, A, B, C, D, k_sq, I, z1_0, W, p.gamma, p.g)


def _radicand(t, c: EPConstants):
    s, co = np.sin(c.Omega * t), np.cos(c.Omega * t)
    return c.A * s * s + 2.0 * c.B * s * co + c.C * co * co


def z2_exact(t, c: EPConstants):
    """Closed-form z2(t) (sign of b preserved); vectorised over t."""
    r = np.asarray(_radicand(t, c), dtype=float)
    if np.any(r < -RADICAND_CLAMP):
        raise DomainError(f"negative radicand {r.min()} in z2(t); parameters admit no real solution")
    out = math.copysign(1.0, c.b) * np.sqrt(np.clip(r, 0.0, None))
    return out if out.ndim else float(out)


def phi_of_t(t, c: EPConstants):
    """Unwrapped angle phi(t) = Omega t + phi0, increasing by pi every pi / Omega."""
    if c.is_degenerate:
        raise DomainError("D = 0: z2 is constant and phi is undefined")
    return c.Omega * np.asarray(t, dtype=float) + c.phi0


def sin_phi_sq(t, c: EPConstants):
    """(D + (A - C) cos 2 Omega t - 2B sin 2 Omega t) / (2D), which lies in [0, 1]."""
    th = 2.0 * c.Omega * np.asarray(t, dtype=float)
    return (c.D + (c.A - c.C) * np.cos(th) - 2.0 * c.B * np.sin(th)) / (2.0 * c.D)


def _complete_e(m):
    m = np.asarray(m, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        full = elliprf(0.0, 1.0 - m, 1.0) - m / 3.0 * elliprd(0.0, 1.0 - m, 1.0)
    return np.where(m == 1.0, 1.0, full)


def incomplete_elliptic_e(phi, m):
    """E(phi | m) = integral_0^phi sqrt(1 - m sin^2 theta) d theta.

    For m <= 1 any real phi is accepted: the argument is reduced to
    [-pi/2, pi/2] with E(phi + n pi) = E(phi) + 2 n E(m), and the reduced
    value uses Carlson's R_F and R_D.  Negative m is allowed.  For m > 1 the
    integrand is real only while m sin^2 phi <= 1, so phi must lie in that
    first window around zero.
    """
    phi = np.asarray(phi, dtype=float)
    m = np.asarray(m, dtype=float)
    n = np.round(phi / math.pi)
    r = phi - n * math.pi
    s, co = np.sin(r), np.cos(r)
    x, y = co * co, 1.0 - m * s * s
    over = m > 1.0
    if np.any(over & ((n != 0) | (y < 0))):
        raise DomainError("E(phi | m) with m > 1 is real only for m sin^2 phi <= 1")
    with np.errstate(invalid="ignore", divide="ignore"):
        reduced = s * elliprf(x, y, 1.0) - m / 3.0 * s ** 3 * elliprd(x, y, 1.0)
    reduced = np.where(m == 1.0, s, reduced)
    out = reduced + np.where(n != 0, 2.0 * n * _complete_e(m), 0.0)
    return out if out.ndim else float(out)


def z1_exact(t, c: EPConstants):
    """Elliptic-integral form of z1(t); vectorised over t."""
    if c.is_degenerate:
        out = c.z1_0 - 2.0 * c.gamma * z2_exact(0.0, c) * np.asarray(t, dtype=float)
        return out if out.ndim else float(out)
    e = incomplete_elliptic_e(phi_of_t(t, c), c.k_sq)
    return c.I - 2.0 * c.gamma * math.copysign(1.0, c.b) * c.prefactor * e


def z1_quadrature(t, c: EPConstants, epsabs: float = 1e-13):
    """z1(t) = z1(0) - 2 gamma * integral_0^t z2(s) ds by adaptive quadrature.

    Array input is integrated interval by interval over the sorted times and
    accumulated, so the cost is linear in the span rather than quadratic.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    order = np.argsort(t_arr)
    knots = np.concatenate(([0.0], t_arr[order]))
    f = lambda s: z2_exact(s, c)  # noqa: E731
    pieces = np.empty(len(t_arr))
    limit = 50 + int(4 * np.max(np.abs(np.diff(knots))) / c.period) if len(t_arr) else 50
    for i in range(len(t_arr)):
        pieces[i] = quad(f, knots[i], knots[i + 1], epsabs=epsabs, epsrel=1e-13, limit=limit)[0]
    out = np.empty(len(t_arr))
    out[order] = c.z1_0 - 2.0 * c.gamma * np.cumsum(pieces)
    return out if np.ndim(t) else float(out[0])


def z1_mean_slope(c: EPConstants) -> float:
    """Secular drift of z1 per unit time, -2 gamma <z2>, with <z2> from the complete integral."""
    if c.is_degenerate:
        return -2.0 * c.gamma * c.b
    mean_z2 = math.sqrt(0.5 * (c.C + c.A + c.D)) * 2.0 * float(_complete_e(c.k_sq)) / math.pi
    return -2.0 * c.gamma * math.copysign(mean_z2, c.b)


def validity_inequality(t, c: EPConstants):
    """D + (A - C) cos 2 Omega t >= 2B sin 2 Omega t, the reality condition on sin(phi)."""
    th = 2.0 * c.Omega * np.asarray(t, dtype=float)
    lhs = c.D + (c.A - c.C) * np.cos(th)
    rhs = 2.0 * c.B * np.sin(th)
    ok = lhs - rhs >= -1e-12 * max(c.D, 1.0)
    return ok if np.ndim(ok) else bool(ok)


def pi_zero_initial_state(c: EPConstants) -> PhaseStateZ:
    """Initial state (z1, z2, z1', z2') of the Pi = 0 sector described by ``c``."""
    return PhaseStateZ(c.z1_0, c.b, -2.0 * c.gamma * c.b, c.a)


def reference_a0_form(t, p: ModelParams):
    """z1(t) for a = 0, b = 1, I = 0 in the form 2 gamma E(Omega t | 1 + 2g/Omega^2) / Omega.

    Up to the overall sign (the quadrature gives -2 gamma) this agrees with the
    general form whenever 1 + 2g/Omega^2 <= 1, i.e. for all g <= 0.
    """
    W = effective_frequency(p).omega
    return 2.0 * p.gamma * incomplete_elliptic_e(W * np.asarray(t, dtype=float), 1.0 + 2.0 * p.g / W ** 2) / W
