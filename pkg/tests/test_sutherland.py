import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptcalogero.model import DomainError, MisuseError, ModelParams
from ptcalogero.sutherland import (
    PERTURBATIVE_INITIAL,
    Stability,
    compare_perturbative_numeric,
    eigenvalues_characteristic,
    eigenvalues_paper,
    equilibrium,
    fd_jacobian,
    jacobian,
    multiset_distance,
    nonlinear_classification,
    perturbative_solution,
    stability_report,
)


def sp(gamma, omega=1.0, g=-0.5):
    return ModelParams.sutherland(omega, gamma, g)


class TestEquilibrium:
    def test_value(self):
        assert equilibrium(sp(0.3)).z2 == pytest.approx(1.0)
        assert equilibrium(sp(0.3, omega=2.0, g=-8.0)).z2 == pytest.approx(math.sqrt(2.0))

    def test_is_stationary(self):
        from ptcalogero.dynamics import eom_rhs
        from ptcalogero.model import PhaseStateZ

        p = sp(0.4, omega=1.3, g=-0.9)
        eq = equilibrium(p)
        assert np.allclose(eom_rhs(PhaseStateZ(eq.z1, eq.z2, eq.p, eq.q), p), 0.0, atol=1e-14)

    def test_requires_attractive_core(self):
        with pytest.raises(DomainError):
            equilibrium(sp(0.3, g=0.0))

    def test_requires_sutherland(self):
        with pytest.raises(MisuseError):
            equilibrium(ModelParams.calogero(1.0, 0.3, -0.5))


class TestLinearisation:
    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.3, 3.0), st.floats(-2.0, 2.0), st.floats(-3.0, -0.05))
    def test_jacobian_matches_finite_differences(self, w, gm, g):
        p = sp(gm, omega=w, g=g)
        np.testing.assert_allclose(jacobian(p), fd_jacobian(p), atol=1e-6 * (1 + w * w))

    @settings(max_examples=100)
    @given(st.floats(0.3, 3.0), st.floats(-2.0, 2.0))
    def test_characteristic_roots_are_eigenvalues(self, w, gm):
        # dense eigensolver as oracle; defective double roots spread by ~sqrt(eps)
        p = sp(gm, omega=w)
        numeric = np.linalg.eigvals(jacobian(p))
        assert multiset_distance(eigenvalues_characteristic(p), numeric) < 1e-6 * (1 + w * w)

    def test_zero_gamma_spectrum(self):
        r = stability_report(sp(0.0))
        expected = np.array([1j, -1j, 2j, -2j])
        assert multiset_distance(r.eigs_numeric, expected) < 1e-12
        assert multiset_distance(r.eigs_char, expected) < 1e-15

    def test_quoted_formula_has_real_roots(self):
        # with the sign dropped, gamma = 0 gives +-1 and +-2 instead of +-i and +-2i
        assert multiset_distance(eigenvalues_paper(sp(0.0)), [1, -1, 2, -2]) < 1e-15

    def test_multiset_distance(self):
        assert multiset_distance([1, 2j], [2j, 1.5]) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            multiset_distance([1], [1, 2])


class TestClassification:
    def test_stable_interval(self):
        # P = 5 - 4 gamma^2 and P^2 >= 16 needs gamma^2 <= 1/4
        assert stability_report(sp(0.45)).classification is Stability.STABLE
        assert stability_report(sp(0.55)).classification is Stability.UNSTABLE
        assert stability_report(sp(1.6)).classification is Stability.UNSTABLE

    def test_marginal_and_flag(self):
        r = stability_report(sp(0.0))
        assert r.classification is Stability.STABLE and r.marginal
        assert r.discrepancy_flag

    def test_claimed_range_reported(self):
        r = stability_report(sp(0.2, omega=2.0))
        lo, hi = r.claimed_gamma_range
        assert hi == pytest.approx(math.sqrt(5.0)) and lo == -hi
        d = r.as_dict()
        assert d["classification"] == "Stable"
        assert d["claimed_gamma_range"] == [lo, hi]

    @pytest.mark.parametrize("gamma,expected", [(0.2, Stability.STABLE), (0.7, Stability.UNSTABLE)])
    def test_nonlinear_arbiter(self, gamma, expected):
        assert nonlinear_classification(sp(gamma)) is expected


class TestPerturbative:
    def test_initial_data(self):
        sol = perturbative_solution(sp(0.1))
        assert sol.z1(0.0) == pytest.approx(PERTURBATIVE_INITIAL.z1)
        assert sol.z2(0.0) == pytest.approx(PERTURBATIVE_INITIAL.z2)

    def test_zero_gamma_is_unperturbed(self):
        sol = perturbative_solution(sp(0.0))
        t = np.linspace(0, 5, 11)
        np.testing.assert_allclose(sol.z2(t), 1.0)

    def test_agreement_at_small_gamma(self):
        cmp = compare_perturbative_numeric(sp(0.1), 5.0)
        assert cmp.termination == "completed"
        assert cmp.max_deviation() <= 0.05
        # closest agreement right after the start
        assert cmp.max_deviation(0.5) < cmp.max_deviation()

    def test_requires_sutherland(self):
        with pytest.raises(MisuseError):
            perturbative_solution(ModelParams.calogero(1.0, 0.1, -0.5))
