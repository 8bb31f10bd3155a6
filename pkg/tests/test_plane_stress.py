"""Plane-stress reduction of the identity tangent against brute-force oracles."""
import numpy as np
import pytest
from scipy.optimize import minimize

from platelim import (
    EnergyDensity,
    isotropic_tangent,
    plane_stress_reduction,
    tangent_at_identity,
)
from platelim.densities import _BASIS2, DegenerateRelaxationError, Tensor4


def closed_form(G, mu, lam):
    S = 0.5 * (G + G.T)
    return 2 * mu * np.sum(S * S) + (2 * mu * lam / (2 * mu + lam)) * np.trace(G) ** 2


def embed(G, extra):
    # fill the out-of-plane entries from a 5-vector (F13, F31, F23, F32, F33)
    F = np.zeros((3, 3))
    F[:2, :2] = G
    F[0, 2], F[2, 0], F[1, 2], F[2, 1], F[2, 2] = extra
    return F


def brute_force_min(L, G):
    """Grid scan over the three symmetric completions plus descent polish."""
    def objective3(x):
        return L.quad(embed(G, [x[0], x[0], x[1], x[1], x[2]]))

    grid = np.linspace(-2.0, 2.0, 21)
    best, best_x = np.inf, None
    for a in grid:
        for b in grid:
            for c in grid:
                val = objective3(np.array([a, b, c]))
                if val < best:
                    best, best_x = val, np.array([a, b, c])
    res = minimize(objective3, best_x, method="BFGS", tol=1e-14,
                   options={"gtol": 1e-12, "maxiter": 500})
    return min(best, float(res.fun))


def brute_force_min_all_entries(L, G):
    """Polish over all five free entries (no symmetry assumption)."""
    def objective5(x):
        return L.quad(embed(G, x))

    res = minimize(objective5, np.zeros(5), method="BFGS", tol=1e-14,
                   options={"gtol": 1e-12, "maxiter": 1000})
    return float(res.fun)


@pytest.fixture(scope="module")
def iso_tangent():
    return isotropic_tangent(mu=1.0, lam=2.0)


class TestIsotropicReduction:
    def test_matches_brute_force_on_basis(self, iso_tangent):
        Q2 = plane_stress_reduction(iso_tangent)
        for B in _BASIS2:
            assert abs(Q2.quad(B) - brute_force_min(iso_tangent, B)) <= 1e-9

    def test_matches_closed_form(self, iso_tangent, rng):
        Q2 = plane_stress_reduction(iso_tangent)
        for _ in range(50):
            G = rng.standard_normal((2, 2))
            assert Q2.quad(G) == pytest.approx(closed_form(G, 1.0, 2.0), rel=1e-12, abs=1e-12)

    def test_identity_value(self, iso_tangent):
        Q2 = plane_stress_reduction(iso_tangent)
        assert Q2.quad(np.eye(2)) == pytest.approx(8.0, rel=1e-12)

    def test_zero_input(self, iso_tangent):
        Q2 = plane_stress_reduction(iso_tangent)
        assert Q2.quad(np.zeros((2, 2))) == 0.0

    def test_symmetric_completion_suffices(self, iso_tangent, rng):
        # open question: minimizing over all five free entries gives the same value
        Q2 = plane_stress_reduction(iso_tangent)
        for _ in range(5):
            G = rng.standard_normal((2, 2))
            G = 0.5 * (G + G.T)
            full = brute_force_min_all_entries(iso_tangent, G)
            assert abs(Q2.quad(G) - full) <= 1e-8

    def test_positive_definite(self, iso_tangent):
        assert plane_stress_reduction(iso_tangent).is_positive_definite()

    def test_monotone_under_relaxation(self, iso_tangent, rng):
        # Q2(G) <= Q3(Fhat) for any symmetric completion Fhat of G
        Q2 = plane_stress_reduction(iso_tangent)
        for _ in range(50):
            G = rng.standard_normal((2, 2))
            G = 0.5 * (G + G.T)
            extra = rng.standard_normal(3)
            Fhat = embed(G, [extra[0], extra[0], extra[1], extra[1], extra[2]])
            assert Q2.quad(G) <= iso_tangent.quad(Fhat) + 1e-12


class TestDensityReduction:
    def test_logdet_reduction_matches_isotropic(self):
        # logdet p=2 linearizes to 2|sym F|^2 + 2(tr F)^2, i.e. mu=1, lam=2
        L = tangent_at_identity(EnergyDensity("logdet", p=2.0))
        Q2 = plane_stress_reduction(L)
        expected = plane_stress_reduction(isotropic_tangent(1.0, 2.0))
        assert np.allclose(Q2.array, expected.array, atol=1e-5)

    def test_svk_reduction_closed_form(self, rng):
        mu, lam = 1.3, 0.7
        L = tangent_at_identity(EnergyDensity("svk", mu=mu, lam=lam))
        Q2 = plane_stress_reduction(L)
        for _ in range(20):
            G = rng.standard_normal((2, 2))
            assert Q2.quad(G) == pytest.approx(closed_form(G, mu, lam), rel=1e-5, abs=1e-6)

    def test_quad_depends_on_symmetric_part(self, iso_tangent, rng):
        Q2 = plane_stress_reduction(iso_tangent)
        G = rng.standard_normal((2, 2))
        S = 0.5 * (G + G.T)
        assert Q2.quad(G) == pytest.approx(Q2.quad(S), rel=1e-14)

    def test_apply_consistent_with_quad(self, iso_tangent, rng):
        Q2 = plane_stress_reduction(iso_tangent)
        G = rng.standard_normal((2, 2))
        S = 0.5 * (G + G.T)
        applied = Q2.apply(G)
        assert np.sum(applied * S) == pytest.approx(Q2.quad(G), rel=1e-12)

    def test_degenerate_relaxation_reported(self):
        # a form that vanishes on the out-of-plane entries cannot be reduced
        A = np.zeros((9, 9))
        for idx in (0, 1, 3, 4):  # F11, F12, F21, F22 only
            A[idx, idx] = 1.0
        with pytest.raises(DegenerateRelaxationError, match="relaxation degenerate"):
            plane_stress_reduction(Tensor4(A))
