import numpy as np
import pytest

from platelim import (
    EnergyDensity,
    check_coercivity,
    check_derivative_consistency,
    check_frame_indifference,
    check_stress_growth,
    stored_energy,
    stored_energy_derivative,
    tangent_at_identity,
)
from platelim.densities import (
    FD_STEP_FIRST,
    DomainError,
    stored_energy_derivative_many,
    stored_energy_many,
)
from platelim.matrices import random_bounded_stretch, random_invertible, random_rotation

# hand arithmetic: |2 Id - Id|^2 + (log 8)^2 = 3 + 9 (ln 2)^2
W_AT_TWICE_ID = 3.0 + 9.0 * np.log(2.0) ** 2


def fd_gradient(density, F, step=None):
    # independent central-difference oracle on the energy
    step = step if step is not None else FD_STEP_FIRST * (1.0 + np.linalg.norm(F))
    G = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            Fp = F.copy(); Fp[i, j] += step
            Fm = F.copy(); Fm[i, j] -= step
            G[i, j] = (stored_energy(density, Fp) - stored_energy(density, Fm)) / (2 * step)
    return G


class TestStoredEnergy:
    def test_zero_at_identity(self, blowup_density):
        assert stored_energy(blowup_density, np.eye(3)) == 0.0

    def test_zero_on_rotations(self, blowup_density, rng):
        R = random_rotation(rng, 20)
        w = stored_energy_many(blowup_density, R)
        assert np.max(np.abs(w)) < 1e-12

    def test_value_at_twice_identity(self, logdet2):
        assert stored_energy(logdet2, 2.0 * np.eye(3)) == pytest.approx(W_AT_TWICE_ID, rel=1e-14)

    def test_infinite_outside_orientation_preserving(self, blowup_density):
        assert stored_energy(blowup_density, np.diag([-1.0, 1.0, 1.0])) == np.inf
        assert stored_energy(blowup_density, np.zeros((3, 3))) == np.inf

    def test_nonnegative(self, blowup_density, rng):
        F = random_invertible(rng, 200, det_range=(0.05, 20.0))
        assert np.all(stored_energy_many(blowup_density, F) >= 0.0)

    def test_svk_quadratic_in_green_strain(self):
        d = EnergyDensity("svk", mu=2.0, lam=3.0)
        F = np.diag([1.1, 0.9, 1.0])
        E = 0.5 * (F.T @ F - np.eye(3))
        expected = 2.0 * np.sum(E * E) + 1.5 * np.trace(E) ** 2
        assert stored_energy(d, F) == pytest.approx(expected, rel=1e-14)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError, match="p >= 2"):
            EnergyDensity("logdet", p=1.5)
        with pytest.raises(ValueError, match="unknown density kind"):
            EnergyDensity("nope")
        with pytest.raises(ValueError, match="custom density requires"):
            EnergyDensity("custom")


class TestDerivative:
    def test_zero_at_identity(self, blowup_density):
        assert np.all(stored_energy_derivative(blowup_density, np.eye(3)) == 0.0)

    def test_zero_on_rotations(self, blowup_density, rng):
        R = random_rotation(rng, 10)
        dw = stored_energy_derivative_many(blowup_density, R)
        assert np.max(np.abs(dw)) < 1e-10

    def test_matches_fd_oracle_at_diag211(self, logdet2):
        F = np.diag([2.0, 1.0, 1.0])
        exact = stored_energy_derivative(logdet2, F)
        fd = fd_gradient(logdet2, F)
        assert np.linalg.norm(exact - fd) / np.linalg.norm(fd) < 1e-6

    def test_matches_fd_oracle_randomly(self, blowup_density, rng):
        F = random_bounded_stretch(rng, 100, det_range=(0.2, 5.0))
        for M in F:
            exact = stored_energy_derivative(blowup_density, M)
            fd = fd_gradient(blowup_density, M)
            assert np.linalg.norm(exact - fd) / np.linalg.norm(fd) < 1e-6

    def test_svk_matches_fd(self, rng):
        d = EnergyDensity("svk", mu=1.0, lam=2.0)
        for M in random_bounded_stretch(rng, 20, det_range=(0.3, 3.0)):
            exact = stored_energy_derivative(d, M)
            fd = fd_gradient(d, M)
            assert np.linalg.norm(exact - fd) / max(np.linalg.norm(fd), 1.0) < 1e-6

    def test_rejects_nonpositive_determinant(self, blowup_density):
        with pytest.raises(DomainError):
            stored_energy_derivative(blowup_density, np.diag([-1.0, 1.0, 1.0]))

    def test_fd_fallback_flag(self, logdet2, rng):
        numeric = EnergyDensity("logdet", p=2.0, analytic_derivative=False)
        F = random_bounded_stretch(rng, 5, det_range=(0.5, 2.0))
        for M in F:
            a = stored_energy_derivative(logdet2, M)
            b = stored_energy_derivative(numeric, M)
            assert np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-12) < 1e-6

    def test_custom_density_callables(self):
        base = EnergyDensity("logdet", p=2.0)
        custom = EnergyDensity(
            "custom",
            w_fn=lambda F: stored_energy(base, F),
            dw_fn=lambda F: stored_energy_derivative(base, F),
        )
        F = np.diag([1.2, 0.8, 1.0])
        assert stored_energy(custom, F) == stored_energy(base, F)
        assert np.allclose(stored_energy_derivative(custom, F),
                           stored_energy_derivative(base, F))


class TestTangentAtIdentity:
    def fd_hessian_oracle(self, density, step=1e-4):
        # independent 4-point FD of the energy itself
        H = np.zeros((9, 9))
        for a in range(9):
            for b in range(9):
                Ea = np.zeros(9); Ea[a] = step
                Eb = np.zeros(9); Eb[b] = step
                Ea = Ea.reshape(3, 3); Eb = Eb.reshape(3, 3)
                wpp = stored_energy(density, np.eye(3) + Ea + Eb)
                wpm = stored_energy(density, np.eye(3) + Ea - Eb)
                wmp = stored_energy(density, np.eye(3) - Ea + Eb)
                wmm = stored_energy(density, np.eye(3) - Ea - Eb)
                H[a, b] = (wpp - wpm - wmp + wmm) / (4 * step * step)
        return H

    def test_logdet_closed_form(self, logdet2, rng):
        L = tangent_at_identity(logdet2)
        for _ in range(100):
            F = rng.standard_normal((3, 3))
            S = 0.5 * (F + F.T)
            expected = 2.0 * np.sum(S * S) + 2.0 * np.trace(F) ** 2
            assert L.quad(F) == pytest.approx(expected, rel=1e-6, abs=1e-6)

    def test_matches_energy_fd_oracle(self, blowup_density):
        L = tangent_at_identity(blowup_density)
        H = self.fd_hessian_oracle(blowup_density)
        v = np.random.default_rng(7).standard_normal((20, 9))
        got = np.einsum("ni,ij,nj->n", v, L.array, v)
        want = np.einsum("ni,ij,nj->n", v, H, v)
        assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-5

    def test_basis_direction_value(self, logdet2):
        L = tangent_at_identity(logdet2)
        E11 = np.zeros((3, 3)); E11[0, 0] = 1.0
        assert L.quad(E11) == pytest.approx(4.0, rel=1e-6)

    def test_annihilates_antisymmetric(self, blowup_density, rng):
        L = tangent_at_identity(blowup_density)
        A = rng.standard_normal((20, 3, 3))
        A = 0.5 * (A - np.swapaxes(A, -1, -2))
        assert np.max(np.abs(L.quad(A))) < 1e-12

    def test_depends_only_on_symmetric_part(self, blowup_density, rng):
        L = tangent_at_identity(blowup_density)
        F = rng.standard_normal((100, 3, 3))
        S = 0.5 * (F + np.swapaxes(F, -1, -2))
        assert np.allclose(L.quad(F), L.quad(S), rtol=1e-12, atol=1e-12)

    def test_self_adjoint(self, blowup_density):
        L = tangent_at_identity(blowup_density)
        rel = L.max_asymmetry() / max(np.max(np.abs(L.array)), 1e-30)
        assert rel <= 1e-9

    def test_raw_fd_hessian_symmetry(self, blowup_density):
        # before any cleanup the FD oracle itself is nearly symmetric
        H = self.fd_hessian_oracle(blowup_density)
        assert np.max(np.abs(H - H.T)) / np.max(np.abs(H)) < 1e-6

    def test_invdet_same_tangent_as_logdet(self):
        # both determinant terms linearize to (tr F)^2 at the identity
        L1 = tangent_at_identity(EnergyDensity("logdet", p=2.0))
        L2 = tangent_at_identity(EnergyDensity("invdet", p=2.0))
        assert np.allclose(L1.array, L2.array, atol=1e-5)


class TestChecks:
    def test_frame_indifference_builtin(self, blowup_density):
        rep = check_frame_indifference(blowup_density, n_samples=1000, seed=3)
        assert rep.passed
        assert rep.statistic <= 1e-10

    def test_frame_indifference_negative_control(self):
        # deliberately broken density: logdet plus an F12 term
        base = EnergyDensity("logdet", p=2.0)
        broken = EnergyDensity("custom",
                               w_fn=lambda F: stored_energy(base, F) + F[0, 1] + 10.0,
                               analytic_derivative=False)
        rep = check_frame_indifference(broken, n_samples=100, seed=3)
        assert not rep.passed
        assert rep.statistic > 1e-3

    def test_coercivity_builtin(self, blowup_density):
        rep = check_coercivity(blowup_density, n_samples=1000, seed=5)
        assert rep.passed
        assert rep.statistic > 0.0

    def test_coercivity_ratio_at_twice_identity(self, logdet2):
        # dist^2(2 Id, SO(3)) = 3, so the ratio is W/3
        w = stored_energy(logdet2, 2.0 * np.eye(3))
        assert w / 3.0 == pytest.approx(2.4413590417546043, rel=1e-12)

    def test_coercivity_min_over_moderate_distances(self, logdet2, rng):
        # near the well the quadratic term alone keeps the ratio >= ~1
        from platelim.matrices import dist_to_rotations, random_near_rotation
        F = random_near_rotation(rng, 500, spread=1.0)
        d2 = dist_to_rotations(F) ** 2
        keep = (d2 > 1e-16) & (d2 <= 1.0)
        ratio = stored_energy_many(logdet2, F[keep]) / d2[keep]
        assert np.min(ratio) >= 0.5

    def test_stress_growth_builtin(self, blowup_density):
        rep = check_stress_growth(blowup_density, n_samples=1000, seed=7)
        assert rep.passed
        assert np.isfinite(rep.statistic)
        trend = rep.details["trend"]
        assert max(trend) <= 2.0 * trend[0]
        # the scan ratio decays for very small determinants
        assert trend[-1] < trend[0]

    def test_stress_growth_ratio_zero_at_identity(self, blowup_density):
        dw = stored_energy_derivative(blowup_density, np.eye(3))
        w = stored_energy(blowup_density, np.eye(3))
        assert np.linalg.norm(dw @ np.eye(3)) / (w + 1.0) == 0.0

    def test_derivative_consistency_builtin(self, blowup_density):
        rep = check_derivative_consistency(blowup_density, n_samples=100, seed=11)
        assert rep.passed

    def test_report_record_schema(self, logdet2):
        rep = check_frame_indifference(logdet2, n_samples=10, seed=0)
        rec = rep.record()
        assert set(rec) >= {"check", "density", "params", "statistic", "threshold", "pass"}

    def test_checks_deterministic(self, logdet2):
        a = check_stress_growth(logdet2, n_samples=50, seed=42)
        b = check_stress_growth(logdet2, n_samples=50, seed=42)
        assert a.statistic == b.statistic
