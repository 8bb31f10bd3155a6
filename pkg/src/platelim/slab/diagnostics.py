"""Per-cell rotation/strain/stress fields and averaged displacements.

The deformation gradient is split per cell as F = R (Id + h^(alpha-1) G)
with R the polar rotation of the fiber-averaged gradient (constant along
each vertical column).  The scaled stress E and the linearization mask are
derived from G; the mask marks cells where h^(alpha-1-gamma) |G| <= 1, on
which the stress linearizes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..densities import EnergyDensity, stored_energy_derivative_many, stored_energy_many
from ..matrices import nearest_rotation
from .grid import SlabGrid, fold_vertical, rest_state, trapezoid_weights
from .energy import scaled_gradient


def default_gamma(grid: SlabGrid) -> float:
    """Midpoint-like choice in the admissible interval (0, alpha - 2)."""
    return 0.5 * (grid.alpha - 2.0)


def rotation_field(y: np.ndarray, grid: SlabGrid) -> np.ndarray:
    """Nearest rotation of the vertically averaged gradient, per column.

    Constant in the thickness direction by construction.  Raises on
    degenerate columns (zero singular value of the averaged gradient).
    """
    F = scaled_gradient(y, grid)
    Fbar = F.mean(axis=2)
    R = nearest_rotation(Fbar)
    return np.broadcast_to(R[:, :, None], F.shape).copy()


def strain_field(y: np.ndarray, R: np.ndarray, grid: SlabGrid) -> np.ndarray:
    """G = (R^T F - Id) / h^(alpha - 1), exactly inverting the decomposition."""
    F = scaled_gradient(y, grid)
    return (np.swapaxes(R, -1, -2) @ F - np.eye(3)) / grid.h ** (grid.alpha - 1.0)


@dataclass
class StressResult:
    stress: np.ndarray          # per-cell symmetric 3x3
    mask: np.ndarray            # 1 where the stress linearizes, else 0
    bound_constant: float       # smallest C with |E| <= C (W/h^(a-1) + |G|)


def stress_field(G: np.ndarray, density: EnergyDensity, grid: SlabGrid,
                 gamma: float | None = None) -> StressResult:
    """Scaled stress E = h^(1-alpha) DW(Id + h^(alpha-1) G)(Id + h^(alpha-1) G)^T.

    Also returns the linearization mask for the given gamma and the
    empirical constant of the pointwise bound |E| <= C (W/h^(alpha-1) + |G|).
    """
    gamma = default_gamma(grid) if gamma is None else gamma
    if not 0.0 < gamma < grid.alpha - 2.0:
        raise ValueError("gamma must lie in (0, alpha - 2)")
    s = grid.h ** (grid.alpha - 1.0)
    F = np.eye(3) + s * G
    det = np.linalg.det(F)
    if np.any(det <= 0.0):
        raise ValueError("stress undefined: nonpositive Jacobian in Id + h^(alpha-1) G")
    DW = stored_energy_derivative_many(density, F)
    E = (DW @ np.swapaxes(F, -1, -2)) / s
    normG = np.linalg.norm(G, axis=(-2, -1))
    mask = (grid.h ** (grid.alpha - 1.0 - gamma) * normG <= 1.0).astype(float)
    denom = stored_energy_many(density, F) / s + normG
    normE = np.linalg.norm(E, axis=(-2, -1))
    keep = denom > 1e-14
    bound = float(np.max(normE[keep] / denom[keep])) if np.any(keep) else 0.0
    return StressResult(E, mask, bound)


@dataclass
class StrainStressFields:
    """Bundle of the per-cell diagnostic fields for one deformation."""

    rotation: np.ndarray
    strain: np.ndarray
    stress: np.ndarray
    mask: np.ndarray
    gamma: float
    bound_constant: float

    @property
    def max_stress_asymmetry(self) -> float:
        """Max over cells of |E - E^T| / (1 + |E|)."""
        E = self.stress
        asym = np.linalg.norm(E - np.swapaxes(E, -1, -2), axis=(-2, -1))
        scale = 1.0 + np.linalg.norm(E, axis=(-2, -1))
        return float(np.max(asym / scale))


def strain_stress_diagnostics(y: np.ndarray, grid: SlabGrid, density: EnergyDensity,
                              gamma: float | None = None) -> StrainStressFields:
    gamma = default_gamma(grid) if gamma is None else gamma
    R = rotation_field(y, grid)
    G = strain_field(y, R, grid)
    res = stress_field(G, density, grid, gamma)
    return StrainStressFields(R, G, res.stress, res.mask, gamma, res.bound_constant)


def bad_set_measure(mask: np.ndarray, grid: SlabGrid) -> float:
    """Cell-measure of the complement of the linearization set."""
    return float(np.count_nonzero(mask == 0.0)) * grid.cell_volume


def averaged_displacements(y: np.ndarray, grid: SlabGrid
                           ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Averaged in-plane and out-of-plane displacements and the first moment.

    u = h^(-beta/2)      * integral of (y' - x') dx3
    v = h^(-(beta-2)/2)  * integral of y3 dx3
    xi = h^(1-alpha)     * integral of x3 (y' - x') dx3

    Trapezoid rule in the thickness direction; symmetric stations are
    paired so the rest state maps to exact zeros.
    """
    y = np.asarray(y, dtype=float)
    wts = trapezoid_weights(grid.n3, grid.spacing[2])
    inplane = y[..., :2] - rest_state(grid)[..., :2]
    v_col = y[..., 2]
    u = grid.h ** (-0.5 * grid.beta) * fold_vertical(inplane, wts, axis=2)
    v = grid.h ** (-0.5 * (grid.beta - 2.0)) * fold_vertical(v_col, wts, axis=2)
    xi_integrand = grid.x3[None, None, :, None] * inplane
    xi = grid.h ** (1.0 - grid.alpha) * fold_vertical(xi_integrand, wts, axis=2)
    return u, v, xi
