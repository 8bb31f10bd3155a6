"""Bounded C^1 probe fields and the weak-form equilibrium residual.

A converged state is accepted as a stationary point when, for every probe
phi, the outer-variation identity

    integral DW(F) F^T : grad phi(y) dx  =  integral h^alpha g phi_3(y) dx

holds up to quadrature noise; the residual below is the maximum over the
probe family of the mismatch normalized by ||phi||_inf + ||grad phi||_inf.
Probes are a cutoff times a low-frequency profile; the cutoff vanishes on
the clamped part of the boundary by construction, so every probe is
admissible, and both the field and its gradient have closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..densities import EnergyDensity, stored_energy_derivative_many
from .energy import cell_center_positions, cell_center_scalar, scaled_gradient
from .grid import SlabGrid

CUTOFF_MARGIN = 0.2      # cutoff reaches 1 at this fraction of min(L1, L2) from the clamp
_QP_MAX = 1.5            # max slope of the cubic smoothstep


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _smoothstep_prime(t: np.ndarray) -> np.ndarray:
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, 6.0 * t - 6.0 * t * t, 0.0)


@dataclass(frozen=True)
class ProbeField:
    """phi(z) = cutoff(z1, z2) (a + b1 sin(pi z1/L1) + b2 sin(pi z2/L2)
    + b3 tanh(z3)) e_component."""

    length1: float
    length2: float
    clamp: str
    coeffs: tuple[float, float, float, float]
    component: int

    @property
    def width(self) -> float:
        return CUTOFF_MARGIN * min(self.length1, self.length2)

    def _cutoff_factors(self, z1: np.ndarray, z2: np.ndarray):
        # (value of the ramp argument, d(argument)/dz1, d/dz2) per factor
        w = self.width
        factors = []
        if self.clamp in ("full", "left"):
            factors.append((z1 / w, 1.0 / w, 0.0))
        if self.clamp in ("full", "right"):
            factors.append(((self.length1 - z1) / w, -1.0 / w, 0.0))
        if self.clamp in ("full", "bottom"):
            factors.append((z2 / w, 0.0, 1.0 / w))
        if self.clamp in ("full", "top"):
            factors.append(((self.length2 - z2) / w, 0.0, -1.0 / w))
        return factors

    def _cutoff(self, z1, z2):
        c = np.ones_like(z1)
        for t, _, _ in self._cutoff_factors(z1, z2):
            c = c * _smoothstep(t)
        return c

    def _cutoff_gradient(self, z1, z2):
        factors = self._cutoff_factors(z1, z2)
        vals = [_smoothstep(t) for t, _, _ in factors]
        d1 = np.zeros_like(z1)
        d2 = np.zeros_like(z1)
        for m, (t, dt1, dt2) in enumerate(factors):
            rest = np.ones_like(z1)
            for mm, v in enumerate(vals):
                if mm != m:
                    rest = rest * v
            qp = _smoothstep_prime(t)
            d1 = d1 + qp * dt1 * rest
            d2 = d2 + qp * dt2 * rest
        return d1, d2

    def _profile(self, z):
        a, b1, b2, b3 = self.coeffs
        return (a
                + b1 * np.sin(np.pi * z[..., 0] / self.length1)
                + b2 * np.sin(np.pi * z[..., 1] / self.length2)
                + b3 * np.tanh(z[..., 2]))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        val = self._cutoff(z[..., 0], z[..., 1]) * self._profile(z)
        out = np.zeros(z.shape)
        out[..., self.component] = val
        return out

    def gradient(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        a, b1, b2, b3 = self.coeffs
        c = self._cutoff(z[..., 0], z[..., 1])
        dc1, dc2 = self._cutoff_gradient(z[..., 0], z[..., 1])
        s = self._profile(z)
        ds1 = b1 * np.pi / self.length1 * np.cos(np.pi * z[..., 0] / self.length1)
        ds2 = b2 * np.pi / self.length2 * np.cos(np.pi * z[..., 1] / self.length2)
        ds3 = b3 * (1.0 - np.tanh(z[..., 2]) ** 2)
        out = np.zeros(z.shape[:-1] + (3, 3))
        k = self.component
        out[..., k, 0] = dc1 * s + c * ds1
        out[..., k, 1] = dc2 * s + c * ds2
        out[..., k, 2] = c * ds3
        return out

    def sup_bound(self) -> float:
        a, b1, b2, b3 = self.coeffs
        return abs(a) + abs(b1) + abs(b2) + abs(b3)

    def gradient_sup_bound(self) -> float:
        """Upper bound for the sup of the Frobenius norm of grad phi.

        Uses |cutoff| <= 1, |d cutoff| <= 1.5/width per in-plane direction
        (for full clamping the two ramps per axis have disjoint support when
        the side length is at least twice the width).
        """
        a, b1, b2, b3 = self.coeffs
        smax = self.sup_bound()
        dc = _QP_MAX / self.width
        col1 = dc * smax + abs(b1) * np.pi / self.length1
        col2 = dc * smax + abs(b2) * np.pi / self.length2
        col3 = abs(b3)
        return float(np.sqrt(col1**2 + col2**2 + col3**2))


_COEFF_SETS = (
    (1.0, 0.0, 0.0, 0.0),
    (0.0, 1.0, 0.0, 0.0),
    (0.0, 0.0, 1.0, 0.0),
    (0.0, 0.0, 0.0, 1.0),
    (0.5, 0.3, 0.3, 0.3),
)


@lru_cache(maxsize=32)
def _family(length1: float, length2: float, clamp: str) -> tuple[ProbeField, ...]:
    return tuple(ProbeField(length1, length2, clamp, coeffs, k)
                 for coeffs in _COEFF_SETS for k in range(3))


def default_probe_family(grid: SlabGrid) -> tuple[ProbeField, ...]:
    return _family(grid.length1, grid.length2, grid.clamp)


def equilibrium_residual(y: np.ndarray, grid: SlabGrid, density: EnergyDensity,
                         g: np.ndarray | None = None,
                         fields: tuple[ProbeField, ...] | None = None) -> float:
    """Max normalized weak-form residual over a probe family.

    One-point quadrature at cell centers with grad phi evaluated at the
    deformed positions.
    """
    y = np.asarray(y, dtype=float)
    fields = default_probe_family(grid) if fields is None else tuple(fields)
    F = scaled_gradient(y, grid)
    stress = stored_energy_derivative_many(density, F) @ np.swapaxes(F, -1, -2)
    z = cell_center_positions(y)
    vol = grid.cell_volume
    if g is not None:
        gc = cell_center_scalar(np.asarray(g, dtype=float))
        load_scale = grid.h ** grid.alpha
    worst = 0.0
    for phi in fields:
        gp = phi.gradient(z)
        lhs = vol * float(np.sum(stress * gp))
        rhs = 0.0
        if g is not None:
            phi3 = phi(z)[..., 2]
            rhs = load_scale * vol * float(np.sum(gc[:, :, None] * phi3))
        denom = phi.sup_bound() + phi.gradient_sup_bound()
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst
