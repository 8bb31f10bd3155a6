"""Discrete energy of the rescaled slab and its exact derivatives.

Trilinear hexahedral elements on the uniform grid, one-point quadrature at
cell centers.  The discrete scaled gradient is computed as
Id + stencil(y - rest), which makes the rest state carry exactly zero
energy and gradient.  One-point quadrature leaves checkerboard hourglass
modes energy-free, so a small penalty on second differences of the
displacement is added by default (switchable off via a zero coefficient);
the penalty vanishes on affine fields and is O(spacing^2) on smooth ones.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from ..densities import EnergyDensity, stored_energy_derivative_many, stored_energy_many
from .grid import SlabGrid, fold_vertical, rest_state

DEFAULT_HOURGLASS = 1e-3

# corner order within a cell: index c = 4*o1 + 2*o2 + o3 with offsets o in {0,1}
CORNER_OFFSETS = [(c >> 2 & 1, c >> 1 & 1, c & 1) for c in range(8)]


class InfeasibleStateError(RuntimeError):
    """The state has a cell with nonpositive Jacobian (infinite energy)."""


def _corner_slice(w: np.ndarray, o: tuple[int, int, int]) -> np.ndarray:
    n1, n2, n3 = w.shape[:3]
    return w[o[0]:n1 - 1 + o[0], o[1]:n2 - 1 + o[1], o[2]:n3 - 1 + o[2]]


def _corner_weights(grid: SlabGrid) -> np.ndarray:
    """(8, 3) stencil weights: cell-center trilinear gradient, scaled by 1/h
    in the vertical column."""
    d1, d2, d3 = grid.spacing
    scale = np.array([1.0 / (4.0 * d1), 1.0 / (4.0 * d2), 1.0 / (4.0 * d3 * grid.h)])
    signs = np.array([[2 * o - 1 for o in offs] for offs in CORNER_OFFSETS], dtype=float)
    return signs * scale


def displacement_stencil(w: np.ndarray, grid: SlabGrid) -> np.ndarray:
    """Per-cell scaled gradient of a nodal displacement field."""
    W = _corner_weights(grid)
    nc = grid.cell_shape
    F = np.zeros(nc + (3, 3))
    for c, offs in enumerate(CORNER_OFFSETS):
        corner = _corner_slice(w, offs)
        F += corner[..., :, None] * W[c][None, None, None, None, :]
    return F


def scaled_gradient(y: np.ndarray, grid: SlabGrid) -> np.ndarray:
    """Scaled deformation gradient (grad', (1/h) d3) per cell.

    Exactly the identity at the rest state.
    """
    w = np.asarray(y, dtype=float) - rest_state(grid)
    return np.eye(3) + displacement_stencil(w, grid)


def cell_center_scalar(g: np.ndarray) -> np.ndarray:
    """Bilinear cell-center values of a nodal mid-surface field."""
    return 0.25 * (g[:-1, :-1] + g[1:, :-1] + g[:-1, 1:] + g[1:, 1:])


def cell_center_positions(y: np.ndarray) -> np.ndarray:
    """Eight-corner average of a nodal slab field; exact sign symmetry of the
    vertical stations is preserved by the fixed summation order."""
    acc = None
    for offs in CORNER_OFFSETS:
        part = _corner_slice(y, offs)
        acc = part if acc is None else acc + part
    return acc / 8.0


def _load_term(y: np.ndarray, grid: SlabGrid, g: np.ndarray) -> float:
    """integral of h^alpha g(x') y3 over the slab, one-point quadrature.

    The vertical sum pairs symmetric stations, so the odd moment of the
    rest state vanishes exactly.
    """
    gc = cell_center_scalar(np.asarray(g, dtype=float))
    y3c = cell_center_positions(np.asarray(y, dtype=float)[..., 2])
    nc3 = y3c.shape[-1]
    column = fold_vertical(gc[:, :, None] * y3c, np.ones(nc3))
    return grid.h ** grid.alpha * grid.cell_volume * float(np.sum(column))


@lru_cache(maxsize=32)
def _hourglass_matrix(grid: SlabGrid) -> sp.csr_matrix:
    """Quadratic-penalty matrix: sum over axes of (vol/d^2) * D2^T D2 per
    displacement component, with D2 the 1D second difference."""
    d = grid.spacing
    vol = grid.cell_volume
    sizes = (grid.n1, grid.n2, grid.n3)
    eyes = [sp.identity(n, format="csr") for n in sizes]
    total = None
    for axis in range(3):
        n = sizes[axis]
        if n < 3:
            continue
        D2 = sp.diags([np.ones(n - 2), -2.0 * np.ones(n - 2), np.ones(n - 2)],
                      offsets=[0, 1, 2], shape=(n - 2, n), format="csr")
        A = (D2.T @ D2) * (vol / d[axis] ** 2)
        factors = [eyes[0], eyes[1], eyes[2]]
        factors[axis] = A
        K = sp.kron(sp.kron(factors[0], factors[1]), factors[2])
        total = K if total is None else total + K
    if total is None:
        total = sp.csr_matrix((grid.node_count, grid.node_count))
    return sp.kron(total, sp.identity(3), format="csr")


class EnergyTerms(NamedTuple):
    elastic: float
    stabilization: float
    load: float

    @property
    def total(self) -> float:
        return self.elastic + self.stabilization - self.load


def slab_energy_terms(y: np.ndarray, grid: SlabGrid, density: EnergyDensity,
                      g: np.ndarray | None = None,
                      hourglass_coeff: float = DEFAULT_HOURGLASS) -> EnergyTerms:
    """Elastic, stabilization and load contributions to the slab energy.

    The elastic term is +inf when any quadrature point has a nonpositive
    Jacobian, honoring the orientation-preserving branch of the density.
    """
    y = np.asarray(y, dtype=float)
    F = scaled_gradient(y, grid)
    det = np.linalg.det(F)
    if np.any(det <= 0.0):
        elastic = np.inf
    else:
        wvals = stored_energy_many(density, F)
        elastic = grid.cell_volume * float(np.sum(wvals))
    if hourglass_coeff > 0.0:
        w = (y - rest_state(grid)).reshape(-1)
        K = _hourglass_matrix(grid)
        stab = 0.5 * hourglass_coeff * float(w @ (K @ w))
    else:
        stab = 0.0
    load = _load_term(y, grid, g) if g is not None else 0.0
    return EnergyTerms(elastic, stab, load)


def slab_energy(y: np.ndarray, grid: SlabGrid, density: EnergyDensity,
                g: np.ndarray | None = None,
                hourglass_coeff: float = DEFAULT_HOURGLASS) -> float:
    """Total discrete energy (extended real: +inf on infeasible states)."""
    return slab_energy_terms(y, grid, density, g, hourglass_coeff).total


@lru_cache(maxsize=32)
def _corner_node_ids(grid: SlabGrid) -> tuple[np.ndarray, ...]:
    nc1, nc2, nc3 = grid.cell_shape
    I, J, K = np.meshgrid(np.arange(nc1), np.arange(nc2), np.arange(nc3), indexing="ij")
    ids = []
    for o1, o2, o3 in CORNER_OFFSETS:
        ids.append((((I + o1) * grid.n2 + (J + o2)) * grid.n3 + (K + o3)).ravel())
    return tuple(ids)


def slab_energy_gradient(y: np.ndarray, grid: SlabGrid, density: EnergyDensity,
                         g: np.ndarray | None = None,
                         hourglass_coeff: float = DEFAULT_HOURGLASS) -> np.ndarray:
    """Exact gradient of the discrete energy w.r.t. nodal positions.

    Entries at clamped nodes are forced to zero (constraint elimination).
    Raises InfeasibleStateError when the energy is infinite at y.
    """
    y = np.asarray(y, dtype=float)
    F = scaled_gradient(y, grid)
    det = np.linalg.det(F)
    if np.any(det <= 0.0):
        raise InfeasibleStateError("infeasible state: nonpositive Jacobian at a quadrature point")
    nflat = grid.node_count
    grad = np.zeros((nflat, 3))
    P = stored_energy_derivative_many(density, F).reshape(-1, 3, 3) * grid.cell_volume
    W = _corner_weights(grid)
    ids = _corner_node_ids(grid)
    for c in range(8):
        force = P @ W[c]
        np.add.at(grad, ids[c], force)
    if g is not None:
        gc = cell_center_scalar(np.asarray(g, dtype=float))
        gc3 = np.broadcast_to(gc[:, :, None], grid.cell_shape).ravel()
        pull = -(grid.h ** grid.alpha) * grid.cell_volume / 8.0 * gc3
        for c in range(8):
            np.add.at(grad[:, 2], ids[c], pull)
    grad = grad.reshape(-1)
    if hourglass_coeff > 0.0:
        w = (y - rest_state(grid)).reshape(-1)
        grad = grad + hourglass_coeff * (_hourglass_matrix(grid) @ w)
    grad = grad.reshape(grid.n1, grid.n2, grid.n3, 3)
    grad[grid.clamped_node_mask] = 0.0
    return grad


@lru_cache(maxsize=32)
def _strain_displacement_matrix(grid: SlabGrid) -> np.ndarray:
    """(9, 24) map from the 24 corner displacements of a cell to vec(F)."""
    W = _corner_weights(grid)
    B = np.zeros((9, 24))
    for c in range(8):
        for m in range(3):
            for a in range(3):
                B[3 * m + a, 3 * c + m] = W[c, a]
    return B


@lru_cache(maxsize=32)
def _cell_dof_ids(grid: SlabGrid) -> np.ndarray:
    ids = _corner_node_ids(grid)
    ncells = ids[0].size
    dofs = np.empty((ncells, 24), dtype=np.int64)
    for c in range(8):
        for m in range(3):
            dofs[:, 3 * c + m] = 3 * ids[c] + m
    return dofs


def cell_tangent_stack(F: np.ndarray, density: EnergyDensity,
                       fd_step: float = 1e-4) -> np.ndarray:
    """Per-cell 9x9 second derivative of W by central differences of DW."""
    flat = F.reshape(-1, 3, 3)
    nc = flat.shape[0]
    step = fd_step * (1.0 + np.linalg.norm(flat, axis=(-2, -1)))
    H = np.empty((nc, 9, 9))
    for a in range(9):
        i, j = divmod(a, 3)
        Fp = flat.copy()
        Fm = flat.copy()
        Fp[:, i, j] += step
        Fm[:, i, j] -= step
        DWp = stored_energy_derivative_many(density, Fp)
        DWm = stored_energy_derivative_many(density, Fm)
        H[:, :, a] = ((DWp - DWm) / (2.0 * step)[:, None, None]).reshape(nc, 9)
    return 0.5 * (H + np.swapaxes(H, -1, -2))


def slab_energy_hessian(y: np.ndarray, grid: SlabGrid, density: EnergyDensity,
                        hourglass_coeff: float = DEFAULT_HOURGLASS,
                        fd_step: float = 1e-4,
                        eig_floor_rel: float = 1e-8) -> sp.csr_matrix:
    """Assembled model Hessian over all dofs, eigenvalue-floored per cell.

    Negative curvature of the nonconvex density is clipped at
    eig_floor_rel * trace/9 per cell, and the same relative floor is added
    globally, so Newton directions are always descent directions.
    """
    F = scaled_gradient(np.asarray(y, dtype=float), grid)
    H = cell_tangent_stack(F, density, fd_step)
    evals, evecs = np.linalg.eigh(H)
    floor = eig_floor_rel * np.maximum(np.trace(H, axis1=-2, axis2=-1), 9.0) / 9.0
    evals = np.maximum(evals, floor[:, None])
    H = np.einsum("nik,nk,njk->nij", evecs, evals, evecs)
    B = _strain_displacement_matrix(grid)
    blocks = np.einsum("pa,npq,qb->nab", B, H, B) * grid.cell_volume
    dofs = _cell_dof_ids(grid)
    rows = np.repeat(dofs, 24, axis=1).ravel()
    cols = np.tile(dofs, (1, 24)).ravel()
    ndof = 3 * grid.node_count
    K = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    if hourglass_coeff > 0.0:
        K = K + hourglass_coeff * _hourglass_matrix(grid)
    shift = eig_floor_rel * (K.diagonal().sum() / ndof)
    return K + shift * sp.identity(ndof, format="csr")
