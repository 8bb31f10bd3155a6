"""Damped Newton descent for stationary points of the slab energy.

Stationary points are found by energy minimization from the rest state;
the weak-form equilibrium residual is verified afterwards (see probes).
Steps that would make the energy infinite (nonpositive Jacobian) are
rejected by the backtracking line search, so orientation is preserved
along the whole iteration.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from ..densities import EnergyDensity
from .energy import (
    DEFAULT_HOURGLASS,
    slab_energy_gradient,
    slab_energy_hessian,
    slab_energy_terms,
)
from .grid import DeformationField3, SlabGrid, rest_state


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-11              # 2-norm of the free-dof gradient
    max_iterations: int = 200
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    min_step: float = 1e-14
    hourglass_coeff: float = DEFAULT_HOURGLASS
    hessian_fd_step: float = 1e-4
    eig_floor_rel: float = 1e-8


@dataclass
class SlabSolveResult:
    field: DeformationField3
    iterations: int
    gradient_norm: float
    energy: float
    elastic_energy: float
    converged: bool
    residual_history: list[float] = field(default_factory=list)


class SolverError(RuntimeError):
    def __init__(self, message: str, result: SlabSolveResult):
        super().__init__(message)
        self.result = result


class MaxIterationsError(SolverError):
    pass


class LineSearchStallError(SolverError):
    pass


def solve_slab_equilibrium(grid: SlabGrid, density: EnergyDensity,
                           g: np.ndarray | None = None,
                           options: SolverOptions | None = None) -> SlabSolveResult:
    """Minimize the slab energy from the rest state.

    Damped Newton with a per-cell eigenvalue-floored model Hessian and
    Armijo backtracking.  Returns once the free-dof gradient norm drops
    below ``options.tol``; with zero load this happens immediately at the
    rest state.

    Raises
    ------
    MaxIterationsError
        Tolerance not reached within the iteration budget (best iterate
        attached to the exception's ``result``).
    LineSearchStallError
        The backtracking step underflowed ``options.min_step``.
    """
    opts = options or SolverOptions()
    y = rest_state(grid)
    free = grid.free_dof_indices
    kw = dict(hourglass_coeff=opts.hourglass_coeff)

    def pack_result(it, gnorm, converged):
        terms = slab_energy_terms(y, grid, density, g, opts.hourglass_coeff)
        return SlabSolveResult(DeformationField3(grid, y.copy()), it, gnorm,
                               terms.total, terms.elastic, converged, history)

    history: list[float] = []
    energy = slab_energy_terms(y, grid, density, g, opts.hourglass_coeff).total
    for it in range(opts.max_iterations + 1):
        grad = slab_energy_gradient(y, grid, density, g, **kw).reshape(-1)
        gnorm = float(np.linalg.norm(grad[free]))
        history.append(gnorm)
        if gnorm <= opts.tol:
            return pack_result(it, gnorm, True)
        if it == opts.max_iterations:
            raise MaxIterationsError("max iterations exceeded", pack_result(it, gnorm, False))
        K = slab_energy_hessian(y, grid, density, opts.hourglass_coeff,
                                opts.hessian_fd_step, opts.eig_floor_rel)
        Kff = K[free][:, free].tocsc()
        lu = spla.splu(Kff)
        step_free = lu.solve(-grad[free])
        slope = float(grad[free] @ step_free)
        if not np.isfinite(slope) or slope >= 0.0:
            step_free = -grad[free]
            slope = -float(grad[free] @ grad[free])
        direction = np.zeros_like(grad)
        direction[free] = step_free
        direction = direction.reshape(y.shape)

        t = 1.0
        while True:
            trial = y + t * direction
            trial_energy = slab_energy_terms(trial, grid, density, g,
                                             opts.hourglass_coeff).total
            if trial_energy <= energy + opts.armijo_c1 * t * slope:
                break
            t *= opts.backtrack_factor
            if t < opts.min_step:
                raise LineSearchStallError("line search stalled",
                                           pack_result(it, gnorm, False))
        y = trial
        energy = trial_energy
    raise AssertionError("unreachable")
