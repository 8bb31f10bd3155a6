from .grid import (
    DeformationField3,
    SlabGrid,
    clamp_values_ok,
    load_deformation,
    rest_state,
    save_deformation,
)
from .energy import (
    DEFAULT_HOURGLASS,
    InfeasibleStateError,
    scaled_gradient,
    slab_energy,
    slab_energy_gradient,
    slab_energy_hessian,
    slab_energy_terms,
)
from .solve import (
    LineSearchStallError,
    MaxIterationsError,
    SlabSolveResult,
    SolverError,
    SolverOptions,
    solve_slab_equilibrium,
)
from .diagnostics import (
    StrainStressFields,
    averaged_displacements,
    bad_set_measure,
    default_gamma,
    rotation_field,
    strain_field,
    strain_stress_diagnostics,
    stress_field,
)
from .probes import ProbeField, default_probe_family, equilibrium_residual

__all__ = [
    "DEFAULT_HOURGLASS",
    "DeformationField3",
    "InfeasibleStateError",
    "LineSearchStallError",
    "MaxIterationsError",
    "ProbeField",
    "SlabGrid",
    "SlabSolveResult",
    "SolverError",
    "SolverOptions",
    "StrainStressFields",
    "averaged_displacements",
    "bad_set_measure",
    "clamp_values_ok",
    "default_gamma",
    "default_probe_family",
    "equilibrium_residual",
    "load_deformation",
    "rest_state",
    "rotation_field",
    "save_deformation",
    "scaled_gradient",
    "slab_energy",
    "slab_energy_gradient",
    "slab_energy_hessian",
    "slab_energy_terms",
    "solve_slab_equilibrium",
    "strain_field",
    "strain_stress_diagnostics",
    "stress_field",
]
