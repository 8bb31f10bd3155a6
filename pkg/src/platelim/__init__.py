"""Thin hyperelastic slabs, their equilibria, and the plate models they limit to."""

from .densities import (
    CheckReport,
    EnergyDensity,
    QuadForm2,
    Tensor4,
    check_coercivity,
    check_derivative_consistency,
    check_frame_indifference,
    check_stress_growth,
    isotropic_tangent,
    plane_stress_reduction,
    run_all_checks,
    stored_energy,
    stored_energy_derivative,
    tangent_at_identity,
)

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "EnergyDensity",
    "QuadForm2",
    "Tensor4",
    "check_coercivity",
    "check_derivative_consistency",
    "check_frame_indifference",
    "check_stress_growth",
    "isotropic_tangent",
    "plane_stress_reduction",
    "run_all_checks",
    "stored_energy",
    "stored_energy_derivative",
    "tangent_at_identity",
    "__version__",
]
