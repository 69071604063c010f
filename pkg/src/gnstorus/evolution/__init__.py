"""Time evolution: exponential integrators, the mild solver and the corrector."""

from .integrators import (
    MildSolution,
    MildSolverConfig,
    d_norm,
    exponential_source_factor,
    exponential_step,
    mild_solve,
    nonlinearity,
    phi_functions,
    picard_solve,
    product_integration_sweep,
    step_factors,
)
from .perturbation import (
    PerturbationState,
    branch_agreement,
    corrector_grid,
    envelope_fit,
    integrand_at,
    nonlinear_part,
    forcing_source,
    linearized_semigroup_apply,
    midpoint_pde_residual,
    perturbation_fixed_point,
    separation_report,
    truncation_estimate,
    x_alpha_node,
)
from .timegrid import TimeGrid
