"""Two-branch construction: parameters, directions, ladder, flows and residual."""

from .flows import FlowBundle, assemble_initial_data, empty_bundle, principal_flow_derivative, principal_flow_eval
from .geometry import BALL_RADIUS, DirectionSet, gamma_squared_field, reconstruction_residual, solve_gamma
from .ladder import LadderLevel, PotentialLadder, build_ladder, c_phi, c_principal, shear_potential, stress_ratio
from .params import ConstructionParams
from .residual import (
    ResidualBundle,
    cancellation_defect,
    defining_identity_defect,
    oscillation_direct,
    oscillation_expanded,
    product_identity_defect,
    residual_assemble,
    y_alpha_norm,
    y_alpha_profile,
)
