"""Build the desk-scale datum, follow both branches and print the separation ledger.

    python3 demos/two_branches.py [steps_per_decade]
"""

import sys

import numpy as np

from gnstorus.construction import ConstructionParams, assemble_initial_data, build_ladder, principal_flow_eval, residual_assemble
from gnstorus.evolution import corrector_grid, perturbation_fixed_point, separation_report
from gnstorus.norms import sup_norm
from gnstorus.spectral import GridSpec


def main(steps_per_decade=20):
    params = ConstructionParams()
    ladder = build_ladder(params, GridSpec(128, lattice=params.N(0)), strict=False)
    bundle = assemble_initial_data(ladder)
    print(f"stress bounds per level {np.round(ladder.bounds, 3)}, relaxations {np.round(ladder.relaxations, 5)}")

    print(f"{'t':>10} {'branch 1':>12} {'branch 2':>12}")
    for t in np.geomspace(params.t0 * 1e-4, 1.0, 9):
        v1, v2 = (sup_norm(principal_flow_eval(bundle, br, t)) for br in (1, 2))
        print(f"{t:10.3e} {v1:12.4e} {v2:12.4e}")

    grid_t = corrector_grid(params, 1e-4, steps_per_decade)
    states = {}
    for br in (1, 2):
        res = residual_assemble(bundle, br)
        states[br] = perturbation_fixed_point(res, bundle, br, grid_t, evaluate_until=params.t0)
        factors = ", ".join(f"{f:.3g}" for f in states[br].contraction_factors) or "none (converged at once)"
        print(f"branch {br}: X^alpha {states[br].x_alpha_norm:.3g}, contraction factors {factors}")

    ledger = separation_report(bundle, states)
    for key, value in ledger.items():
        print(f"{key:>16}: {value:.4g}")
    print(f"separation / head = {ledger['separation'] / ledger['head_exact']:.3f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20)
