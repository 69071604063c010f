"""Initial datum and the two principal flows.

v_k^0 = Laplacian(Phi_k), V^0 = sum_k v_k^0.  Level k either follows its own
heat decay v_k(t) = v_k^0 e^{-lam_k t} or the faster cascade decay
vbar_k(t) = v_k^0 e^{-2 lam_{k+1} t}, with lam_k = (2 pi N_k)^(2 beta).
Branch 1 lets even levels follow heat decay and odd levels cascade; branch 2
swaps the roles.
"""

from dataclasses import dataclass

import numpy as np

from ..spectral import (
    SpectralField,
    laplacian,
    mollify,
    perp_gradient,
    sum_fields,
)
from .ladder import c_phi, c_principal


@dataclass(frozen=True, eq=False)
class FlowBundle:
    ladder: object
    v0: tuple  # v_k^0 per level
    principal0: tuple  # v_k^{0,p}, None at level 0
    error1: tuple  # v_k^{0,e,1}
    error2: tuple  # v_k^{0,e,2}

    @property
    def params(self):
        return self.ladder.params

    @property
    def grid(self):
        return self.ladder.grid

    @property
    def levels(self):
        return range(len(self.v0))

    @property
    def datum(self):
        """V^0."""
        return sum_fields(self.v0)

    def rate(self, k):
        return self.params.lam(k)

    def heat_levels(self, branch):
        _check_branch(branch)
        return [k for k in self.levels if k % 2 == (branch - 1)]

    def cascade_levels(self, branch):
        _check_branch(branch)
        return [k for k in self.levels if k % 2 != (branch - 1)]

    def level_weight(self, branch, k, t):
        """Time factor of level k in the given branch."""
        if k in self.heat_levels(branch):
            return float(np.exp(-self.rate(k) * t))
        return float(np.exp(-2.0 * self.rate(k + 1) * t))

    def level_weight_derivative(self, branch, k, t):
        if k in self.heat_levels(branch):
            return -self.rate(k) * float(np.exp(-self.rate(k) * t))
        r = 2.0 * self.rate(k + 1)
        return -r * float(np.exp(-r * t))

    def heat_level(self, k, t):
        """v_k(t)."""
        return self.v0[k] * float(np.exp(-self.rate(k) * t))

    def cascade_level(self, k, t):
        """vbar_k(t)."""
        return self.v0[k] * float(np.exp(-2.0 * self.rate(k + 1) * t))

    def principal_part(self, k, t):
        """v^p_k(t) = v_k^{0,p} e^{-lam_k t}; v^p_0 is v_0 itself."""
        base = self.v0[0] if k == 0 else self.principal0[k]
        return base * float(np.exp(-self.rate(k) * t))


def _check_branch(branch):
    if branch not in (1, 2):
        raise ValueError(f"branch must be 1 or 2, got {branch}")


def assemble_initial_data(ladder):
    """v_k^0 and the decomposition v_k^0 = v^{0,p} + v^{0,e,1} + v^{0,e,2} for k >= 1."""
    params = ladder.params
    v0, pr, e1, e2 = [], [None], [None], [None]
    for k, lev in enumerate(ladder.levels):
        v0.append(laplacian(lev.phi0))
        if k == 0:
            continue
        unmollified = laplacian(perp_gradient(lev.theta)) * c_phi(params, k)
        principal = lev.w * (-c_principal(params, k))
        pr.append(principal)
        e1.append(unmollified - principal)
        e2.append(mollify(unmollified, lev.mollifier_length) - unmollified)
    return FlowBundle(ladder, tuple(v0), tuple(pr), tuple(e1), tuple(e2))


def principal_flow_eval(bundle, branch, t):
    """v^(branch)(t) by exact exponential scaling of the stored levels."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return sum_fields(bundle.v0[k] * bundle.level_weight(branch, k, t) for k in bundle.levels)


def principal_flow_derivative(bundle, branch, t):
    """d/dt v^(branch)(t), differentiating the exponential factors."""
    return sum_fields(bundle.v0[k] * bundle.level_weight_derivative(branch, k, t) for k in bundle.levels)


def empty_bundle(grid, params):
    """Bundle with a single zero level, for diagnostics with v = 0."""
    from .ladder import LadderLevel, PotentialLadder
    from .geometry import DirectionSet

    zero = SpectralField.zeros(grid, "vector")
    ladder = PotentialLadder(params.replace(K_max=0), grid, DirectionSet.default(), (LadderLevel(0, zero),), (0.0,))
    return FlowBundle(ladder, (zero,), (None,), (None,), (None,))
