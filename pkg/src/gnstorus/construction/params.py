"""Parameters of the two-branch construction and their validity constraints."""

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..errors import ConstraintError

DIRECTION_DENOMINATOR = 5  # every direction in the default set has coordinates in Z/5


@dataclass(frozen=True)
class ConstructionParams:
    """Amplitude, regularity and frequency parameters.

    N_k = A^(b^k).  ``tau`` is derived.  Construction raises ConstraintError
    naming the first violated parameter.
    """

    beta: float = 1.25
    alpha: float = 0.2
    epsilon: float = 0.1
    epsilon_prime: float = 0.05
    gamma: float = 0.1
    kappa: float = 0.05
    rho: float = 0.01
    A: int = 5
    b: int = 2
    K_max: int = 1

    def __post_init__(self):
        beta, alpha = self.beta, self.alpha
        if not 1.0 < beta < 2.0:
            raise ConstraintError("beta", f"need 1 < beta < 2, got {beta}")
        if not 0.0 < alpha <= beta - 1.0:
            raise ConstraintError("alpha", f"need 0 < alpha <= beta - 1 = {beta - 1:.6g}, got {alpha}")
        if not alpha < (2.0 - beta) / 3.0:
            raise ConstraintError("alpha", f"need alpha < (2 - beta)/3 = {(2 - beta) / 3:.6g}, got {alpha}")
        if self.epsilon <= 0:
            raise ConstraintError("epsilon", f"need epsilon > 0, got {self.epsilon}")
        if self.epsilon_prime <= 0:
            raise ConstraintError("epsilon_prime", f"need epsilon_prime > 0, got {self.epsilon_prime}")
        if not 0.0 < self.gamma <= (2.0 - beta - alpha) / 2.0:
            raise ConstraintError("gamma", f"need 0 < gamma <= (2 - beta - alpha)/2 = {(2 - beta - alpha) / 2:.6g}")
        if not 0.0 < self.kappa <= self.gamma / 2.0:
            raise ConstraintError("kappa", f"need 0 < kappa <= gamma/2 = {self.gamma / 2:.6g}")
        if not self.tau > 0:
            raise ConstraintError("tau", f"derived tau = {self.tau:.6g} must be positive")
        if not self.rho < beta * self.tau - alpha:
            raise ConstraintError("rho", f"need rho < beta*tau - alpha = {beta * self.tau - alpha:.6g}, got {self.rho}")
        if int(self.A) != self.A or self.A < 1 or self.A % DIRECTION_DENOMINATOR:
            raise ConstraintError("A", f"A must be a positive multiple of {DIRECTION_DENOMINATOR}, got {self.A}")
        if int(self.b) != self.b or self.b < 2:
            raise ConstraintError("b", f"need integer b >= 2, got {self.b}")
        if int(self.K_max) != self.K_max or self.K_max < 0:
            raise ConstraintError("K_max", f"need integer K_max >= 0, got {self.K_max}")

    @property
    def tau(self):
        return (2.0 - self.alpha - self.beta - self.gamma) / (2.0 * self.beta)

    def N(self, k):
        """Frequency of level k as an exact integer."""
        return int(self.A) ** (int(self.b) ** k)

    def lam(self, k):
        """Decay rate (2 pi N_k)^(2 beta) of level k."""
        return (2.0 * np.pi * self.N(k)) ** (2.0 * self.beta)

    @property
    def t0(self):
        """Separation time N_0^(-2 beta)."""
        return float(self.N(0)) ** (-2.0 * self.beta)

    def mollifier_length(self, k):
        return float(self.N(k + 1) * self.N(k)) ** -0.5

    def replace(self, **changes):
        d = asdict(self)
        d.update(changes)
        return ConstructionParams(**d)

    def as_dict(self):
        d = asdict(self)
        d["tau"] = self.tau
        return d

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]
