"""Rational unit directions and the decomposition of symmetric matrices near Id.

A symmetric 2x2 matrix S close to the identity is written as
    S = sum over xi in Lambda of Gamma_xi(S)^2 xibar (x) xibar,
with Gamma_xi = Gamma_{-xi} > 0 and xibar the +90 degree rotation of xi.
Since the sum runs over both members of each +- pair, the three unknowns
g_p = Gamma^2 of the pairs solve 2 sum_p g_p xibar_p (x) xibar_p = S.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import ConfigurationError, DomainError

BALL_RADIUS = 1.0 / 7.0


def rotate(xi):
    """Rotation by +90 degrees."""
    return (-xi[1], xi[0])


@dataclass(frozen=True)
class DirectionSet:
    """Three +- pairs of rational unit vectors.

    ``pairs`` holds one representative of each pair as Fractions.
    """

    pairs: tuple

    def __post_init__(self):
        if len(self.pairs) != 3:
            raise ConfigurationError("a direction set needs exactly three +- pairs")
        for xi in self.pairs:
            if xi[0] ** 2 + xi[1] ** 2 != 1:
                raise ConfigurationError(f"{xi} is not a unit vector")

    @classmethod
    def default(cls):
        """{+-(1,0), +-(3/5,4/5), +-(3/5,-4/5)}: Gamma^2 > 0 on the whole 1/7 ball."""
        F = Fraction
        return cls(((F(1), F(0)), (F(3, 5), F(4, 5)), (F(3, 5), F(-4, 5))))

    @classmethod
    def axis_aligned(cls):
        """{+-(1,0), +-(0,1), +-(3/5,4/5)}: the third coefficient vanishes at S = Id."""
        F = Fraction
        return cls(((F(1), F(0)), (F(0), F(1)), (F(3, 5), F(4, 5))))

    @property
    def directions(self):
        """All six directions, each pair as (xi, -xi)."""
        out = []
        for xi in self.pairs:
            out.append(xi)
            out.append((-xi[0], -xi[1]))
        return out

    @property
    def denominator(self):
        d = 1
        for xi in self.pairs:
            for c in xi:
                d = np.lcm(d, c.denominator)
        return int(d)

    def as_float(self, p):
        return np.array([float(self.pairs[p][0]), float(self.pairs[p][1])])

    def perp(self, p):
        xi = self.pairs[p]
        return np.array([float(-xi[1]), float(xi[0])])

    def integer_wavevector(self, p, N):
        """N xi_p as an integer pair; raises if N xi_p is not integral."""
        out = []
        for c in self.pairs[p]:
            v = c * N
            if v.denominator != 1:
                raise ConfigurationError(f"N={N} times {self.pairs[p]} is not integral")
            out.append(int(v))
        return tuple(out)

    @property
    def system_matrix(self):
        """Columns 2 (xibar1^2, xibar1 xibar2, xibar2^2) per pair."""
        cols = []
        for p in range(3):
            e = self.perp(p)
            cols.append(2.0 * np.array([e[0] * e[0], e[0] * e[1], e[1] * e[1]]))
        return np.array(cols).T

    def reconstruct(self, g):
        """sum over all six directions of g xibar (x) xibar, as (S11, S12, S22)."""
        return np.tensordot(self.system_matrix, np.asarray(g), axes=(1, 0))


def operator_distance_to_identity(S11, S12, S22):
    """Pointwise operator norm of S - Id."""
    a, c = np.asarray(S11) - 1.0, np.asarray(S22) - 1.0
    return np.abs(0.5 * (a + c)) + np.hypot(0.5 * (a - c), np.asarray(S12))


def gamma_squared_field(S11, S12, S22, directions=None):
    """Gamma^2 per pair for arrays of symmetric matrices, shape (3, ...).

    No ball check; callers validate the inputs.
    """
    directions = directions or DirectionSet.default()
    rhs = np.stack([np.asarray(S11, float), np.asarray(S12, float), np.asarray(S22, float)])
    shape = rhs.shape[1:]
    sol = np.linalg.solve(directions.system_matrix, rhs.reshape(3, -1))
    return sol.reshape((3,) + shape)


def solve_gamma(S, directions=None, radius=BALL_RADIUS):
    """Coefficients Gamma_xi^2 for a symmetric matrix S with |S - Id| <= radius.

    Returns a dict mapping each of the six directions (as float pairs) to
    Gamma_xi^2.  Raises DomainError outside the ball and ConfigurationError
    if a coefficient is not strictly positive.
    """
    directions = directions or DirectionSet.default()
    S = np.asarray(S, dtype=float)
    if S.shape != (2, 2) or abs(S[0, 1] - S[1, 0]) > 1e-14 * max(1.0, np.abs(S).max()):
        raise DomainError("S must be a symmetric 2x2 matrix")
    dist = float(operator_distance_to_identity(S[0, 0], S[0, 1], S[1, 1]))
    if dist > radius * (1 + 1e-12):
        raise DomainError(f"|S - Id| = {dist:.6g} exceeds {radius:.6g}")
    g = gamma_squared_field(S[0, 0], S[0, 1], S[1, 1], directions)
    if np.any(g <= 0):
        raise ConfigurationError(f"non-positive coefficient {g.min():.3g}; the direction set is unsuitable")
    out = {}
    for p, xi in enumerate(directions.pairs):
        for sign in (1, -1):
            out[(sign * float(xi[0]), sign * float(xi[1]))] = float(g[p])
    return out


def reconstruction_residual(S, coeffs):
    """max entry of |sum Gamma^2 xibar (x) xibar - S| for a solve_gamma result."""
    total = np.zeros((2, 2))
    for xi, g in coeffs.items():
        e = np.array(rotate(xi))
        total += g * np.outer(e, e)
    return float(np.abs(total - np.asarray(S)).max())
