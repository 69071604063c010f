"""Inductive ladder of vector potentials Phi_k and amplitude fields a_{xi,k}.

Level 0 is the shear potential
    Phi_0 = N_0^(-2+beta+alpha) eps sin(2 pi N_0 x1) (0, 1).
Level k >= 1 uses
    M_k = S(Phi_{k-1}) / (N_k^(2 alpha) eps^2) + Id,
    a_{xi,k} = Gamma_xi(M_k),
    Theta_k = sum_xi a_{xi,k} e^{2 pi i N_k xi.x},
    W_k = sum_xi a_{xi,k} i xibar e^{2 pi i N_k xi.x},
    Phi_k = c_phi(k) perp_grad(Theta_k) mollified at scale (N_{k+1} N_k)^(-1/2),
with c_phi(k) = N_k^(-3+beta+alpha) eps sqrt(2) (2 pi)^(beta-3).  Theta_k and
W_k are real because a_{xi} = a_{-xi}.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import LadderError, ResolutionError
from ..littlewood_paley import pointwise_magnitude
from ..spectral import (
    SpectralField,
    divergence,
    modulate,
    mollify,
    perp_gradient,
    real_part,
    sym_gradient_S,
)
from .geometry import BALL_RADIUS, DirectionSet, gamma_squared_field
from .params import ConstructionParams

# spectral tail of an amplitude field at the dealias edge above this level means aliasing
TAIL_TOLERANCE = 1e-10


def c_phi(params, k):
    return params.N(k) ** (-3.0 + params.beta + params.alpha) * params.epsilon * np.sqrt(2.0) * (2 * np.pi) ** (params.beta - 3.0)


def c_principal(params, k):
    """Amplitude c_p(k) with v^p_k = -c_p(k) W_k at t = 0."""
    return params.N(k) ** (params.beta + params.alpha) * params.epsilon * np.sqrt(2.0) * (2 * np.pi) ** params.beta


@dataclass(frozen=True, eq=False)
class LadderLevel:
    k: int
    phi0: SpectralField
    amplitudes: tuple = ()  # a_{xi,k} per pair, level >= 1
    theta: SpectralField = None
    w: SpectralField = None
    mollifier_length: float = None
    relaxation: float = 1.0  # factor applied to S(Phi_{k-1}) before the Gamma solve
    info: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class PotentialLadder:
    params: ConstructionParams
    grid: object
    directions: DirectionSet
    levels: tuple
    bounds: tuple  # |S(Phi_k)/(N_{k+1}^(2 alpha) eps^2)|_inf for k = 0..K_max
    strict: bool = True

    @property
    def phi0(self):
        return [lev.phi0 for lev in self.levels]

    @property
    def relaxations(self):
        return [lev.relaxation for lev in self.levels]

    @property
    def exact(self):
        """True when no level needed relaxation."""
        return all(r == 1.0 for r in self.relaxations)


def stress_ratio(params, phi_prev, k):
    """S(Phi_{k-1}) / (N_k^(2 alpha) eps^2) as a tensor field."""
    return sym_gradient_S(phi_prev) * (1.0 / (params.N(k) ** (2 * params.alpha) * params.epsilon**2))


def shear_potential(params, grid, directions=None):
    """Phi_0 = N_0^(-2+beta+alpha) eps sin(2 pi N_0 xi.x) xibar for the first direction."""
    directions = directions or DirectionSet.default()
    amp = params.N(0) ** (-2.0 + params.beta + params.alpha) * params.epsilon
    q = directions.integer_wavevector(0, params.N(0))
    e = directions.perp(0)
    c = np.zeros((2, grid.n, grid.n), complex)
    ip, im = grid.index_of(q), grid.index_of((-q[0], -q[1]))
    for comp in range(2):
        # sin(theta) = (e^{i theta} - e^{-i theta}) / 2i
        c[(comp,) + ip] += amp * e[comp] / 2j
        c[(comp,) + im] -= amp * e[comp] / 2j
    return SpectralField(grid, "vector", c, real=True)


def _tail_ratio(f):
    """Largest coefficient outside the dealiased band relative to the largest overall."""
    mask = f.grid.dealias_mask
    c = np.abs(f.coeffs)
    top = c.max()
    return float(c[:, ~mask].max() / top) if top else 0.0


def build_level(params, grid, directions, phi_prev, k, strict=True, radius=BALL_RADIUS):
    """Amplitudes, Theta_k, W_k and Phi_k from Phi_{k-1}."""
    E = stress_ratio(params, phi_prev, k)
    e = E.physical()
    dist = pointwise_magnitude(e, "sym_tensor")  # |E| = |M - Id|
    worst = float(dist.max())
    relaxation = 1.0
    if worst > radius:
        if strict:
            raise LadderError(k - 1, worst, radius)
        relaxation = radius / worst
        e = e * relaxation
    g = gamma_squared_field(1.0 + e[0], e[1], 1.0 + e[2], directions)
    if np.any(g <= 0):
        raise LadderError(k - 1, worst, radius)
    N = params.N(k)
    amplitudes, theta, w = [], None, None
    for p in range(3):
        a = SpectralField.from_physical(grid, np.sqrt(g[p]))
        tail = _tail_ratio(a)
        if tail > TAIL_TOLERANCE:
            raise ResolutionError(f"amplitude a_{{xi,{k}}} is not resolved on n={grid.n} (tail {tail:.2e})")
        amplitudes.append(a)
        q = directions.integer_wavevector(p, N)
        plus = modulate(a, q)
        minus = modulate(a, (-q[0], -q[1]))
        t_p = real_part(plus + minus)
        ebar = directions.perp(p)
        # i xibar (e^{i theta} - e^{-i theta}) = -2 xibar sin(theta)
        s = real_part((plus - minus) * 1j)
        w_p = SpectralField(grid, "vector", np.stack([ebar[0] * s.coeffs[0], ebar[1] * s.coeffs[0]]))
        theta = t_p if theta is None else theta + t_p
        w = w_p if w is None else w + w_p
    length = params.mollifier_length(k)
    phi = mollify(perp_gradient(theta), length) * c_phi(params, k)
    info = {
        "max_distance_to_identity": worst,
        "relaxation": relaxation,
        "min_gamma_squared": float(g.min()),
        "amplitude_tail": max(_tail_ratio(a) for a in amplitudes),
    }
    return LadderLevel(k, phi, tuple(amplitudes), theta, w, length, relaxation, info)


def build_ladder(params, grid, strict=True, directions=None, radius=BALL_RADIUS):
    """Build levels 0..K_max.

    With ``strict`` a level whose stress ratio leaves the ``radius`` ball
    raises LadderError naming the level.  Otherwise the ratio is scaled
    uniformly onto the ball boundary and the factor is recorded as the
    level's ``relaxation``.
    """
    directions = directions or DirectionSet.default()
    if params.N(0) % directions.denominator:
        raise ResolutionError(f"A={params.A} is not divisible by {directions.denominator}")
    top = params.N(params.K_max)
    band = grid.lattice * (grid.dealias_fraction * grid.n / 2.0)
    if top >= band:
        raise ResolutionError(f"N_{params.K_max} = {top} exceeds the dealiased band {band:.0f} of the grid")
    if params.N(0) % grid.lattice:
        raise ResolutionError(f"grid lattice {grid.lattice} does not divide N_0 = {params.N(0)}")
    levels = [LadderLevel(0, shear_potential(params, grid, directions))]
    for k in range(1, params.K_max + 1):
        levels.append(build_level(params, grid, directions, levels[-1].phi0, k, strict, radius))
    bounds = []
    for k, lev in enumerate(levels):
        e = stress_ratio(params, lev.phi0, k + 1).physical()
        bounds.append(float(pointwise_magnitude(e, "sym_tensor").max()))
    return PotentialLadder(params, grid, directions, tuple(levels), tuple(bounds), strict)


def divergence_defect(ladder):
    """max_k |div Phi_k|_inf / |grad Phi_k|-scale, relative to |Phi_k|_inf times N_k."""
    out = []
    for k, lev in enumerate(ladder.levels):
        d = np.abs(divergence(lev.phi0).physical()).max()
        s = np.abs(lev.phi0.physical()).max() * 2 * np.pi * ladder.params.N(k)
        out.append(float(d / s) if s else 0.0)
    return max(out)
