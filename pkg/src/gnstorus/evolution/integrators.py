"""Exponential integrators and Duhamel product integration.

The linear part (-Lap)^beta is diagonal in Fourier space and is always
integrated exactly.  With L = -(2 pi |l|)^(2 beta),

    phi1(z) = (e^z - 1) / z,    phi2(z) = (e^z - 1 - z) / z^2,

and an integrand G that is linear in s on [t_j, t_j + h],

    int_0^h e^{(h-s) L} G(t_j + s) ds = h phi1(hL) G_j + h phi2(hL) (G_{j+1} - G_j).
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import BlowUpError, DomainError, NonContractionError
from ..norms import sup_norm
from ..spectral import SpectralField, divergence, leray, pointwise_product, project_div
from .timegrid import TimeGrid


def phi_functions(z):
    """e^z, phi1(z), phi2(z) for an array of z <= 0, accurate for small |z|."""
    z = np.asarray(z, dtype=float)
    e = np.exp(z)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    p1 = np.where(small, 1 + z / 2 + z * z / 6 + z**3 / 24 + z**4 / 120, np.expm1(zs) / zs)
    p2 = np.where(small, 0.5 + z / 6 + z * z / 24 + z**3 / 120 + z**4 / 720, (np.expm1(zs) - zs) / (zs * zs))
    return e, p1, p2


def _radial_symbol(grid, beta):
    k, inv = grid.radial
    return (2.0 * np.pi * k) ** (2.0 * beta), inv


def step_factors(grid, beta, h):
    """e^{-h a}, phi1(-h a), phi2(-h a) with a = (2 pi |l|)^(2 beta).

    Evaluated on the distinct values of |l| only.
    """
    a, inv = _radial_symbol(grid, beta)
    return tuple(f[inv] for f in phi_functions(-h * a))


def exponential_source_factor(grid, beta, rate, h):
    """int_0^h e^{-(h-s)(-Lap)^beta} e^{-rate s} ds as a Fourier multiplier.

    Written as h e^{-min(a, r) h} phi1(-|a - r| h) so it never overflows.
    """
    a, inv = _radial_symbol(grid, beta)
    lo = np.minimum(a, rate)
    _, p1, _ = phi_functions(-np.abs(a - rate) * h)
    return (h * np.exp(-lo * h) * p1)[inv]


def nonlinearity(u):
    """-P div(u (x) u)."""
    return -project_div(pointwise_product(u, u, "tensor_product"))


def _check_finite(c, t):
    if not np.all(np.isfinite(c)):
        raise BlowUpError(t)


def exponential_step(u, h, beta, nonlinear=True, t=0.0, force=None):
    """One two-stage exponential Runge-Kutta step (ETD2RK) of
    d_t u + (-Lap)^beta u + P div(u (x) u) = force.

    ``force`` is an optional callable s -> vector field added to the
    nonlinearity, evaluated at the stage times.  The result is re-projected.
    """
    if h <= 0:
        raise DomainError(f"step must be positive, got {h}")
    e, p1, p2 = step_factors(u.grid, beta, h)

    def rhs(w, s):
        out = nonlinearity(w) if nonlinear else None
        if force is not None:
            f = force(s)
            out = f if out is None else out + f
        return out

    n0 = rhs(u, t)
    if n0 is None:
        out = u.with_coeffs(u.coeffs * e)
    else:
        a = u.with_coeffs(u.coeffs * e + h * p1 * n0.coeffs)
        n1 = rhs(a, t + h)
        out = a.with_coeffs(a.coeffs + h * p2 * (n1.coeffs - n0.coeffs))
        out = leray(out)
    _check_finite(out.coeffs, t + h)
    return out


@dataclass(frozen=True)
class MildSolverConfig:
    """Time discretisation and Picard controls for the mild solver.

    dt_policy ``geometric`` uses ``steps_per_decade`` samples per decade from
    ``t_min``; ``fixed`` uses a uniform step ``dt``.  ``mode`` is ``stepper``
    (ETD2RK marching) or ``picard`` (iterate the Duhamel map).  ``smallness``
    is the datum size below which contraction is expected.
    """

    dt_policy: str = "geometric"
    dt: float = 1e-3
    t_min: float = 1e-6
    steps_per_decade: int = 40
    mode: str = "stepper"
    picard_max: int = 30
    picard_tol: float = 1e-10
    smallness: float = 1e-2

    def __post_init__(self):
        if self.picard_tol <= 0:
            raise DomainError(f"picard_tol must be positive, got {self.picard_tol}")
        if self.dt_policy not in ("geometric", "fixed"):
            raise DomainError(f"unknown dt policy {self.dt_policy!r}")
        if self.mode not in ("stepper", "picard"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.dt <= 0 or self.t_min <= 0:
            raise DomainError("dt and t_min must be positive")

    def times(self, T):
        if self.dt_policy == "fixed":
            count = max(1, int(np.ceil(T / self.dt)))
            return np.linspace(0.0, T, count + 1)
        return np.concatenate([[0.0], TimeGrid(min(self.t_min, T / 10), T, self.steps_per_decade).samples])


@dataclass
class MildSolution:
    times: np.ndarray
    states: list
    d_norm: float
    history: list = field(default_factory=list)
    converged: bool = True

    @property
    def final(self):
        return self.states[-1]


def d_norm(times, states, beta, alpha):
    """sup_t t^((beta + alpha)/(2 beta)) |u(t)|_inf."""
    w = (beta + alpha) / (2.0 * beta)
    return max((t**w * sup_norm(u) for t, u in zip(times, states) if t > 0), default=0.0)


def product_integration_sweep(times, start, old, integrand, beta, grid, norm=None, write=True, source=None):
    """One application of the discrete Duhamel map.

    ``old`` holds the previous iterate (coefficient arrays, one per node);
    ``integrand(j, coeffs)`` returns the projected integrand at node j for
    the previous iterate.  Returns the new iterate and the sup over nodes of
    ``norm(j, new - old)`` and of ``norm(j, new)``.  With ``write`` the new
    iterate replaces ``old`` node by node, so only one trajectory is held in
    memory.  ``source(j, h)`` optionally adds an exactly integrated
    contribution over [t_j, t_j + h].
    """
    new = old if write else [None] * len(old)
    g_prev = integrand(0, old[0])
    y = start
    worst = norm(0, start - old[0]) if norm is not None else 0.0
    size = norm(0, start) if norm is not None else 0.0
    new[0] = start
    for j in range(len(times) - 1):
        h = times[j + 1] - times[j]
        e, p1, p2 = step_factors(grid, beta, h)
        g_next = integrand(j + 1, old[j + 1])
        y = e * y + h * (p1 * g_prev + p2 * (g_next - g_prev))
        if source is not None:
            y = y + source(j, h)
        _check_finite(y, times[j + 1])
        if norm is not None:
            worst = max(worst, norm(j + 1, y - old[j + 1]))
            size = max(size, norm(j + 1, y))
        new[j + 1] = y
        g_prev = g_next
    return new, worst, size


def picard_solve(times, start, integrand, beta, grid, norm, max_iter, tol, initial=None, label="Picard", source=None):
    """Iterate the discrete Duhamel map to a fixed point.

    ``norm(j, coeffs)`` is the weighted node norm whose sup over j defines the
    trajectory norm.  Stops when |y_{n+1} - y_n| <= tol (1 + |y_{n+1}|).
    Raises NonContractionError when the step length grows three times in a
    row.
    """
    traj = [start.copy() for _ in times] if initial is None else [c.copy() for c in initial]
    history = []
    growth = 0
    prev = None
    for it in range(1, max_iter + 1):
        traj, diff, total = product_integration_sweep(times, start, traj, integrand, beta, grid, norm, source=source)
        factor = diff / prev if prev else None
        history.append({"iteration": it, "step": diff, "norm": total, "factor": factor})
        if prev is not None and diff > prev:
            growth += 1
            if growth >= 3:
                raise NonContractionError(f"{label} iteration diverges (step grew 3 times)", history)
        else:
            growth = 0
        if diff <= tol * (1.0 + total):
            return traj, history, True
        prev = diff
    return traj, history, False


def mild_solve(u0, T, config, beta, alpha=0.0):
    """Solve d_t u + (-Lap)^beta u + P div(u(x)u) = 0 from u0 up to time T.

    Returns a MildSolution with the trajectory and its D-norm.
    """
    if not 0 < T <= 1:
        raise DomainError(f"horizon must lie in (0, 1], got {T}")
    div = sup_norm(divergence(u0))
    if div > 1e-9 * u0.grid.n * max(sup_norm(u0), 1e-300):
        raise DomainError("initial datum is not divergence free")
    times = config.times(T)
    if config.mode == "stepper":
        states = [u0]
        u = u0
        for j in range(len(times) - 1):
            u = exponential_step(u, times[j + 1] - times[j], beta, t=times[j])
            states.append(u)
        return MildSolution(times, states, d_norm(times, states, beta, alpha))

    grid = u0.grid
    w = (beta + alpha) / (2.0 * beta)

    def integrand(j, c):
        return nonlinearity(SpectralField(grid, "vector", c)).coeffs

    def norm(j, c):
        t = times[j]
        return t**w * sup_norm(SpectralField(grid, "vector", c)) if t > 0 else 0.0

    start = np.array(u0.coeffs)
    traj, history, ok = picard_solve(times, start, integrand, beta, grid, norm, config.picard_max, config.picard_tol)
    states = [SpectralField(grid, "vector", c) for c in traj]
    return MildSolution(times, states, d_norm(times, states, beta, alpha), history, ok)
