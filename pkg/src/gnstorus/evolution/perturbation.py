"""Duhamel corrector omega, the linearised semigroup and the separation ledger.

The corrector solves

    d_t omega + (-Lap)^beta omega + P div(omega(x)omega + v(x)omega + omega(x)v) = P div F,
    omega(t_min) = 0,

so that u = v + omega solves the equation on [t_min, 1].  It is computed as
the fixed point of the discrete Duhamel map on a geometric time grid.
"""

from dataclasses import dataclass, field

import numpy as np

from ..construction.flows import principal_flow_eval, principal_flow_derivative
from ..errors import BlowUpError, DomainError, NonContractionError
from ..littlewood_paley import BesovSpec, besov_norm
from ..norms import gradient_holder, sup_norm
from ..spectral import (
    SpectralField,
    fractional_laplacian,
    pointwise_product,
    project_div,
)
from .integrators import exponential_source_factor, picard_solve, product_integration_sweep, step_factors
from .timegrid import TimeGrid


def x_alpha_weights(params):
    a = 0.5 * (1.0 - params.tau)
    return a, a + 1.0 / (2.0 * params.beta)


def x_alpha_node(t, w, params):
    """t^((1-tau)/2) |w|_inf + t^((1-tau)/2 + 1/(2 beta)) |grad w|_{C^kappa}."""
    a, b = x_alpha_weights(params)
    return t**a * sup_norm(w) + t**b * gradient_holder(w, params.kappa)


@dataclass
class PerturbationState:
    times: np.ndarray
    omega: list  # SpectralField per node
    branch: int
    x_alpha_norm: float
    history: list = field(default_factory=list)
    converged: bool = False
    fixed_point_residual: float = None
    truncation_estimate: float = None
    pde_residual: dict = field(default_factory=dict)
    envelope: dict = field(default_factory=dict)

    def at(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * t:
            raise DomainError(f"t = {t} is not a node of the corrector grid")
        return self.omega[i]

    @property
    def contraction_factors(self):
        return [h["factor"] for h in self.history if h["factor"] is not None]


def corrector_grid(params, t_min_factor=1e-4, steps_per_decade=60):
    """Geometric grid from t_min = t_min_factor * t0 to 1 that contains t0."""
    t0 = params.t0
    return TimeGrid(t_min_factor * t0, 1.0, steps_per_decade, anchors=(t0,))


def nonlinear_part(v, w):
    """-P div(w(x)w + v(x)w + w(x)v)."""
    # the three products are the symmetric part of (w + 2v)(x)w
    return -project_div(pointwise_product(w + v * 2.0, w, "tensor_product"))


def integrand_at(residual, v, w, t):
    """P div F(t) plus the nonlinear part at time t."""
    return residual.forcing(t) + nonlinear_part(v, w)


def forcing_source(residual, times, beta):
    """Exact Duhamel integral of P div F over [t_j, t_j + h].

    Every forcing term is a fixed field times e^{-rate t}, so its
    contribution over a step is a diagonal multiplier applied to the field.
    Increments are cached, since every Picard sweep reuses them.
    """
    grid = residual.grid
    terms = residual.projected_terms()
    cache = {}

    def source(j, h):
        key = (j, h)
        if key not in cache:
            cache[key] = _source(j, h)
        return cache[key]

    def _source(j, h):
        out = np.zeros((2, grid.n, grid.n), complex)
        for f, rate in terms:
            w = np.exp(-rate * times[j])
            if w == 0.0:
                continue
            out += (w * exponential_source_factor(grid, beta, rate, h)) * f.coeffs
        return out

    return source


def _nonlinear_factory(bundle, branch, times):
    grid = bundle.grid

    def integrand(j, c):
        v = principal_flow_eval(bundle, branch, times[j])
        return nonlinear_part(v, SpectralField(grid, "vector", c)).coeffs

    return integrand


def perturbation_fixed_point(residual, bundle, branch, grid_t, picard_max=40, picard_tol=1e-10, evaluate_until=None):
    """Corrector for one branch.

    The forcing is integrated exactly; the nonlinear part is integrated by
    product integration of its linear interpolant.  Returns a
    PerturbationState with the converged trajectory, per-iteration
    contraction factors, the fixed-point residual of the returned state, the
    lower-limit truncation estimate and the midpoint PDE residual.
    """
    params = bundle.params
    grid = bundle.grid
    times = np.asarray(grid_t.samples)
    integrand = _nonlinear_factory(bundle, branch, times)
    source = forcing_source(residual, times, params.beta)

    def norm(j, c):
        return x_alpha_node(times[j], SpectralField(grid, "vector", c), params)

    start = np.zeros((2, grid.n, grid.n), complex)
    label = f"corrector branch {branch}"
    traj, history, ok = picard_solve(times, start, integrand, params.beta, grid, norm, picard_max, picard_tol, label=label, source=source)
    # one dry sweep measures the residual of the returned trajectory
    _, fp_residual, size = product_integration_sweep(times, start, traj, integrand, params.beta, grid, norm, write=False, source=source)
    omega = [SpectralField(grid, "vector", c) for c in traj]
    state = PerturbationState(times, omega, branch, size, history, ok, fp_residual)
    state.truncation_estimate = truncation_estimate(residual, params, times[0])
    state.pde_residual = midpoint_pde_residual(residual, bundle, branch, times, traj, until=evaluate_until)
    state.envelope = envelope_fit(state, params)
    if not ok:
        factors = state.contraction_factors
        if len(factors) >= 3 and all(f >= 1 for f in factors[-3:]):
            raise NonContractionError(f"{label} does not contract", history)
    return state


def truncation_estimate(residual, params, t_min, samples=8):
    """Size of the dropped piece int_0^t_min, bounded by the integrand envelope.

    With |P div F(s)| <~ s^(-1 + tau) Y near 0 the dropped integral is at
    most t_min^tau / tau times the weighted sup of the forcing over the first
    samples.
    """
    ts = np.geomspace(t_min * 1e-2, t_min, samples)
    env = max(t ** (1.0 - params.tau) * sup_norm(residual.forcing(t)) for t in ts)
    return env * t_min**params.tau / params.tau


def midpoint_pde_residual(residual, bundle, branch, times, traj, until=None):
    """Residual of u = v + omega in the equation at interval midpoints.

    Between nodes the scheme solves d_t omega + (-Lap)^beta omega =
    P div F + (linear interpolant of the nonlinear part) exactly, so the
    residual at a midpoint is the interpolant minus the nonlinear part
    re-evaluated there.  It is reported relative to
    max(|d_t u|, |(-Lap)^beta u|, |P div(u(x)u)|); midpoints where that
    scale underflows are skipped.
    """
    grid = bundle.grid
    beta = bundle.params.beta
    source = forcing_source(residual, times, beta)
    worst, worst_t, rows = 0.0, None, []
    stop = times[-1] if until is None else until
    g_prev = None
    for j in range(len(times) - 1):
        if times[j] >= stop:
            break
        t_a, t_b = times[j], times[j + 1]
        h = t_b - t_a
        if g_prev is None:
            g_prev = nonlinear_part(principal_flow_eval(bundle, branch, t_a), SpectralField(grid, "vector", traj[j])).coeffs
        g_next = nonlinear_part(principal_flow_eval(bundle, branch, t_b), SpectralField(grid, "vector", traj[j + 1])).coeffs
        e, p1, p2 = step_factors(grid, beta, 0.5 * h)
        dg = g_next - g_prev
        mid_c = e * traj[j] + 0.5 * h * (p1 * g_prev + p2 * 0.5 * dg) + source(j, 0.5 * h)
        t_m = t_a + 0.5 * h
        wm = SpectralField(grid, "vector", mid_c)
        vm = principal_flow_eval(bundle, branch, t_m)
        g_lin = g_prev + 0.5 * dg
        r = sup_norm(SpectralField(grid, "vector", g_lin - nonlinear_part(vm, wm).coeffs))
        u = vm + wm
        dt_w = residual.forcing(t_m) + SpectralField(grid, "vector", g_lin) - fractional_laplacian(wm, beta)
        dt_u = principal_flow_derivative(bundle, branch, t_m) + dt_w
        nl = project_div(pointwise_product(u, u, "tensor_product"))
        scale = max(sup_norm(fractional_laplacian(u, beta)), sup_norm(dt_u), sup_norm(nl))
        g_prev = g_next
        if scale < 1e-250:
            continue
        rel = r / scale
        rows.append((t_m, rel))
        if rel > worst:
            worst, worst_t = rel, t_m
    return {"max_relative": worst, "at": worst_t, "profile": rows}


def envelope_fit(state, params, decades=2.0):
    """Fit |omega(t)|_{B^{-1+rho}_{inf,inf}} ~ C t^p over the first decades above t_min."""
    t_min = state.times[0]
    ts, vals = [], []
    for t, w in zip(state.times[1:], state.omega[1:]):
        if t > t_min * 10**decades:
            break
        val = besov_norm(w, BesovSpec(-1.0 + params.rho))
        if val > 0:
            ts.append(t)
            vals.append(val)
    predicted = params.tau / 2.0 - (params.rho + params.alpha) / (2.0 * params.beta)
    if len(ts) < 3:
        return {"exponent": None, "predicted": predicted, "monotone": None}
    slope = float(np.polyfit(np.log(ts), np.log(vals), 1)[0])
    monotone = bool(np.all(np.diff(vals) >= -1e-12 * max(vals)))
    return {"exponent": slope, "predicted": predicted, "monotone": monotone, "samples": len(ts)}


# ------------------------------------------------------------ semigroup


def linearized_semigroup_apply(f, t_prime, t, bundle, branch, substeps=64):
    """P(t, t') f: start from P div f(t') and evolve
    d_t w + (-Lap)^beta w + P div(w(x)v + v(x)w) = 0 with v frozen per substep.

    ``f`` is a callable s -> symmetric tensor field.
    """
    if not 0 < t_prime <= t <= 1:
        raise DomainError(f"need 0 < t' <= t <= 1, got t'={t_prime}, t={t}")
    w = project_div(f(t_prime))
    if t == t_prime:
        return w
    beta = bundle.params.beta
    edges = np.geomspace(t_prime, t, substeps + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        v = principal_flow_eval(bundle, branch, a)
        w = _frozen_step(w, v, b - a, beta, a)
    return w


def _frozen_step(w, v, h, beta, t):
    """ETD2RK step of the linearised equation with v held fixed."""

    def rhs(x):
        return -project_div(pointwise_product(x, v, "tensor_product") * 2.0)

    e, p1, p2 = step_factors(w.grid, beta, h)
    n0 = rhs(w)
    a = w.with_coeffs(w.coeffs * e + h * p1 * n0.coeffs)
    n1 = rhs(a)
    out = a.with_coeffs(a.coeffs + h * p2 * (n1.coeffs - n0.coeffs))
    if not np.all(np.isfinite(out.coeffs)):
        raise BlowUpError(t + h)
    return out


# ------------------------------------------------------------ separation


def separation_report(bundle, states, t0=None):
    """Ledger of the two corrected solutions at the separation time.

    ``states`` maps branch -> PerturbationState.  Passing the same state for
    both entries (debug mode) gives zero separation.
    """
    params = bundle.params
    t0 = params.t0 if t0 is None else t0
    s1, s2 = states[1], states[2]
    u = {}
    for key, s in ((1, s1), (2, s2)):
        u[key] = principal_flow_eval(bundle, s.branch, t0) + s.at(t0)
    head_exact = params.epsilon * (2 * np.pi) ** 2 * params.N(0) ** (params.beta + params.alpha) * np.exp(-((2 * np.pi) ** (2 * params.beta)))
    head = sup_norm(bundle.heat_level(0, t0))
    higher = sum(sup_norm(bundle.heat_level(k, t0)) for k in bundle.levels if k >= 1)
    cascade = sum(sup_norm(bundle.cascade_level(k, t0)) for k in bundle.levels)
    return {
        "t0": t0,
        "separation": sup_norm(u[1] - u[2]),
        "head": head,
        "head_exact": head_exact,
        "heat_tail": higher,
        "cascade_total": cascade,
        "omega_1": sup_norm(s1.at(t0)),
        "omega_2": sup_norm(s2.at(t0)),
        "pde_residual_1": s1.pde_residual.get("max_relative"),
        "pde_residual_2": s2.pde_residual.get("max_relative"),
    }


def branch_agreement(bundle, t_mins, epsilon_prime=None):
    """|v1(t) - v2(t)| in B^{-beta-alpha-eps'}_{inf,inf} for each t in t_mins.

    The corrector vanishes at its own t_min, so this is the distance of the
    two corrected solutions at their starting time.
    """
    params = bundle.params
    ep = params.epsilon_prime if epsilon_prime is None else epsilon_prime
    spec = BesovSpec(-params.beta - params.alpha - ep)
    return [(t, besov_norm(principal_flow_eval(bundle, 1, t) - principal_flow_eval(bundle, 2, t), spec)) for t in t_mins]
