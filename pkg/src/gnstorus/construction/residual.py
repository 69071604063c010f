"""Residual stress F = F1 + F2 + F3 + F4 of a principal flow.

Each piece is a fixed symmetric tensor times a scalar exponential in t, so
F(t) for any t is a cheap linear combination.  With H the heat levels and C
the cascade levels of a branch:

    F1 = -sum_{k in H} ((-Lap)^beta - lam_k) S(Phi_k) e^{-lam_k t}
    F2 = -sum_{k in C} (-Lap)^beta S(Phi_k) e^{-2 lam_{k+1} t}
    F3 = -sum_{k in C} R[ div(d_t Rbar_k + v^p_{k+1} (x) v^p_{k+1}) - grad p_{k+1} ]
    F4 = -v (x) v + sum_{k in H} v^p_k (x) v^p_k,         v^p_0 = v_0

with Rbar_k = S(Phi_k) e^{-2 lam_{k+1} t}, R the antidivergence and
p_k = (|v^p_k|^2 + c_p(k)^2 e^{-2 lam_k t} Theta_k^2) / 2.  These satisfy

    P div F = -(d_t v + (-Lap)^beta v + P div(v (x) v)),

which is the sign under which u = v + omega solves the equation when omega
solves the Duhamel problem driven by P div F.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..norms import gradient_holder, sup_norm
from ..spectral import (
    SpectralField,
    antidivergence_R,
    divergence,
    fractional_laplacian,
    fractional_symbol,
    gradient,
    modulate,
    pointwise_product,
    project_div,
    real_part,
    sum_fields,
    sym_gradient_S,
)
from .flows import principal_flow_derivative, principal_flow_eval
from .ladder import c_principal


@dataclass(frozen=True, eq=False)
class ResidualTerm:
    """tensor * exp(-rate * t), tagged with the component it belongs to."""

    component: str
    tensor: SpectralField
    rate: float
    label: str = ""

    def weight(self, t):
        return float(np.exp(-self.rate * t))


@dataclass(frozen=True, eq=False)
class ResidualBundle:
    bundle: object
    branch: int
    terms: tuple
    pressures: dict = field(default_factory=dict)  # k -> static part of p_k (multiply by e^{-2 lam_k t})
    meta: dict = field(default_factory=dict)
    _projected: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self):
        return self.bundle.grid

    def component(self, name, t):
        parts = [term.tensor * term.weight(t) for term in self.terms if term.component == name]
        return sum_fields(parts, self.grid, "sym_tensor")

    def total(self, t):
        return sum_fields([term.tensor * term.weight(t) for term in self.terms], self.grid, "sym_tensor")

    def projected_terms(self):
        """[(P div tensor, rate)] for every term, computed once."""
        for i, term in enumerate(self.terms):
            if i not in self._projected:
                self._projected[i] = project_div(term.tensor)
        return [(self._projected[i], term.rate) for i, term in enumerate(self.terms)]

    def forcing(self, t):
        """P div F(t) from precomputed projected divergences."""
        parts = [f * float(np.exp(-rate * t)) for f, rate in self.projected_terms()]
        return sum_fields(parts, self.grid, "vector")

    def snapshot(self, t):
        """Dict with F1..F4 and F at time t."""
        snap = {name: self.component(name, t) for name in ("F1", "F2", "F3", "F4")}
        snap["F"] = self.total(t)
        snap["t"] = t
        return snap


def pressure_static(ladder, k):
    """(|W_k|^2 + Theta_k^2) c_p(k)^2 / 2, the time-independent part of p_k."""
    lev = ladder.levels[k]
    cp = c_principal(ladder.params, k)
    w2 = pointwise_product(lev.w, lev.w, "dot")
    t2 = pointwise_product(lev.theta, lev.theta, "scalar")
    return (w2 + t2) * (0.5 * cp**2)


def oscillation_direct(ladder, k):
    """div(W_k (x) W_k) - grad(|W_k|^2 + Theta_k^2)/2.

    For constant amplitudes this vanishes identically (W_k is a multiple of
    perp_grad Theta_k and Theta_k is a Laplacian eigenfunction), so only
    derivatives of the amplitudes survive.
    """
    lev = ladder.levels[k]
    ww = pointwise_product(lev.w, lev.w, "tensor_product")
    w2 = pointwise_product(lev.w, lev.w, "dot")
    t2 = pointwise_product(lev.theta, lev.theta, "scalar")
    return divergence(ww) - gradient(w2 + t2) * 0.5


def mean_stress(ladder, k):
    """sum over directions of a_xi^2 xibar (x) xibar from the stored amplitude fields."""
    lev = ladder.levels[k]
    d = ladder.directions
    out = None
    for p, a in enumerate(lev.amplitudes):
        e = d.perp(p)
        a2 = pointwise_product(a, a, "scalar")
        c = a2.coeffs[0] * 2.0
        t = SpectralField(ladder.grid, "sym_tensor", np.stack([e[0] * e[0] * c, e[0] * e[1] * c, e[1] * e[1] * c]))
        out = t if out is None else out + t
    return out


def oscillation_expanded(ladder, k):
    """Same quantity as oscillation_direct with derivatives on the amplitudes only.

    div(W(x)W) - grad(|W|^2 + Theta^2)/2
        = sum over (xi1, xi2) of [ -xibar2 (xibar1 . grad)(a1 a2)
                                   - (1 - xibar1 . xibar2) grad(a1 a2) / 2 ] e^{2 pi i N (xi1 + xi2).x}
    The pairs xi2 = -xi1 give the slow part div(M) - grad(tr M) with
    M = sum a_xi^2 xibar (x) xibar; the pairs xi2 != -xi1 oscillate.
    """
    lev = ladder.levels[k]
    d = ladder.directions
    N = ladder.params.N(k)
    dirs = []
    for p in range(3):
        q = d.integer_wavevector(p, N)
        e = d.perp(p)
        dirs.append((p, q, e))
        dirs.append((p, (-q[0], -q[1]), -e))
    total = None
    for p1, q1, e1 in dirs:
        for p2, q2, e2 in dirs:
            prod = pointwise_product(lev.amplitudes[p1], lev.amplitudes[p2], "scalar")
            g = gradient(prod).coeffs
            slow = e1[0] * g[0] + e1[1] * g[1]
            c = np.stack([-e2[0] * slow, -e2[1] * slow]) - 0.5 * (1.0 - e1 @ e2) * g
            term = SpectralField(ladder.grid, "vector", c, real=True)
            shift = (q1[0] + q2[0], q1[1] + q2[1])
            if shift != (0, 0):
                term = modulate(term, shift)
            total = term if total is None else total + term
    return real_part(total)


def product_identity_defect(grid, amplitudes, N, directions=None, sign=1.0):
    """Relative size of div(W(x)W) - grad(|W|^2 + sign Theta^2)/2 for constant amplitudes.

    Theta = sum_xi b_xi e^{2 pi i N xi.x} and W = sum_xi b_xi i xibar e^{2 pi i N xi.x}
    with b_xi = b_{-xi} given per pair in ``amplitudes``.  Both fields are
    real, and the combination vanishes for sign = +1.
    """
    from .geometry import DirectionSet

    directions = directions or DirectionSet.default()
    theta = SpectralField.zeros(grid, "scalar")
    w = SpectralField.zeros(grid, "vector")
    for p, b in enumerate(amplitudes):
        q = directions.integer_wavevector(p, N)
        e = directions.perp(p)
        for s in (1, -1):
            mode = SpectralField.single_mode(grid, (s * q[0], s * q[1]), b)
            theta = theta + mode
            w = w + SpectralField(grid, "vector", np.stack([1j * s * e[0] * mode.coeffs[0], 1j * s * e[1] * mode.coeffs[0]]))
    theta, w = real_part(theta), real_part(w)
    ww = pointwise_product(w, w, "tensor_product")
    w2 = pointwise_product(w, w, "dot")
    t2 = pointwise_product(theta, theta, "scalar")
    lhs = divergence(ww)
    out = lhs - gradient(w2 + t2 * sign) * 0.5
    return sup_norm(out) / sup_norm(lhs)


def residual_assemble(bundle, branch):
    """Precompute every tensor of F for the given branch."""
    ladder = bundle.ladder
    params = bundle.params
    grid = bundle.grid
    K = params.K_max
    heat, cascade = bundle.heat_levels(branch), bundle.cascade_levels(branch)
    stress = [sym_gradient_S(lev.phi0) for lev in ladder.levels]
    terms, pressures, meta = [], {}, {"aliasing": False}

    def note(f):
        if f.meta.get("aliasing"):
            meta["aliasing"] = True
            meta["alias_ratio"] = max(meta.get("alias_ratio", 0.0), f.meta["alias_ratio"])
        return f

    for k in heat:
        lam = bundle.rate(k)
        t1 = stress[k].with_coeffs(stress[k].coeffs * (fractional_symbol(grid, params.beta) - lam))
        terms.append(ResidualTerm("F1", -t1, lam, f"commutator k={k}"))
    for k in cascade:
        rate = 2.0 * bundle.rate(k + 1)
        terms.append(ResidualTerm("F2", -fractional_laplacian(stress[k], params.beta), rate, f"dissipation k={k}"))
        inner = divergence(stress[k]) * (-rate)
        if k + 1 <= K:
            cp = c_principal(params, k + 1)
            inner = inner + note(oscillation_direct(ladder, k + 1)) * cp**2
            pressures[k + 1] = pressure_static(ladder, k + 1)
        terms.append(ResidualTerm("F3", -antidivergence_R(inner), rate, f"oscillation k={k}"))
    rates = {k: bundle.rate(k) if k in heat else 2.0 * bundle.rate(k + 1) for k in bundle.levels}
    for j in bundle.levels:
        for k in bundle.levels:
            if k < j:
                continue
            prod = note(pointwise_product(bundle.v0[j], bundle.v0[k], "tensor_product"))
            factor = 1.0 if j == k else 2.0
            terms.append(ResidualTerm("F4", prod * (-factor), rates[j] + rates[k], f"v{j} v{k}"))
    for k in heat:
        base = bundle.v0[0] if k == 0 else bundle.principal0[k]
        prod = note(pointwise_product(base, base, "tensor_product"))
        terms.append(ResidualTerm("F4", prod, 2.0 * bundle.rate(k), f"vp{k} vp{k}"))
    return ResidualBundle(bundle, branch, tuple(terms), pressures, meta)


def defining_identity_defect(residual, t):
    """|P div F + d_t v + (-Lap)^beta v + P div(v(x)v)|_inf over the largest of the three terms.

    Both sides are evaluated independently: the right side from v(t) itself.
    """
    bundle, branch = residual.bundle, residual.branch
    beta = bundle.params.beta
    v = principal_flow_eval(bundle, branch, t)
    dv = principal_flow_derivative(bundle, branch, t)
    lv = fractional_laplacian(v, beta)
    nl = project_div(pointwise_product(v, v, "tensor_product"))
    lhs = project_div(residual.total(t))
    scale = max(sup_norm(dv), sup_norm(lv), sup_norm(nl))
    defect = sup_norm(lhs + dv + lv + nl)
    return defect / scale if scale else defect


def cancellation_defect(ladder, k):
    """Relative size of div(d_t Rbar_k + c_p^2 sum_xi a_{xi,k+1}^2 xibar(x)xibar e^{..}).

    The common factor e^{-2 lam_{k+1} t} is dropped.  The defect is measured
    against |div d_t Rbar_k|.
    """
    params = ladder.params
    rate = 2.0 * params.lam(k + 1)
    dR = sym_gradient_S(ladder.levels[k].phi0) * (-rate)
    cp = c_principal(params, k + 1)
    total = divergence(dR + mean_stress(ladder, k + 1) * cp**2)
    scale = sup_norm(divergence(dR))
    return sup_norm(total) / scale


def y_alpha_norm(snapshots, params):
    """sup_t t^(1-tau) |F|_inf + t^(1-tau+1/(2 beta)) |grad F|_{C^kappa}.

    ``snapshots`` is a sequence of (t, tensor) pairs.
    """
    snapshots = list(snapshots)
    if not snapshots:
        raise DomainError("Y^alpha norm needs at least one snapshot")
    a = 1.0 - params.tau
    b = a + 1.0 / (2.0 * params.beta)
    best = 0.0
    for t, F in snapshots:
        if t <= 0:
            raise DomainError(f"snapshot time must be positive, got {t}")
        val = t**a * sup_norm(F) + t**b * gradient_holder(F, params.kappa)
        best = max(best, val)
    return best


def y_alpha_profile(residual, times):
    """Per-time weighted terms of the Y^alpha norm for a residual bundle."""
    params = residual.bundle.params
    a = 1.0 - params.tau
    b = a + 1.0 / (2.0 * params.beta)
    rows = []
    for t in times:
        F = residual.total(t)
        rows.append((t, t**a * sup_norm(F), t**b * gradient_holder(F, params.kappa)))
    return rows
