import numpy as np
import pytest

from gnstorus.construction import (
    ConstructionParams,
    DirectionSet,
    assemble_initial_data,
    build_ladder,
    cancellation_defect,
    defining_identity_defect,
    empty_bundle,
    gamma_squared_field,
    oscillation_direct,
    oscillation_expanded,
    principal_flow_derivative,
    principal_flow_eval,
    product_identity_defect,
    reconstruction_residual,
    residual_assemble,
    solve_gamma,
    y_alpha_norm,
)
from gnstorus.construction.ladder import c_principal, divergence_defect, shear_potential
from gnstorus.errors import ConfigurationError, ConstraintError, DomainError, LadderError, ResolutionError
from gnstorus.littlewood_paley import BesovSpec, besov_norm
from gnstorus.norms import sup_norm
from gnstorus.spectral import GridSpec, divergence

# ----------------------------------------------------------------- params


@pytest.mark.parametrize(
    "changes,param",
    [
        ({"beta": 2.5}, "beta"),
        ({"alpha": 0.3}, "alpha"),
        ({"alpha": -0.1}, "alpha"),
        ({"epsilon": 0.0}, "epsilon"),
        ({"gamma": 0.5}, "gamma"),
        ({"kappa": 0.2}, "kappa"),
        ({"rho": 0.5}, "rho"),
        ({"A": 7}, "A"),
        ({"b": 1}, "b"),
        ({"K_max": -1}, "K_max"),
    ],
)
def test_constraint_errors_name_the_parameter(changes, param):
    with pytest.raises(ConstraintError) as info:
        ConstructionParams(**changes)
    assert info.value.param == param


def test_derived_quantities(desk_params):
    p = desk_params
    assert p.N(0) == 5 and p.N(1) == 25 and p.N(2) == 625
    assert p.t0 == pytest.approx(5**-2.5)
    assert p.lam(1) == pytest.approx((2 * np.pi * 25) ** 2.5)
    assert p.tau == pytest.approx((2 - 0.2 - 1.25 - 0.1) / 2.5)
    assert p.mollifier_length(0) == pytest.approx(125**-0.5)


# --------------------------------------------------------------- geometry


def _random_ball_matrix(rng, radius=1 / 7):
    m = rng.standard_normal(3)
    E = np.array([[m[0], m[1]], [m[1], m[2]]])
    E *= rng.uniform(0, radius) / np.linalg.norm(E, 2)
    return np.eye(2) + E


def test_geometric_lemma_on_random_matrices(rng):
    d = DirectionSet.default()
    for _ in range(100):
        S = _random_ball_matrix(rng)
        g = solve_gamma(S, d)
        assert min(g.values()) > 0
        assert reconstruction_residual(S, g) <= 1e-12


def test_gamma_is_even_in_xi(rng):
    g = solve_gamma(_random_ball_matrix(rng))
    for (a, b), v in g.items():
        assert g[(-a, -b)] == v


def test_identity_decomposition():
    g = solve_gamma(np.eye(2))
    assert reconstruction_residual(np.eye(2), g) < 1e-15


def test_outside_ball_raises():
    with pytest.raises(DomainError):
        solve_gamma(np.diag([1.5, 1.0]))


def test_nonsymmetric_raises():
    with pytest.raises(DomainError):
        solve_gamma(np.array([[1.0, 0.01], [0.0, 1.0]]))


def test_axis_aligned_set_is_degenerate_at_identity():
    with pytest.raises(ConfigurationError):
        solve_gamma(np.eye(2), DirectionSet.axis_aligned())


def test_direction_set_validation():
    from fractions import Fraction as F

    with pytest.raises(ConfigurationError):
        DirectionSet(((F(1), F(0)), (F(0), F(1))))
    with pytest.raises(ConfigurationError):
        DirectionSet(((F(1), F(1)), (F(0), F(1)), (F(1), F(0))))


def test_gamma_field_matches_pointwise_solve(rng):
    S = _random_ball_matrix(rng)
    g = gamma_squared_field(S[0, 0], S[0, 1], S[1, 1])
    ref = solve_gamma(S)
    assert g[1] == pytest.approx(ref[(0.6, 0.8)], rel=1e-14)


def test_integer_wavevectors():
    d = DirectionSet.default()
    assert d.integer_wavevector(1, 25) == (15, 20)
    with pytest.raises(ConfigurationError):
        d.integer_wavevector(1, 7)


# ----------------------------------------------------------------- ladder


def test_strict_ladder_fails_at_desk_parameters(desk_params, desk_grid):
    with pytest.raises(LadderError) as info:
        build_ladder(desk_params, desk_grid, strict=True)
    assert info.value.level == 0
    assert "level 0" in str(info.value)


def test_relaxed_ladder_records_relaxation(relaxed_ladder):
    lev = relaxed_ladder.levels[1]
    assert not relaxed_ladder.exact
    assert lev.relaxation == pytest.approx((1 / 7) / relaxed_ladder.bounds[0])
    assert lev.info["min_gamma_squared"] > 0


def test_exact_ladder_at_large_epsilon(exact_ladder):
    assert exact_ladder.exact
    assert exact_ladder.bounds[0] <= 1 / 7


def test_shear_potential_value(desk_params, desk_grid):
    phi = shear_potential(desk_params, desk_grid)
    amp = desk_params.N(0) ** (-2 + 1.45) * 0.1
    assert sup_norm(phi) == pytest.approx(amp, rel=1e-12)


def test_ladder_reality_and_symmetry(relaxed_ladder):
    lev = relaxed_ladder.levels[1]
    for a in lev.amplitudes:
        assert a.real
    assert lev.theta.real and lev.w.real and lev.phi0.real
    assert divergence_defect(relaxed_ladder) < 1e-12


def test_principal_part_frequency_support(desk_bundle, desk_params):
    """v^p_1 lives in annuli |l - N_1 xi| <= bandwidth of the amplitudes."""
    lad = desk_bundle.ladder
    vp = desk_bundle.principal0[1]
    g = lad.grid
    bw = max(np.max(g.kmag[np.abs(a.coeffs[0]) > 1e-14 * np.abs(a.coeffs).max()]) for a in lad.levels[1].amplitudes)
    l1, l2 = g.wavevector
    near = np.zeros_like(l1, bool)
    for xi in lad.directions.directions:
        c = (float(xi[0]) * desk_params.N(1), float(xi[1]) * desk_params.N(1))
        near |= np.hypot(l1 - c[0], l2 - c[1]) <= bw + 1e-9
    mag = np.abs(vp.coeffs).max(axis=0)
    assert mag[~near].max() <= 1e-12 * mag.max()


def test_ladder_band_guard(desk_params):
    with pytest.raises(ResolutionError):
        build_ladder(desk_params, GridSpec(16, lattice=5), strict=False)


def test_ladder_lattice_guard(desk_params):
    with pytest.raises(ResolutionError):
        build_ladder(desk_params.replace(A=10), GridSpec(128, lattice=3), strict=False)


def test_k_max_zero_is_shear_only(desk_grid, desk_params):
    lad = build_ladder(desk_params.replace(K_max=0), desk_grid)
    assert len(lad.levels) == 1 and lad.exact


# ------------------------------------------------------------------ flows


def test_initial_datum_is_divergence_free(desk_bundle):
    v = desk_bundle.datum
    assert sup_norm(divergence(v)) <= 1e-10 * sup_norm(v)


def test_level_zero_amplitude(desk_bundle, desk_params):
    p = desk_params
    expected = p.epsilon * (2 * np.pi) ** 2 * p.N(0) ** (p.beta + p.alpha)
    assert sup_norm(desk_bundle.v0[0]) == pytest.approx(expected, rel=1e-12)


def test_decomposition_sums_to_level(desk_bundle):
    b = desk_bundle
    total = b.principal0[1] + b.error1[1] + b.error2[1]
    assert sup_norm(total - b.v0[1]) <= 1e-12 * sup_norm(b.v0[1])


@pytest.mark.parametrize("t", [0.0, 1e-6, 1e-4, 1e-2, 0.5])
def test_heat_and_cascade_decay(desk_bundle, desk_params, t):
    b = desk_bundle
    for k in b.levels:
        heat = sup_norm(b.heat_level(k, t))
        cascade = sup_norm(b.cascade_level(k, t))
        assert heat == pytest.approx(sup_norm(b.v0[k]) * np.exp(-desk_params.lam(k) * t), rel=1e-12)
        assert cascade <= heat


def test_branch_symmetry(desk_bundle):
    b = desk_bundle
    assert b.heat_levels(1) == b.cascade_levels(2)
    assert b.heat_levels(2) == b.cascade_levels(1)
    with pytest.raises(ValueError):
        b.heat_levels(3)


def test_flow_derivative_matches_finite_difference(desk_bundle):
    t, h = 2e-6, 1e-10
    d = principal_flow_derivative(desk_bundle, 2, t)
    fd = (principal_flow_eval(desk_bundle, 2, t + h) - principal_flow_eval(desk_bundle, 2, t - h)) / (2 * h)
    assert sup_norm(d - fd) <= 1e-5 * sup_norm(d)


def test_flow_time_domain(desk_bundle):
    with pytest.raises(ValueError):
        principal_flow_eval(desk_bundle, 1, 1.5)


@pytest.mark.parametrize("eps", [0.05, 0.2])
def test_datum_besov_norm_is_linear_in_epsilon(desk_params, desk_grid, desk_bundle, eps):
    spec = BesovSpec(-desk_params.beta - desk_params.alpha)
    ref = besov_norm(desk_bundle.datum, spec) / desk_params.epsilon
    other = assemble_initial_data(build_ladder(desk_params.replace(epsilon=eps), desk_grid, strict=False))
    ratio = besov_norm(other.datum, spec) / eps
    assert abs(ratio / ref - 1) < 0.1


# --------------------------------------------------------------- residual


def test_product_identity_direct_and_expanded_agree(relaxed_ladder):
    d = oscillation_direct(relaxed_ladder, 1)
    e = oscillation_expanded(relaxed_ladder, 1)
    assert sup_norm(d - e) <= 1e-10 * sup_norm(d)


@pytest.mark.parametrize("seed", range(5))
def test_product_identity_with_constant_amplitudes(seed):
    rng = np.random.default_rng(seed)
    b = rng.uniform(0.2, 2.0, 3)
    assert product_identity_defect(GridSpec(64), b, 5) <= 1e-10


def test_product_identity_fails_with_minus_sign():
    """With real W and Theta the Theta^2 term enters with a plus sign."""
    assert product_identity_defect(GridSpec(64), [1.0, 0.7, 1.3], 5, sign=-1.0) > 0.1


@pytest.mark.parametrize("branch", [1, 2])
@pytest.mark.parametrize("t", [1e-6, 1e-5, 1e-4, 1e-3, 1.7e-2])
def test_defining_identity(desk_bundle, branch, t):
    res = residual_assemble(desk_bundle, branch)
    assert defining_identity_defect(res, t) <= 1e-6


def test_cancellation_exact_ladder(exact_ladder):
    assert cancellation_defect(exact_ladder, 0) <= 1e-9


def test_cancellation_relaxed_ladder_reports_relaxation(relaxed_ladder):
    theta = relaxed_ladder.levels[1].relaxation
    assert cancellation_defect(relaxed_ladder, 0) == pytest.approx(1 - theta, rel=1e-6)


def test_residual_components(desk_bundle):
    res = residual_assemble(desk_bundle, 2)
    names = {t.component for t in res.terms}
    assert names == {"F1", "F2", "F3", "F4"}
    snap = res.snapshot(1e-5)
    total = snap["F1"] + snap["F2"] + snap["F3"] + snap["F4"]
    assert sup_norm(total - snap["F"]) <= 1e-14 * sup_norm(snap["F"])
    assert not res.meta["aliasing"]


def test_branch_one_residual_vanishes_at_desk(desk_bundle):
    """The shear level solves the equation and the cascade level underflows."""
    res = residual_assemble(desk_bundle, 1)
    assert sup_norm(res.total(1e-6)) == 0.0


def test_pressure_positive(desk_bundle):
    """Only a cascading level with a successor carries a pressure, and it is nonnegative."""
    assert residual_assemble(desk_bundle, 1).pressures == {}
    res = residual_assemble(desk_bundle, 2)
    assert set(res.pressures) == {1}
    p = res.pressures[1].physical()
    assert np.min(p) >= -1e-12 * np.max(p)


def test_y_alpha_norm_contract(desk_params, desk_bundle):
    with pytest.raises(DomainError):
        y_alpha_norm([], desk_params)
    with pytest.raises(DomainError):
        y_alpha_norm([(0.0, desk_bundle.v0[0])], desk_params)
    res = residual_assemble(desk_bundle, 2)
    times = np.geomspace(1e-6, 1e-2, 9)
    assert np.isfinite(y_alpha_norm([(t, res.total(t)) for t in times], desk_params))


def test_empty_bundle_has_no_residual(desk_params):
    b = empty_bundle(GridSpec(16), desk_params)
    res = residual_assemble(b, 1)
    assert sup_norm(res.total(0.1)) == 0.0
    assert c_principal(desk_params, 0) > 0
