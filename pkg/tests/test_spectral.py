import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnstorus.errors import ResolutionError, StructuralError
from gnstorus.spectral import (
    LERAY,
    GridSpec,
    SpectralField,
    antidivergence_R,
    apply_multiplier,
    divergence,
    fractional_laplacian,
    fractional_laplacian_kind,
    gradient,
    heat,
    heat_semigroup_kind,
    hermitian_defect,
    laplacian,
    leray,
    modulate,
    mollifier_symbol,
    mollify,
    perp_gradient,
    pointwise_product,
    project_div,
    random_field,
    real_part,
    riesz_kind,
    sum_fields,
    sym_gradient_S,
    transform_roundtrip,
)
from gnstorus.norms import sup_norm

GRIDS = [GridSpec(32), GridSpec(64), GridSpec(32, lattice=5)]
RANKS = ["scalar", "vector", "sym_tensor"]


def rel(a, b):
    return sup_norm(a - b) / max(sup_norm(b), 1e-300)


@pytest.mark.parametrize("n", [3, 6, 2, 48])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(StructuralError):
        GridSpec(n)


@pytest.mark.parametrize("frac", [0.0, 1.5])
def test_grid_rejects_bad_dealias_fraction(frac):
    with pytest.raises(StructuralError):
        GridSpec(16, dealias_fraction=frac)


def test_grid_index_of_checks_lattice():
    g = GridSpec(16, lattice=5)
    assert g.index_of((5, -10)) == (1, 14)
    with pytest.raises(ResolutionError):
        g.index_of((3, 0))
    with pytest.raises(ResolutionError):
        g.index_of((5 * 8, 0))


@pytest.mark.parametrize("grid", GRIDS)
@pytest.mark.parametrize("rank", RANKS)
def test_roundtrip_and_reality(grid, rank, rng):
    f = random_field(grid, rank, rng)
    assert rel(transform_roundtrip(f), f) < 1e-13
    assert hermitian_defect(f) < 1e-13
    assert f.physical().dtype == np.float64


def test_zero_field_roundtrip_is_zero():
    f = SpectralField.zeros(GridSpec(16), "vector")
    assert np.all(transform_roundtrip(f).coeffs == 0)


def test_fields_are_immutable(rng):
    f = random_field(GridSpec(16), "scalar", rng)
    with pytest.raises(ValueError):
        f.coeffs[0, 0, 0] = 1.0


def test_shape_mismatch_raises():
    with pytest.raises(StructuralError):
        SpectralField(GridSpec(16), "vector", np.zeros((1, 16, 16)))


def test_adding_fields_on_different_grids_raises(rng):
    a = random_field(GridSpec(16), "scalar", rng)
    b = random_field(GridSpec(32), "scalar", rng)
    with pytest.raises(StructuralError):
        a + b


@pytest.mark.parametrize("beta", [0.75, 1.25, 1.9])
def test_fractional_laplacian_on_single_mode(beta):
    g = GridSpec(32)
    f = SpectralField.single_mode(g, (3, 4), real=True)
    out = fractional_laplacian(f, beta)
    assert rel(out, f * (2 * np.pi * 5) ** (2 * beta)) < 1e-13


def test_fractional_laplacian_rejects_small_beta():
    with pytest.raises(StructuralError):
        fractional_laplacian_kind(0.5)


def test_heat_semigroup_property(rng):
    g = GridSpec(32)
    f = random_field(g, "vector", rng)
    a = heat(heat(f, 1e-4, 1.25), 3e-4, 1.25)
    b = heat(f, 4e-4, 1.25)
    mask = np.abs(b.coeffs) > 0
    assert np.allclose(a.coeffs[mask], b.coeffs[mask], rtol=1e-12, atol=0)


def test_heat_rejects_negative_time():
    with pytest.raises(StructuralError):
        heat_semigroup_kind(-1.0, 1.25)


def test_riesz_index_checked():
    with pytest.raises(StructuralError):
        riesz_kind(3)


@pytest.mark.parametrize("grid", GRIDS)
def test_leray_projection_properties(grid, rng):
    f = random_field(grid, "vector", rng)
    p = leray(f)
    assert rel(leray(p), p) < 1e-12
    assert sup_norm(divergence(p)) <= 1e-10 * grid.n * sup_norm(f)
    assert rel(apply_multiplier(LERAY, f), p) == 0.0


def test_leray_keeps_mean_and_kills_gradients(rng):
    g = GridSpec(32)
    s = random_field(g, "scalar", rng)
    assert sup_norm(leray(gradient(s))) < 1e-12 * sup_norm(gradient(s))
    c = np.zeros((2, 32, 32), complex)
    c[:, 0, 0] = [1.0, 2.0]
    m = SpectralField(g, "vector", c)
    assert rel(leray(m), m) == 0.0


@pytest.mark.parametrize("grid", GRIDS)
def test_div_S_is_laplacian_for_divergence_free(grid, rng):
    f = leray(random_field(grid, "vector", rng))
    assert rel(divergence(sym_gradient_S(f)), laplacian(f)) < 1e-10


@pytest.mark.parametrize("grid", GRIDS)
def test_div_R_inverts_divergence(grid, rng):
    f = random_field(grid, "vector", rng, mean_zero=False)
    mean = np.zeros_like(f.coeffs)
    mean[:, 0, 0] = f.coeffs[:, 0, 0]
    target = f - f.with_coeffs(mean)
    assert rel(divergence(antidivergence_R(f)), target) < 1e-10


def test_R_is_trace_free(rng):
    T = antidivergence_R(random_field(GridSpec(32), "vector", rng))
    assert np.abs(T.coeffs[0] + T.coeffs[2]).max() < 1e-14


def test_perp_gradient_is_divergence_free(rng):
    f = perp_gradient(random_field(GridSpec(32), "scalar", rng))
    assert sup_norm(divergence(f)) < 1e-12 * sup_norm(f)


def test_product_of_sines():
    g = GridSpec(16)
    x1, _ = g.coordinates
    s = SpectralField.from_physical(g, np.sin(2 * np.pi * x1))
    p = pointwise_product(s, s)
    c = p.coeffs[0]
    assert c[0, 0] == pytest.approx(0.5, abs=1e-14)
    assert c[2, 0] == pytest.approx(-0.25, abs=1e-14)
    assert c[-2, 0] == pytest.approx(-0.25, abs=1e-14)
    c2 = np.array(c)
    for idx in ((0, 0), (2, 0), (-2, 0)):
        c2[idx] = 0
    assert np.abs(c2).max() < 1e-15


def test_product_with_zero_is_zero(rng):
    g = GridSpec(16)
    a = SpectralField.zeros(g, "scalar")
    assert sup_norm(pointwise_product(a, random_field(g, "scalar", rng))) == 0.0


def test_shear_flow_has_no_nonlinearity():
    g = GridSpec(32)
    x1, _ = g.coordinates
    u = SpectralField.from_physical(g, np.stack([0 * x1, np.sin(2 * np.pi * 3 * x1) + 0.3 * np.cos(2 * np.pi * x1)]))
    assert sup_norm(project_div(pointwise_product(u, u, "tensor_product"))) < 1e-12


def test_product_flags_aliasing(rng):
    g = GridSpec(16)
    f = random_field(g, "scalar", rng, bandwidth=100)
    c = np.array(f.coeffs)
    c[0, 8, 8] = 1.0
    f = f.with_coeffs(c, real=False)
    assert pointwise_product(f, f).meta.get("aliasing")


def test_product_reality_flag(rng):
    g = GridSpec(16)
    a = random_field(g, "scalar", rng)
    assert pointwise_product(a, a).real
    assert not pointwise_product(a, modulate(a, (1, 0))).real


@pytest.mark.parametrize("contraction", ["dot", "tensor_product", "bogus"])
def test_product_rank_errors(contraction, rng):
    g = GridSpec(16)
    s = random_field(g, "scalar", rng)
    with pytest.raises(StructuralError):
        pointwise_product(s, s, contraction)


def test_modulate_shifts_and_guards_wraparound():
    g = GridSpec(16)
    f = SpectralField.single_mode(g, (1, 0), real=True)
    m = modulate(f, (2, 1))
    assert m.coeffs[0, 3, 1] == 1.0 and m.coeffs[0, 1, 1] == 1.0
    with pytest.raises(ResolutionError):
        modulate(SpectralField.single_mode(g, (7, 0)), (3, 0))


def test_real_part_of_modulated_field():
    g = GridSpec(16)
    x1, x2 = g.coordinates
    a = SpectralField.from_physical(g, 1.0 + 0 * x1)
    r = real_part(modulate(a, (2, 3)))
    expected = np.cos(2 * np.pi * (2 * x1 + 3 * x2))
    assert np.abs(r.physical()[0] - expected).max() < 1e-14


def test_mollifier_symbol_limits():
    g = GridSpec(64)
    sym = mollifier_symbol(g, 0.1)
    assert sym[0, 0] == 1.0
    assert np.all(np.abs(sym) <= 1.0 + 1e-12)


def test_mollifier_resolution_guard(rng):
    g = GridSpec(16)
    f = random_field(g, "scalar", rng)
    with pytest.raises(ResolutionError):
        mollify(f, 1.0 / 32)
    with pytest.raises(ResolutionError):
        mollify(f, 0.0)


def test_mollifier_brute_force_quadrature():
    """Symbol at one wavenumber against a direct 2D Riemann sum of the bump."""
    g = GridSpec(32)
    length = 0.25
    sym = mollifier_symbol(g, length)
    x = (np.arange(2048) + 0.5) / 2048 * 2 - 1
    X, Y = np.meshgrid(x, x, indexing="ij")
    r = np.hypot(X, Y)
    bump = np.where(r < 1, np.exp(-1.0 / np.maximum(1 - r**2, 1e-300)), 0.0)
    l = 3
    direct = (bump * np.cos(2 * np.pi * l * length * X)).sum() / bump.sum()
    assert sym[3, 0] == pytest.approx(direct, abs=1e-6)


def test_sum_fields_empty_is_zero():
    g = GridSpec(16)
    z = sum_fields([], g, "vector")
    assert z.rank == "vector" and sup_norm(z) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_leray_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    g = GridSpec(16)
    f, h = random_field(g, "vector", rng), random_field(g, "vector", rng)
    lhs = leray(f * a + h * b)
    rhs = leray(f) * a + leray(h) * b
    assert sup_norm(lhs - rhs) <= 1e-12 * (1 + abs(a) + abs(b)) * (sup_norm(f) + sup_norm(h))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(1e-6, 1e-2))
def test_heat_contracts_sup_of_each_mode(seed, t):
    rng = np.random.default_rng(seed)
    f = random_field(GridSpec(16), "scalar", rng)
    assert np.all(np.abs(heat(f, t, 1.25).coeffs) <= np.abs(f.coeffs) + 1e-300)
