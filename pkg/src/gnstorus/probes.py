"""Measured constants for the asymptotic estimates the construction relies on.

Each probe evaluates a ratio "left side / right side" of an estimate over a
family of configurations and returns a report with every sample and the
largest ratio.  A finite, moderate maximum is the numerical content of the
implicit constant.
"""

import itertools

import numpy as np

from .construction.geometry import DirectionSet
from .construction.residual import y_alpha_norm
from .evolution.perturbation import linearized_semigroup_apply
from .littlewood_paley import zygmund_seminorm
from .norms import holder, sup_norm
from .spectral import (
    GridSpec,
    SpectralField,
    antidivergence_R,
    fractional_laplacian,
    gradient,
    heat,
    pointwise_product,
    random_field,
)


def _report(name, measures, rows):
    ratios = np.array([r["ratio"] for r in rows])
    return {
        "name": name,
        "measures": measures,
        "configs": len(rows),
        "max_ratio": float(ratios.max()),
        "min_ratio": float(ratios.min()),
        "finite": bool(np.all(np.isfinite(ratios))),
        "samples": rows,
    }


def _slow_amplitude(grid, rng, bandwidth=2):
    """Real scalar with |l| <= bandwidth and a nonzero mean, so it is slowly varying."""
    b = random_field(grid, "scalar", rng, bandwidth=bandwidth, mean_zero=False)
    c = np.array(b.coeffs)
    c[0, 0, 0] = 1.0
    return b.with_coeffs(c)


def antidivergence_ratio(grid=None, seed=0, frequencies=(8, 12, 16, 24), exponents=(0.1, 0.3, 0.5), directions=None):
    """|R(b cos(2 pi lam xi.x) e_1)|_{C^mu} / (lam^(-1+mu) |b|_inf).

    b is a slowly varying amplitude; xi runs over the direction set.
    """
    grid = grid or GridSpec(128)
    directions = directions or DirectionSet.default()
    rng = np.random.default_rng(seed)
    rows = []
    x1, x2 = grid.coordinates
    for lam, mu, p in itertools.product(frequencies, exponents, (0, 1)):
        xi = directions.as_float(p)
        b = _slow_amplitude(grid, rng)
        wave = np.cos(2 * np.pi * lam * (xi[0] * x1 + xi[1] * x2))
        bf = b.physical()[0]
        f = SpectralField.from_physical(grid, np.stack([bf * wave, 0 * wave]))
        num = holder(antidivergence_R(f), mu)
        den = lam ** (-1.0 + mu) * sup_norm(b)
        rows.append({"lambda": lam, "mu": mu, "direction": p, "ratio": num / den})
    return _report("antidivergence", "modulated antidivergence gains lam^(1-mu) in C^mu", rows)


def commutator_ratio(grid=None, seed=0, frequencies=(16, 24, 32, 40), bandwidths=(1, 2, 3), beta=1.25, directions=None):
    """|[(-Lap)^beta, f] sin(2 pi Q xi.x)|_inf / (Q^(2 beta - 1) P^4 + P^(2 beta + 3)).

    f has |l| <= bandwidth and absolutely summable coefficients normalised to
    1, so |grad^n f|_inf <= P^n with P = 2 pi bandwidth.
    """
    grid = grid or GridSpec(128)
    directions = directions or DirectionSet.default()
    rng = np.random.default_rng(seed)
    x1, x2 = grid.coordinates
    rows = []
    for Q, bw in itertools.product(frequencies, bandwidths):
        for p in (0, 1):
            f = random_field(grid, "scalar", rng, bandwidth=bw, mean_zero=False)
            f = f * (1.0 / np.abs(f.coeffs).sum())
            xi = directions.as_float(p)
            g = SpectralField.from_physical(grid, np.sin(2 * np.pi * Q * (xi[0] * x1 + xi[1] * x2)))
            comm = fractional_laplacian(pointwise_product(f, g), beta) - pointwise_product(f, fractional_laplacian(g, beta))
            P = 2 * np.pi * bw
            den = Q ** (2 * beta - 1) * P**4 + P ** (2 * beta + 3)
            rows.append({"Q": Q, "P": P, "direction": p, "ratio": sup_norm(comm) / den})
    return _report("commutator", "commutator of (-Lap)^beta with a smooth multiplier", rows)


def heat_smoothing_ratio(grid=None, seed=0, beta=1.25, times=(1e-4, 1e-3, 1e-2), cases=((0, 0.5, 0.1), (0, 1.5, 0.5), (1, 0.5, 0.2), (1, 0.3, 0.7))):
    """|e^{-t(-Lap)^beta} grad^m f|_{C^s1} / (t^(-(m + s1 - s2)/(2 beta)) |f|_{C^s2}).

    ``cases`` lists (m, s1, s2) with m + s1 - s2 >= 0; the norms are the
    homogeneous Zygmund seminorms.
    """
    grid = grid or GridSpec(128)
    rng = np.random.default_rng(seed)
    rows = []
    for (m, s1, s2), t in itertools.product(cases, times):
        for _ in range(2):
            f = random_field(grid, "scalar", rng)
            g = heat(gradient(f) if m == 1 else f, t, beta)
            num = zygmund_seminorm(g, s1)
            den = t ** (-(m + s1 - s2) / (2 * beta)) * zygmund_seminorm(f, s2)
            rows.append({"m": m, "s1": s1, "s2": s2, "t": t, "ratio": num / den})
    return _report("heat_smoothing", "fractional heat smoothing in Zygmund spaces", rows)


def semigroup_ratio(bundle, branch, seed=0, epsilon=0.01, pairs=None, substeps=32):
    """|P(t, t') f|_inf / (t'^(-1 + tau - eps) t^(-1/(2 beta) + eps) |f|_{Y^alpha}).

    The probe is f(s) = s^(-1 + tau) G with a random symmetric tensor G, so
    the weighted Y^alpha sup is attained at s = 1 and equals
    |G|_inf + |grad G|_{C^kappa}.
    """
    params = bundle.params
    grid = bundle.grid
    rng = np.random.default_rng(seed)
    tau = params.tau
    if pairs is None:
        t0 = params.t0
        starts = t0 * np.array([1e-4, 1e-3, 1e-2, 1e-1, 1.0])
        pairs = [(tp, tp * r) for tp in starts for r in (1.0, 2.0, 5.0, 10.0, 100.0) if tp * r <= 1.0]
    rows = []
    for tp, t in pairs:
        G = random_field(grid, "sym_tensor", rng, bandwidth=4 * grid.lattice)

        def f(s, G=G):
            return G * s ** (-1.0 + tau)

        y = y_alpha_norm([(1.0, G)], params)
        out = linearized_semigroup_apply(f, tp, t, bundle, branch, substeps)
        den = tp ** (-1.0 + tau - epsilon) * t ** (-1.0 / (2 * params.beta) + epsilon) * y
        rows.append({"t_prime": tp, "t": t, "ratio": sup_norm(out) / den})
    return _report("semigroup", "linearised semigroup bound with eps loss", rows)


def all_probes(bundle, branch=2, seed=0):
    return {
        "antidivergence": antidivergence_ratio(seed=seed),
        "commutator": commutator_ratio(seed=seed, beta=bundle.params.beta),
        "heat_smoothing": heat_smoothing_ratio(seed=seed, beta=bundle.params.beta),
        "semigroup": semigroup_ratio(bundle, branch, seed=seed),
    }
