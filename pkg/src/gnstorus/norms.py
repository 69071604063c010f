"""Sup, Hoelder and Zygmund norms of spectral fields."""

import numpy as np
import scipy.fft as sfft

from .littlewood_paley import lp_norm, zygmund_from_coeffs
from .spectral import gradient_stack


def sup_norm(f):
    """max over grid samples of the pointwise magnitude."""
    return lp_norm(f.physical(), f.rank, np.inf)


def zygmund(f, s):
    return zygmund_from_coeffs(f.coeffs, f.grid, f.rank, s, f.real)


def holder(f, kappa):
    """||f||_inf + [f]_{C^kappa} with the seminorm in dyadic form."""
    _check_kappa(kappa)
    return sup_norm(f) + zygmund(f, kappa)


def gradient_holder(f, kappa):
    """||grad f||_inf + [grad f]_{C^kappa}, grad f taken as the stack of all first derivatives."""
    _check_kappa(kappa)
    g = gradient_stack(f)
    sup = lp_norm(_samples(g, f), "stack", np.inf)
    return sup + zygmund_from_coeffs(g, f.grid, "stack", kappa, f.real)


def c1_holder(f, kappa):
    """||f||_inf + [grad f]_{C^kappa}."""
    _check_kappa(kappa)
    return sup_norm(f) + zygmund_from_coeffs(gradient_stack(f), f.grid, "stack", kappa, f.real)


def norm_suite(f, which, param=None):
    """Dispatch on ``which`` in {sup, holder, zygmund, c1_holder}."""
    if which == "sup":
        return sup_norm(f)
    if which == "holder":
        return holder(f, param)
    if which == "zygmund":
        return zygmund(f, param)
    if which == "c1_holder":
        return c1_holder(f, param)
    raise ValueError(f"unknown norm {which!r}")


def _samples(coeffs, f):
    v = sfft.ifft2(coeffs, axes=(-2, -1)) * f.grid.n**2
    return v.real if f.real else v


def _check_kappa(kappa):
    if kappa is None or not 0.0 < kappa < 1.0:
        raise ValueError(f"Hoelder exponent must lie in (0, 1), got {kappa}")
